"""
Unit tests for family and state-set file formats and report schemas.
"""

import os
import sys
import unittest

from jsonschema import ValidationError

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from reports import dump_report, validate_report
from serialization import (
    family_from_json,
    family_from_text,
    family_to_json,
    family_to_text,
    state_to_dense,
    stateset_from_json,
    stateset_to_dense,
    stateset_to_json,
)
from states import StateError, build_ogeb, build_oges
from nonlocality import ghz_basis_fixture
from tritsets import CASE_II, MODIFIED, STANDARD, FamilyError, build_family, build_modified_family


class TestFamilyText(unittest.TestCase):
    """Test cases for the family text format."""

    def test_layout(self):
        """Test the header and string layout."""
        text = family_to_text(build_family(2))
        self.assertEqual(text.splitlines()[:6], ['#n 2', '#variant standard', '#case none', '#set 0', '00', '12'])

    def test_round_trip(self):
        """Test reading back written families."""
        for f in (build_family(3), build_modified_family(4)):
            self.assertEqual(family_from_text(family_to_text(f)), f)

    def test_missing_metadata(self):
        """Test a file with only set headers."""
        text = "#set 0\n00\n12\n21\n#set 1\n01\n10\n22\n#set 2\n02\n11\n20\n"
        self.assertEqual(family_from_text(text), build_family(2))

    def test_missing_metadata_modified(self):
        """Test inferring the modified case from a bare file."""
        body = ''.join(line + '\n' for line in family_to_text(build_modified_family(4)).splitlines()
                       if not line.startswith(('#n', '#variant', '#case')))
        f = family_from_text(body)
        self.assertEqual(f, build_modified_family(4))
        self.assertEqual(f.case_tag, CASE_II)

    def test_wrong_set_count(self):
        """Test rejection of a file with too few sets."""
        with self.assertRaises(FamilyError):
            family_from_text('#set 0\n000\n')

    def test_bad_symbol(self):
        """Test rejection of a non-trit symbol."""
        with self.assertRaises(FamilyError):
            family_from_text('#n 2\n#variant standard\n#case none\n#set 0\n03\n')

    def test_out_of_order_header(self):
        """Test rejection of a skipped set index."""
        with self.assertRaises(FamilyError):
            family_from_text('#n 1\n#variant standard\n#case none\n#set 1\n0\n')


class TestFamilyJson(unittest.TestCase):
    """Test cases for the family JSON format."""

    def test_infers_metadata(self):
        """Test inferring N, variant and case."""
        f = family_from_json(family_to_json(build_modified_family(4)))
        self.assertEqual((f.n_parties, f.variant, f.case_tag), (4, MODIFIED, CASE_II))
        self.assertEqual(f, build_modified_family(4))
        self.assertEqual(family_from_json(family_to_json(build_family(3))).variant, STANDARD)

    def test_mixed_lengths(self):
        """Test rejection of strings of different lengths."""
        with self.assertRaises(FamilyError):
            family_from_json([['00', '1'], [], []])

    def test_schema(self):
        """Test the family schema."""
        validate_report('family', family_to_json(build_family(3)))
        with self.assertRaises(ValidationError):
            validate_report('family', [['0a']])


class TestStateSetJson(unittest.TestCase):
    """Test cases for state-set JSON."""

    def test_round_trip(self):
        """Test reading back a written state set."""
        ss = build_oges(build_modified_family(3))
        data = stateset_to_json(ss)
        validate_report('stateset', data)
        self.assertEqual(stateset_from_json(data), ss)

    def test_entry_layout(self):
        """Test the fields of one state entry."""
        data = stateset_to_json(build_ogeb(build_family(3)))
        entry = data['states'][1]
        self.assertEqual((entry['set_index'], entry['k'], entry['order']), (0, 1, 9))
        self.assertEqual(entry['support'][1], {'trits': '012', 'exponent': 1})

    def test_two_level_fixture(self):
        """Test a qubit state set."""
        data = stateset_to_json(ghz_basis_fixture())
        self.assertEqual(data['dim'], 2)
        self.assertEqual(stateset_from_json(data), ghz_basis_fixture())

    def test_malformed(self):
        """Test rejection of missing fields."""
        with self.assertRaises(StateError):
            stateset_from_json({'n_parties': 3, 'states': []})


class TestDenseExport(unittest.TestCase):
    """Test cases for dense vector export."""

    def test_interleaved(self):
        """Test the interleaved real and imaginary parts."""
        st = build_ogeb(build_family(3)).by_label[(0, 0)]
        vec = state_to_dense(st)
        self.assertEqual(len(vec), 2 * 27)
        self.assertEqual(vec[0::2][0], 1.0)
        self.assertEqual(sum(vec[0::2]), 9.0)

    def test_set_export(self):
        """Test exporting a whole set."""
        dense = stateset_to_dense(build_oges(build_modified_family(3)))
        self.assertEqual(len(dense['vectors']), 18)
        self.assertEqual(dense['labels'][0], [0, 0])


class TestReportDump(unittest.TestCase):
    """Test cases for report serialization."""

    def test_sorted_keys(self):
        """Test sorted keys and indentation."""
        self.assertEqual(dump_report({'b': 1, 'a': [2]}), '{\n  "a": [\n    2\n  ],\n  "b": 1\n}\n')


if __name__ == '__main__':
    unittest.main()
