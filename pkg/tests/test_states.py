"""
Unit tests for phased states and exact orthogonality.
"""

import os
import sys
import unittest

import numpy as np

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from states import (
    EXTERNAL,
    OGEB_MODIFIED,
    OGEB_STANDARD,
    OGES,
    PATH_COSET,
    PATH_DISJOINT,
    PATH_EXACT,
    PATH_NUMERIC,
    REVERSE_LEXICOGRAPHIC,
    StateError,
    StateSet,
    build_ogeb,
    build_oges,
    build_state,
    ghz_state,
    inner_product,
    is_character_family,
    oges_size_advantage,
    relabel_bijection,
    verify_mutually_orthogonal,
    verify_orthogonal_basis,
)
from reports import dump_report
from serialization import stateset_to_json
from tritsets import FamilyError, build_family, build_modified_family

SLOW = os.getenv('QUTRIT_SLOW_TESTS') == '1'


def trits(*texts):
    return [tuple(int(c) for c in t) for t in texts]


class TestBuilders(unittest.TestCase):
    """Test cases for state and basis builders."""

    def test_state_phases(self):
        """Test the exponents of a phased state."""
        st = build_state(build_family(3).sets[0], 2)
        self.assertEqual(st.order, 9)
        self.assertEqual(st.exponents, tuple((2 * r) % 9 for r in range(9)))
        self.assertEqual(st.support, tuple(sorted(build_family(3).sets[0])))
        self.assertEqual(st.norm_squared(), 9)

    def test_reverse_bijection(self):
        """Test the reverse lexicographic bijection."""
        st = build_state(trits('000', '111', '222'), 1, bijection=REVERSE_LEXICOGRAPHIC)
        self.assertEqual(st.exponents, (2, 1, 0))

    def test_k_out_of_range(self):
        """Test rejection of an invalid phase index."""
        with self.assertRaises(StateError):
            build_state(trits('000', '111'), 2)
        with self.assertRaises(StateError):
            build_state([], 0)

    def test_bad_support(self):
        """Test rejection of malformed supports."""
        with self.assertRaises(StateError):
            build_state(trits('000', '11'), 0)
        with self.assertRaises(StateError):
            build_state(trits('003'), 0)

    def test_dense_vector(self):
        """Test the dense vector of a state."""
        st = build_state(trits('000', '012'), 1)
        vec = st.to_dense()
        self.assertEqual(vec.shape, (27,))
        self.assertAlmostEqual(vec[0], 1.0)
        self.assertAlmostEqual(vec[5], -1.0)
        self.assertAlmostEqual(np.vdot(vec, vec).real, st.norm_squared())

    def test_ogeb_sizes(self):
        """Test basis sizes."""
        for n in range(3, 6):
            self.assertEqual(len(build_ogeb(build_family(n))), 3 ** n)
            self.assertEqual(len(build_ogeb(build_modified_family(n))), 3 ** n)

    def test_oges_size(self):
        """Test subset sizes."""
        self.assertEqual(len(build_oges(build_modified_family(3))), 18)
        for n in range(3, 6):
            oges = build_oges(build_modified_family(n))
            self.assertEqual(len(oges), 2 * 3 ** (n - 1))
            self.assertEqual(oges.group(2), [])

    def test_provenance(self):
        """Test provenance tags."""
        self.assertEqual(build_ogeb(build_family(3)).provenance, OGEB_STANDARD)
        self.assertEqual(build_ogeb(build_modified_family(3)).provenance, OGEB_MODIFIED)
        self.assertEqual(build_oges(build_modified_family(3)).provenance, OGES)

    def test_oges_needs_modified(self):
        """Test that the subset needs a modified family."""
        with self.assertRaises(FamilyError):
            build_oges(build_family(3))

    def test_size_advantage(self):
        """Test the size comparison with the earlier subset."""
        self.assertEqual(
            oges_size_advantage(3), {'oges_size': 18, 'earlier_size': 20, 'fewer_by': 2}
        )
        self.assertEqual(oges_size_advantage(4)['fewer_by'], 27 - 16 + 1)
        with self.assertRaises(StateError):
            oges_size_advantage(2)

    def test_ghz_state(self):
        """Test the GHZ-type state."""
        st = ghz_state(3)
        self.assertEqual(st.support, tuple(trits('000', '111', '222')))
        self.assertEqual(ghz_state(4, dim=2).dim, 2)

    def test_rebuild_is_byte_identical(self):
        """Test that rebuilding a set serializes identically."""
        first = dump_report(stateset_to_json(build_ogeb(build_modified_family(4))))
        second = dump_report(stateset_to_json(build_ogeb(build_modified_family(4))))
        self.assertEqual(first, second)
        self.assertEqual(
            dump_report(stateset_to_json(build_oges(build_modified_family(3)))),
            dump_report(stateset_to_json(build_oges(build_modified_family(3)))),
        )


class TestInnerProducts(unittest.TestCase):
    """Test cases for exact inner products."""

    def setUp(self):
        """Set up test fixtures."""
        self.g0 = build_family(3).sets[0]
        self.g1 = build_family(3).sets[1]

    def test_complete_geometric_sum(self):
        """Test the coset path."""
        ip = inner_product(build_state(self.g0, 0), build_state(self.g0, 1))
        self.assertTrue(ip.exact_zero)
        self.assertEqual(ip.path, PATH_COSET)

    def test_disjoint_supports(self):
        """Test the disjoint path."""
        ip = inner_product(build_state(self.g0, 0), build_state(self.g1, 0))
        self.assertTrue(ip.exact_zero)
        self.assertEqual(ip.path, PATH_DISJOINT)

    def test_self_product_is_exact_count(self):
        """Test the norm of a state."""
        st = build_state(self.g0, 4)
        ip = inner_product(st, st)
        self.assertFalse(ip.exact_zero)
        self.assertEqual(ip.path, PATH_EXACT)
        self.assertEqual(ip.value, 9)

    def test_numeric_fallback(self):
        """Test the numeric path."""
        a = build_state(trits('000', '111'), 0)
        b = build_state(trits('000', '111', '222'), 1)
        ip = inner_product(a, b)
        self.assertFalse(ip.exact_zero)
        self.assertEqual(ip.path, PATH_NUMERIC)
        self.assertAlmostEqual(abs(ip.value), 1.0)

    def test_mismatched_spaces(self):
        """Test states of different N."""
        with self.assertRaises(StateError):
            inner_product(ghz_state(3), ghz_state(4))


class TestOrthogonalBasis(unittest.TestCase):
    """Test cases for orthogonal basis verification."""

    def test_standard_bases_resolve_exactly(self):
        """Test that standard bases need no numeric path."""
        for n in range(3, 6):
            verdict = verify_orthogonal_basis(build_ogeb(build_family(n)))
            self.assertTrue(verdict.passed, verdict.violation)
            self.assertEqual(verdict.details['paths']['numeric'], 0)

    def test_modified_sets_resolve_exactly(self):
        """Test that modified sets need no numeric path."""
        for n in range(3, 6):
            family = build_modified_family(n)
            for ss in (build_ogeb(family), build_oges(family)):
                verdict = verify_orthogonal_basis(ss)
                self.assertTrue(verdict.passed, verdict.violation)
                self.assertEqual(verdict.details['paths']['numeric'], 0)

    def test_wrong_count_fails(self):
        """Test a basis with a missing state."""
        ss = build_ogeb(build_family(3))
        short = StateSet(ss.states[:-1], ss.provenance, 3)
        self.assertFalse(verify_orthogonal_basis(short).passed)

    def test_non_orthogonal_external_set(self):
        """Test an external non-orthogonal set."""
        ss = StateSet(
            (build_state(trits('000', '111'), 0), build_state(trits('000', '111', '222'), 1, set_index=1)),
            EXTERNAL, 3,
        )
        verdict = verify_orthogonal_basis(ss)
        self.assertFalse(verdict.passed)
        self.assertEqual(verdict.details['pair'], [[0, 0], [1, 1]])

    def test_bijection_choice_keeps_orthogonality(self):
        """Test orthogonality under the reverse bijection."""
        ss = relabel_bijection(build_oges(build_modified_family(3)), REVERSE_LEXICOGRAPHIC)
        self.assertTrue(verify_orthogonal_basis(ss).passed)

    def test_character_family(self):
        """Test character family detection."""
        ss = build_ogeb(build_family(3))
        self.assertTrue(is_character_family(ss.group(0)))
        self.assertFalse(is_character_family(ss.group(0)[:1] + ss.group(1)[:1]))
        self.assertTrue(verify_mutually_orthogonal(ss.group(1)).passed)

    def test_contains(self):
        """Test that the basis contains the subset."""
        ogeb = build_ogeb(build_modified_family(4))
        for st in build_oges(build_modified_family(4)).states:
            self.assertTrue(ogeb.contains(st))

    @unittest.skipUnless(SLOW, "set QUTRIT_SLOW_TESTS=1 for desk-scale checks")
    def test_six_parties(self):
        """Test six parties."""
        verdict = verify_orthogonal_basis(build_ogeb(build_family(6)))
        self.assertTrue(verdict.passed)
        self.assertEqual(verdict.details['paths']['numeric'], 0)


if __name__ == '__main__':
    unittest.main()
