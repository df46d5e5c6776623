"""
Unit tests for Schmidt ranks and reduced density matrices.
"""

import os
import sys
import unittest

import numpy as np

# Add src directory to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from entanglement import (
    Bipartition,
    CutError,
    coefficient_matrix,
    entanglement_report,
    enumerate_bipartitions,
    is_genuinely_entangled,
    is_one_uniform,
    rank_witness,
    reduced_density,
    schmidt_rank,
)
from states import build_ogeb, build_oges, build_state, ghz_state
from tritsets import build_family, build_modified_family

SLOW = os.getenv('QUTRIT_SLOW_TESTS') == '1'


def trits(*texts):
    return [tuple(int(c) for c in t) for t in texts]


class TestBipartitions(unittest.TestCase):
    """Test cases for bipartition enumeration."""

    def test_three_parties(self):
        """Test the canonical cuts of three parties."""
        cuts = enumerate_bipartitions(3)
        self.assertEqual([c.describe() for c in cuts], ['{1}|{2,3}', '{1,2}|{3}', '{1,3}|{2}'])
        self.assertTrue(all(c.is_canonical for c in cuts))

    def test_counts(self):
        """Test the number of cuts for several N."""
        self.assertEqual(len(enumerate_bipartitions(2)), 1)
        self.assertEqual(len(enumerate_bipartitions(4)), 7)
        self.assertEqual(len(enumerate_bipartitions(6)), 31)

    def test_invalid(self):
        """Test rejection of malformed cuts."""
        with self.assertRaises(CutError):
            Bipartition(3, (1, 2), (2, 3))
        with self.assertRaises(CutError):
            Bipartition(3, (1,), (2,))
        with self.assertRaises(CutError):
            Bipartition(3, (), (1, 2, 3))
        with self.assertRaises(CutError):
            enumerate_bipartitions(1)

    def test_canonical_form(self):
        """Test mapping a cut to its canonical side."""
        cut = Bipartition.of(3, [2, 3])
        self.assertFalse(cut.is_canonical)
        self.assertEqual(cut.canonical(), Bipartition.of(3, [1]))


class TestCoefficientMatrix(unittest.TestCase):
    """Test cases for coefficient matrices."""

    def setUp(self):
        """Set up test fixtures."""
        self.psi = build_ogeb(build_family(3)).by_label[(0, 0)]
        self.cut = Bipartition.of(3, [1])

    def test_zero_one_rows(self):
        """Test the row structure of a standard state."""
        m = coefficient_matrix(self.psi, self.cut).matrix
        self.assertEqual(m.shape, (3, 9))
        self.assertTrue(np.allclose(np.abs(m).sum(axis=1), [3, 3, 3]))
        # rows use disjoint columns
        nonzero = np.abs(m) > 0
        self.assertEqual(int(nonzero.sum(axis=0).max()), 1)

    def test_norm_conservation(self):
        """Test that every cut keeps the squared norm."""
        st = build_ogeb(build_modified_family(4)).by_label[(0, 5)]
        for cut in enumerate_bipartitions(4):
            self.assertAlmostEqual(coefficient_matrix(st, cut).frobenius_squared(), st.norm_squared())

    def test_mismatched_n(self):
        """Test a cut for the wrong number of parties."""
        with self.assertRaises(CutError):
            coefficient_matrix(self.psi, Bipartition.of(4, [1]))

    def test_product_state(self):
        """Test a single basis string."""
        st = build_state(trits('000'), 0)
        m = coefficient_matrix(st, Bipartition.of(3, [1, 3])).matrix
        self.assertEqual(int(np.count_nonzero(m)), 1)


class TestSchmidtRank(unittest.TestCase):
    """Test cases for Schmidt ranks and genuine entanglement."""

    def test_standard_state(self):
        """Test the single-party rank of a standard state."""
        psi = build_ogeb(build_family(3)).by_label[(0, 0)]
        self.assertEqual(schmidt_rank(psi, Bipartition.of(3, [1])), 3)

    def test_product_state(self):
        """Test that a product state has rank 1 everywhere."""
        st = build_state(trits('000'), 0)
        for cut in enumerate_bipartitions(3):
            self.assertEqual(schmidt_rank(st, cut), 1)
        self.assertIsNone(rank_witness(st, Bipartition.of(3, [1])))

    def test_rank_symmetry(self):
        """Test that swapping the sides keeps the rank."""
        st = build_oges(build_modified_family(4)).by_label[(1, 3)]
        for cut in enumerate_bipartitions(4):
            self.assertEqual(schmidt_rank(st, cut), schmidt_rank(st, cut.swapped()))

    def test_partially_entangled_state_fails(self):
        """Test a state that is separable on one cut."""
        st = build_state(trits('000', '011'), 0)
        verdict = is_genuinely_entangled(st)
        self.assertFalse(verdict.passed)
        self.assertIn('{1}|{2,3}', verdict.violation)
        self.assertEqual(verdict.details['cuts'][0]['rank'], 1)

    def test_rank_witness(self):
        """Test the 2x2 witness minor."""
        psi = build_ogeb(build_family(3)).by_label[(1, 2)]
        witness = rank_witness(psi, Bipartition.of(3, [1, 2]))
        self.assertIsNotNone(witness)
        self.assertGreater(abs(witness.determinant), 1e-9)

    def test_standard_bases(self):
        """Test genuine entanglement of the standard bases."""
        for n in range(3, 6):
            for st in build_ogeb(build_family(n)).states:
                verdict = is_genuinely_entangled(st)
                self.assertTrue(verdict.passed, verdict.violation)
                single = [c['rank'] for c in verdict.details['cuts'] if len(c['side_a']) in (1, n - 1)]
                self.assertEqual(set(single), {3})

    def test_modified_sets(self):
        """Test genuine entanglement of the modified bases."""
        for n in (3, 4):
            for st in build_ogeb(build_modified_family(n)).states:
                self.assertTrue(is_genuinely_entangled(st).passed, st.label)

    @unittest.skipUnless(SLOW, "set QUTRIT_SLOW_TESTS=1 for desk-scale checks")
    def test_desk_scale(self):
        """Test five and six parties."""
        for n in (5, 6):
            family = build_modified_family(n)
            for ss in (build_ogeb(family), build_oges(family)):
                for st in ss.states:
                    self.assertTrue(is_genuinely_entangled(st).passed, st.label)
            for st in build_ogeb(build_family(n)).states:
                verdict = is_genuinely_entangled(st)
                self.assertTrue(verdict.passed, st.label)
                single = {c['rank'] for c in verdict.details['cuts'] if len(c['side_a']) in (1, n - 1)}
                self.assertEqual(single, {3}, st.label)


class TestOneUniform(unittest.TestCase):
    """Test cases for reduced densities."""

    def test_standard_state(self):
        """Test a maximally mixed marginal."""
        psi = build_ogeb(build_family(3)).by_label[(0, 0)]
        self.assertTrue(np.allclose(reduced_density(psi, 1), np.eye(3) / 3))

    def test_product_state(self):
        """Test the pure marginal of a product state."""
        st = build_state(trits('000'), 0)
        self.assertTrue(np.allclose(reduced_density(st, 2), np.diag([1, 0, 0])))
        self.assertFalse(is_one_uniform(st).passed)

    def test_ghz(self):
        """Test the GHZ-type reference state."""
        self.assertTrue(is_one_uniform(ghz_state(3)).passed)
        self.assertTrue(np.allclose(reduced_density(ghz_state(3), 1), np.eye(3) / 3))

    def test_removed_constants_state(self):
        """Test a state on the removed constant strings."""
        st = build_ogeb(build_modified_family(3)).group(3)[0]
        self.assertTrue(is_one_uniform(st).passed)

    def test_standard_bases(self):
        """Test one-uniformity of the standard bases."""
        for n in range(3, 6):
            for st in build_ogeb(build_family(n)).states:
                self.assertTrue(is_one_uniform(st, 1e-12).passed, st.label)

    def test_bad_arguments(self):
        """Test invalid tolerances and parties."""
        with self.assertRaises(ValueError):
            is_one_uniform(ghz_state(3), 0.0)
        with self.assertRaises(CutError):
            reduced_density(ghz_state(3), 4)

    def test_report(self):
        """Test the entanglement report counts."""
        report = entanglement_report(build_ogeb(build_family(3)), 'standard-N3')
        self.assertEqual(report['genuine_count'], 27)
        self.assertEqual(report['one_uniform_count'], 27)
        self.assertEqual(len(report['states'][0]['cuts']), 3)


if __name__ == '__main__':
    unittest.main()
