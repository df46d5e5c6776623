"""
Bipartition analysis of phased states: Schmidt ranks across cuts and
single-party reduced density matrices.
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from states import PhasedState, StateSet
from utils import Verdict, encode_rows, index_to_trits, trits_to_str

logger = logging.getLogger(__name__)

DEFAULT_RANK_TOL = 1e-9
DEFAULT_UNIFORM_TOL = 1e-12


class CutError(ValueError):
    """Invalid bipartition or party index."""


@dataclass(frozen=True)
class Bipartition:
    """Split of parties 1..N into side_a | side_b (1-based party indices)."""
    n_parties: int
    side_a: Tuple[int, ...]
    side_b: Tuple[int, ...]

    def __post_init__(self):
        a, b = set(self.side_a), set(self.side_b)
        if not a or not b:
            raise CutError("both sides of a bipartition must be nonempty")
        if a & b:
            raise CutError(f"sides overlap: {sorted(a & b)}")
        if a | b != set(range(1, self.n_parties + 1)):
            raise CutError(f"sides must cover parties 1..{self.n_parties}")
        if tuple(sorted(self.side_a)) != self.side_a or tuple(sorted(self.side_b)) != self.side_b:
            raise CutError("sides must be listed in increasing order")

    @classmethod
    def of(cls, n: int, side_a: Sequence[int]) -> 'Bipartition':
        a = tuple(sorted(set(side_a)))
        b = tuple(p for p in range(1, n + 1) if p not in a)
        return cls(n, a, b)

    @property
    def is_canonical(self) -> bool:
        return 1 in self.side_a

    def canonical(self) -> 'Bipartition':
        return self if self.is_canonical else Bipartition(self.n_parties, self.side_b, self.side_a)

    def swapped(self) -> 'Bipartition':
        return Bipartition(self.n_parties, self.side_b, self.side_a)

    def describe(self) -> str:
        fmt = lambda side: '{' + ','.join(str(p) for p in side) + '}'
        return f"{fmt(self.side_a)}|{fmt(self.side_b)}"


@dataclass(frozen=True)
class CoefficientMatrix:
    cut: Bipartition
    matrix: np.ndarray

    def frobenius_squared(self) -> float:
        return float(np.sum(np.abs(self.matrix) ** 2))


@dataclass(frozen=True)
class RankWitness:
    rows: Tuple[str, str]
    cols: Tuple[str, str]
    determinant: complex


def enumerate_bipartitions(n: int) -> List[Bipartition]:
    if n < 2:
        raise CutError(f"bipartitions need N >= 2, got {n}")
    cuts = []
    others = list(range(2, n + 1))
    for size in range(0, n - 1):
        for extra in combinations(others, size):
            cuts.append(Bipartition.of(n, (1,) + extra))
    return cuts


def _check_cut(s: PhasedState, cut: Bipartition) -> None:
    if cut.n_parties != s.n_parties:
        raise CutError(f"cut is for N={cut.n_parties}, state has N={s.n_parties}")


def coefficient_matrix(s: PhasedState, cut: Bipartition) -> CoefficientMatrix:
    _check_cut(s, cut)
    trits = s.trit_array
    cols_a = [p - 1 for p in cut.side_a]
    cols_b = [p - 1 for p in cut.side_b]
    rows = encode_rows(trits[:, cols_a], s.dim)
    cols = encode_rows(trits[:, cols_b], s.dim)
    matrix = np.zeros((s.dim ** len(cols_a), s.dim ** len(cols_b)), dtype=np.complex128)
    matrix[rows, cols] = s.amplitudes()
    return CoefficientMatrix(cut, matrix)


def _rank_of(matrix: np.ndarray, tol: float) -> int:
    sv = scipy.linalg.svd(matrix, compute_uv=False)
    if sv.size == 0:
        return 0
    threshold = tol * max(float(sv[0]), 1.0)
    return int(np.sum(sv > threshold))


def schmidt_rank(s: PhasedState, cut: Bipartition, tol: float = DEFAULT_RANK_TOL) -> int:
    return _rank_of(coefficient_matrix(s, cut).matrix, tol)


def is_genuinely_entangled(s: PhasedState, tol: float = DEFAULT_RANK_TOL) -> Verdict:
    cuts = []
    violation = None
    for cut in enumerate_bipartitions(s.n_parties):
        rank = schmidt_rank(s, cut, tol)
        cuts.append({'side_a': list(cut.side_a), 'rank': rank})
        if rank < 2 and violation is None:
            violation = f"state {list(s.label)} has Schmidt rank {rank} on cut {cut.describe()}"
    return Verdict(violation is None, violation, {'cuts': cuts})


def rank_witness(s: PhasedState, cut: Bipartition, tol: float = DEFAULT_RANK_TOL) -> Optional[RankWitness]:
    """A nonsingular 2x2 submatrix of the coefficient matrix, if one exists."""
    m = coefficient_matrix(s, cut).matrix
    nonzero = np.argwhere(np.abs(m) > tol)
    if nonzero.size == 0:
        return None
    r0, c0 = (int(x) for x in nonzero[0])
    # every 2x2 minor through (r0, c0) at once
    minors = m[r0, c0] * m - np.outer(m[:, c0], m[r0, :])
    hits = np.argwhere(np.abs(minors) > tol)
    if hits.size == 0:
        return None
    r1, c1 = (int(x) for x in hits[0])
    rows = tuple(trits_to_str(index_to_trits(r, len(cut.side_a), s.dim)) for r in (r0, r1))
    cols = tuple(trits_to_str(index_to_trits(c, len(cut.side_b), s.dim)) for c in (c0, c1))
    return RankWitness(rows, cols, complex(minors[r1, c1]))


def reduced_density(s: PhasedState, party: int) -> np.ndarray:
    """
    Single-party reduced density matrix, normalized by <psi|psi>.
    Built from the sparse support by grouping on the remaining parties.
    """
    if party < 1 or party > s.n_parties:
        raise CutError(f"party {party} outside 1..{s.n_parties}")
    trits = s.trit_array
    rest = [p for p in range(s.n_parties) if p != party - 1]
    rest_codes = encode_rows(trits[:, rest], s.dim)
    local = trits[:, party - 1]
    amps = s.amplitudes()
    slices = np.zeros((s.dim ** len(rest), s.dim), dtype=np.complex128)
    slices[rest_codes, local] = amps
    rho = slices.T @ slices.conj()
    return rho / float(np.sum(np.abs(amps) ** 2))


def max_uniform_deviation(s: PhasedState) -> float:
    target = np.eye(s.dim) / s.dim
    return max(
        float(np.max(np.abs(reduced_density(s, p) - target)))
        for p in range(1, s.n_parties + 1)
    )


def is_one_uniform(s: PhasedState, tol: float = DEFAULT_UNIFORM_TOL) -> Verdict:
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    deviation = max_uniform_deviation(s)
    if deviation > tol:
        return Verdict(
            False,
            f"state {list(s.label)} deviates from I/{s.dim} by {deviation:.3g}",
            {'max_deviation': deviation},
        )
    return Verdict(True, details={'max_deviation': deviation})


def entanglement_report(
    ss: StateSet,
    set_id: str,
    rank_tol: float = DEFAULT_RANK_TOL,
    uniform_tol: float = DEFAULT_UNIFORM_TOL,
) -> Dict[str, Any]:
    states = []
    genuine_count = 0
    uniform_count = 0
    for st in ss.states:
        genuine = is_genuinely_entangled(st, rank_tol)
        uniform = is_one_uniform(st, uniform_tol)
        genuine_count += genuine.passed
        uniform_count += uniform.passed
        states.append({
            'label': list(st.label),
            'cuts': genuine.details['cuts'],
            'genuine': genuine.passed,
            'one_uniform': uniform.passed,
        })
    logger.info(f"Entanglement: {genuine_count}/{len(ss.states)} genuine, {uniform_count} one-uniform")
    return {
        'set_id': set_id,
        'tolerances': {'rank': rank_tol, 'uniform': uniform_tol},
        'genuine_count': genuine_count,
        'one_uniform_count': uniform_count,
        'states': states,
    }
