"""
Numeric oracle for orthogonality-preserving local measurements (OPLMs).

For a cut with spectator side A and measuring side B, every pair of distinct
states a, b gives the linear constraint <Psi_a| (I_A x E) |Psi_b> = 0 on a
Hermitian operator E acting on B. The real nullspace of the stacked
constraints is the space of admissible POVM elements; the set is locally
irreducible through B when that space is spanned by the identity.

Hermitian parametrization (fixed so nullspace bases compare across runs):
the d real diagonal entries first, then for every strictly upper entry (m, n)
in row-major order the pair (sqrt(2) Re E_mn, sqrt(2) Im E_mn). The sqrt(2)
scaling makes parameter-space orthonormality equal Frobenius orthonormality.
"""

import logging
import time
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from entanglement import Bipartition, coefficient_matrix
from states import EXTERNAL, StateSet, build_state, verify_orthogonal_basis
from utils import Verdict

logger = logging.getLogger(__name__)

LEMMA3 = 'lemma3'
FULL_SWEEP = 'full-sweep'

DEFAULT_NULL_TOL = 1e-9
DEFAULT_TRIVIAL_TOL = 1e-9
DEFAULT_RESPECT_TOL = 1e-9
MAX_ORACLE_DIM = 81

# Stacked constraint rows beyond this are folded into an equivalent
# triangular system (same nullspace and singular values).
FOLD_ROWS = 20000
_ZERO_ROW_TOL = 1e-14


class OracleError(ValueError):
    """Dimension mismatch, non-orthogonal input, or a gated oracle dimension."""


@dataclass(frozen=True)
class OplmConstraintSystem:
    # measuring side is cut.side_b
    cut: Bipartition
    dim: int
    pairs: Tuple[Tuple[Tuple[int, int], Tuple[int, int]], ...]
    matrix: np.ndarray
    raw_rows: int
    folded: bool = False

    @property
    def n_params(self) -> int:
        return self.dim * self.dim

    def identity_residual(self) -> float:
        if self.matrix.shape[0] == 0:
            return 0.0
        return float(np.linalg.norm(self.matrix @ identity_params(self.dim)))


@dataclass(frozen=True)
class OplmSolutionSpace:
    dimension: int
    basis: Tuple[np.ndarray, ...]
    is_trivial: bool
    identity_residual: Optional[float] = None


def identity_params(d: int) -> np.ndarray:
    p = np.zeros(d * d)
    p[:d] = 1.0
    return p


def params_to_hermitian(p: np.ndarray, d: int) -> np.ndarray:
    iu = np.triu_indices(d, 1)
    e = np.zeros((d, d), dtype=np.complex128)
    e[np.diag_indices(d)] = p[:d]
    upper = (p[d::2] + 1j * p[d + 1::2]) / np.sqrt(2.0)
    e[iu] = upper
    e[iu[1], iu[0]] = upper.conj()
    return e


def hermitian_to_params(e: np.ndarray) -> np.ndarray:
    d = e.shape[0]
    iu = np.triu_indices(d, 1)
    p = np.zeros(d * d)
    p[:d] = np.real(np.diag(e))
    p[d::2] = np.sqrt(2.0) * np.real(e[iu])
    p[d + 1::2] = np.sqrt(2.0) * np.imag(e[iu])
    return p


def measuring_cut(n: int, measuring: Sequence[int]) -> Bipartition:
    """Bipartition with the given parties on the measuring side (side_b)."""
    measuring = tuple(sorted(set(measuring)))
    spectators = tuple(p for p in range(1, n + 1) if p not in measuring)
    return Bipartition(n, spectators, measuring)


def measuring_cuts(n: int, mode: str = LEMMA3) -> List[Bipartition]:
    if n < 2:
        raise OracleError(f"cuts need N >= 2, got {n}")
    if mode == LEMMA3:
        return [Bipartition.of(n, [i]) for i in range(1, n + 1)]
    if mode == FULL_SWEEP:
        cuts = []
        for size in range(n - 1, 0, -1):
            for side in combinations(range(1, n + 1), size):
                cuts.append(measuring_cut(n, side))
        return cuts
    raise OracleError(f"unknown certification mode {mode!r}")


def _coefficient_rows(k: np.ndarray, d: int) -> np.ndarray:
    """Real constraint rows (real parts then imaginary parts) for a batch of K matrices."""
    iu0, iu1 = np.triu_indices(d, 1)
    coeffs = np.zeros((k.shape[0], d * d), dtype=np.complex128)
    coeffs[:, :d] = k[:, np.arange(d), np.arange(d)]
    kmn = k[:, iu0, iu1]
    knm = k[:, iu1, iu0]
    coeffs[:, d::2] = (kmn + knm) / np.sqrt(2.0)
    coeffs[:, d + 1::2] = 1j * (kmn - knm) / np.sqrt(2.0)
    return np.concatenate([coeffs.real, coeffs.imag], axis=0)


def _fold(rows: np.ndarray) -> np.ndarray:
    r = scipy.linalg.qr(rows, mode='r')[0]
    return r[:min(rows.shape)]


def build_constraint_system(ss: StateSet, cut: Bipartition) -> OplmConstraintSystem:
    if cut.n_parties != ss.n_parties:
        raise OracleError(f"cut is for N={cut.n_parties}, state set has N={ss.n_parties}")
    if any(st.n_parties != ss.n_parties or st.dim != ss.dim for st in ss.states):
        raise OracleError("all states must share N and the local dimension")
    d = ss.dim ** len(cut.side_b)
    n_params = d * d
    xs = np.stack([coefficient_matrix(st, cut).matrix for st in ss.states])
    labels = [st.label for st in ss.states]

    pairs = []
    blocks: List[np.ndarray] = []
    pending = 0
    raw_rows = 0
    folded = False
    for a in range(len(labels) - 1):
        k = np.einsum('sm,bsn->bmn', xs[a].conj(), xs[a + 1:])
        pairs.extend((labels[a], labels[b]) for b in range(a + 1, len(labels)))
        rows = _coefficient_rows(k, d)
        rows = rows[np.any(np.abs(rows) > _ZERO_ROW_TOL, axis=1)]
        raw_rows += rows.shape[0]
        if rows.shape[0]:
            blocks.append(rows)
            pending += rows.shape[0]
        if pending > max(FOLD_ROWS, 4 * n_params):
            blocks = [_fold(np.concatenate(blocks, axis=0))]
            pending = blocks[0].shape[0]
            folded = True

    matrix = np.concatenate(blocks, axis=0) if blocks else np.zeros((0, n_params))
    logger.debug(
        f"Cut {cut.describe()}: {len(pairs)} pairs, {raw_rows} nonzero rows, {n_params} parameters"
    )
    return OplmConstraintSystem(cut, d, tuple(pairs), matrix, raw_rows, folded)


def solve_solution_space(
    cs: OplmConstraintSystem,
    null_tol: float = DEFAULT_NULL_TOL,
    trivial_tol: float = DEFAULT_TRIVIAL_TOL,
) -> OplmSolutionSpace:
    d = cs.dim
    a = cs.matrix
    if a.shape[0] == 0:
        null = np.eye(cs.n_params)
    else:
        _, sv, vh = scipy.linalg.svd(a, full_matrices=a.shape[0] < a.shape[1])
        rank = int(np.sum(sv > null_tol * sv[0])) if sv[0] > 0 else 0
        null = vh[rank:]

    basis = []
    for p in null:
        e = params_to_hermitian(p, d)
        # fix the sign so the reported element has nonnegative trace
        if np.real(np.trace(e)) < 0:
            e = -e
        basis.append(e)

    trivial = False
    residual = None
    if len(basis) == 1:
        e = basis[0] / np.linalg.norm(basis[0])
        unit = np.eye(d) / np.sqrt(d)
        overlap = np.real(np.trace(unit @ e))
        residual = float(np.linalg.norm(e - overlap * unit))
        trivial = residual < trivial_tol
    return OplmSolutionSpace(len(basis), tuple(basis), trivial, residual)


def _check_gate(cut: Bipartition, dim: int, allow_large: bool) -> int:
    d = dim ** len(cut.side_b)
    if d > MAX_ORACLE_DIM and not allow_large:
        raise OracleError(
            f"measuring side {list(cut.side_b)} has dimension {d} > {MAX_ORACLE_DIM}; "
            f"pass allow_large to solve it"
        )
    return d


def solve_cut(
    ss: StateSet,
    cut: Bipartition,
    null_tol: float = DEFAULT_NULL_TOL,
    trivial_tol: float = DEFAULT_TRIVIAL_TOL,
    allow_large: bool = False,
) -> OplmSolutionSpace:
    _check_gate(cut, ss.dim, allow_large)
    return solve_solution_space(build_constraint_system(ss, cut), null_tol, trivial_tol)


def certify_strong_nonlocality(
    ss: StateSet,
    mode: str = LEMMA3,
    null_tol: float = DEFAULT_NULL_TOL,
    trivial_tol: float = DEFAULT_TRIVIAL_TOL,
    allow_large: bool = False,
    timings: bool = False,
    ledgers: Optional[Dict[int, Any]] = None,
) -> Verdict:
    """
    Solve the OPLM space on every measuring side the mode asks for.
    lemma3 solves the N sides that leave one party out; full-sweep also
    solves every smaller side. Passes iff every solved space is trivial.

    ledgers maps a spectator party to its symbolic ledger; the matching cut
    is then cross-checked with ledger_respected_by.
    """
    ledgers = ledgers or {}
    cuts = measuring_cuts(ss.n_parties, mode)
    for cut in cuts:
        _check_gate(cut, ss.dim, allow_large)

    ortho = verify_orthogonal_basis(ss, strict=ss.provenance != EXTERNAL)
    if not ortho.passed:
        raise OracleError(f"input states are not pairwise orthogonal: {ortho.violation}")

    logger.info(f"Certifying {len(ss.states)} states over {len(cuts)} cuts ({mode})")
    results = []
    violation = None
    for cut in cuts:
        started = time.perf_counter()
        cs = build_constraint_system(ss, cut)
        space = solve_solution_space(cs, null_tol, trivial_tol)
        entry: Dict[str, Any] = {
            'measuring_side': list(cut.side_b),
            'dimension': space.dimension,
            'trivial': space.is_trivial,
            'constraints': cs.raw_rows,
        }
        ledger = ledgers.get(cut.side_a[0]) if len(cut.side_a) == 1 else None
        if ledger is not None:
            respected = ledger_respected_by(ledger, space)
            entry['ledger_respected'] = respected.passed
            if not respected.passed and violation is None:
                violation = f"measuring side {list(cut.side_b)}: {respected.violation}"
        if timings:
            entry['runtime_ms'] = round((time.perf_counter() - started) * 1000.0, 3)
        results.append(entry)
        logger.debug(f"Measuring side {list(cut.side_b)}: dimension {space.dimension}")
        if not space.is_trivial and violation is None:
            violation = (
                f"measuring side {list(cut.side_b)} admits a nontrivial OPLM "
                f"(solution dimension {space.dimension})"
            )
    if violation:
        logger.warning(violation)
    return Verdict(violation is None, violation, {'mode': mode, 'cuts': results})


def ghz_basis_fixture() -> StateSet:
    """The 3-qubit GHZ basis |000>+-|111>, |011>+-|100>, |001>+-|110>, |010>+-|101>."""
    pairs = [('000', '111'), ('011', '100'), ('001', '110'), ('010', '101')]
    states = []
    for i, (left, right) in enumerate(pairs):
        support = [tuple(int(c) for c in left), tuple(int(c) for c in right)]
        for k in (0, 1):
            states.append(build_state(support, k, set_index=i, dim=2))
    return StateSet(tuple(states), EXTERNAL, 3, dim=2)


def product_basis_fixture() -> StateSet:
    states = [
        build_state([(a, b)], 0, set_index=2 * a + b, dim=2)
        for a in (0, 1) for b in (0, 1)
    ]
    return StateSet(tuple(states), EXTERNAL, 2, dim=2)


def ledger_respected_by(ledger, space: OplmSolutionSpace, tol: float = DEFAULT_RESPECT_TOL) -> Verdict:
    """Every derived zero block and diagonal equality holds in each nullspace element."""
    worst = 0.0
    for idx, e in enumerate(space.basis):
        if e.shape != (ledger.dim, ledger.dim):
            raise OracleError(
                f"ledger covers dimension {ledger.dim}, solution space has {e.shape[0]}"
            )
        zero_norm = float(np.linalg.norm(e[ledger.zero_mask]))
        worst = max(worst, zero_norm)
        if zero_norm >= tol:
            return Verdict(
                False,
                f"basis element {idx} has zero-block norm {zero_norm:.3g}",
                {'element': idx},
            )
        diag = np.real(np.diag(e))
        for cls in ledger.diag_classes():
            spread = float(np.ptp(diag[cls])) if len(cls) > 1 else 0.0
            if spread >= tol:
                return Verdict(
                    False,
                    f"basis element {idx} breaks a diagonal equality by {spread:.3g}",
                    {'element': idx},
                )
    return Verdict(True, details={'elements': len(space.basis), 'max_zero_block_norm': worst})
