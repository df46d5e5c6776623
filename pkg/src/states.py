"""
Phased states built on the string families, with exact orthogonality decisions.

A state on a support of size s with phase index k is
    sum_r omega_s^(k * r) |j_r>
where r is the rank of j_r under a fixed bijection onto Z_s (lexicographic by
default). States are never normalized here.
"""

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations
from math import lcm
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sympy import primefactors

from tritsets import MODIFIED, FamilyError, StringFamily, verify_partition
from utils import TritString, Verdict, encode_rows, strings_array

logger = logging.getLogger(__name__)

LEXICOGRAPHIC = 'lexicographic'
REVERSE_LEXICOGRAPHIC = 'reverse-lexicographic'

OGEB_STANDARD = 'OGEB-standard'
OGEB_MODIFIED = 'OGEB-modified'
OGES = 'OGES'
EXTERNAL = 'external'

PATH_DISJOINT = 'disjoint'
PATH_COSET = 'coset'
PATH_EXACT = 'exact'
PATH_NUMERIC = 'numeric'

DEFAULT_ORTHO_TOL = 1e-12


class StateError(ValueError):
    """Invalid state data or mismatched state arguments."""


@lru_cache(maxsize=256)
def _check_support(support: Tuple[TritString, ...], n_parties: int, dim: int) -> None:
    # supports are shared between all states of one set, so this runs once per set
    if len(set(support)) != len(support):
        raise StateError("support strings must be distinct")
    for s in support:
        if len(s) != n_parties:
            raise StateError(f"support string {s!r} does not have length {n_parties}")
        if any(t < 0 or t >= dim for t in s):
            raise StateError(f"support string {s!r} has symbols outside [0, {dim})")


@dataclass(frozen=True)
class PhasedState:
    n_parties: int
    order: int
    support: Tuple[TritString, ...]
    exponents: Tuple[int, ...]
    label: Tuple[int, int]
    dim: int = 3

    def __post_init__(self):
        if self.order < 1:
            raise StateError(f"root-of-unity order must be positive, got {self.order}")
        if not self.support:
            raise StateError("a state needs a nonempty support")
        if len(self.exponents) != len(self.support):
            raise StateError("one exponent per support string is required")
        if min(self.exponents) < 0 or max(self.exponents) >= self.order:
            raise StateError(f"exponents must lie in [0, {self.order})")
        _check_support(self.support, self.n_parties, self.dim)

    @property
    def entries(self) -> List[Tuple[TritString, int]]:
        return list(zip(self.support, self.exponents))

    @cached_property
    def support_set(self) -> frozenset:
        return frozenset(self.support)

    @cached_property
    def exponent_map(self) -> Dict[TritString, int]:
        return dict(zip(self.support, self.exponents))

    @cached_property
    def trit_array(self) -> np.ndarray:
        return strings_array(self.support)

    @cached_property
    def indices(self) -> np.ndarray:
        """Dense-vector index of every support string (base `dim`, party 1 leading)."""
        return encode_rows(self.trit_array, self.dim)

    @cached_property
    def exponent_array(self) -> np.ndarray:
        return np.asarray(self.exponents, dtype=np.int64)

    def amplitudes(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.exponent_array / self.order)

    def norm_squared(self) -> int:
        # unit-modulus amplitudes
        return len(self.support)

    def to_dense(self) -> np.ndarray:
        vec = np.zeros(self.dim ** self.n_parties, dtype=np.complex128)
        vec[self.indices] = self.amplitudes()
        return vec


@dataclass(frozen=True)
class StateSet:
    states: Tuple[PhasedState, ...]
    provenance: str
    n_parties: int
    dim: int = 3

    def __len__(self) -> int:
        return len(self.states)

    @cached_property
    def by_label(self) -> Dict[Tuple[int, int], PhasedState]:
        return {s.label: s for s in self.states}

    def group(self, set_index: int) -> List[PhasedState]:
        return [s for s in self.states if s.label[0] == set_index]

    def contains(self, state: PhasedState) -> bool:
        found = self.by_label.get(state.label)
        return found is state or found == state


@dataclass(frozen=True)
class InnerProduct:
    exact_zero: bool
    value: complex
    error_bound: float
    path: str


def _ranks(count: int, bijection: str) -> np.ndarray:
    if bijection == LEXICOGRAPHIC:
        return np.arange(count, dtype=np.int64)
    if bijection == REVERSE_LEXICOGRAPHIC:
        return np.arange(count - 1, -1, -1, dtype=np.int64)
    raise StateError(f"unknown bijection {bijection!r}")


def build_state(
    support_set: Iterable[TritString],
    k: int,
    set_index: int = 0,
    bijection: str = LEXICOGRAPHIC,
    dim: int = 3,
) -> PhasedState:
    support = tuple(sorted(tuple(s) for s in support_set))
    return _build_on_support(support, k, set_index, bijection, dim)


def _build_on_support(
    support: Tuple[TritString, ...], k: int, set_index: int, bijection: str, dim: int
) -> PhasedState:
    s = len(support)
    if s == 0:
        raise StateError("cannot build a state on an empty support")
    if k < 0 or k >= s:
        raise StateError(f"phase index k={k} outside [0, {s})")
    exponents = (k * _ranks(s, bijection)) % s
    return PhasedState(
        n_parties=len(support[0]),
        order=s,
        support=support,
        exponents=tuple(exponents.tolist()),
        label=(set_index, k),
        dim=dim,
    )


def _states_for_family(f: StringFamily, skip: Sequence[int], bijection: str) -> List[PhasedState]:
    states = []
    for i in range(len(f.sets)):
        if i in skip:
            continue
        support = tuple(f.sorted_set(i))
        for k in range(len(support)):
            states.append(_build_on_support(support, k, i, bijection, 3))
    return states


def build_ogeb(f: StringFamily, bijection: str = LEXICOGRAPHIC) -> StateSet:
    verdict = verify_partition(f)
    if not verdict.passed:
        raise FamilyError(f"family is not a partition: {verdict.violation}")
    states = _states_for_family(f, (), bijection)
    provenance = OGEB_MODIFIED if f.variant == MODIFIED else OGEB_STANDARD
    logger.debug(f"Built {provenance} with {len(states)} states for N={f.n_parties}")
    return StateSet(tuple(states), provenance, f.n_parties)


def build_oges(f: StringFamily, bijection: str = LEXICOGRAPHIC) -> StateSet:
    """The modified basis without the states on the untouched set 2."""
    if f.variant != MODIFIED:
        raise FamilyError("build_oges needs a modified family")
    verdict = verify_partition(f)
    if not verdict.passed:
        raise FamilyError(f"family is not a partition: {verdict.violation}")
    states = _states_for_family(f, (2,), bijection)
    return StateSet(tuple(states), OGES, f.n_parties)


def relabel_bijection(ss: StateSet, bijection: str) -> StateSet:
    """Rebuild every state of a constructed set under another fixed bijection."""
    states = []
    for st in ss.states:
        states.append(_build_on_support(st.support, st.label[1], st.label[0], bijection, st.dim))
    return StateSet(tuple(states), ss.provenance, ss.n_parties, ss.dim)


def ghz_state(n: int, dim: int = 3, k: int = 0) -> PhasedState:
    if n < 2 or dim < 2:
        raise StateError(f"GHZ state needs N >= 2 and dim >= 2, got N={n}, dim={dim}")
    support = [(c,) * n for c in range(dim)]
    return build_state(support, k, set_index=0, dim=dim)


def oges_size_advantage(n: int) -> Dict[str, int]:
    if n < 3:
        raise StateError(f"OGES sizes are defined for N >= 3, got {n}")
    ours = 2 * 3 ** (n - 1)
    earlier = 3 ** n - 2 ** n + 1
    return {'oges_size': ours, 'earlier_size': earlier, 'fewer_by': earlier - ours}


@lru_cache(maxsize=None)
def _prime_factors(order: int) -> Tuple[int, ...]:
    return tuple(primefactors(order))


def _residue_sum_is_zero(diffs: np.ndarray, order: int) -> bool:
    # sum of omega^r over residues is exactly zero when the residue counts are
    # periodic under a shift by order/p for some prime p | order
    counts = np.bincount(diffs, minlength=order)
    for p in _prime_factors(order):
        if np.array_equal(counts, np.roll(counts, order // p)):
            return True
    return False


def inner_product(a: PhasedState, b: PhasedState) -> InnerProduct:
    """<a|b> with an exact decision wherever the phases allow one."""
    if a.n_parties != b.n_parties or a.dim != b.dim:
        raise StateError(
            f"states live in different spaces: N={a.n_parties}/{b.n_parties}, dim={a.dim}/{b.dim}"
        )
    order = lcm(a.order, b.order)
    scale_a = order // a.order
    scale_b = order // b.order

    if a.support is b.support or a.support == b.support:
        ea = a.exponent_array
        eb = b.exponent_array
    else:
        if a.support_set.isdisjoint(b.support_set):
            return InnerProduct(True, 0j, 0.0, PATH_DISJOINT)
        common = sorted(a.support_set & b.support_set)
        ea = np.asarray([a.exponent_map[j] for j in common], dtype=np.int64)
        eb = np.asarray([b.exponent_map[j] for j in common], dtype=np.int64)

    diffs = (eb * scale_b - ea * scale_a) % order
    if not diffs.any():
        return InnerProduct(False, complex(len(diffs)), 0.0, PATH_EXACT)
    if _residue_sum_is_zero(diffs, order):
        return InnerProduct(True, 0j, 0.0, PATH_COSET)
    value = complex(np.sum(np.exp(2j * np.pi * diffs / order)))
    bound = 4.0 * len(diffs) * np.finfo(np.float64).eps
    return InnerProduct(False, value, bound, PATH_NUMERIC)


def is_character_family(states: Sequence[PhasedState]) -> bool:
    """
    True when all states share one support of size s, have order s, and their
    exponent vectors are c * rho mod s for one rank vector rho and distinct c.
    Such a family is pairwise orthogonal by complete geometric sums.
    """
    if not states:
        return True
    first = states[0]
    s = len(first.support)
    if first.order != s or any(st.support != first.support or st.order != s for st in states):
        return False
    exps = np.asarray([st.exponents for st in states], dtype=np.int64)
    if s == 1:
        return len(states) == 1
    full_range = np.arange(s)
    rho = None
    for row in exps:
        if np.array_equal(np.sort(row), full_range):
            rho = row
            break
    if rho is None:
        return False
    pos_one = int(np.nonzero(rho == 1)[0][0])
    coeffs = exps[:, pos_one]
    if len(np.unique(coeffs)) != len(coeffs):
        return False
    return bool(np.array_equal(exps, (coeffs[:, None] * rho[None, :]) % s))


def verify_mutually_orthogonal(states: Sequence[PhasedState]) -> Verdict:
    if is_character_family(states):
        return Verdict(True, details={'path': 'character-family', 'states': len(states)})
    for a, b in combinations(states, 2):
        ip = inner_product(a, b)
        if not ip.exact_zero:
            return Verdict(
                False,
                f"states {list(a.label)} and {list(b.label)} are not exactly orthogonal",
                {'pair': [list(a.label), list(b.label)]},
            )
    return Verdict(True, details={'path': 'pairwise', 'states': len(states)})


def expected_size(ss: StateSet) -> Optional[int]:
    if ss.provenance in (OGEB_STANDARD, OGEB_MODIFIED):
        return 3 ** ss.n_parties
    if ss.provenance == OGES:
        return 2 * 3 ** (ss.n_parties - 1)
    return None


def verify_orthogonal_basis(
    ss: StateSet, tol: float = DEFAULT_ORTHO_TOL, strict: Optional[bool] = None
) -> Verdict:
    """
    Pairwise orthogonality of a state set, plus the expected count for
    constructed sets. In strict mode (the default for constructed sets) an
    off-diagonal pair that needs the numeric path fails the verdict even when
    its value is within tolerance.
    """
    if strict is None:
        strict = ss.provenance != EXTERNAL
    paths = {PATH_DISJOINT: 0, PATH_COSET: 0, PATH_NUMERIC: 0}
    details = {'states': len(ss.states), 'paths': paths}

    expected = expected_size(ss)
    if expected is not None and len(ss.states) != expected:
        return Verdict(False, f"expected {expected} states, found {len(ss.states)}", details)

    for st in ss.states:
        if st.norm_squared() == 0:
            return Verdict(False, f"state {list(st.label)} has zero norm", details)

    # group by support so cross-group disjointness is decided once per group pair
    groups: Dict[Tuple[TritString, ...], List[PhasedState]] = {}
    for st in ss.states:
        groups.setdefault(st.support, []).append(st)
    keys = list(groups)

    def check(a: PhasedState, b: PhasedState) -> Optional[Verdict]:
        ip = inner_product(a, b)
        if ip.exact_zero:
            paths[ip.path] += 1
            return None
        if ip.path == PATH_NUMERIC:
            paths[PATH_NUMERIC] += 1
            scale = tol * np.sqrt(a.norm_squared() * b.norm_squared())
            if abs(ip.value) <= scale and not strict:
                return None
            logger.warning(f"Numeric inner product for {list(a.label)}, {list(b.label)}: {ip.value}")
        return Verdict(
            False,
            f"states {list(a.label)} and {list(b.label)} are not orthogonal "
            f"(<a|b> = {ip.value:.6g}, path {ip.path})",
            dict(details, pair=[list(a.label), list(b.label)]),
        )

    for gi, key in enumerate(keys):
        members = groups[key]
        for a, b in combinations(members, 2):
            failure = check(a, b)
            if failure:
                return failure
        for other in keys[gi + 1:]:
            if frozenset(key).isdisjoint(other):
                paths[PATH_DISJOINT] += len(members) * len(groups[other])
                continue
            for a in members:
                for b in groups[other]:
                    failure = check(a, b)
                    if failure:
                        return failure
    return Verdict(True, details=details)
