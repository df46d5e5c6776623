"""
Recursive string families over Z_3^N.

The standard family splits Z_3^N into three sets G_0, G_1, G_2 by prefixing:
set i at length N+1 is ({i} x G_0) u ({i+2} x G_1) u ({i+1} x G_2), all
arithmetic mod 3. The modified families move the constant strings (c)^N out
of their home sets into a fourth set, with the case chosen by N mod 3.
"""

import logging
import random
from dataclasses import dataclass
from functools import cached_property
from itertools import permutations, product
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from utils import TritString, Verdict, encode_rows, strings_array, trits_to_str

logger = logging.getLogger(__name__)

STANDARD = 'standard'
MODIFIED = 'modified'

CASE_NONE = 'none'
CASE_I = 'case-I'
CASE_II = 'case-II'
CASE_III = 'case-III'

EXHAUSTIVE = 'exhaustive'
SAMPLED = 'sampled'

# Largest N permutation checks enumerate every permutation by default.
EXHAUSTIVE_LIMIT = 6
DEFAULT_PERMUTATION_SEED = 20240611
DEFAULT_PERMUTATION_SAMPLES = 1000

# Constant strings removed from the standard sets, per case:
# {set index: {branch k: constant c}}. Branch k of set i is
# {(i - k) mod 3} x G^{N-1}_k, so the removed string is (c)^N.
_REMOVALS: Dict[str, Dict[int, Dict[int, int]]] = {
    CASE_I: {0: {0: 0, 1: 2, 2: 1}},
    CASE_II: {0: {0: 0}, 1: {0: 1}},
    CASE_III: {0: {0: 0}, 1: {2: 2}},
}


class FamilyError(ValueError):
    """Invalid family construction request or malformed family data."""


@dataclass(frozen=True)
class StringFamily:
    n_parties: int
    variant: str
    case_tag: str
    sets: Tuple[FrozenSet[TritString], ...]
    # (home set index, string) for every constant string moved into set 3
    removed: Tuple[Tuple[int, TritString], ...] = ()

    @cached_property
    def index_map(self) -> Dict[TritString, int]:
        mapping: Dict[TritString, int] = {}
        for i, members in enumerate(self.sets):
            for s in members:
                mapping.setdefault(s, i)
        return mapping

    def sorted_set(self, i: int) -> List[TritString]:
        """Members of set i in canonical (lexicographic) order."""
        return sorted(self.sets[i])

    def sizes(self) -> List[int]:
        return [len(s) for s in self.sets]

    def label_array(self) -> np.ndarray:
        """Set index of every string, indexed by its base-3 encoding (-1 if absent)."""
        labels = np.full(3 ** self.n_parties, -1, dtype=np.int64)
        for i, members in enumerate(self.sets):
            if members:
                codes = encode_rows(strings_array(members))
                labels[codes] = i
        return labels


def case_of(n: int) -> str:
    if n < 3:
        raise FamilyError(f"modified families need N >= 3, got {n}")
    return {0: CASE_I, 1: CASE_II, 2: CASE_III}[n % 3]


def build_base_family() -> StringFamily:
    return StringFamily(
        n_parties=1,
        variant=STANDARD,
        case_tag=CASE_NONE,
        sets=(frozenset({(0,)}), frozenset({(1,)}), frozenset({(2,)})),
    )


def _prefixed(prefix: int, suffixes: Iterable[TritString]) -> FrozenSet[TritString]:
    return frozenset((prefix,) + s for s in suffixes)


def _branch_union(prev: StringFamily, i: int, drop: Optional[Dict[int, int]] = None) -> FrozenSet[TritString]:
    drop = drop or {}
    members: set = set()
    for k in range(3):
        suffixes = prev.sets[k]
        if k in drop:
            constant = (drop[k],) * prev.n_parties
            if constant not in suffixes:
                raise FamilyError(
                    f"constant string {trits_to_str(constant)} is not in G^{prev.n_parties}_{k}"
                )
            suffixes = suffixes - {constant}
        members |= _prefixed((i - k) % 3, suffixes)
    return frozenset(members)


def extend_family(f: StringFamily) -> StringFamily:
    if f.variant != STANDARD:
        raise FamilyError("extend_family only accepts standard families")
    if len(f.sets) != 3:
        raise FamilyError(f"standard family must have 3 sets, got {len(f.sets)}")
    return StringFamily(
        n_parties=f.n_parties + 1,
        variant=STANDARD,
        case_tag=CASE_NONE,
        sets=tuple(_branch_union(f, i) for i in range(3)),
    )


def build_family(n: int) -> StringFamily:
    if n < 1:
        raise FamilyError(f"families need N >= 1, got {n}")
    family = build_base_family()
    for _ in range(n - 1):
        family = extend_family(family)
    return family


def build_modified_family(n: int) -> StringFamily:
    """
    Case-dependent modified family for N >= 3.

    Set 2 is the standard G^N_2 unchanged; sets 0 and 1 lose the constant
    strings listed in _REMOVALS, which together form set 3.
    """
    case_tag = case_of(n)
    prev = build_family(n - 1)
    removals = _REMOVALS[case_tag]
    sets = [_branch_union(prev, i, removals.get(i)) for i in range(3)]
    removed = sorted(
        ((i, (c,) * n) for i, branches in removals.items() for c in branches.values()),
        key=lambda item: item[1],
    )
    sets.append(frozenset(s for _, s in removed))
    logger.debug(f"Built {case_tag} family for N={n} with sizes {[len(s) for s in sets]}")
    return StringFamily(
        n_parties=n,
        variant=MODIFIED,
        case_tag=case_tag,
        sets=tuple(sets),
        removed=tuple(removed),
    )


def verify_partition(f: StringFamily) -> Verdict:
    n = f.n_parties
    seen: Dict[TritString, int] = {}
    for i, members in enumerate(f.sets):
        for s in sorted(members):
            if len(s) != n or any(t not in (0, 1, 2) for t in s):
                return Verdict(False, f"malformed string {s!r} in set {i}", {'string': list(s)})
            if s in seen:
                return Verdict(
                    False,
                    f"string {trits_to_str(s)} appears in sets {seen[s]} and {i}",
                    {'string': trits_to_str(s)},
                )
            seen[s] = i
    if len(seen) != 3 ** n:
        for s in product(range(3), repeat=n):
            if s not in seen:
                return Verdict(
                    False,
                    f"string {trits_to_str(s)} is in no set",
                    {'string': trits_to_str(s)},
                )
    return Verdict(True, details={'strings': len(seen), 'sizes': f.sizes()})


def _sample_permutations(n: int, count: int, seed: int) -> List[Tuple[int, ...]]:
    rng = random.Random(seed)
    perms = []
    base = list(range(n))
    for _ in range(count):
        rng.shuffle(base)
        perms.append(tuple(base))
    return perms


def verify_permutation_invariance(
    f: StringFamily,
    mode: str = EXHAUSTIVE,
    samples: int = DEFAULT_PERMUTATION_SAMPLES,
    seed: Optional[int] = DEFAULT_PERMUTATION_SEED,
) -> Verdict:
    """Check pi(S) = S for every tested coordinate permutation pi and every set S."""
    n = f.n_parties
    if mode == EXHAUSTIVE:
        perms: Sequence[Tuple[int, ...]] = list(permutations(range(n)))
    elif mode == SAMPLED:
        if seed is None:
            raise FamilyError("sampled permutation mode requires a seed")
        perms = _sample_permutations(n, samples, seed)
    else:
        raise FamilyError(f"unknown permutation mode {mode!r}")

    labels = f.label_array()
    for i, members in enumerate(f.sets):
        if not members:
            continue
        ordered = f.sorted_set(i)
        digits = strings_array(ordered)
        for perm in perms:
            moved = labels[encode_rows(digits[:, list(perm)])]
            bad = np.nonzero(moved != i)[0]
            if bad.size:
                s = ordered[int(bad[0])]
                image = tuple(s[p] for p in perm)
                return Verdict(
                    False,
                    f"permutation {list(perm)} maps {trits_to_str(s)} in set {i} "
                    f"to {trits_to_str(image)} in set {int(moved[bad[0]])}",
                    {'permutation': list(perm), 'string': trits_to_str(s)},
                )
    return Verdict(True, details={'mode': mode, 'permutations': len(perms)})


def default_permutation_mode(n: int) -> str:
    return EXHAUSTIVE if n <= EXHAUSTIVE_LIMIT else SAMPLED


def classify_string(f: StringFamily, s: TritString) -> int:
    s = tuple(s)
    if len(s) != f.n_parties:
        raise FamilyError(f"string of length {len(s)} does not match N={f.n_parties}")
    try:
        return f.index_map[s]
    except KeyError:
        raise FamilyError(f"string {trits_to_str(s)} is not in the family")


def set_index_closed_form(s: TritString) -> int:
    # index(c, j) = (c + index(j)) mod 3 unrolls to the trit sum
    return sum(s) % 3


def constant_string_distribution(n: int) -> List[Dict[str, object]]:
    """Where (c)^N lands in the standard family, and through which branch."""
    if n < 2:
        raise FamilyError(f"the distribution table needs N >= 2, got {n}")
    rows = []
    for c in range(3):
        rows.append({
            'string': trits_to_str((c,) * n),
            'set': set_index_closed_form((c,) * n),
            'prefix': c,
            'branch': set_index_closed_form((c,) * (n - 1)),
        })
    return rows
