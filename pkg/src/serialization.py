"""
File formats for families and state sets.

Family text format: optional metadata lines `#n`, `#variant`, `#case`, then
for every set a header `#set <index>` followed by one string per line. Missing
metadata is inferred from the string length and the set count.
Family JSON form: an array of sets, each an array of trit strings.
"""

import logging
from typing import Any, Dict, List

import numpy as np

from states import PhasedState, StateError, StateSet
from tritsets import (
    CASE_NONE,
    MODIFIED,
    STANDARD,
    FamilyError,
    StringFamily,
    case_of,
    set_index_closed_form,
)
from utils import str_to_trits, trits_to_str

logger = logging.getLogger(__name__)


def _removed_from_sets(sets) -> tuple:
    # a removed constant's home set is its standard index, the trit sum mod 3
    return tuple(sorted(((set_index_closed_form(s), s) for s in sets[3]), key=lambda item: item[1]))


def _make_family(n: int, variant: str, case_tag: str, sets: List[frozenset]) -> StringFamily:
    if variant == STANDARD and len(sets) != 3:
        raise FamilyError(f"a standard family has 3 sets, found {len(sets)}")
    if variant == MODIFIED and len(sets) != 4:
        raise FamilyError(f"a modified family has 4 sets, found {len(sets)}")
    removed = _removed_from_sets(sets) if variant == MODIFIED else ()
    return StringFamily(n, variant, case_tag, tuple(sets), removed)


def _common_length(sets: List[frozenset]) -> int:
    lengths = {len(s) for members in sets for s in members}
    if len(lengths) != 1:
        raise FamilyError(f"strings of mixed lengths {sorted(lengths)}" if lengths else "family has no strings")
    return lengths.pop()


def _variant_for(sets: List[frozenset]) -> str:
    return MODIFIED if len(sets) == 4 else STANDARD


def family_to_text(f: StringFamily) -> str:
    lines = [f"#n {f.n_parties}", f"#variant {f.variant}", f"#case {f.case_tag}"]
    for i in range(len(f.sets)):
        lines.append(f"#set {i}")
        lines.extend(trits_to_str(s) for s in f.sorted_set(i))
    return '\n'.join(lines) + '\n'


def family_from_text(text: str) -> StringFamily:
    meta: Dict[str, str] = {}
    sets: List[set] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith('#'):
            key, _, value = line[1:].partition(' ')
            if key == 'set':
                if not value.strip().isdigit() or int(value) != len(sets):
                    raise FamilyError(f"line {number}: expected '#set {len(sets)}', got {line!r}")
                sets.append(set())
            elif key in ('n', 'variant', 'case'):
                meta[key] = value.strip()
            else:
                raise FamilyError(f"line {number}: unknown header {line!r}")
            continue
        if not sets:
            raise FamilyError(f"line {number}: string before the first '#set' header")
        try:
            sets[-1].add(str_to_trits(line))
        except ValueError as e:
            raise FamilyError(f"line {number}: {e}")

    frozen = [frozenset(m) for m in sets]
    n = int(meta['n']) if 'n' in meta else _common_length(frozen)
    variant = meta.get('variant') or _variant_for(frozen)
    case_tag = meta.get('case') or (case_of(n) if variant == MODIFIED else CASE_NONE)
    for members in frozen:
        for s in members:
            if len(s) != n:
                raise FamilyError(f"string {trits_to_str(s)} does not have length {n}")
    return _make_family(n, variant, case_tag, frozen)


def family_to_json(f: StringFamily) -> List[List[str]]:
    return [[trits_to_str(s) for s in f.sorted_set(i)] for i in range(len(f.sets))]


def family_from_json(data: List[List[str]]) -> StringFamily:
    """Rebuild a family; N comes from the string length and the variant from the set count."""
    if not isinstance(data, list) or not data:
        raise FamilyError("family JSON must be a nonempty array of sets")
    sets = [frozenset(str_to_trits(s) for s in members) for members in data]
    n = _common_length(sets)
    if _variant_for(sets) == MODIFIED:
        return _make_family(n, MODIFIED, case_of(n), sets)
    return _make_family(n, STANDARD, CASE_NONE, sets)


def state_to_json(st: PhasedState) -> Dict[str, Any]:
    return {
        'set_index': st.label[0],
        'k': st.label[1],
        'order': st.order,
        'support': [{'trits': trits_to_str(j), 'exponent': e} for j, e in st.entries],
    }


def stateset_to_json(ss: StateSet) -> Dict[str, Any]:
    return {
        'provenance': ss.provenance,
        'n_parties': ss.n_parties,
        'dim': ss.dim,
        'states': [state_to_json(st) for st in ss.states],
    }


def stateset_from_json(data: Dict[str, Any]) -> StateSet:
    try:
        n = int(data['n_parties'])
        dim = int(data.get('dim', 3))
        states = []
        for item in data['states']:
            entries = sorted(
                (str_to_trits(e['trits'], dim), int(e['exponent'])) for e in item['support']
            )
            states.append(PhasedState(
                n_parties=n,
                order=int(item['order']),
                support=tuple(j for j, _ in entries),
                exponents=tuple(e for _, e in entries),
                label=(int(item['set_index']), int(item['k'])),
                dim=dim,
            ))
        return StateSet(tuple(states), data['provenance'], n, dim)
    except (KeyError, TypeError) as e:
        raise StateError(f"malformed state-set JSON: {e}")


def state_to_dense(st: PhasedState) -> List[float]:
    """Interleaved real/imaginary parts, index = base-dim string encoding."""
    vec = st.to_dense()
    out = np.empty(2 * vec.size)
    out[0::2] = vec.real
    out[1::2] = vec.imag
    return out.tolist()


def stateset_to_dense(ss: StateSet) -> Dict[str, Any]:
    return {
        'n_parties': ss.n_parties,
        'dim': ss.dim,
        'labels': [list(st.label) for st in ss.states],
        'vectors': [state_to_dense(st) for st in ss.states],
    }
