"""
Symbolic derivation of measuring-side facts for one spectator party.

The ledger tracks what is known about a POVM element E acting on the N-1
measuring parties: which entries are zero (BlockZero) and which diagonal
entries are equal (DiagEqual). Two rules add facts:

  block zeros    Orthogonal families spanning disjoint string sets S and T,
                 all drawn from the constrained state set, force every
                 same-spectator entry between S and T to zero.
  block trivial  An orthogonal family spanning S, plus a pivot u0 in every
                 support whose same-spectator couplings to S are already
                 zero, makes E proportional to the identity on every
                 spectator slice of S, with one common constant.

Facts are only ever added. Re-applying a step leaves the ledger unchanged.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from proof_scripts import BlockTrivial, BlockZeros, Combine, Conclude, SetRef, script_for
from states import PhasedState, StateSet, build_oges, verify_mutually_orthogonal
from tritsets import StringFamily, build_family, build_modified_family
from utils import TritString, Verdict, encode_rows, strings_array, trits_to_str

logger = logging.getLogger(__name__)

BLOCK_ZERO = 'BlockZero'
DIAG_EQUAL = 'DiagEqual'
BLOCK_PROP_IDENTITY = 'BlockPropIdentity'


class ProofStepError(ValueError):
    """A lemma precondition failed; carries the step that failed."""

    def __init__(self, step: str, message: str):
        super().__init__(f"{step}: {message}")
        self.step = step


@dataclass(frozen=True)
class Fact:
    kind: str
    left: Tuple[int, ...]
    right: Tuple[int, ...] = ()
    lemma: str = ''


class OplmLedger:
    def __init__(self, n_parties: int, spectator: int):
        if n_parties < 2:
            raise ValueError(f"a ledger needs N >= 2, got {n_parties}")
        if spectator < 1 or spectator > n_parties:
            raise ValueError(f"spectator {spectator} outside 1..{n_parties}")
        self.n_parties = n_parties
        self.spectator = spectator
        self.dim = 3 ** (n_parties - 1)
        self.zero_mask = np.zeros((self.dim, self.dim), dtype=bool)
        self._labels = np.arange(self.dim)
        self.facts: List[Fact] = []
        self._seen = set()

    def _record(self, fact: Fact) -> bool:
        key = (fact.kind, fact.left, fact.right)
        if key in self._seen:
            return False
        self._seen.add(key)
        self.facts.append(fact)
        return True

    def add_block_zero(self, rows: np.ndarray, cols: np.ndarray, lemma: str) -> None:
        if np.intersect1d(rows, cols).size:
            raise ValueError("BlockZero needs disjoint index sets")
        self.zero_mask[np.ix_(rows, cols)] = True
        self.zero_mask[np.ix_(cols, rows)] = True
        self._record(Fact(BLOCK_ZERO, tuple(rows.tolist()), tuple(cols.tolist()), lemma))

    def add_prop_identity(self, codes: np.ndarray, lemma: str) -> None:
        off = ~np.eye(len(codes), dtype=bool)
        self.zero_mask[np.ix_(codes, codes)] |= off
        self._record(Fact(BLOCK_PROP_IDENTITY, tuple(codes.tolist()), (), lemma))

    def add_diag_equal(self, codes: np.ndarray, lemma: str) -> None:
        classes = np.unique(self._labels[codes])
        self._labels[np.isin(self._labels, classes)] = classes.min()
        self._record(Fact(DIAG_EQUAL, tuple(np.sort(codes).tolist()), (), lemma))

    def is_zero(self, rows: np.ndarray, cols: np.ndarray) -> bool:
        """True when every off-diagonal entry of the rows x cols block is known zero."""
        block = self.zero_mask[np.ix_(rows, cols)]
        diagonal = np.equal.outer(rows, cols)
        return bool(np.all(block | diagonal))

    def diag_classes(self) -> List[np.ndarray]:
        return [np.nonzero(self._labels == lab)[0] for lab in np.unique(self._labels)]

    def concludes_identity(self) -> bool:
        everything = np.arange(self.dim)
        return self.is_zero(everything, everything) and len(np.unique(self._labels)) == 1


class SymbolicConstraints:
    """
    The constraint system of a state set, kept symbolic: every pair of
    distinct states in the set contributes <a| I x E |b> = 0. Witness
    families are validated once per string set and reused across spectators.
    """

    def __init__(self, ss: StateSet):
        self.ss = ss
        self._checked: Dict[Tuple[TritString, ...], List[PhasedState]] = {}

    def binds(self, state: PhasedState) -> bool:
        return self.ss.contains(state)

    def validate_witness(self, strings: Sequence[TritString], witness: Sequence[PhasedState], step: str) -> None:
        key = tuple(sorted(strings))
        if key in self._checked and self._checked[key] == list(witness):
            return
        target = frozenset(key)
        if len(witness) != len(target):
            raise ProofStepError(
                step, f"witness family has {len(witness)} states but must span {len(target)} strings"
            )
        for st in witness:
            if not self.binds(st):
                raise ProofStepError(step, f"witness state {list(st.label)} is not in the constrained set")
        supports: Dict[int, Tuple[TritString, ...]] = {}
        for st in witness:
            supports.setdefault(id(st.support), st.support)
        for support in supports.values():
            if not target.issuperset(support):
                raise ProofStepError(step, "a witness support leaves the spanned set")
        verdict = verify_mutually_orthogonal(witness)
        if not verdict.passed:
            raise ProofStepError(step, f"witness family is not orthogonal: {verdict.violation}")
        self._checked[key] = list(witness)


def spectator_slices(strings: Sequence[TritString], spectator: int) -> Dict[int, np.ndarray]:
    """Measuring-side codes of the strings, grouped by the spectator trit."""
    if not strings:
        return {}
    arr = strings_array(sorted(strings))
    values = arr[:, spectator - 1]
    codes = encode_rows(np.delete(arr, spectator - 1, axis=1))
    return {a: np.sort(codes[values == a]) for a in range(3) if np.any(values == a)}


def apply_block_zeros(
    ledger: OplmLedger,
    constraints: SymbolicConstraints,
    s_strings: Sequence[TritString],
    t_strings: Sequence[TritString],
    witness_s: Sequence[PhasedState],
    witness_t: Sequence[PhasedState],
    step: str = 'block-zeros',
) -> List[Tuple[int, np.ndarray, np.ndarray]]:
    """Returns the (spectator value, rows, cols) blocks it zeroed."""
    if not s_strings or not t_strings:
        raise ProofStepError(step, "block zeros needs nonempty sets")
    if not frozenset(s_strings).isdisjoint(t_strings):
        raise ProofStepError(step, "block zeros needs disjoint sets")
    constraints.validate_witness(s_strings, witness_s, step)
    constraints.validate_witness(t_strings, witness_t, step)

    s_slices = spectator_slices(s_strings, ledger.spectator)
    t_slices = spectator_slices(t_strings, ledger.spectator)
    blocks = []
    for a in sorted(set(s_slices) & set(t_slices)):
        ledger.add_block_zero(s_slices[a], t_slices[a], step)
        blocks.append((a, s_slices[a], t_slices[a]))
    return blocks


def apply_block_trivial(
    ledger: OplmLedger,
    constraints: SymbolicConstraints,
    s_strings: Sequence[TritString],
    u0: TritString,
    witness: Sequence[PhasedState],
    step: str = 'block-trivial',
) -> Dict[int, np.ndarray]:
    """Returns the spectator slices now known to be proportional to identity."""
    u0 = tuple(u0)
    members = frozenset(s_strings)
    if u0 not in members:
        raise ProofStepError(step, f"pivot {trits_to_str(u0)} is not in the set")
    constraints.validate_witness(s_strings, witness, step)
    for st in {id(w.support): w for w in witness}.values():
        if u0 not in st.support_set:
            raise ProofStepError(
                step, f"pivot {trits_to_str(u0)} has zero overlap with witness {list(st.label)}"
            )

    slices = spectator_slices(s_strings, ledger.spectator)
    a0 = u0[ledger.spectator - 1]
    b0 = encode_rows(np.asarray([u0[:ledger.spectator - 1] + u0[ledger.spectator:]]))
    rest = slices[a0][slices[a0] != b0[0]]
    if rest.size and not ledger.is_zero(b0, rest):
        raise ProofStepError(
            step, f"coupling from pivot {trits_to_str(u0)} to the rest of its slice is not known zero"
        )

    for a in sorted(slices):
        ledger.add_prop_identity(slices[a], step)
    ledger.add_diag_equal(np.concatenate([slices[a] for a in sorted(slices)]), step)
    return slices


@dataclass
class ProofRun:
    n_parties: int
    case_tag: str
    ledgers: List[OplmLedger] = field(default_factory=list)
    trace: List[Dict[str, Any]] = field(default_factory=list)


class _Resolver:
    """Measuring-side codes of the script's named blocks."""

    def __init__(self, n: int):
        self.m = n - 1
        self.family = build_family(self.m)
        self._codes = {k: encode_rows(strings_array(self.family.sorted_set(k))) for k in range(3)}

    def constant(self, c: int) -> int:
        return int(encode_rows(np.asarray([(c,) * self.m]))[0])

    def codes(self, ref: SetRef) -> np.ndarray:
        if ref.kind == 'C':
            return np.asarray([self.constant(ref.index)])
        codes = self._codes[ref.index]
        if ref.minus is not None:
            drop = self.constant(ref.minus)
            if drop not in codes:
                raise ProofStepError(ref.describe(), "the removed constant is not in the named set")
            codes = codes[codes != drop]
        return np.sort(codes)


def _expect(step: str, what: str, got: np.ndarray, want: np.ndarray) -> None:
    if not np.array_equal(np.sort(got), np.sort(want)):
        raise ProofStepError(step, f"derived {what} does not match the scripted block")


def _set_name(i: int) -> str:
    return f"S{i}"


def _run_for_spectator(
    run: ProofRun,
    family: StringFamily,
    constraints: SymbolicConstraints,
    resolver: _Resolver,
    spectator: int,
    ledger: Optional[OplmLedger] = None,
) -> OplmLedger:
    n = family.n_parties
    ledger = ledger or OplmLedger(n, spectator)
    for number, step in enumerate(script_for(n)):
        name = f"spectator {spectator} step {number}"
        if isinstance(step, BlockZeros):
            s_strings = family.sorted_set(step.first)
            t_strings = family.sorted_set(step.second)
            blocks = apply_block_zeros(
                ledger, constraints, s_strings, t_strings,
                constraints.ss.group(step.first), constraints.ss.group(step.second), name,
            )
            if [a for a, _, _ in blocks] != [a for a, _, _ in step.expected]:
                raise ProofStepError(name, "spectator values of the derived blocks differ from the script")
            for (a, rows, cols), (_, s_ref, t_ref) in zip(blocks, step.expected):
                _expect(name, f"rows at spectator {a}", rows, resolver.codes(s_ref))
                _expect(name, f"columns at spectator {a}", cols, resolver.codes(t_ref))
                run.trace.append({
                    'spectator': spectator,
                    'lemma': 'block-zeros',
                    'S': s_ref.describe(),
                    'T': t_ref.describe(),
                    'spectator_value': a,
                    'witnesses': [_set_name(step.first), _set_name(step.second)],
                    'fact': f"BlockZero({s_ref.describe()}, {t_ref.describe()})",
                })
        elif isinstance(step, BlockTrivial):
            a0, c = step.pivot
            u0 = [c] * (n - 1)
            u0.insert(spectator - 1, a0)
            slices = apply_block_trivial(
                ledger, constraints, family.sorted_set(step.set_index), tuple(u0),
                constraints.ss.group(step.set_index), name,
            )
            if sorted(slices) != [a for a, _ in step.expected]:
                raise ProofStepError(name, "spectator values of the derived slices differ from the script")
            for a, ref in step.expected:
                _expect(name, f"slice at spectator {a}", slices[a], resolver.codes(ref))
                run.trace.append({
                    'spectator': spectator,
                    'lemma': 'block-trivial',
                    'S': ref.describe(),
                    'u0': trits_to_str(u0),
                    'spectator_value': a,
                    'witnesses': [_set_name(step.set_index)],
                    'fact': f"BlockPropIdentity({ref.describe()})",
                })
            run.trace.append({
                'spectator': spectator,
                'lemma': 'block-trivial',
                'S': '+'.join(ref.describe() for _, ref in step.expected),
                'u0': trits_to_str(u0),
                'witnesses': [_set_name(step.set_index)],
                'fact': 'DiagEqual(' + ', '.join(ref.describe() for _, ref in step.expected) + ')',
            })
        elif isinstance(step, Combine):
            for s_ref, t_ref in step.parts:
                if not ledger.is_zero(resolver.codes(s_ref), resolver.codes(t_ref)):
                    raise ProofStepError(
                        name, f"part ({s_ref.describe()}, {t_ref.describe()}) is not derived yet"
                    )
            rows = resolver.codes(step.result[0])
            cols = resolver.codes(step.result[1])
            if not ledger.is_zero(rows, cols):
                raise ProofStepError(name, "the combined parts do not cover the result block")
            left, right = (ref.describe() for ref in step.result)
            run.trace.append({
                'spectator': spectator,
                'lemma': 'union',
                'S': left,
                'T': right,
                'witnesses': [],
                'fact': f"BlockZero({left}, {right})",
            })
        elif isinstance(step, Conclude):
            concluded = ledger.concludes_identity()
            run.trace.append({
                'spectator': spectator,
                'lemma': 'conclude',
                'S': 'all',
                'witnesses': [],
                'fact': 'BlockPropIdentity(all)' if concluded else 'open',
            })
    return ledger


def run_proof_script(
    n: int,
    state_set: Optional[StateSet] = None,
    family: Optional[StringFamily] = None,
) -> Tuple[ProofRun, Verdict]:
    """
    Run the case script for every spectator party. The state set defaults to
    the OGES of the modified family; witnesses are looked up by set index.
    """
    if n < 3:
        raise ValueError(f"proof scripts need N >= 3, got {n}")
    family = family or build_modified_family(n)
    if family.n_parties != n:
        raise ValueError(f"family has N={family.n_parties}, expected {n}")
    ss = state_set if state_set is not None else build_oges(family)
    constraints = SymbolicConstraints(ss)
    resolver = _Resolver(n)
    run = ProofRun(n, family.case_tag)

    violation = None
    for spectator in range(1, n + 1):
        ledger = _run_for_spectator(run, family, constraints, resolver, spectator)
        run.ledgers.append(ledger)
        logger.debug(f"Spectator {spectator}: {len(ledger.facts)} facts")
        if not ledger.concludes_identity() and violation is None:
            violation = f"ledger for spectator {spectator} does not conclude E proportional to I"
    logger.info(f"Proof script {family.case_tag} for N={n}: {len(run.trace)} trace lines")
    return run, Verdict(
        violation is None,
        violation,
        {'case': family.case_tag, 'spectators': n, 'facts': sum(len(l.facts) for l in run.ledgers)},
    )


def rerun_for_spectator(run: ProofRun, state_set: StateSet, ledger: OplmLedger) -> OplmLedger:
    """Apply the script again to an existing ledger (used to check idempotence)."""
    family = build_modified_family(run.n_parties)
    scratch = ProofRun(run.n_parties, run.case_tag)
    return _run_for_spectator(
        scratch, family, SymbolicConstraints(state_set), _Resolver(run.n_parties), ledger.spectator, ledger
    )
