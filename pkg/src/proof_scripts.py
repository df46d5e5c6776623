"""
Proof scripts for the modified families, one per case, kept as data.

Each script is written relative to a single spectator party: a step names
state-set indices and the measuring-side blocks it expects to derive, per
spectator trit value. The sets are permutation invariant, so the same script
instantiates for every spectator; the engine in ledger.py recomputes every
block from the actual states and rejects any step whose expectation or
precondition does not hold.

Measuring-side blocks are named over the standard family on N-1 parties:
G(k) is G^{N-1}_k, G(k, minus=c) drops the constant string (c)^{N-1}, and
C(c) is the singleton {(c)^{N-1}}.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

from tritsets import CASE_I, CASE_II, CASE_III, case_of


@dataclass(frozen=True)
class SetRef:
    kind: str
    index: int
    minus: Optional[int] = None

    def describe(self) -> str:
        if self.kind == 'C':
            return '{' + str(self.index) + '}'
        if self.minus is None:
            return f"G{self.index}"
        return f"G{self.index}\\{{{self.minus}}}"


def G(k: int, minus: Optional[int] = None) -> SetRef:
    return SetRef('G', k, minus)


def C(c: int) -> SetRef:
    return SetRef('C', c)


@dataclass(frozen=True)
class BlockZeros:
    first: int
    second: int
    # (spectator value, slice of the first set, slice of the second set)
    expected: Tuple[Tuple[int, SetRef, SetRef], ...]


@dataclass(frozen=True)
class BlockTrivial:
    set_index: int
    # pivot string: spectator trit, then the constant measuring-side string
    pivot: Tuple[int, int]
    expected: Tuple[Tuple[int, SetRef], ...]


@dataclass(frozen=True)
class Combine:
    parts: Tuple[Tuple[SetRef, SetRef], ...]
    result: Tuple[SetRef, SetRef]


@dataclass(frozen=True)
class Conclude:
    pass


Step = Union[BlockZeros, BlockTrivial, Combine, Conclude]


CASE_I_SCRIPT: Tuple[Step, ...] = (
    BlockZeros(0, 1, (
        (0, G(0, minus=0), G(1)),
        (1, G(2, minus=1), G(0)),
        (2, G(1, minus=2), G(2)),
    )),
    BlockZeros(1, 3, (
        (0, G(1), C(0)),
        (1, G(0), C(1)),
        (2, G(2), C(2)),
    )),
    BlockZeros(0, 3, (
        (0, G(0, minus=0), C(0)),
        (1, G(2, minus=1), C(1)),
        (2, G(1, minus=2), C(2)),
    )),
    BlockTrivial(1, (1, 0), (
        (0, G(1)),
        (1, G(0)),
        (2, G(2)),
    )),
    Combine(((G(0, minus=0), G(1)), (C(0), G(1))), (G(0), G(1))),
    Combine(((G(2, minus=1), G(0)), (C(1), G(0))), (G(0), G(2))),
    Combine(((G(1, minus=2), G(2)), (C(2), G(2))), (G(1), G(2))),
    Conclude(),
)

CASE_II_SCRIPT: Tuple[Step, ...] = (
    BlockZeros(0, 1, (
        (0, G(0, minus=0), G(1)),
        (1, G(2), G(0, minus=1)),
        (2, G(1), G(2)),
    )),
    BlockZeros(1, 3, (
        (0, G(1), C(0)),
        (1, G(0, minus=1), C(1)),
    )),
    BlockZeros(0, 3, (
        (0, G(0, minus=0), C(0)),
        (1, G(2), C(1)),
    )),
    BlockTrivial(1, (1, 0), (
        (0, G(1)),
        (1, G(0, minus=1)),
        (2, G(2)),
    )),
    BlockTrivial(3, (0, 0), (
        (0, C(0)),
        (1, C(1)),
    )),
    Combine(((G(0, minus=1), G(0, minus=1)), (G(0, minus=1), C(1))), (G(0), G(0))),
    Combine(((G(0, minus=0), G(1)), (C(0), G(1))), (G(0), G(1))),
    Combine(((G(2), G(0, minus=1)), (G(2), C(1))), (G(0), G(2))),
    Conclude(),
)

CASE_III_SCRIPT: Tuple[Step, ...] = (
    BlockZeros(0, 1, (
        (0, G(0, minus=0), G(1)),
        (1, G(2), G(0)),
        (2, G(1), G(2, minus=2)),
    )),
    BlockZeros(1, 3, (
        (0, G(1), C(0)),
        (2, G(2, minus=2), C(2)),
    )),
    BlockZeros(0, 3, (
        (0, G(0, minus=0), C(0)),
        (2, G(1), C(2)),
    )),
    BlockTrivial(1, (1, 0), (
        (0, G(1)),
        (1, G(0)),
        (2, G(2, minus=2)),
    )),
    BlockTrivial(3, (0, 0), (
        (0, C(0)),
        (2, C(2)),
    )),
    Combine(((G(2, minus=2), G(2, minus=2)), (G(2, minus=2), C(2))), (G(2), G(2))),
    Combine(((G(0, minus=0), G(1)), (C(0), G(1))), (G(0), G(1))),
    Combine(((G(1), G(2, minus=2)), (G(1), C(2))), (G(1), G(2))),
    Conclude(),
)

SCRIPTS: Dict[str, Tuple[Step, ...]] = {
    CASE_I: CASE_I_SCRIPT,
    CASE_II: CASE_II_SCRIPT,
    CASE_III: CASE_III_SCRIPT,
}


def script_for(n: int) -> Tuple[Step, ...]:
    return SCRIPTS[case_of(n)]
