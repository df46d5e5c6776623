import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

TritString = Tuple[int, ...]

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


@dataclass(frozen=True)
class Verdict:
    """Outcome of a verification: pass/fail plus the first violation found."""
    passed: bool
    violation: Optional[str] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {'passed': self.passed, 'violation': self.violation}
        out.update(self.details)
        return out


def get_env(name: str, default: str = "") -> str:
    value = os.getenv(name, default)
    if value is None:
        return default
    return value


def setup_logging(level: Optional[str] = None) -> None:
    """Configure root logging once for command-line entry points."""
    level_name = (level or get_env('QUTRIT_LOG_LEVEL', 'INFO')).upper()
    logging.basicConfig(
        level=getattr(logging, level_name, logging.INFO),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
    )


def trits_to_str(trits: Sequence[int]) -> str:
    return ''.join(str(t) for t in trits)


def str_to_trits(text: str, dim: int = 3) -> TritString:
    """
    Parse a string such as "021" into a trit tuple.
    Raises ValueError on characters outside [0, dim).
    """
    text = text.strip()
    if not text:
        raise ValueError("empty string is not a valid trit string")
    trits = []
    for ch in text:
        if not ch.isdigit() or int(ch) >= dim:
            raise ValueError(f"invalid symbol {ch!r} in {text!r} (local dimension {dim})")
        trits.append(int(ch))
    return tuple(trits)


def place_values(length: int, dim: int = 3) -> np.ndarray:
    # most significant digit first: party 1 is the leading digit
    return dim ** np.arange(length - 1, -1, -1, dtype=np.int64)


def encode_rows(digits: np.ndarray, dim: int = 3) -> np.ndarray:
    """Base-`dim` index of every row of a 2-D digit array."""
    digits = np.asarray(digits, dtype=np.int64)
    if digits.ndim != 2:
        raise ValueError("expected a 2-D array of digits")
    if digits.shape[1] == 0:
        return np.zeros(digits.shape[0], dtype=np.int64)
    return digits @ place_values(digits.shape[1], dim)


def index_to_trits(index: int, length: int, dim: int = 3) -> TritString:
    if index < 0 or index >= dim ** length:
        raise ValueError(f"index {index} out of range for {length} digits base {dim}")
    out = [0] * length
    for pos in range(length - 1, -1, -1):
        index, out[pos] = divmod(index, dim)
    return tuple(out)


def strings_array(strings: Iterable[TritString]) -> np.ndarray:
    rows = list(strings)
    if not rows:
        return np.zeros((0, 0), dtype=np.int64)
    return np.asarray(rows, dtype=np.int64)
