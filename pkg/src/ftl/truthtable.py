"""Boolean function representation and unateness analysis.

A truth table of n inputs is stored as a 2^n-bit integer; the bit at
position m is f(m), where minterm index m encodes x_1 as its least
significant bit.  The same convention is used by the hex serialization
(minterm 0 = LSB of the hex value).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


MAX_INPUTS = 8


class Polarity(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNUSED = "unused"
    NONUNATE = "nonunate"


@dataclass(frozen=True)
class TruthTable:
    n: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_INPUTS:
            raise ValueError(f"input count must be in [1, {MAX_INPUTS}], got {self.n}")
        if not 0 <= self.bits < (1 << (1 << self.n)):
            raise ValueError(f"table value out of range for n={self.n}")

    @property
    def size(self) -> int:
        return 1 << self.n

    def value(self, minterm: int) -> int:
        return (self.bits >> minterm) & 1

    def onset(self):
        return [m for m in range(self.size) if self.value(m)]

    def offset(self):
        return [m for m in range(self.size) if not self.value(m)]

    def is_constant(self) -> bool:
        return self.bits == 0 or self.bits == (1 << self.size) - 1

    def to_hex(self) -> str:
        width = max(1, self.size // 4)
        return format(self.bits, f"0{width}x")

    def __str__(self):
        return f"tt(n={self.n}, {self.to_hex()})"


def parse_truth_table(spec: str, n: int) -> TruthTable:
    """Parse a zero-padded hex string into a table of exactly n inputs."""
    if not 1 <= n <= MAX_INPUTS:
        raise ValueError(f"input count must be in [1, {MAX_INPUTS}], got {n}")
    width = max(1, (1 << n) // 4)
    if len(spec) != width:
        raise ValueError(
            f"hex spec for n={n} must have {width} digits, got {len(spec)}"
        )
    try:
        bits = int(spec, 16)
    except ValueError:
        raise ValueError(f"not a hex string: {spec!r}") from None
    if n == 1 and bits > 3:
        raise ValueError(f"table value out of range for n=1: {spec!r}")
    return TruthTable(n, bits)


def cofactors(tt: TruthTable, var: int) -> tuple[int, int]:
    """Return (f|x_var=0, f|x_var=1) as bit masks indexed by the reduced minterm."""
    neg = pos = 0
    j = 0
    for m in range(tt.size):
        if (m >> var) & 1:
            continue
        neg |= tt.value(m) << j
        pos |= tt.value(m | (1 << var)) << j
        j += 1
    return neg, pos


def unateness(tt: TruthTable) -> list[Polarity]:
    """Per-variable polarity; NONUNATE variables rule out thresholdness."""
    out = []
    for i in range(tt.n):
        neg, pos = cofactors(tt, i)
        if neg == pos:
            out.append(Polarity.UNUSED)
        elif neg & ~pos == 0:
            out.append(Polarity.POSITIVE)
        elif pos & ~neg == 0:
            out.append(Polarity.NEGATIVE)
        else:
            out.append(Polarity.NONUNATE)
    return out


def apply_complements(tt: TruthTable, mask: int) -> TruthTable:
    """Complement the inputs selected by mask (an involution)."""
    bits = 0
    for m in range(tt.size):
        bits |= tt.value(m ^ mask) << m
    return TruthTable(tt.n, bits)


def permute_inputs(tt: TruthTable, perm: tuple[int, ...]) -> TruthTable:
    """Relabel inputs: new variable j reads old variable perm[j]."""
    bits = 0
    for m in range(tt.size):
        src = 0
        for j in range(tt.n):
            if (m >> j) & 1:
                src |= 1 << perm[j]
        bits |= tt.value(src) << m
    return TruthTable(tt.n, bits)


def to_positive_form(tt: TruthTable) -> tuple[TruthTable, int]:
    """Complement negative-unate inputs; returns (table, complement mask).

    Applying the mask again recovers the original table.
    """
    pol = unateness(tt)
    mask = 0
    for i, p in enumerate(pol):
        if p is Polarity.NONUNATE:
            raise ValueError(f"input x{i + 1} is not unate; no positive form")
        if p is Polarity.NEGATIVE:
            mask |= 1 << i
    return apply_complements(tt, mask), mask


def support(tt: TruthTable) -> list[int]:
    """Indices of the variables the function actually depends on."""
    return [i for i, p in enumerate(unateness(tt)) if p is not Polarity.UNUSED]


def project_to_support(tt: TruthTable) -> tuple[TruthTable, list[int]]:
    """Drop unused inputs, keeping the used ones in their original order.

    Constant tables collapse to n=1 with one unused input.
    """
    sup = support(tt)
    if not sup:
        return TruthTable(1, 0b11 if tt.value(0) else 0), []
    bits = 0
    for m in range(1 << len(sup)):
        src = 0
        for j, var in enumerate(sup):
            if (m >> j) & 1:
                src |= 1 << var
        bits |= tt.value(src) << m
    return TruthTable(len(sup), bits), sup
