"""Signed weight and input codes for dual-block thermometer CIM.

A signed weight lives on a pair of blocks.  Each block offers S cells (one
per SSL) on the selected layer; an m-state cell at level l conducts under
(m-1) - l of the m-1 read pulses.  The positive block's total pulse count
encodes ``w + S(m-1)/2`` thermometer-style, and the negative block holds the
cell-wise complementary states, so the differential current is ``2w`` per
unit drive.
"""

from dataclasses import dataclass, field
from typing import Tuple

from .device import CellState
from .errors import CodeRangeError, ContractViolation, CorruptCodeError


@dataclass(frozen=True)
class CodeSpace:
    S: int = 4
    m: int = 2
    L: int = 2

    def __post_init__(self):
        if self.S < 1 or self.m < 2 or self.L < 1:
            raise ContractViolation(f"invalid code space S={self.S}, m={self.m}, L={self.L}")
        if (self.S * (self.m - 1)) % 2:
            raise ContractViolation(f"S*(m-1) must be even for a symmetric weight range (S={self.S}, m={self.m})")

    @property
    def pulses(self) -> int:
        return self.m - 1

    @property
    def full_count(self) -> int:
        """Pulse-sum of a block with every cell at the lowest state."""
        return self.S * (self.m - 1)

    @property
    def w_max(self) -> int:
        return self.full_count // 2

    @property
    def weight_range(self) -> range:
        return range(-self.w_max, self.w_max + 1)

    @property
    def input_range(self) -> range:
        return range(-self.L, self.L + 1)


@dataclass(frozen=True)
class WeightCode:
    space: CodeSpace
    pos_block_levels: Tuple[CellState, ...]
    neg_block_levels: Tuple[CellState, ...]

    @property
    def pos_sum(self) -> int:
        return sum(c.pulse_sum for c in self.pos_block_levels)

    @property
    def neg_sum(self) -> int:
        return sum(c.pulse_sum for c in self.neg_block_levels)


@dataclass(frozen=True)
class InputDrive:
    magnitude: int
    polarity: int = field(default=1)

    def __post_init__(self):
        if self.magnitude < 0:
            raise ContractViolation(f"drive magnitude must be >= 0, got {self.magnitude}")
        if self.polarity not in (1, -1):
            raise ContractViolation(f"polarity must be +1 or -1, got {self.polarity}")

    @property
    def signed(self) -> int:
        return self.magnitude * self.polarity


def thermometer_levels(count: int, space: CodeSpace) -> Tuple[int, ...]:
    """Cell levels whose pulse contributions fill ``count`` SSL by SSL."""
    step = space.m - 1
    levels = []
    for i in range(space.S):
        contribution = min(step, max(0, count - i * step))
        levels.append(step - contribution)
    return tuple(levels)


def encode_weight(w: int, space: CodeSpace) -> WeightCode:
    if w not in space.weight_range:
        raise CodeRangeError(f"weight {w} outside [{-space.w_max}, {space.w_max}]")
    top = space.m - 1
    pos = thermometer_levels(int(w) + space.w_max, space)
    return WeightCode(
        space,
        tuple(CellState(lv, space.m) for lv in pos),
        tuple(CellState(top - lv, space.m) for lv in pos),
    )


def decode_weight(code: WeightCode) -> int:
    space = code.space
    if len(code.pos_block_levels) != space.S or len(code.neg_block_levels) != space.S:
        raise CorruptCodeError(f"expected {space.S} cells per block")
    if code.pos_sum + code.neg_sum != space.full_count:
        raise CorruptCodeError(
            f"pulse sums {code.pos_sum} + {code.neg_sum} != {space.full_count}: blocks not complementary"
        )
    return code.pos_sum - space.w_max


def encode_input(x: int, space: CodeSpace) -> InputDrive:
    if x not in space.input_range:
        raise CodeRangeError(f"input {x} outside [{-space.L}, {space.L}]")
    return InputDrive(abs(int(x)), -1 if x < 0 else 1)


def decode_input(drive: InputDrive) -> int:
    return drive.signed


def signed_product_model(x: int, w: int, space: CodeSpace) -> int:
    """Ideal pulse-summed differential current of one pair, in product units.

    Evaluated by walking the pulses and counting conducting cells, which is
    what the array does at sigma = 0.  Equals ``x * w``.
    """
    drive = encode_input(x, space)
    code = encode_weight(w, space)
    diff = 0
    for pulse in range(space.pulses):
        on_pos = sum(c.level <= pulse for c in code.pos_block_levels)
        on_neg = sum(c.level <= pulse for c in code.neg_block_levels)
        diff += drive.polarity * drive.magnitude * (on_pos - on_neg)
    return diff // 2
