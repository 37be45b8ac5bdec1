"""In-string CAM matching that masks CIM computation.

A CAM layer stores one b-bit value per string (1 <= b <= 3, one V_TH
state per value).  The string passes only when every CAM layer matches
the broadcast query, which is the series-AND of the string.
"""

from dataclasses import dataclass
from itertools import product
from typing import Iterator, List, Sequence, Tuple

from .errors import ContractViolation, UnsupportedConfiguration

MAX_CAM_BITS = 3


def _check_layers(layers) -> Tuple[Tuple[int, int], ...]:
    out = []
    for width, value in layers:
        width, value = int(width), int(value)
        if not 1 <= width <= MAX_CAM_BITS:
            raise ContractViolation(f"CAM layer width {width} outside [1, {MAX_CAM_BITS}]")
        if not 0 <= value < (1 << width):
            raise ContractViolation(f"CAM value {value} does not fit in {width} bits")
        out.append((width, value))
    return tuple(out)


@dataclass(frozen=True)
class CamEntry:
    layers: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "layers", _check_layers(self.layers))

    @property
    def widths(self) -> Tuple[int, ...]:
        return tuple(w for w, _ in self.layers)

    @property
    def total_bits(self) -> int:
        return sum(self.widths)

    def bits(self) -> str:
        return "".join(format(v, f"0{w}b") for w, v in self.layers)

    @classmethod
    def from_id(cls, ident: int, plan: Sequence[int]):
        """Split ``ident`` MSB-first across the layer widths of ``plan``."""
        total = sum(plan)
        if not 0 <= ident < (1 << total):
            raise ContractViolation(f"identifier {ident} does not fit in {total} bits")
        layers = []
        shift = total
        for width in plan:
            shift -= width
            layers.append((width, (ident >> shift) & ((1 << width) - 1)))
        return cls(tuple(layers))

    def to_id(self) -> int:
        ident = 0
        for width, value in self.layers:
            ident = (ident << width) | value
        return ident


class CamQuery(CamEntry):
    """Broadcast search word; same shape as the entries it is compared with."""


@dataclass(frozen=True)
class MatchResult:
    m: int

    def __post_init__(self):
        if self.m not in (0, 1):
            raise ContractViolation(f"match must be 0 or 1, got {self.m}")

    def __bool__(self):
        return self.m == 1

    def __int__(self):
        return self.m


def cam_match_layer(entry_value: int, query_value: int, bit_width: int) -> MatchResult:
    if not 1 <= bit_width <= MAX_CAM_BITS:
        raise ContractViolation(f"CAM layer width {bit_width} outside [1, {MAX_CAM_BITS}]")
    limit = 1 << bit_width
    if not (0 <= entry_value < limit and 0 <= query_value < limit):
        raise ContractViolation(f"values ({entry_value}, {query_value}) exceed {bit_width}-bit width")
    return MatchResult(int(entry_value == query_value))


def cam_match(entry: CamEntry, query: CamQuery) -> MatchResult:
    if entry.widths != query.widths:
        raise ContractViolation(f"entry widths {entry.widths} != query widths {query.widths}")
    for (width, ev), (_, qv) in zip(entry.layers, query.layers):
        if not cam_match_layer(ev, qv, width):
            return MatchResult(0)
    return MatchResult(1)


def entry_plan(num_experts_per_unit: int, max_bits: int = 2) -> List[int]:
    """Fewest CAM layers (each <= ``max_bits`` wide) that address the experts.

    Width is split as evenly as possible and listed narrowest first, so
    8 experts -> [1, 2] and 32 -> [1, 2, 2] with the MLC default.
    """
    n = int(num_experts_per_unit)
    if n < 1 or n & (n - 1):
        raise UnsupportedConfiguration(f"expert count per unit must be a power of two, got {n}")
    if not 1 <= max_bits <= MAX_CAM_BITS:
        raise UnsupportedConfiguration(f"max CAM bits {max_bits} outside [1, {MAX_CAM_BITS}]")
    total = n.bit_length() - 1
    if total == 0:
        return []
    layers = -(-total // max_bits)
    base, extra = divmod(total, layers)
    return sorted([base + 1] * extra + [base] * (layers - extra))


def truth_table(plan: Sequence[int]) -> Iterator[Tuple[str, str, int]]:
    """Every (entry bits, query bits, match) for the layer widths in ``plan``."""
    plan = list(plan)
    values = [range(1 << w) for w in plan]
    for ev in product(*values):
        entry = CamEntry(tuple(zip(plan, ev)))
        for qv in product(*values):
            query = CamQuery(tuple(zip(plan, qv)))
            yield entry.bits(), query.bits(), cam_match(entry, query).m
