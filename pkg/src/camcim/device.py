"""Behavioral floating-gate cell and 3D NAND string model.

Currents are dimensionless: one conducting cell under unit drive carries
exactly 1.  Device mismatch is a multiplicative Gaussian deviation drawn
per cell from a counter-based hash, so a cell's current never depends on
evaluation order.
"""

from dataclasses import dataclass
from typing import Tuple

from . import kernels
from .errors import ContractViolation


@dataclass(frozen=True)
class CellState:
    """Programmed threshold state of one FG transistor (0 = lowest V_TH)."""

    level: int
    m: int = 2

    def __post_init__(self):
        if self.m < 2:
            raise ContractViolation(f"cell needs at least 2 states, got m={self.m}")
        if not 0 <= self.level < self.m:
            raise ContractViolation(f"level {self.level} outside [0, {self.m - 1}]")

    @property
    def pulse_sum(self) -> int:
        """Number of read pulses under which this cell conducts."""
        return (self.m - 1) - self.level


@dataclass(frozen=True)
class ReadPulseSchedule:
    pulse_levels: Tuple[int, ...]

    def __post_init__(self):
        levels = tuple(self.pulse_levels)
        object.__setattr__(self, "pulse_levels", levels)
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ContractViolation(f"pulse levels must increase strictly: {levels}")

    @classmethod
    def for_states(cls, m: int) -> "ReadPulseSchedule":
        return cls(tuple(range(m - 1)))

    def __len__(self):
        return len(self.pulse_levels)


@dataclass(frozen=True)
class VariationModel:
    """Relative on-current spread ``sigma`` with a reproducible seed."""

    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ContractViolation(f"sigma must be >= 0, got {self.sigma}")
        if not 0 <= int(self.seed) < 2**64:
            raise ContractViolation("seed must fit in an unsigned 64-bit integer")

    def epsilon(self, block: int, ssl: int, bitline: int, layer: int) -> float:
        if self.sigma == 0:
            return 0.0
        return self.sigma * kernels.gaussian(self.seed, block, ssl, bitline, layer)


@dataclass(frozen=True)
class StringImage:
    """One vertical string: CAM cells (upper layers) over CIM cells (lower layers)."""

    cam_cells: Tuple[CellState, ...]
    cim_cells: Tuple[CellState, ...]
    coordinates: Tuple[int, int, int]  # (block, ssl, bitline)

    @property
    def num_layers(self) -> int:
        return len(self.cam_cells) + len(self.cim_cells)


def cell_conducts(cell: CellState, pulse_index: int) -> bool:
    """True when ``cell`` turns on under read pulse ``pulse_index``.

    Pulse j sits between V_TH states j and j+1, so it turns on every cell
    programmed at level <= j.
    """
    if not 0 <= pulse_index < cell.m - 1:
        raise ContractViolation(f"pulse index {pulse_index} outside [0, {cell.m - 2}]")
    return cell.level <= pulse_index


def string_current(s: StringImage, wl_pulse: int, drive: float, variation: VariationModel,
                   cam_pass: bool, cim_layer: int = 0) -> float:
    """Current through ``s`` when its CIM layer ``cim_layer`` is read with ``wl_pulse``.

    Unselected CIM layers sit at pass voltage.  A failed CAM match, or a
    selected cell that stays off, leaves the series string open: exactly 0.
    """
    if drive < 0:
        raise ContractViolation(f"drive must be >= 0, got {drive}")
    if not 0 <= cim_layer < len(s.cim_cells):
        raise ContractViolation(f"CIM layer {cim_layer} outside string of {len(s.cim_cells)}")
    cell = s.cim_cells[cim_layer]
    conducts = cell_conducts(cell, wl_pulse)
    if not (cam_pass and conducts) or drive == 0:
        return 0.0
    block, ssl, bitline = s.coordinates
    layer = len(s.cam_cells) + cim_layer
    return drive * (1.0 + variation.epsilon(block, ssl, bitline, layer))
