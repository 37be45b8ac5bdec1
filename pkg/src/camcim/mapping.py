"""Expert placement on a plane and storage accounting.

Rows of an expert's weight matrix (one per input element) go on signed
block pairs; its output columns go on bitlines.  Contiguous placement puts
experts side by side on separate bitline ranges, so every driven row
computes all experts.  Interleaved placement cycles units of ``g`` pairs
through the experts on shared bitlines and tags each unit with its owner's
CAM identifier, so a query activates exactly one expert.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .array import Plane, PlaneGeometry
from .cam import CamEntry, CamQuery, entry_plan
from .encoding import CodeSpace
from .errors import CapacityExceeded, ContractViolation, UnsupportedConfiguration
from .workload import MoESpec

STRATEGIES = ("contiguous", "interleaved")


@dataclass(frozen=True)
class TileRegion:
    """Rows ``[row_start, row_stop)`` of ``expert`` on consecutive pairs from ``pair_start``."""

    expert: int
    row_start: int
    row_stop: int
    pair_start: int
    cim_layer: int
    bitline_start: int
    bitline_stop: int

    @property
    def rows(self) -> int:
        return self.row_stop - self.row_start

    @property
    def pair_stop(self) -> int:
        return self.pair_start + self.rows


@dataclass(frozen=True)
class ExpertLayout:
    strategy: str
    granularity: int
    num_experts: int
    top_k: int
    in_dim: int
    out_dim: int
    tiles: Tuple[TileRegion, ...]
    cam_entries: Dict[int, CamEntry] = field(default_factory=dict)
    cam_plan: Tuple[int, ...] = ()

    def tiles_for(self, expert: int) -> List[TileRegion]:
        if not 0 <= expert < self.num_experts:
            raise ContractViolation(f"expert {expert} outside [0, {self.num_experts - 1}]")
        return [t for t in self.tiles if t.expert == expert]

    def tiles_on_layer(self, cim_layer: int) -> List[TileRegion]:
        return [t for t in self.tiles if t.cim_layer == cim_layer]

    @property
    def gated(self) -> bool:
        return bool(self.cam_entries)

    def query_for(self, expert: int) -> CamQuery:
        if not self.gated:
            return CamQuery(())
        return CamQuery(CamEntry.from_id(expert, self.cam_plan).layers)

    def pairs_of(self, expert: int) -> List[int]:
        return sorted({p for t in self.tiles_for(expert) for p in range(t.pair_start, t.pair_stop)})

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "granularity": self.granularity,
            "num_experts": self.num_experts,
            "top_k": self.top_k,
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "cam_plan": list(self.cam_plan),
            "assignments": [
                {"expert": t.expert, "rows": [t.row_start, t.row_stop], "pairs": [t.pair_start, t.pair_stop],
                 "cim_layer": t.cim_layer, "bitlines": [t.bitline_start, t.bitline_stop]}
                for t in self.tiles
            ],
            "cam_entries": {str(p): e.bits() for p, e in sorted(self.cam_entries.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def place(model: MoESpec, geom: PlaneGeometry, strategy: str = "interleaved", granularity: int = 1,
          max_cam_bits: int = 2, use_cam: bool = True) -> ExpertLayout:
    """Assign every expert's rows to pairs, layers and bitlines.

    ``use_cam=False`` with the interleaved strategy gives the naive
    interleave with no gating, kept for utilization comparisons.
    """
    if strategy not in STRATEGIES:
        raise ContractViolation(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    n, d, o = model.num_experts, model.in_dim, model.out_dim
    pairs = geom.num_pairs
    tiles: List[TileRegion] = []
    entries: Dict[int, CamEntry] = {}
    plan: Tuple[int, ...] = ()

    if strategy == "contiguous":
        if n * o > geom.page_size:
            raise CapacityExceeded(f"{n} experts x {o} outputs exceed {geom.page_size} bitlines")
        layers = math.ceil(d / pairs)
        if layers > geom.cim_layers:
            raise CapacityExceeded(f"{d} rows need {layers} CIM layers, plane has {geom.cim_layers}")
        for e in range(n):
            for layer in range(layers):
                r0, r1 = layer * pairs, min(d, (layer + 1) * pairs)
                tiles.append(TileRegion(e, r0, r1, 0, layer, e * o, (e + 1) * o))
        return ExpertLayout(strategy, 1, n, model.top_k, d, o, tuple(tiles))

    g = int(granularity)
    if g < 1 or pairs % g:
        raise ContractViolation(f"granularity {g} must divide the {pairs} block pairs")
    if o > geom.page_size:
        raise CapacityExceeded(f"{o} outputs exceed {geom.page_size} bitlines")
    if use_cam and n > 1:
        try:
            plan = tuple(entry_plan(_next_pow2(n), max_cam_bits))
        except UnsupportedConfiguration:
            raise
        if len(plan) > geom.cam_layers:
            raise CapacityExceeded(f"{n} experts need {len(plan)} CAM layers, plane has {geom.cam_layers}")
    units = pairs // g
    for e in range(n):
        own = [p for u in range(e, units, n) for p in range(u * g, (u + 1) * g)]
        if not own or len(own) * geom.cim_layers < d:
            raise CapacityExceeded(
                f"expert {e} owns {len(own)} pairs x {geom.cim_layers} layers, needs {d} rows"
            )
        per_layer = len(own)
        for r0 in range(0, d, g):
            layer, pos = divmod(r0, per_layer)
            # units never straddle a layer because per_layer is a multiple of g
            r1 = min(d, r0 + g)
            tiles.append(TileRegion(e, r0, r1, own[pos], layer, 0, o))
    if plan:
        for u in range(units):
            entry = CamEntry.from_id(u % n, plan)
            for p in range(u * g, (u + 1) * g):
                entries[p] = entry
    return ExpertLayout(strategy, g, n, model.top_k, d, o, tuple(tiles), entries, plan)


def program(plane: Plane, layout: ExpertLayout, weights) -> None:
    """Write ``weights[e]`` (shape out_dim x in_dim) and the CAM entries into ``plane``."""
    weights = np.asarray(weights, dtype=np.int64)
    expect = (layout.num_experts, layout.out_dim, layout.in_dim)
    if weights.shape != expect:
        raise ContractViolation(f"weights have shape {weights.shape}, layout expects {expect}")
    for t in layout.tiles:
        plane.program_tile(t.pair_start, t.cim_layer, t.bitline_start,
                           weights[t.expert, :, t.row_start:t.row_stop].T)
    for pair, entry in layout.cam_entries.items():
        plane.program_cam(pair, entry)


@dataclass(frozen=True)
class UtilizationReport:
    """storage_utilization counts stored weight information per raw cell bit
    (one bit per cell); redundancy_ratio is the expected discarded fraction
    of driven computation."""

    storage_utilization: float
    redundancy_ratio: float
    cam_loss: float
    cell_efficiency: float
    occupancy: float


def thermometer_efficiency(space: CodeSpace) -> float:
    """Weight bits per cell bit of the dual-block code: log2(S(m-1)+1) over 2S cells."""
    return math.log2(space.full_count + 1) / (2 * space.S)


def utilization(layout: ExpertLayout, geom: PlaneGeometry, space: CodeSpace) -> UtilizationReport:
    r = layout.top_k / layout.num_experts
    cam_loss = geom.cam_layers / geom.layers_total
    cell_eff = thermometer_efficiency(space)
    storage = (1.0 - cam_loss) * cell_eff
    if layout.strategy == "interleaved" and not layout.gated and layout.num_experts > 1:
        # without gating only one expert's units can be driven per pass; the rest sits idle
        storage *= r
    redundancy = 0.0 if layout.gated or layout.num_experts == 1 else 1.0 - r
    used = sum(t.rows * (t.bitline_stop - t.bitline_start) for t in layout.tiles)
    occupancy = used / (geom.num_pairs * geom.cim_layers * geom.page_size)
    return UtilizationReport(storage, redundancy, cam_loss, cell_eff, occupancy)
