"""Analytical throughput, energy, area and AEDP model for the ablation stages.

Stages build on each other:

* ``base``      contiguous experts, every driven row computes all N experts,
                binary cells read bit-serially over S passes.
* ``t1``        CAM gating: only the selected expert computes, and when the
                input dimension must be split over several cycles the freed
                interleave units fold those chunks side by side.
* ``t1+t2``     block-wise thermometer weights: all S SSLs of a block take
                part in one pass, so S passes collapse into one.
* ``t1+t2+t3``  multibit cells: m-1 read pulses per cycle.

All energies are per bitline; absolute units cancel in the stage ratios.
"""

import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from typing import Dict, List, Optional

from .array import AdcModel, PlaneGeometry, max_input_dimension
from .cam import entry_plan
from .device import VariationModel
from .encoding import CodeSpace
from .errors import ContractViolation, StageConfigError, UnsupportedConfiguration
from .mapping import thermometer_efficiency
from .workload import MoESpec


def load_calibration() -> dict:
    with resources.files("camcim").joinpath("data/calibration.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


_CAL = load_calibration()


class Stage(str, enum.Enum):
    BASE = "base"
    T1 = "t1"
    T2 = "t1+t2"
    T3 = "t1+t2+t3"

    @property
    def gated(self) -> bool:
        return self is not Stage.BASE

    @property
    def blockwise(self) -> bool:
        return self in (Stage.T2, Stage.T3)

    @property
    def multibit(self) -> bool:
        return self is Stage.T3


ALL_STAGES = (Stage.BASE, Stage.T1, Stage.T2, Stage.T3)


@dataclass(frozen=True)
class TimingModel:
    t1: float = _CAL["timing"]["t1"]
    t2: float = _CAL["timing"]["t2"]

    def __post_init__(self):
        if not (self.t1 > 0 and self.t2 > 0):
            raise ContractViolation("t1 and t2 must be positive")

    def cycle_time(self, m: int) -> float:
        return self.t1 + (m - 1) * self.t2


@dataclass(frozen=True)
class EnergyModel:
    """Per-bitline energies; ADC conversion cost is ``adc_c1*b + adc_c2*2**b``."""

    e_precharge_ssl: float = _CAL["energy"]["e_precharge_ssl"]
    e_precharge_bl: float = _CAL["energy"]["e_precharge_bl"]
    e_string: float = _CAL["energy"]["e_string"]
    e_cam_search: float = _CAL["energy"]["e_cam_search"]
    adc_c1: float = _CAL["energy"]["adc_c1"]
    adc_c2: float = _CAL["energy"]["adc_c2"]
    adc_base_bits: int = _CAL["energy"]["adc_base_bits"]

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ContractViolation(f"{name} must be non-negative")

    def adc_energy(self, bits: int) -> float:
        return self.adc_c1 * bits + self.adc_c2 * 2.0 ** bits


@dataclass(frozen=True)
class DimensionModel:
    """Allowed input dimension versus sigma.

    ``scaled`` keeps the accumulated noise variance fixed: the anchor
    dimension at the anchor sigma, growing as 1/sigma**2 below it.
    ``montecarlo`` runs :func:`max_input_dimension` directly.
    """

    mode: str = "scaled"
    anchor_dim: int = _CAL["dimension"]["anchor_dim"]
    anchor_sigma: float = _CAL["dimension"]["anchor_sigma"]
    tolerance: int = 1
    trials: int = 10000
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("scaled", "montecarlo"):
            raise ContractViolation(f"unknown dimension mode {self.mode!r}")

    def allowed(self, sigma: float, cap: int, space: CodeSpace) -> int:
        if sigma < 0:
            raise ContractViolation("sigma must be >= 0")
        if sigma == 0:
            return cap
        if self.mode == "scaled":
            return max(1, min(cap, math.floor(self.anchor_dim * (self.anchor_sigma / sigma) ** 2 + 1e-9)))
        adc = AdcModel.for_rows(space, cap)
        n = max_input_dimension(space, adc, VariationModel(sigma, self.seed), trials=self.trials,
                                n_max=cap, tolerance=self.tolerance)
        if n < 1:
            raise UnsupportedConfiguration(
                f"no input dimension meets the error tolerance {self.tolerance} at sigma={sigma}"
            )
        return n


@dataclass
class PerfReport:
    stage: str
    m: int
    sigma: float
    allowed_dim: int
    input_chunks: int
    fold: float
    throughput: float
    energy_per_token: float
    energy_breakdown: Dict[str, float]
    energy_efficiency: float
    area_efficiency: float
    latency_per_token: float
    aedp: float = field(init=False)

    def __post_init__(self):
        self.aedp = aedp(self)

    def to_row(self) -> dict:
        row = asdict(self)
        bd = row.pop("energy_breakdown")
        row["energy_array"] = bd["array"]
        row["energy_adc"] = bd["adc"]
        return row


def aedp(report: "PerfReport") -> float:
    return report.energy_per_token * report.latency_per_token / report.area_efficiency


def adc_bits(stage: Stage, space: CodeSpace, energy: EnergyModel) -> int:
    bits = energy.adc_base_bits
    if stage.blockwise:
        bits += math.ceil(math.log2(space.S))
    if stage.multibit:
        bits += math.ceil(math.log2(space.m - 1))
    return bits


def cam_layers_needed(num_experts: int, max_bits: int = 2) -> int:
    return len(entry_plan(1 << max(0, (num_experts - 1).bit_length()), max_bits))


def stage_geometry(stage: Stage, spec: MoESpec, geom: PlaneGeometry) -> PlaneGeometry:
    """``geom`` with exactly the CAM layers the stage needs."""
    return replace(geom, cam_layers=cam_layers_needed(spec.num_experts) if stage.gated else 0)


def _check_stage(stage: Stage, spec: MoESpec, geom: PlaneGeometry, space: CodeSpace) -> None:
    if not stage.gated and geom.cam_layers:
        raise StageConfigError("the base stage has no CAM; set cam_layers=0")
    if stage.gated and geom.cam_layers < cam_layers_needed(spec.num_experts):
        raise StageConfigError(
            f"{spec.num_experts} experts need {cam_layers_needed(spec.num_experts)} CAM layers, "
            f"geometry has {geom.cam_layers}"
        )
    if stage.multibit and space.m < 3:
        raise StageConfigError("multibit stage needs cells with m >= 3")
    if geom.ssls_per_gsl != space.S:
        raise StageConfigError("geometry SSL count and code space S differ")


def evaluate(stage, spec: MoESpec, geom: PlaneGeometry, space: CodeSpace, sigma: float = 0.15,
             timing: TimingModel = TimingModel(), energy: EnergyModel = EnergyModel(),
             granularity: int = 4, dims: DimensionModel = DimensionModel()) -> PerfReport:
    """Steady-state performance of one stage.

    Throughput counts useful MAC units per time unit, where one unit is one
    cell-pulse of a product that reaches an activated expert.
    """
    stage = Stage(stage)
    _check_stage(stage, spec, geom, space)
    if granularity < 1:
        raise ContractViolation("granularity must be >= 1")
    n, k, d, o, S = spec.num_experts, spec.top_k, spec.in_dim, spec.out_dim, space.S
    m_eff = space.m if stage.multibit else 2
    pulses = m_eff - 1

    dim = dims.allowed(sigma, d, space)
    dim_ref = dims.allowed(0.0, d, space)
    chunks = math.ceil(d / dim)
    chunks_ref = math.ceil(d / dim_ref)
    dim_eff = d / chunks
    fold = min(granularity, chunks / chunks_ref) if stage.gated else 1.0

    width = n * o * fold
    useful = 1.0 if stage.gated else k / n
    passes = 1 if stage.blockwise else S
    t_cycle = timing.cycle_time(m_eff)

    units_per_bl = dim_eff * (S * pulses if stage.blockwise else 1)
    throughput = width * useful * units_per_bl / t_cycle

    ssl_factor = S if stage.blockwise else 1
    e_array = (energy.e_precharge_ssl * ssl_factor + energy.e_precharge_bl
               + energy.e_string * dim_eff * ssl_factor * pulses
               + (energy.e_cam_search if stage.gated else 0.0))
    e_adc = pulses * energy.adc_energy(adc_bits(stage, space, energy))
    e_bl = e_array + e_adc
    efficiency = units_per_bl * useful / e_bl

    products_per_bl = dim_eff * useful / passes
    token_products = k * d * o
    scale = token_products / products_per_bl
    energy_token = e_bl * scale
    breakdown = {"array": e_array * scale, "adc": e_adc * scale}

    # gated stages serve one expert per query; base computes all experts at once
    latency = (chunks / fold) * passes * t_cycle * (k if stage.gated else 1)

    cam_loss = geom.cam_layers / geom.layers_total
    cell_eff = thermometer_efficiency(CodeSpace(S, m_eff, space.L)) if stage.blockwise else 1.0
    area_eff = (1.0 - cam_loss) * cell_eff

    return PerfReport(stage.value, m_eff, float(sigma), int(dim), chunks, float(fold), throughput,
                      energy_token, breakdown, efficiency, area_eff, latency)


def energy_breakdown(report: PerfReport) -> Dict[str, float]:
    """Array and ADC shares of the per-token energy (they sum to 1)."""
    total = report.energy_per_token
    return {key: value / total for key, value in report.energy_breakdown.items()}


@dataclass
class AblationRow:
    report: PerfReport
    throughput_gain: float
    efficiency_gain: float
    aedp_reduction: float

    def to_row(self) -> dict:
        row = self.report.to_row()
        row.update(throughput_gain=self.throughput_gain, efficiency_gain=self.efficiency_gain,
                   aedp_reduction=self.aedp_reduction)
        return row


def ablation(spec: MoESpec, geom: PlaneGeometry, space: CodeSpace, sigma: float = 0.15,
             timing: TimingModel = TimingModel(), energy: EnergyModel = EnergyModel(),
             granularity: int = 4, dims: DimensionModel = DimensionModel(),
             stages=ALL_STAGES) -> List[AblationRow]:
    """Evaluate each stage on its own geometry and compare it with the base stage.

    Stages before the multibit one read binary cells; the multibit stage
    uses ``space.m``.
    """
    def run(stage):
        st_space = space if stage.multibit else CodeSpace(space.S, 2, space.L)
        return evaluate(stage, spec, stage_geometry(stage, spec, geom), st_space, sigma,
                        timing, energy, granularity, dims)

    base = run(Stage.BASE)
    rows = []
    for stage in stages:
        rep = run(Stage(stage))
        rows.append(AblationRow(rep, rep.throughput / base.throughput,
                                rep.energy_efficiency / base.energy_efficiency, base.aedp / rep.aedp))
    return rows


def t3_speedup(timing: TimingModel, m: int) -> float:
    """Closed-form throughput ratio of m-state over binary cells at fixed everything else."""
    return (m - 1) * timing.cycle_time(2) / timing.cycle_time(m)
