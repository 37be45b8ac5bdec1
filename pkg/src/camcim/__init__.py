"""Simulator for CAM-gated multibit compute-in-memory on 3D NAND planes."""

from .array import (AdcModel, CycleCommand, GemvResult, Plane, PlaneGeometry, SenseResult,
                    execute_cycle, max_input_dimension, run_gemv)
from .cam import CamEntry, CamQuery, MatchResult, cam_match, cam_match_layer, entry_plan, truth_table
from .device import CellState, ReadPulseSchedule, StringImage, VariationModel, cell_conducts, string_current
from .encoding import (CodeSpace, InputDrive, WeightCode, decode_input, decode_weight, encode_input,
                       encode_weight, signed_product_model)
from .kernels import backend
from .mapping import ExpertLayout, TileRegion, UtilizationReport, place, program, utilization
from .perf import (DimensionModel, EnergyModel, PerfReport, Stage, TimingModel, aedp, ablation,
                   energy_breakdown, evaluate, t3_speedup)
from .workload import MoESpec, TokenTrace, generate_trace, random_expert_weights, read_trace, write_trace

__version__ = "0.1.0"
