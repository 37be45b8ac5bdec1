"""Plane-level execution: programmed cells, CAM-gated read cycles, ADC, GEMV.

Inputs drive source lines (one per block) and outputs are sensed on bit
lines.  Block ``2p`` and ``2p + 1`` form signed pair ``p``: the positive and
negative halves of each dual-block weight.  Every read pulse is converted
by the ADC separately and the codes are summed digitally; the final output
halves the differential (each pair contributes ``2 x w`` unit currents).
"""

import math
import struct
import zlib
from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import numpy as np

from . import kernels
from .cam import CamEntry, CamQuery
from .device import ReadPulseSchedule, VariationModel
from .encoding import CodeSpace, InputDrive, WeightCode, encode_input, encode_weight
from .device import CellState
from .errors import CapacityExceeded, ContractViolation, ImageFormatError

# keeps Monte Carlo deviates independent of the plane's per-cell deviates
_MC_DOMAIN = 0x4D43_5641_5249_4154


@dataclass(frozen=True)
class PlaneGeometry:
    layers_total: int = 64
    ssls_per_gsl: int = 4
    num_blocks: int = 1024
    page_size: int = 131072
    cam_layers: int = 0

    def __post_init__(self):
        for name in ("layers_total", "ssls_per_gsl", "num_blocks", "page_size"):
            if getattr(self, name) < 1:
                raise ContractViolation(f"{name} must be positive")
        if not 0 <= self.cam_layers < self.layers_total:
            raise ContractViolation(
                f"cam_layers={self.cam_layers} must leave at least one CIM layer of {self.layers_total}"
            )
        if self.num_blocks % 2:
            raise ContractViolation("num_blocks must be even (blocks are used in signed pairs)")

    @property
    def cim_layers(self) -> int:
        return self.layers_total - self.cam_layers

    @property
    def num_pairs(self) -> int:
        return self.num_blocks // 2

    @property
    def cells(self) -> int:
        return self.layers_total * self.num_blocks * self.ssls_per_gsl * self.page_size


@dataclass(frozen=True)
class AdcModel:
    """Signed ADC: codes in [-2**bits, 2**bits], LSB = full_scale / 2**bits (unit current)."""

    bits: int = 8
    full_scale: float = 256.0
    energy_per_conversion: float = 0.0
    latency_per_conversion: float = 0.0

    def __post_init__(self):
        if self.bits < 1 or self.full_scale <= 0:
            raise ContractViolation("ADC needs bits >= 1 and a positive full scale")

    @property
    def lsb(self) -> float:
        return self.full_scale / (1 << self.bits)

    def quantize(self, raw):
        code_max = self.full_scale / self.lsb
        return np.clip(kernels.round_half_away(np.asarray(raw) / self.lsb), -code_max, code_max)

    def max_rows(self, space: CodeSpace) -> int:
        """Most driven pairs whose worst-case per-pulse current stays in range."""
        return int(self.full_scale // (space.L * space.S))

    @classmethod
    def for_rows(cls, space: CodeSpace, rows: int, **kw) -> "AdcModel":
        """Smallest ADC with a one-unit LSB whose range covers ``rows`` worst-case pairs."""
        need = space.L * space.S * max(1, int(rows))
        bits = max(1, math.ceil(math.log2(need)))
        return cls(bits=bits, full_scale=float(1 << bits), **kw)


@dataclass(frozen=True)
class CycleCommand:
    query: CamQuery
    sl_drives: Mapping[int, InputDrive]
    selected_cim_layer: int
    pulses: ReadPulseSchedule


@dataclass
class SenseResult:
    """Per-bitline outputs of one cycle.

    raw_current : pulse-summed differential current (unit current)
    adc_codes   : sum over pulses of the per-pulse ADC codes
    quantized   : signed output in product units (``adc_codes * lsb / 2``)
    """

    raw_current: np.ndarray
    adc_codes: np.ndarray
    quantized: np.ndarray


@dataclass
class GemvResult:
    y: np.ndarray
    cycles: int


class Plane:
    """Programmed cell states of one plane, stored layer-major as uint8."""

    def __init__(self, geometry: PlaneGeometry, space: CodeSpace, max_cells: int = 1 << 27):
        if geometry.ssls_per_gsl != space.S:
            raise ContractViolation(f"geometry has {geometry.ssls_per_gsl} SSLs but code space S={space.S}")
        if geometry.cells > max_cells:
            raise CapacityExceeded(
                f"plane of {geometry.cells} cells exceeds the simulation budget of {max_cells}; "
                "use a smaller functional geometry"
            )
        self.geometry = geometry
        self.space = space
        self.levels = np.zeros(
            (geometry.layers_total, geometry.num_blocks, geometry.ssls_per_gsl, geometry.page_size),
            dtype=np.uint8,
        )
        self._pos_table = np.array(
            [[c.level for c in encode_weight(w, space).pos_block_levels] for w in space.weight_range],
            dtype=np.uint8,
        )
        self._mask_cache: Dict[tuple, np.ndarray] = {}

    # -- programming -------------------------------------------------------

    def _cim(self, cim_layer: int) -> int:
        if not 0 <= cim_layer < self.geometry.cim_layers:
            raise ContractViolation(f"CIM layer {cim_layer} outside [0, {self.geometry.cim_layers - 1}]")
        return self.geometry.cam_layers + cim_layer

    def program_tile(self, pair_start: int, cim_layer: int, bitline_start: int, tile) -> None:
        """Write ``tile[row, col]`` weights at pairs ``pair_start + row``, bitlines ``bitline_start + col``."""
        tile = np.asarray(tile, dtype=np.int64)
        rows, cols = tile.shape
        if tile.size and (tile.min() < -self.space.w_max or tile.max() > self.space.w_max):
            raise ContractViolation(f"weights exceed +/-{self.space.w_max}")
        g = self.geometry
        if pair_start < 0 or pair_start + rows > g.num_pairs or bitline_start < 0 or bitline_start + cols > g.page_size:
            raise CapacityExceeded("tile falls outside the plane")
        layer = self._cim(cim_layer)
        pos = self._pos_table[tile + self.space.w_max]  # rows, cols, S
        pos = np.transpose(pos, (0, 2, 1))  # rows, S, cols
        top = self.space.m - 1
        blocks = 2 * (pair_start + np.arange(rows))
        self.levels[layer, blocks, :, bitline_start:bitline_start + cols] = pos
        self.levels[layer, blocks + 1, :, bitline_start:bitline_start + cols] = top - pos
        self._mask_cache.clear()

    def program_weight(self, pair: int, cim_layer: int, bitline: int, w: int) -> None:
        self.program_tile(pair, cim_layer, bitline, [[w]])

    def program_cam(self, pair: int, entry: CamEntry) -> None:
        if len(entry.layers) > self.geometry.cam_layers:
            raise CapacityExceeded(f"entry needs {len(entry.layers)} CAM layers, plane has {self.geometry.cam_layers}")
        for layer, (_, value) in enumerate(entry.layers):
            self.levels[layer, 2 * pair:2 * pair + 2] = value
        self._mask_cache.clear()

    def weight_code(self, pair: int, cim_layer: int, bitline: int) -> WeightCode:
        layer = self._cim(cim_layer)
        m = self.space.m
        pos = self.levels[layer, 2 * pair, :, bitline]
        neg = self.levels[layer, 2 * pair + 1, :, bitline]
        return WeightCode(self.space, tuple(CellState(int(v), m) for v in pos),
                          tuple(CellState(int(v), m) for v in neg))

    # -- sensing -----------------------------------------------------------

    def match_mask(self, query: CamQuery) -> np.ndarray:
        """uint8[B, S, P]: 1 where every CAM cell of the string equals the query."""
        values = tuple(v for _, v in query.layers)
        if len(values) > self.geometry.cam_layers:
            raise ContractViolation(f"query has {len(values)} layers, plane has {self.geometry.cam_layers} CAM layers")
        values = values + (0,) * (self.geometry.cam_layers - len(values))
        mask = self._mask_cache.get(values)
        if mask is None:
            shape = self.levels.shape[1:]
            mask = np.ones(shape, dtype=bool)
            for layer, v in enumerate(values):
                mask &= self.levels[layer] == v
            mask = mask.astype(np.uint8)
            self._mask_cache = {values: mask}
        return mask

    # -- image I/O ---------------------------------------------------------

    MAGIC = b"CCPLANE\x00"
    VERSION = 1
    _HEADER = struct.Struct("<8sHBBBIIIII")

    def to_bytes(self) -> bytes:
        g = self.geometry
        flat = self.levels.reshape(-1)
        max_level = int(flat.max()) if flat.size else 0
        if max_level < 16:
            bits = 4
            padded = flat if flat.size % 2 == 0 else np.append(flat, np.uint8(0))
            payload = (padded[0::2] | (padded[1::2] << 4)).astype(np.uint8).tobytes()
        else:
            bits = 8
            payload = flat.tobytes()
        header = self._HEADER.pack(self.MAGIC, self.VERSION, bits, self.space.m, self.space.L,
                                   g.layers_total, g.ssls_per_gsl, g.num_blocks, g.page_size, g.cam_layers)
        return header + struct.pack("<Q", len(payload)) + payload + struct.pack("<I", zlib.crc32(payload))

    @classmethod
    def from_bytes(cls, data: bytes, verify_crc: bool = True) -> "Plane":
        hs = cls._HEADER.size
        if len(data) < hs + 12:
            raise ImageFormatError("image truncated")
        magic, version, bits, m, L, layers, ssls, blocks, page, cam = cls._HEADER.unpack_from(data)
        if magic != cls.MAGIC:
            raise ImageFormatError("bad magic")
        if version != cls.VERSION:
            raise ImageFormatError(f"unsupported image version {version}")
        (n,) = struct.unpack_from("<Q", data, hs)
        payload = data[hs + 8:hs + 8 + n]
        if len(payload) != n or len(data) != hs + 12 + n:
            raise ImageFormatError("payload length mismatch")
        (crc,) = struct.unpack_from("<I", data, hs + 8 + n)
        if verify_crc and zlib.crc32(payload) != crc:
            raise ImageFormatError("payload checksum mismatch")
        geometry = PlaneGeometry(layers, ssls, blocks, page, cam)
        plane = cls(geometry, CodeSpace(ssls, m, L))
        raw = np.frombuffer(payload, dtype=np.uint8)
        count = plane.levels.size
        if bits == 4:
            cells = np.empty(raw.size * 2, dtype=np.uint8)
            cells[0::2] = raw & 0x0F
            cells[1::2] = raw >> 4
            cells = cells[:count]
        elif bits == 8:
            cells = raw
        else:
            raise ImageFormatError(f"unsupported cell width {bits}")
        if cells.size != count:
            raise ImageFormatError("payload does not match geometry")
        plane.levels[...] = cells.reshape(plane.levels.shape)
        return plane

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path, verify_crc: bool = True) -> "Plane":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read(), verify_crc=verify_crc)


def first_divergence(a: Plane, b: Plane) -> Optional[tuple]:
    """(layer, block, ssl, bitline) of the first differing cell, or None."""
    if a.levels.shape != b.levels.shape:
        return ("shape", a.levels.shape, b.levels.shape)
    diff = np.argwhere(a.levels != b.levels)
    if diff.size == 0:
        return None
    return tuple(int(v) for v in diff[0])


def execute_cycle(plane: Plane, cmd: CycleCommand, variation: VariationModel, adc: AdcModel) -> SenseResult:
    g = plane.geometry
    if len(cmd.pulses) != plane.space.m - 1:
        raise ContractViolation(f"{plane.space.m}-state cells need {plane.space.m - 1} pulses, got {len(cmd.pulses)}")
    layer = plane._cim(cmd.selected_cim_layer)
    blocks, drives = [], []
    for pair, drive in sorted(cmd.sl_drives.items()):
        if not 0 <= pair < g.num_pairs:
            raise ContractViolation(f"pair {pair} outside plane of {g.num_pairs} pairs")
        if drive.magnitude > plane.space.L:
            raise ContractViolation(f"drive level {drive.magnitude} exceeds L={plane.space.L}")
        if drive.magnitude == 0:
            continue
        blocks += [2 * pair, 2 * pair + 1]
        drives += [drive.signed, -drive.signed]
    blocks = np.asarray(blocks, dtype=np.int64)
    drives = np.asarray(drives, dtype=np.float64)
    mask = plane.match_mask(cmd.query)
    cells = plane.levels[layer]
    raw = np.zeros(g.page_size)
    codes = np.zeros(g.page_size)
    for pulse in cmd.pulses.pulse_levels:
        current = kernels.accumulate_pulse(cells, mask, blocks, drives, pulse,
                                           float(variation.sigma), variation.seed, layer)
        raw += current
        codes += adc.quantize(current)
    quantized = kernels.round_half_away(codes * adc.lsb / 2.0).astype(np.int64)
    return SenseResult(raw, codes, quantized)


def run_gemv(plane: Plane, layout, expert: int, x, variation: VariationModel = VariationModel(),
             adc: Optional[AdcModel] = None, max_rows: Optional[int] = None) -> GemvResult:
    """Compute ``W_expert @ x`` on a plane programmed with ``layout``.

    Each cycle selects one CIM layer, broadcasts a slice of ``x`` (at most
    ``max_rows`` of the expert's rows) to every pair holding those rows, and
    queries the expert's CAM identifier so other experts' strings stay off.
    """
    space = plane.space
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (layout.in_dim,):
        raise ContractViolation(f"input has shape {x.shape}, layout expects ({layout.in_dim},)")
    if x.size and (x.min() < -space.L or x.max() > space.L):
        raise ContractViolation(f"inputs exceed +/-{space.L}")
    if adc is None:
        adc = AdcModel.for_rows(space, max_rows or layout.in_dim)
    limit = adc.max_rows(space)
    max_rows = limit if max_rows is None else min(max_rows, limit)
    if max_rows < 1:
        raise ContractViolation("ADC range admits no driven rows")

    tiles = layout.tiles_for(expert)
    query = layout.query_for(expert)
    b0, b1 = tiles[0].bitline_start, tiles[0].bitline_stop
    pulses = ReadPulseSchedule.for_states(space.m)
    drive_cache = {v: encode_input(v, space) for v in space.input_range}
    y = np.zeros(b1 - b0, dtype=np.int64)
    cycles = 0
    by_layer: Dict[int, list] = {}
    for t in tiles:
        by_layer.setdefault(t.cim_layer, []).extend(range(t.row_start, t.row_stop))
    for cim_layer in sorted(by_layer):
        rows = by_layer[cim_layer]
        layer_tiles = layout.tiles_on_layer(cim_layer)
        for c0 in range(0, len(rows), max_rows):
            chunk = set(rows[c0:c0 + max_rows])
            drives = {}
            for t in layer_tiles:
                for r in range(t.row_start, t.row_stop):
                    if r in chunk:
                        drives[t.pair_start + r - t.row_start] = drive_cache[int(x[r])]
            cmd = CycleCommand(query, drives, cim_layer, pulses)
            y += execute_cycle(plane, cmd, variation, adc).quantized[b0:b1]
            cycles += 1
    return GemvResult(y, cycles)


def max_input_dimension(space: CodeSpace, adc: AdcModel, variation: VariationModel,
                        confidence: float = 0.95, trials: int = 10000, n_max: Optional[int] = None,
                        tolerance: int = 1) -> int:
    """Largest number of simultaneously driven pairs with P(|error| >= tolerance) <= 1 - confidence.

    The default ``tolerance=1`` demands the exact integer result.  Larger
    values model an application that absorbs small output errors.

    Each trial draws worst-case magnitudes (|x| = L, |w| = w_max) with random
    signs.  Trials, pairs and cells share deviates across sigma values, so
    results for different sigma are directly comparable.
    """
    if trials < 1000:
        raise ContractViolation("need at least 1000 Monte Carlo trials")
    if not 0 < confidence < 1:
        raise ContractViolation("confidence must lie in (0, 1)")
    if tolerance < 1:
        raise ContractViolation("tolerance must be >= 1")
    cap = adc.max_rows(space)
    if n_max is not None:
        cap = min(cap, int(n_max))
    if cap < 1:
        return 0
    rng = np.random.Generator(np.random.PCG64(variation.seed))
    sign_x = rng.choice(np.array([-1, 1], dtype=np.int8), size=(trials, cap))
    sign_w = rng.choice(np.array([-1, 1], dtype=np.int8), size=(trials, cap))
    cond_pos = np.zeros((2, space.pulses, space.S), dtype=np.uint8)
    cond_neg = np.zeros_like(cond_pos)
    for c, w in enumerate((space.w_max, -space.w_max)):
        code = encode_weight(w, space)
        for j in range(space.pulses):
            cond_pos[c, j] = [cell.level <= j for cell in code.pos_block_levels]
            cond_neg[c, j] = [cell.level <= j for cell in code.neg_block_levels]
    counts = kernels.mc_error_counts(variation.seed ^ _MC_DOMAIN, sign_x, sign_w, cond_pos, cond_neg,
                                     float(space.L), float(space.w_max), float(variation.sigma),
                                     adc.lsb, adc.full_scale, float(tolerance))
    allowed = (1.0 - confidence) * trials
    for n, failures in enumerate(counts, start=1):
        if failures > allowed:
            return n - 1
    return cap
