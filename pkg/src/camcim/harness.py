"""Oracle checks shared by the ``verify`` command and the test suite."""

import json
from dataclasses import asdict, dataclass, field
from itertools import product
from typing import List, Optional

import numpy as np

from .array import Plane, PlaneGeometry, run_gemv
from .cam import truth_table
from .device import VariationModel
from .encoding import CodeSpace, decode_input, decode_weight, encode_input, encode_weight
from .mapping import ExpertLayout, place, program
from .perf import cam_layers_needed
from .workload import MoESpec, random_expert_weights


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: int = 0
    reproducer: Optional[dict] = None
    notes: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def fail(self, reproducer: dict) -> None:
        self.failures += 1
        if self.reproducer is None:
            self.reproducer = reproducer


def xnor_reference(entry_bits: str, query_bits: str) -> int:
    return int(all(a == b for a, b in zip(entry_bits, query_bits)))


def plans_up_to(total_bits: int, max_width: int = 3):
    """Every ordered layer-width plan with at most ``total_bits`` bits."""
    plans = []

    def extend(prefix, used):
        if prefix:
            plans.append(tuple(prefix))
        for w in range(1, max_width + 1):
            if used + w <= total_bits:
                extend(prefix + [w], used + w)

    extend([], 0)
    return plans


def check_truth_tables(total_bits: int = 6) -> SuiteResult:
    res = SuiteResult("cam_truth_tables")
    for plan in plans_up_to(total_bits):
        for entry_bits, query_bits, match in truth_table(plan):
            res.checked += 1
            if match != xnor_reference(entry_bits, query_bits):
                res.fail({"plan": list(plan), "entry": entry_bits, "query": query_bits, "match": match})
    return res


def check_codec(S_values=(1, 2, 4, 8), m_values=(2, 3, 4, 8), L: int = 4) -> SuiteResult:
    res = SuiteResult("codec_roundtrip")
    for S, m in product(S_values, m_values):
        if (S * (m - 1)) % 2:
            continue
        space = CodeSpace(S, m, L)
        for w in space.weight_range:
            res.checked += 1
            code = encode_weight(w, space)
            if decode_weight(code) != w or code.pos_sum - code.neg_sum != 2 * w:
                res.fail({"S": S, "m": m, "w": w})
        for x in space.input_range:
            res.checked += 1
            if decode_input(encode_input(x, space)) != x:
                res.fail({"S": S, "m": m, "x": x})
    return res


@dataclass
class GemvInstance:
    spec: MoESpec
    space: CodeSpace
    geometry: PlaneGeometry
    strategy: str
    granularity: int
    weights: np.ndarray
    x: np.ndarray
    experts: np.ndarray
    max_rows: int

    def to_dict(self) -> dict:
        return {
            "spec": asdict(self.spec),
            "space": [self.space.S, self.space.m, self.space.L],
            "strategy": self.strategy,
            "granularity": self.granularity,
            "max_rows": self.max_rows,
            "weights": self.weights.tolist(),
            "x": self.x.tolist(),
            "experts": self.experts.tolist(),
        }


def random_instance(rng: np.random.Generator, max_experts: int = 8, max_dim: int = 32,
                    S: int = 4, m_values=(2, 3, 4), L: int = 2) -> GemvInstance:
    n = int(rng.integers(1, max_experts + 1))
    k = int(rng.integers(1, n + 1))
    d = int(rng.integers(1, max_dim + 1))
    o = int(rng.integers(1, max_dim + 1))
    m = int(rng.choice(m_values))
    space = CodeSpace(S, m, L)
    spec = MoESpec(n, k, d, o)
    strategy = str(rng.choice(["contiguous", "interleaved"]))
    g = int(rng.choice([1, 2, 4, 8])) if strategy == "interleaved" else 1
    cam = cam_layers_needed(n) if strategy == "interleaved" else 0
    page = n * o if strategy == "contiguous" else o
    geometry = PlaneGeometry(layers_total=8, ssls_per_gsl=S, num_blocks=128, page_size=page, cam_layers=cam)
    weights = rng.integers(-space.w_max, space.w_max + 1, size=(n, o, d), dtype=np.int64)
    x = rng.integers(-L, L + 1, size=d, dtype=np.int64)
    experts = np.sort(rng.permutation(n)[:k])
    max_rows = int(rng.integers(1, d + 1))
    return GemvInstance(spec, space, geometry, strategy, g, weights, x, experts, max_rows)


def build(inst: GemvInstance):
    layout = place(inst.spec, inst.geometry, inst.strategy, inst.granularity)
    plane = Plane(inst.geometry, inst.space)
    program(plane, layout, inst.weights)
    return plane, layout


def check_gemv(instances: int, seed: int = 0) -> SuiteResult:
    """Random sigma=0 MoE GEMVs against the integer reference, for every routed expert."""
    res = SuiteResult("gemv_oracle")
    if instances == 0:
        res.notes.append("no GEMV instances requested")
        return res
    rng = np.random.Generator(np.random.PCG64(seed))
    for i in range(instances):
        inst = random_instance(rng)
        plane, layout = build(inst)
        res.checked += 1
        for e in inst.experts:
            got = run_gemv(plane, layout, int(e), inst.x, max_rows=inst.max_rows).y
            want = inst.weights[e] @ inst.x
            if not np.array_equal(got, want):
                rep = inst.to_dict()
                rep.update(index=i, expert=int(e), expected=want.tolist(), got=got.tolist())
                res.fail(rep)
                return res
    return res


def check_gating(instances: int, seed: int = 0) -> SuiteResult:
    """Rewriting other experts' weights never changes the selected expert's output."""
    res = SuiteResult("gating_soundness")
    rng = np.random.Generator(np.random.PCG64(seed))
    done = 0
    while done < instances:
        inst = random_instance(rng)
        if inst.strategy != "interleaved" or inst.spec.num_experts < 2:
            continue
        done += 1
        plane, layout = build(inst)
        e = int(inst.experts[0])
        before = run_gemv(plane, layout, e, inst.x, max_rows=inst.max_rows).y
        mutated = inst.weights.copy()
        others = [j for j in range(inst.spec.num_experts) if j != e]
        mutated[others] = rng.integers(-inst.space.w_max, inst.space.w_max + 1, size=mutated[others].shape)
        program(plane, layout, mutated)
        after = run_gemv(plane, layout, e, inst.x, max_rows=inst.max_rows).y
        res.checked += 1
        if not np.array_equal(before, after):
            rep = inst.to_dict()
            rep.update(expert=e, before=before.tolist(), after=after.tolist())
            res.fail(rep)
    return res


def functional_plane(cfg):
    """The plane, layout and weights a run programs, rebuilt from config and seed."""
    geom = cfg.functional_geometry
    layout = place(cfg.moe, geom, cfg.functional["strategy"], cfg.functional["granularity"])
    plane = Plane(geom, cfg.space)
    weights = random_expert_weights(cfg.moe, cfg.space, cfg.seed)
    program(plane, layout, weights)
    return plane, layout, weights


def functional_summary(cfg, plane: Plane, layout: ExpertLayout, weights, trace) -> dict:
    """Run every token of ``trace`` on the plane at sigma=0 and at the configured sigma."""
    exact = 0
    total = 0
    abs_err = []
    cycles = 0
    noisy = VariationModel(cfg.sigma, cfg.seed)
    for x, experts in zip(trace.inputs, trace.experts):
        for e in experts:
            ref = weights[e] @ x
            r0 = run_gemv(plane, layout, int(e), x)
            exact += int(np.array_equal(r0.y, ref))
            total += 1
            cycles += r0.cycles
            if cfg.sigma > 0:
                r1 = run_gemv(plane, layout, int(e), x, variation=noisy)
                abs_err.append(np.abs(r1.y - ref))
    errs = np.concatenate(abs_err) if abs_err else np.zeros(1, dtype=np.int64)
    return {
        "gemv_calls": total,
        "exact_at_sigma0": exact,
        "cycles_at_sigma0": cycles,
        "sigma": cfg.sigma,
        "mean_abs_error_at_sigma": float(errs.mean()),
        "max_abs_error_at_sigma": int(errs.max()),
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
