"""Acceptance criteria 1-10, one test each; every test prints one PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
from conftest import ACCEPTANCE_LINES

from camcim import cli, config, harness
from camcim.array import AdcModel, PlaneGeometry, max_input_dimension
from camcim.cam import entry_plan
from camcim.device import VariationModel
from camcim.encoding import CodeSpace, decode_weight, encode_weight
from camcim.mapping import place, utilization
from camcim.perf import Stage, TimingModel, ablation, evaluate, stage_geometry
from camcim.workload import MoESpec

ROOT = Path(__file__).resolve().parents[1]
FULL_GEOM = PlaneGeometry(64, 4, 1024, 131072, 0)


def report(n, ok, detail):
    line = f"[acceptance {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_01_functional_oracle_equivalence():
    t0 = time.perf_counter()
    res = harness.check_gemv(1000, seed=2024)
    elapsed = time.perf_counter() - t0
    ok = res.passed and res.checked == 1000 and elapsed < 60
    report(1, ok, f"{res.checked - res.failures}/1000 GEMV instances exact in {elapsed:.1f} s (limit 60 s)")


def test_02_cam_truth_tables():
    res = harness.check_truth_tables(6)
    single = all(harness.check_truth_tables(w).passed for w in (1, 2, 3))
    report(2, res.passed and single, f"{res.checked} table rows over all plans up to 6 bits match XNOR-AND")


def test_03_gating_soundness():
    res = harness.check_gating(100, seed=77)
    report(3, res.passed and res.checked == 100, f"{res.checked} instances, {res.failures} outputs changed")


def test_04_range_law():
    ok = True
    for m in (2, 3, 4, 5):
        space = CodeSpace(4, m, 2)
        ok &= space.w_max == 4 * (m - 1) // 2
        ok &= all(decode_weight(encode_weight(w, space)) == w for w in space.weight_range)
    slc, tri = CodeSpace(4, 2, 2), CodeSpace(4, 3, 2)
    ok &= (list(slc.weight_range), list(tri.weight_range)) == (list(range(-2, 3)), list(range(-4, 5)))
    report(4, ok, f"S=4: m=2 -> [{slc.weight_range[0]}, {slc.weight_range[-1]}], "
                  f"m=3 -> [{tri.weight_range[0]}, {tri.weight_range[-1]}]")


def test_05_t1_gain_endpoints():
    low = {r.report.stage: r.throughput_gain
           for r in ablation(MoESpec(4, 1, 512, 64), FULL_GEOM, CodeSpace(4, 3, 2), sigma=0.0, granularity=4)}
    high = {r.report.stage: r for r in
            ablation(MoESpec(4, 1, 512, 64), FULL_GEOM, CodeSpace(4, 3, 2), sigma=0.15, granularity=4)}
    others = all(r.throughput_gain == n / k
                 for n, k in ((8, 2), (16, 1), (32, 4))
                 for r in ablation(MoESpec(n, k, 64, 16), FULL_GEOM, CodeSpace(4, 3, 2), sigma=0.0)
                 if r.report.stage == "t1")
    quartered = high["t1"].report.allowed_dim * 4 == 512
    ok = low["t1"] == 4 and high["t1"].throughput_gain == 16 and quartered and others
    report(5, ok, f"T1/Base = {low['t1']:g} at sigma->0, {high['t1'].throughput_gain:g} with D_max "
                  f"{high['t1'].report.allowed_dim} (of 512) and g=4")


def test_06_t3_speedup():
    rng = np.random.default_rng(6)
    spec = MoESpec(4, 1, 128, 128)
    geom = stage_geometry(Stage.T3, spec, FULL_GEOM)
    worst = 0.0
    bounded = True
    for t1, t2 in rng.uniform(1e-3, 1e3, size=(100, 2)):
        timing = TimingModel(float(t1), float(t2))
        t3 = evaluate("t1+t2+t3", spec, geom, CodeSpace(4, 3, 2), timing=timing)
        t2r = evaluate("t1+t2", spec, geom, CodeSpace(4, 2, 2), timing=timing)
        measured = t3.throughput / t2r.throughput
        closed = 2 * (t1 + t2) / (t1 + 2 * t2)
        worst = max(worst, abs(measured - closed))
        bounded &= 1 < measured < 2
    report(6, worst < 1e-9 and bounded, f"max |measured - 2(t1+t2)/(t1+2t2)| = {worst:.1e} over 100 timing pairs")


def test_07_calibrated_ratios():
    rows = ablation(MoESpec(4, 1, 128, 128), FULL_GEOM, CodeSpace(4, 3, 2))
    gated = [r for r in rows if r.report.stage != "base"]
    eff = [r.efficiency_gain for r in gated]
    red = [r.aedp_reduction for r in gated]
    ok = all(3.9 <= g <= 5.1 for g in eff) and all(3.5 <= a <= 8.3 for a in red)
    report(7, ok, "efficiency gains " + ", ".join(f"{g:.2f}" for g in eff)
           + "; AEDP reductions " + ", ".join(f"{a:.2f}" for a in red))


def test_08_area_efficiency():
    plan = entry_plan(32, max_bits=3)
    spec = MoESpec(32, 1, 4, 4)
    geom = PlaneGeometry(64, 4, 128, 4, len(plan))
    plain = PlaneGeometry(64, 4, 128, 128, 0)
    space = CodeSpace(4, 2, 2)
    with_cam = utilization(place(spec, geom, "interleaved", 1, max_cam_bits=3), geom, space)
    no_cam = utilization(place(spec, plain, "contiguous"), plain, space)
    loss = 1 - with_cam.storage_utilization / no_cam.storage_utilization
    ok = len(plan) <= 2 and math.isclose(loss, len(plan) / 64) and loss < 0.05
    report(8, ok, f"r=1/32, plan {plan}: area-efficiency reduction {loss:.4f} (< 0.05)")


def test_09_variation_trend():
    space = CodeSpace(4, 2, 2)
    adc = AdcModel.for_rows(space, 128)
    sigmas = (0.05, 0.10, 0.15, 0.20, 0.30)
    strict = [max_input_dimension(space, adc, VariationModel(s, 0), trials=10000) for s in sigmas]
    relaxed = [max_input_dimension(space, adc, VariationModel(s, 0), trials=10000, tolerance=4) for s in sigmas]
    ok = all(a >= b for a, b in zip(strict, strict[1:])) and all(a >= b for a, b in zip(relaxed, relaxed[1:]))
    report(9, ok, f"D_max over sigma {list(sigmas)}: exact {strict}, tolerance 4 {relaxed}")


def test_10_determinism(tmp_path):
    cfg = config.load(ROOT / "configs" / "default.json")
    a, b = tmp_path / "a", tmp_path / "b"
    cli.cmd_run(cfg, str(a))
    cli.cmd_run(cfg, str(b))
    names = sorted(p.name for p in a.iterdir())
    same = names == sorted(p.name for p in b.iterdir()) and all(
        (a / n).read_bytes() == (b / n).read_bytes() for n in names)
    report(10, same, f"{len(names)} report files byte-identical across two runs")


if __name__ == "__main__":
    import pytest

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
