"""Command-line front end.

Subcommands::

    run          --config F [--seed U64] --out DIR
    sweep        --config F --axis {sigma,m,granularity,num_experts} --values V,... [--out DIR]
    verify       [--instances N] [--seed U64] [--config F --image IMG]
    truth-table  --plan 1,2
    codec        --space S,m,L

Exit status is 0 on success, 1 on a failed check and 2 on bad input.
"""

import argparse
import csv
import io
import json
import os
import sys
from typing import List, Optional

from . import config as config_mod
from . import harness
from .array import Plane, first_divergence
from .cam import truth_table
from .encoding import CodeSpace, encode_input, encode_weight
from .errors import CamCimError, ConfigError, ImageFormatError
from .perf import ablation
from .workload import generate_trace, write_trace

SWEEP_AXES = {
    "sigma": ("sigma", float),
    "m": ("code_space.m", int),
    "granularity": ("granularity", int),
    "num_experts": ("moe.num_experts", int),
}


def _csv_text(rows: List[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\r\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _perf_rows(cfg, stages) -> List[dict]:
    rows = ablation(cfg.moe, cfg.geometry, cfg.space, cfg.sigma, cfg.timing, cfg.energy,
                    cfg.granularity, cfg.dims, stages)
    return [r.to_row() for r in rows]


def cmd_run(cfg, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    rows = _perf_rows(cfg, cfg.stages)
    routing = cfg.routing
    trace = generate_trace(cfg.moe, routing.get("tokens", 16), routing["kind"], cfg.seed, cfg.space,
                           routing.get("zipf_s", 1.0), routing.get("path"))
    plane, layout, weights = harness.functional_plane(cfg)
    summary = harness.functional_summary(cfg, plane, layout, weights, trace)
    summary["tokens"] = len(trace)
    summary["activated_fraction"] = trace.activated_fraction(cfg.moe)

    _write(os.path.join(out_dir, "perf.csv"), _csv_text(rows))
    _write(os.path.join(out_dir, "perf.json"), harness.dumps({"config": cfg.raw, "stages": rows}))
    _write(os.path.join(out_dir, "functional.json"), harness.dumps(summary))
    _write(os.path.join(out_dir, "layout.json"), layout.to_json())
    write_trace(trace, os.path.join(out_dir, "trace.txt"))
    plane.save(os.path.join(out_dir, "plane.img"))
    ok = summary["exact_at_sigma0"] == summary["gemv_calls"]
    print(f"wrote {len(rows)} stage reports to {out_dir}; sigma=0 exact {summary['exact_at_sigma0']}/{summary['gemv_calls']}")
    return 0 if ok else 1


def cmd_sweep(cfg, axis: str, values: List[str], out_dir: Optional[str]) -> int:
    path, cast = SWEEP_AXES[axis]
    rows = []
    for raw_value in values:
        value = cast(raw_value)
        overrides = {path: value}
        if axis == "m" and value < 3:
            # binary cells cannot run the multibit stage
            overrides["stages"] = [s.value for s in cfg.stages if not s.multibit]
        sub = cfg.with_overrides(**overrides)
        for row in _perf_rows(sub, sub.stages):
            rows.append({"axis": axis, "value": value, **row})
    text = _csv_text(rows)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        _write(os.path.join(out_dir, f"sweep_{axis}.csv"), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify(instances: int, seed: int, cfg=None, image: Optional[str] = None) -> int:
    suites = []
    if image is not None:
        suites.append(_verify_image(cfg, image))
    suites += [harness.check_truth_tables(), harness.check_codec(), harness.check_gemv(instances, seed)]
    if instances == 0:
        print("warning: instances=0, GEMV oracle suite checked nothing", file=sys.stderr)
    ok = True
    for res in suites:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name}: {res.checked} checked, {res.failures} failed")
        if not res.passed:
            ok = False
            print("reproducer: " + json.dumps(res.reproducer, sort_keys=True))
            break
    return 0 if ok else 1


def _verify_image(cfg, image: str) -> harness.SuiteResult:
    res = harness.SuiteResult("plane_image")
    expected, _, _ = harness.functional_plane(cfg)
    res.checked = 1
    try:
        got = Plane.load(image, verify_crc=False)
        Plane.load(image)
    except ImageFormatError as exc:
        res.notes.append(str(exc))
        if "checksum" not in str(exc):
            res.fail({"image": image, "error": str(exc)})
            return res
    where = first_divergence(expected, got)
    if where is not None or res.notes:
        rep = {"image": image, "notes": res.notes}
        if where is not None and where[0] != "shape":
            layer, block, ssl, bitline = where
            rep["first_divergence"] = {"block": block, "ssl": ssl, "bitline": bitline, "layer": layer}
        elif where is not None:
            rep["shape_mismatch"] = [list(where[1]), list(where[2])]
        res.fail(rep)
    return res


def cmd_truth_table(plan: List[int]) -> int:
    rows = [{"entry": e, "query": q, "match": m} for e, q, m in truth_table(plan)]
    sys.stdout.write(_csv_text(rows))
    return 0


def cmd_codec(space: CodeSpace) -> int:
    rows = []
    for w in space.weight_range:
        code = encode_weight(w, space)
        rows.append({
            "kind": "weight", "value": w,
            "pos_levels": "".join(str(c.level) for c in code.pos_block_levels),
            "neg_levels": "".join(str(c.level) for c in code.neg_block_levels),
            "pos_sum": code.pos_sum, "neg_sum": code.neg_sum,
        })
    for x in space.input_range:
        drive = encode_input(x, space)
        rows.append({"kind": "input", "value": x, "pos_levels": "", "neg_levels": "",
                     "pos_sum": drive.magnitude, "neg_sum": drive.polarity})
    sys.stdout.write(_csv_text(rows))
    return 0


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="camcim", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evaluate stages and run the functional check")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=_u64, default=None, help="overrides the config seed")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep", help="evaluate stages across one axis")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma-separated values (may be empty)")
    p.add_argument("--out", default=None)

    p = sub.add_parser("verify", help="run the oracle suites")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--seed", type=_u64, default=None,
                   help="GEMV instance seed; with --image, the seed of the run that wrote it")
    p.add_argument("--config", default=None, help="config that produced --image")
    p.add_argument("--image", default=None, help="plane image to compare against its config")

    p = sub.add_parser("truth-table", help="print the CAM match table of a layer plan")
    p.add_argument("--plan", required=True, type=_int_list)

    p = sub.add_parser("codec", help="print weight and input codes of a code space")
    p.add_argument("--space", required=True, type=_int_list, help="S,m,L")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = config_mod.load(args.config)
            if args.seed is not None:
                cfg = cfg.with_overrides(seed=args.seed)
            return cmd_run(cfg, args.out)
        if args.command == "sweep":
            cfg = config_mod.load(args.config)
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            return cmd_sweep(cfg, args.axis, values, args.out)
        if args.command == "verify":
            if args.instances < 0:
                raise ConfigError("instances must be >= 0", "instances")
            if (args.image is None) != (args.config is None):
                raise ConfigError("--image and --config go together", "image")
            cfg = config_mod.load(args.config) if args.config else None
            if cfg is not None and args.seed is not None:
                cfg = cfg.with_overrides(seed=args.seed)
            return cmd_verify(args.instances, args.seed or 0, cfg, args.image)
        if args.command == "truth-table":
            return cmd_truth_table(args.plan)
        if args.command == "codec":
            if len(args.space) != 3:
                raise ConfigError("--space needs S,m,L", "space")
            return cmd_codec(CodeSpace(*args.space))
    except ConfigError as exc:
        field = f" [{exc.field}]" if exc.field else ""
        print(f"error{field}: {exc}", file=sys.stderr)
        return 2
    except (CamCimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
