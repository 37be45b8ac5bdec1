"""Run configuration: JSON schema validation plus cross-field checks."""

import copy
import json
from dataclasses import dataclass
from importlib import resources
from typing import Tuple

import jsonschema

from .array import PlaneGeometry
from .encoding import CodeSpace
from .errors import ConfigError, ContractViolation
from .perf import DimensionModel, EnergyModel, Stage, TimingModel, cam_layers_needed
from .workload import MoESpec

DEFAULTS = {
    "geometry": {"layers_total": 64, "ssls_per_gsl": 4, "num_blocks": 1024, "page_size": 131072},
    "code_space": {"S": 4, "m": 3, "L": 2},
    "sigma": 0.15,
    "seed": 0,
    "stages": ["base", "t1", "t1+t2", "t1+t2+t3"],
    "granularity": 4,
    "routing": {"kind": "uniform", "zipf_s": 1.0, "tokens": 16},
    "timing": {},
    "energy": {},
    "dimension": {"mode": "scaled"},
    "functional": {"layers_total": 8, "num_blocks": 256, "strategy": "interleaved", "granularity": 4},
}


def load_schema() -> dict:
    with resources.files("camcim").joinpath("data/config.schema.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass(frozen=True)
class RunConfig:
    geometry: PlaneGeometry
    space: CodeSpace
    moe: MoESpec
    sigma: float
    seed: int
    stages: Tuple[Stage, ...]
    granularity: int
    routing: dict
    timing: TimingModel
    energy: EnergyModel
    dims: DimensionModel
    functional: dict
    raw: dict

    @property
    def functional_geometry(self) -> PlaneGeometry:
        f = self.functional
        cam = cam_layers_needed(self.moe.num_experts) if f["strategy"] == "interleaved" else 0
        return PlaneGeometry(f["layers_total"], self.space.S, f["num_blocks"],
                             f.get("page_size", self.moe.out_dim * (self.moe.num_experts if f["strategy"] == "contiguous" else 1)),
                             cam)

    def with_overrides(self, **changes) -> "RunConfig":
        """Re-validate with top-level or dotted-path (``moe.num_experts``) overrides."""
        raw = copy.deepcopy(self.raw)
        for path, value in changes.items():
            node = raw
            *parents, leaf = path.split(".")
            for p in parents:
                node = node.setdefault(p, {})
            node[leaf] = value
        return from_dict(raw)


def _field(err: jsonschema.ValidationError) -> str:
    path = list(err.absolute_path)
    if err.validator == "required":
        missing = err.message.split("'")[1]
        path.append(missing)
    elif err.validator == "additionalProperties":
        extra = err.message.split("'")[1]
        path.append(extra)
    return ".".join(str(p) for p in path) or "<root>"


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object", "<root>")
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        name = _field(err)
        raise ConfigError(f"{name}: {err.message}", name)
    raw = _merge(DEFAULTS, data)

    moe = raw["moe"]
    if moe["top_k"] > moe["num_experts"]:
        raise ConfigError(f"moe.top_k: top_k={moe['top_k']} exceeds num_experts={moe['num_experts']}", "moe.top_k")
    if moe.get("num_groups") is not None:
        if moe["num_groups"] != moe["top_k"]:
            raise ConfigError("moe.num_groups: grouped routing needs num_groups == top_k", "moe.num_groups")
        if moe["num_experts"] % moe["num_groups"]:
            raise ConfigError("moe.num_groups: num_experts must split evenly into groups", "moe.num_groups")
    cs = raw["code_space"]
    if (cs["S"] * (cs["m"] - 1)) % 2:
        raise ConfigError("code_space.m: S*(m-1) must be even", "code_space.m")
    geo = raw["geometry"]
    if geo["ssls_per_gsl"] != cs["S"]:
        raise ConfigError("geometry.ssls_per_gsl: must equal code_space.S", "geometry.ssls_per_gsl")
    if geo["num_blocks"] % 2:
        raise ConfigError("geometry.num_blocks: must be even", "geometry.num_blocks")
    stages = tuple(Stage(s) for s in raw["stages"])
    if Stage.T3 in stages and cs["m"] < 3:
        raise ConfigError("stages: t1+t2+t3 needs code_space.m >= 3", "stages")
    if raw["routing"]["kind"] == "file" and "path" not in raw["routing"]:
        raise ConfigError("routing.path: file routing needs a path", "routing.path")
    func = raw["functional"]
    if func["num_blocks"] % 2:
        raise ConfigError("functional.num_blocks: must be even", "functional.num_blocks")

    try:
        moe_spec = MoESpec(moe["num_experts"], moe["top_k"], moe["in_dim"], moe["out_dim"], moe.get("num_groups"))
        space = CodeSpace(cs["S"], cs["m"], cs["L"])
        cam = cam_layers_needed(moe["num_experts"])
        if cam >= geo["layers_total"]:
            raise ConfigError("geometry.layers_total: no room for CIM layers after CAM", "geometry.layers_total")
        geometry = PlaneGeometry(geo["layers_total"], geo["ssls_per_gsl"], geo["num_blocks"], geo["page_size"], 0)
        timing = TimingModel(**raw["timing"])
        energy = EnergyModel(**raw["energy"])
        dims = DimensionModel(seed=raw["seed"], **raw["dimension"])
    except ContractViolation as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(geometry, space, moe_spec, float(raw["sigma"]), int(raw["seed"]), stages,
                     int(raw["granularity"]), raw["routing"], timing, energy, dims, func, raw)


def load(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "<root>") from None
    return from_dict(data)
