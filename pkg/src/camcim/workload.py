"""MoE model shapes, routed token streams and reference weights."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .encoding import CodeSpace
from .errors import ContractViolation, TraceFormatError


@dataclass(frozen=True)
class MoESpec:
    num_experts: int
    top_k: int
    in_dim: int
    out_dim: int
    num_groups: Optional[int] = None

    def __post_init__(self):
        if self.num_experts < 1:
            raise ContractViolation("num_experts must be >= 1")
        if not 1 <= self.top_k <= self.num_experts:
            raise ContractViolation(f"top_k={self.top_k} must lie in [1, num_experts={self.num_experts}]")
        if self.in_dim < 1 or self.out_dim < 1:
            raise ContractViolation("expert dimensions must be positive")
        if self.num_groups is not None:
            if self.num_groups != self.top_k:
                raise ContractViolation("grouped routing picks one expert per group, so num_groups must equal top_k")
            if self.num_experts % self.num_groups:
                raise ContractViolation("num_experts must split evenly into groups")

    @property
    def activated_ratio(self) -> float:
        return self.top_k / self.num_experts

    @property
    def experts_per_group(self) -> Optional[int]:
        return None if self.num_groups is None else self.num_experts // self.num_groups


@dataclass
class TokenTrace:
    """``inputs[t]`` is token t's input vector; ``experts[t]`` its routed ids (sorted)."""

    inputs: np.ndarray
    experts: np.ndarray

    def __len__(self):
        return len(self.inputs)

    def validate(self, spec: MoESpec, space: Optional[CodeSpace] = None) -> None:
        if self.inputs.ndim != 2 or self.inputs.shape[1] != spec.in_dim:
            raise ContractViolation(f"inputs must have shape (tokens, {spec.in_dim})")
        if self.experts.shape != (len(self.inputs), spec.top_k):
            raise ContractViolation(f"expert ids must have shape (tokens, {spec.top_k})")
        if self.experts.size and (self.experts.min() < 0 or self.experts.max() >= spec.num_experts):
            raise ContractViolation("expert id out of range")
        for row in self.experts:
            if len(set(row.tolist())) != len(row):
                raise ContractViolation("a token routes to the same expert twice")
        if spec.num_groups is not None:
            groups = self.experts // spec.experts_per_group
            if not (np.sort(groups, axis=1) == np.arange(spec.num_groups)).all():
                raise ContractViolation("grouped trace must pick exactly one expert per group")
        if space is not None and self.inputs.size and np.abs(self.inputs).max() > space.L:
            raise ContractViolation(f"inputs exceed +/-{space.L}")

    def activated_fraction(self, spec: MoESpec) -> float:
        return self.experts.size / (len(self) * spec.num_experts) if len(self) else 0.0


def _expert_probs(n: int, routing: str, zipf_s: float) -> np.ndarray:
    if routing == "uniform":
        p = np.ones(n)
    elif routing == "zipf":
        if zipf_s <= 0:
            raise ContractViolation("zipf exponent must be positive")
        p = 1.0 / np.arange(1, n + 1) ** zipf_s
    else:
        raise ContractViolation(f"unknown routing {routing!r}")
    return p / p.sum()


def generate_trace(spec: MoESpec, tokens: int, routing: str = "uniform", seed: int = 0,
                   space: CodeSpace = CodeSpace(), zipf_s: float = 1.0, path=None) -> TokenTrace:
    """Draw a reproducible token stream.

    Experts are chosen without replacement by Gumbel-top-k over the routing
    distribution (one Gumbel-argmax per group in grouped mode); inputs are
    uniform over the input code range.  ``routing="file"`` reads ``path``.
    """
    if tokens < 1:
        raise ContractViolation("tokens must be >= 1")
    if routing == "file":
        if path is None:
            raise ContractViolation("file routing needs a path")
        trace = read_trace(path)
        trace.validate(spec, space)
        return trace
    rng = np.random.Generator(np.random.PCG64(seed))
    logp = np.log(_expert_probs(spec.num_experts, routing, zipf_s))
    keys = logp + rng.gumbel(size=(tokens, spec.num_experts))
    if spec.num_groups is None:
        experts = np.argsort(-keys, axis=1, kind="stable")[:, :spec.top_k]
    else:
        per = spec.experts_per_group
        grouped = keys.reshape(tokens, spec.num_groups, per)
        experts = np.argmax(grouped, axis=2) + per * np.arange(spec.num_groups)
    experts = np.sort(experts, axis=1).astype(np.int64)
    inputs = rng.integers(-space.L, space.L + 1, size=(tokens, spec.in_dim), dtype=np.int64)
    return TokenTrace(inputs, experts)


def random_expert_weights(spec: MoESpec, space: CodeSpace, seed: int = 0) -> np.ndarray:
    """int64[N, out_dim, in_dim], uniform over the weight code range."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.integers(-space.w_max, space.w_max + 1,
                        size=(spec.num_experts, spec.out_dim, spec.in_dim), dtype=np.int64)


def write_trace(trace: TokenTrace, path) -> None:
    """One token per line: ``x1 x2 ... xd | e1 e2 ... ek``."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for x, e in zip(trace.inputs, trace.experts):
            fh.write(" ".join(map(str, x.tolist())) + " | " + " ".join(map(str, e.tolist())) + "\n")


def read_trace(path) -> TokenTrace:
    inputs, experts = [], []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("|")
            if len(parts) != 2:
                raise TraceFormatError(f"line {lineno}: expected 'inputs | expert ids'")
            try:
                x = [int(v) for v in parts[0].split()]
                e = [int(v) for v in parts[1].split()]
            except ValueError as exc:
                raise TraceFormatError(f"line {lineno}: {exc}") from None
            if not x or not e:
                raise TraceFormatError(f"line {lineno}: empty field")
            if inputs and (len(x) != len(inputs[0]) or len(e) != len(experts[0])):
                raise TraceFormatError(f"line {lineno}: width differs from earlier lines")
            inputs.append(x)
            experts.append(sorted(e))
    if not inputs:
        raise TraceFormatError("trace file holds no tokens")
    return TokenTrace(np.asarray(inputs, dtype=np.int64), np.asarray(experts, dtype=np.int64))
