"""Time the compiled and NumPy kernel backends on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from camcim import kernels
from camcim.array import AdcModel
from camcim.encoding import CodeSpace, encode_weight


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def pulse_case(rng):
    blocks, S, P = 256, 4, 4096
    levels = rng.integers(0, 3, size=(blocks, S, P), dtype=np.uint8)
    match = rng.integers(0, 2, size=(blocks, S, P), dtype=np.uint8)
    driven = np.arange(0, 128, dtype=np.int64)
    drives = rng.choice([-2.0, -1.0, 1.0, 2.0], size=driven.size)
    return lambda impl: impl.accumulate_pulse(levels, match, driven, drives, 0, 0.15, 1, 3)


def mc_case(rng):
    space = CodeSpace(4, 2, 2)
    adc = AdcModel.for_rows(space, 128)
    trials, n = 2000, 128
    sx = rng.choice(np.array([-1, 1], dtype=np.int8), size=(trials, n))
    sw = rng.choice(np.array([-1, 1], dtype=np.int8), size=(trials, n))
    cp = np.zeros((2, 1, 4), dtype=np.uint8)
    cn = np.zeros_like(cp)
    for c, w in enumerate((space.w_max, -space.w_max)):
        code = encode_weight(w, space)
        cp[c, 0] = [cell.level == 0 for cell in code.pos_block_levels]
        cn[c, 0] = [cell.level == 0 for cell in code.neg_block_levels]
    return lambda impl: impl.mc_error_counts(9, sx, sw, cp, cn, 2.0, 2.0, 0.15, adc.lsb, adc.full_scale)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    impls = kernels.implementations()
    print(f"active backend: {kernels.backend()}")
    for name, case in (("accumulate_pulse", pulse_case(rng)), ("mc_error_counts", mc_case(rng))):
        times = {}
        outputs = {}
        for label, impl in impls.items():
            outputs[label] = case(impl)
            times[label] = _best(lambda: case(impl), args.repeat)
        line = "  ".join(f"{label}={t * 1e3:8.2f} ms" for label, t in times.items())
        if "cython" in times:
            line += f"  speedup={times['python'] / times['cython']:.1f}x"
            same = np.allclose(outputs["python"], outputs["cython"], rtol=0, atol=1e-9)
            line += f"  agree={same}"
        print(f"{name:18s} {line}")


if __name__ == "__main__":
    main()
