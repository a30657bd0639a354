"""Compare the compiled and pure-Python RK4 kernels.

Times one coupled step for several formation sizes, then a full bundled
scenario with each backend, and checks that both give identical numbers.

    python benchmarks/bench_kernels.py [--repeat 5] [--scenario sec4b_circular_diamond]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from nhformation import kernels
from nhformation.harness import load_config, resolve_scenario, run_scenario

SIZES = ((2, 1), (4, 5), (16, 30), (64, 126))


def make_problem(n: int, m: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    states = np.column_stack([rng.uniform(-5, 5, n), rng.uniform(-5, 5, n),
                              rng.uniform(-np.pi, np.pi, n), rng.uniform(0, 1, n)])
    controls = rng.uniform(-0.5, 0.5, (n, 2))
    est = rng.normal(size=(m, 4))
    ef = rng.integers(1, n, m)
    et = np.array([rng.integers(0, f) for f in ef])
    return states, controls, est, ef, et, (-15.0, -50.0, -5.0), np.zeros((m, 2)), 0.01


def bench_step(repeat: int) -> None:
    print(f"{'agents':>6} {'estimators':>10} {'python us':>10} {'cython us':>10} {'speedup':>8} {'identical':>9}")
    for n, m in SIZES:
        args = make_problem(n, m)
        res = {}
        out = {}
        for be in ("python", "cython"):
            number = max(1, 2000 // (n + m))
            t = min(timeit.repeat(lambda: kernels.coupled_rk4(*args, backend=be),
                                  number=number, repeat=repeat)) / number
            res[be] = t * 1e6
            out[be] = kernels.coupled_rk4(*args, backend=be)
        same = all(np.array_equal(a, b) for a, b in zip(out["python"], out["cython"]))
        print(f"{n:6d} {m:10d} {res['python']:10.1f} {res['cython']:10.1f} "
              f"{res['python'] / res['cython']:8.1f} {str(same):>9}")


def bench_scenario(name: str, repeat: int) -> None:
    cfg = load_config(resolve_scenario(name))
    logs = {}
    for be in ("python", "cython"):
        t = min(timeit.repeat(lambda: logs.__setitem__(be, run_scenario(cfg, backend=be)),
                              number=1, repeat=repeat))
        print(f"{name} ({cfg.n_steps} steps), {be:6s}: {t:.3f} s")
    print(f"logs identical: {np.array_equal(logs['python'].data, logs['cython'].data)}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scenario", default="sec4b_circular_diamond")
    args = ap.parse_args()
    if kernels.BACKEND != "cython":
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
    bench_step(args.repeat)
    bench_scenario(args.scenario, max(1, args.repeat // 2))


if __name__ == "__main__":
    main()
