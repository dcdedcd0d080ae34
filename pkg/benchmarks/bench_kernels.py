"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--letters 14]

Both backends are timed on the same inputs, and their outputs are checked for
agreement before any timing is reported.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from spherepack.kernels import _fallback

try:
    from spherepack.kernels import _core
except ImportError:
    _core = None


def convolve_workload(letters: int, seed: int):
    rng = np.random.default_rng(seed)
    steps = []
    for _ in range(letters):
        p = rng.dirichlet(np.ones(4))
        q = rng.dirichlet(np.ones(4))
        v = np.log(p) - np.log(q)
        order = np.argsort(v)
        steps.append((v[order], p[order], q[order]))
    return steps


def run_convolve(impl, steps):
    values, pmass, qmass = np.zeros(1), np.ones(1), np.ones(1)
    for v, p, q in steps:
        values, pmass, qmass = impl(values, pmass, qmass, v, p, q, 1e-12)
    return values, pmass, qmass


def moments_workload(atoms: int, points: int, seed: int):
    rng = np.random.default_rng(seed)
    return np.log(rng.dirichlet(np.ones(atoms))), np.log(rng.dirichlet(np.ones(atoms))), np.linspace(0, 1, points)


def best_of(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--letters", type=int, default=10, help="letters in the convolution (support 4^n before merging)")
    parser.add_argument("--atoms", type=int, default=256)
    parser.add_argument("--points", type=int, default=1001)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    if _core is None:
        print("compiled kernels not built; nothing to compare")
        return 1

    steps = convolve_workload(args.letters, args.seed)
    a, b = run_convolve(_fallback.convolve_merge, steps), run_convolve(_core.convolve_merge, steps)
    assert np.array_equal(a[0], b[0]) and np.allclose(a[1], b[1], rtol=1e-12)
    mom = moments_workload(args.atoms, args.points, args.seed)
    for x, y in zip(_fallback.tilted_moments(*mom), _core.tilted_moments(*mom)):
        assert np.allclose(x, y, rtol=1e-12, atol=1e-14)

    rows = [
        (f"convolve_merge ({args.letters} letters, {a[0].size} atoms)",
         best_of(lambda: run_convolve(_fallback.convolve_merge, steps), args.repeat),
         best_of(lambda: run_convolve(_core.convolve_merge, steps), args.repeat)),
        (f"tilted_moments ({args.atoms} atoms x {args.points} t)",
         best_of(lambda: _fallback.tilted_moments(*mom), args.repeat),
         best_of(lambda: _core.tilted_moments(*mom), args.repeat)),
    ]
    print(f"{'kernel':<48}{'python [ms]':>12}{'compiled [ms]':>15}{'speedup':>9}")
    for name, t_py, t_c in rows:
        print(f"{name:<48}{1e3 * t_py:>12.2f}{1e3 * t_c:>15.2f}{t_py / t_c:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
