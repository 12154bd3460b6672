"""Compare the numba and numpy kernel backends.

Run ``python3 benchmarks/bench_kernels.py``.  Prints per-call timings of the
hot kernels on a batch of curve states and the wall time of one batched
integration, per backend, plus the speedup.
"""

import argparse
import time

import numpy as np

from umbilic_lab import kernels
from umbilic_lab.catalog import CATALOG
from umbilic_lab.integrators import PSEUDO_GEODESIC, integrate_batch


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(batch, rng):
    cases = {}
    for name in ("sphere3", "ellipsoid-1-1-2", "veronese-in-S4"):
        imm = CATALOG[name].immersion
        U = np.array(CATALOG[name].sample_points(rng, batch))
        x, E, D2 = imm.derivatives(U)
        nu = imm.ambient.unit_normal(x) if imm.ambient.is_levelset else np.zeros_like(x)
        T = rng.normal(size=(batch, imm.dim))
        Y = rng.normal(size=(batch, imm.dim))
        coef = np.ones(batch)
        lev = imm.ambient.is_levelset
        cases[f"curve_rhs[{name}]"] = lambda E=E, D2=D2, nu=nu, T=T, Y=Y, c=coef, lev=lev: (
            kernels.curve_rhs(E, D2, nu, T, Y, c, kernels.MODE_NORM, lev))
        cases[f"metric_terms[{name}]"] = lambda E=E, D2=D2: kernels.metric_terms(E, D2)
        cases[f"renormalize[{name}]"] = lambda E=E, T=T, Y=Y: kernels.renormalize(E, T, Y)
        cases[f"jet[{name}]"] = lambda imm=imm, U=U: imm.derivatives(U)
    return cases


def integration(entry, seeds, steps):
    def run():
        integrate_batch(entry.immersion, PSEUDO_GEODESIC, seeds, (0.0, steps * 1e-3), 1e-3, c=1.0)
    return run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--steps", type=int, default=500)
    args = ap.parse_args(argv)

    rows = {}
    for backend in ("numba", "numpy"):
        with kernels.use_backend(backend):
            rng = np.random.default_rng(0)
            for label, fn in kernel_cases(args.batch, rng).items():
                rows.setdefault(label, {})[backend] = best_of(fn, args.repeat)
            for name in ("sphere2", "veronese-in-S4"):
                e = CATALOG[name]
                seeds = e.sample_seeds(np.random.default_rng(1), 16)
                label = f"integrate 16 curves x {args.steps} steps [{name}]"
                rows.setdefault(label, {})[backend] = best_of(integration(e, seeds, args.steps), 3)

    width = max(len(k) for k in rows)
    print(f"{'case':<{width}}  {'numba [ms]':>11}  {'numpy [ms]':>11}  {'speedup':>8}")
    for label, t in rows.items():
        print(f"{label:<{width}}  {1e3 * t['numba']:11.4f}  {1e3 * t['numpy']:11.4f}  {t['numpy'] / t['numba']:8.2f}")


if __name__ == "__main__":
    main()
