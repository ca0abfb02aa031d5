"""Time the numba and numpy backends of the hot kernels.

    python3 benchmarks/bench_kernels.py --repeat 5
"""
import argparse
import time

import numpy as np

from hpzpair import _accel
from hpzpair.coefficients import PhysicalParams
from hpzpair.gaussian import epr_initial, spectra_batch
from hpzpair.oracle import integrate_trajectory
from hpzpair.propagator import MarkovPropagator
from hpzpair.special import digamma


def _best(fn, repeat):
    fn()  # warm-up / compile
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--n-digamma", type=int, default=200_000)
    ap.add_argument("--n-states", type=int, default=20_000)
    ap.add_argument("--t-end", type=float, default=5.0, help="RK4 horizon")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(1)
    z = rng.uniform(-30, 30, args.n_digamma) + 1j * rng.uniform(-30, 30, args.n_digamma)
    prop = MarkovPropagator.from_params(PhysicalParams(omega_c=40, gamma=1 / 128, temperature=1, kappa=5))
    s0 = epr_initial(1.2, 1.0)
    sig = prop.evolve_many(s0, np.linspace(0, 100, args.n_states))

    cases = {
        f"digamma x{args.n_digamma}": lambda: digamma(z),
        f"spectra_batch x{args.n_states}": lambda: spectra_batch(sig),
        f"rk4 t_end={args.t_end:g} (loop vs map)": lambda: integrate_trajectory(prop.drift, prop.R, s0, args.t_end),
    }
    print(f"{'kernel':<36}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, fn in cases.items():
        times = {}
        for b in ("numba", "numpy"):
            _accel.set_backend(b)
            times[b] = _best(fn, args.repeat)
        print(f"{name:<36}{times['numba']:>12.4f}{times['numpy']:>12.4f}{times['numpy'] / times['numba']:>10.1f}")


if __name__ == "__main__":
    main()
