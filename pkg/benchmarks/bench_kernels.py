"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sites 8 12 16 20] [--repeat 5]

Both backends are imported directly, so the result does not depend on
``KZBENCH_BACKEND``.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from kzbench._kernels import _pykernels
from kzbench.lattice import assign_couplings, periodic_chain
from kzbench.model import build_trotter_plan
from kzbench.noise import default_sherbrooke_model, layer_rates
from kzbench.statevec import compile_plan, init_plus

try:
    from kzbench._kernels import _ckernels
except ImportError:
    _ckernels = None


def clean_step(mod, cp, psi, n):
    mod.rx_all(psi, n, cp.x_angles[0])
    for c in range(cp.patterns.shape[0]):
        mod.apply_phase(psi, cp.patterns[c], cp.tables[0, c])


def noisy_trajectory(mod, cp, rates, n, seed):
    psi = init_plus(n).amplitudes
    mod.trajectory(
        psi, n, cp.x_angles, cp.tables, cp.patterns, cp.edge_i, cp.edge_j, cp.layer_ptr,
        rates.p1, rates.p2, rates.damp_x, rates.deph_x, rates.damp_zz, rates.deph_zz,
        np.random.Generator(np.random.Philox(seed)),
    )


def bench(sites, repeat):
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    rates = layer_rates(default_sherbrooke_model())
    print(f"{'kernel':<18}{'N':>4}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for n in sites:
        g = periodic_chain(n)
        cp = compile_plan(build_trotter_plan(g, assign_couplings(g), dt=0.5, n_steps=10))
        cases = {
            "trotter step": lambda m: clean_step(m, cp, init_plus(n).amplitudes, n),
            "zz expectations": lambda m: m.zz_expectations(init_plus(n).amplitudes, n, cp.edge_i, cp.edge_j),
        }
        if n <= 16:
            cases["noisy 10 steps"] = lambda m: noisy_trajectory(m, cp, rates, n, 1)
        for name, fn in cases.items():
            times = {}
            for b, mod in backends.items():
                number = max(1, int(2e5 / (1 << n)))
                times[b] = min(timeit.repeat(lambda: fn(mod), number=number, repeat=repeat)) / number
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            cols = "".join(f"{times[b] * 1e3:>11.3f} ms" for b in backends)
            print(f"{name:<18}{n:>4}{cols}{speed:>9.1f}x")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sites", type=int, nargs="+", default=[8, 12, 16, 20])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    if _ckernels is None:
        print("compiled kernels are not built; timing the fallback only")
    bench(args.sites, args.repeat)


if __name__ == "__main__":
    main()
