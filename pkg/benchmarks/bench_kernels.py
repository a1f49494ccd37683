"""Time full SMP runs and single SN updates on the compiled and numpy backends.

    python3 benchmarks/bench_kernels.py [--m 40 --ns 300 --np 64 --iters 6 --repeat 5]
"""
import argparse
import time

import numpy as np

from smpra import kernels
from smpra.model import SystemConfig, generate_instance
from smpra.smp import SmpParams, init_messages, run_smp


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=40)
    ap.add_argument("--ns", type=int, default=300)
    ap.add_argument("--np", type=int, default=64)
    ap.add_argument("--iters", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    cfg = SystemConfig(M=args.m, N_s=args.ns, N_p=args.np, N_c=10, p_a=0.2, snr_db=-10.0, seed=0)
    inst = generate_instance(cfg)
    params = SmpParams(max_iters=args.iters, convergence_eps=1e-300)
    state = init_messages(cfg)
    backends = ["numpy"] + (["cython"] if kernels._ckernels is not None else [])

    print(f"M={args.m} N_s={args.ns} N_p={args.np}, {args.iters} iterations, best of {args.repeat}")
    results = {}
    for name in backends:
        run = best_of(lambda: run_smp(inst, params, backend=name), args.repeat)
        sn = best_of(lambda: kernels.sn_update(inst.H, inst.Y, state.l_vs, inst.sigma_eff_sq,
                                               30.0, name), args.repeat)
        results[name] = run_smp(inst, params, backend=name).output_llr
        print(f"{name:>7}: run_smp {run * 1e3:8.2f} ms   sn_update {sn * 1e3:8.2f} ms")
    if len(results) == 2:
        diff = np.max(np.abs(results["numpy"] - results["cython"]))
        print(f"max |cython - numpy| output LLR: {diff:.2e}")
    else:
        print("compiled kernels not built; only numpy timed")


if __name__ == "__main__":
    main()
