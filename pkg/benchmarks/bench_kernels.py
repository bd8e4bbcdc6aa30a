"""Benchmark the compiled interference kernel against the NumPy fallback.

Builds representative contention workloads (sources grouped by code, victims
reading co-group interference) at several network sizes and times both
backends on identical inputs.

Run: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from d2dsched.kernels import backends, pack_groups
from d2dsched.model import reference_params, rbc
from d2dsched.simulate import DEFAULT_REGION, build_realization


def workload(mu, delta, seed):
    """Victim/source arrays of one RA contention snapshot."""
    params = reference_params(mu)
    rng = np.random.default_rng(seed)
    real = build_realization(params, rbc(delta), DEFAULT_REGION, rng)
    ch_xy = real.ch_positions
    n_ch = ch_xy.shape[0]
    g_own = rng.exponential(size=n_ch)
    g_out = rng.exponential(size=n_ch)
    order, starts, inv = pack_groups(real.ra_codes, params.n_z)
    obs = np.nonzero(np.linalg.norm(ch_xy, axis=1)
                     <= DEFAULT_REGION.observation_radius)[0]
    v_bs = real.serving_bs[obs]
    v_pos = real.bs_positions[v_bs]
    sxy = ch_xy[order]
    args = (
        np.ascontiguousarray(v_pos[:, 0]), np.ascontiguousarray(v_pos[:, 1]),
        np.ascontiguousarray(real.ra_codes[obs], dtype=np.intp),
        np.ascontiguousarray(v_bs, dtype=np.intp),
        np.ascontiguousarray(inv[obs], dtype=np.intp),
        np.ascontiguousarray(sxy[:, 0]), np.ascontiguousarray(sxy[:, 1]),
        np.ascontiguousarray((real.tx_power_ra * g_own)[order]),
        np.ascontiguousarray((real.tx_power_ra * g_out)[order]),
        np.ascontiguousarray(real.serving_bs[order], dtype=np.intp),
        starts, params.eta)
    return args, obs.size, n_ch


def time_fn(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    impls = backends()
    print(f"backends: {', '.join(impls)}")
    header = f"{'mu':>6} {'delta':>6} {'victims':>8} {'sources':>8}"
    for name in impls:
        header += f" {name + ' [ms]':>14}"
    if len(impls) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for mu, delta in ((160.0, 0.35), (640.0, 0.1), (640.0, 0.35),
                      (640.0, 1.0)):
        args, n_v, n_s = workload(mu, delta, seed=7)
        times = {}
        for name, fn in impls.items():
            times[name] = time_fn(fn, args, repeats=5)
        ref = {name: fn(*args) for name, fn in impls.items()}
        names = list(impls)
        if len(names) == 2:
            np.testing.assert_allclose(ref[names[0]], ref[names[1]],
                                       rtol=1e-11)
        row = f"{mu:6.0f} {delta:6.2f} {n_v:8d} {n_s:8d}"
        for name in impls:
            row += f" {1e3 * times[name]:14.3f}"
        if len(names) == 2:
            row += f" {times['python'] / times['cython']:8.2f}x"
        print(row)


if __name__ == "__main__":
    main()
