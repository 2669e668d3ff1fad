"""Compare the compiled and pure-Python kernel backends.

Times the three hot paths (simulation, log-likelihood with gradient,
bulk compensator evaluation) on one synthetic workload and prints a
small table.  Run as a script:

    python3 benchmarks/bench_backends.py [--events N] [--repeat K]
"""

import argparse
import time

import numpy as np

import lobhawkes as lh
from lobhawkes._backend import _kernels_py
from lobhawkes.estimate import _impact_and_deriv
from lobhawkes.simulate import _UniformBlocks, make_rng

try:
    from lobhawkes._backend import _kernels
except ImportError:
    _kernels = None


def bench(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def make_workload(n_target):
    params = lh.symmetric_params(
        n_assets=1, mu_up=0.4, mu_down=0.3, nu_self=0.25, nu_within=0.15,
        nu_cross=0.0, decay=1.5, impact_exponent=1.0, mark_rate=2.0,
    )
    # Total stationary rate is about 2.33/s for this parameter point.
    horizon = n_target / 2.33
    events = lh.simulate(
        params, lh.SimConfig(horizon_end=horizon, seed=42, max_events=10 * n_target)
    ).events
    return params, events, horizon


def run(backend, params, events, horizon):
    m = params.n_streams
    g, dg = _impact_and_deriv(
        events.streams, events.volumes, params.impact_exponent, params.mark_rate
    )
    args = dict(
        times=np.ascontiguousarray(events.times),
        streams=np.ascontiguousarray(events.streams),
        mu=np.ascontiguousarray(params.mu),
        nu=np.ascontiguousarray(params.branching),
        dec=np.ascontiguousarray(params.decay),
    )
    query = np.linspace(0.0, events.t_end, 512)

    def sim():
        backend.simulate_core(
            args["mu"], args["nu"], args["dec"],
            np.ascontiguousarray(params.impact_exponent),
            np.ascontiguousarray(params.mark_rate),
            np.ascontiguousarray(params.impact_scale),
            0.0, horizon, np.zeros((m, m)), 10 * len(events),
            _UniformBlocks(make_rng(42)), -1, False,
        )

    def loglik():
        backend.log_likelihood_core(
            args["times"], args["streams"], g, dg,
            events.t_start, events.t_end,
            args["mu"], args["nu"], args["dec"], True,
        )

    def compensators():
        backend.compensator_matrix(
            args["times"], args["streams"], g, events.t_start,
            args["mu"], args["nu"], args["dec"], query,
        )

    return {"simulate": sim, "loglik+grad": loglik, "compensator x512": compensators}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=20_000, help="history size")
    ap.add_argument("--repeat", type=int, default=3, help="best-of repetitions")
    opts = ap.parse_args()

    params, events, horizon = make_workload(opts.events)
    print(f"workload: {len(events)} events, 4 streams, horizon {horizon:.0f} s")
    print(f"{'kernel':<18} {'pure (s)':>10} {'compiled (s)':>13} {'speedup':>9}")

    pure = run(_kernels_py, params, events, horizon)
    fast = run(_kernels, params, events, horizon) if _kernels else None
    for name, fn in pure.items():
        tp = bench(fn, opts.repeat)
        if fast is None:
            print(f"{name:<18} {tp:>10.4f} {'- not built -':>13}")
            continue
        tc = bench(fast[name], opts.repeat)
        print(f"{name:<18} {tp:>10.4f} {tc:>13.4f} {tp / tc:>8.1f}x")


if __name__ == "__main__":
    main()
