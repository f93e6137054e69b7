"""Compare the compiled and numpy stepping kernels on the same ensemble.

    python3 benchmarks/bench_kernel.py --trajectories 32 --periods 200
"""

import argparse
import time

import numpy as np

from levicool.dynamics import DofSystem, Ensemble, FeedbackConfig, IntegratorConfig, MeasurementModel, Thermal
from levicool.dynamics import _backend
from levicool.material import Ellipsoid
from levicool.optics import Beam
from levicool.rates import characterize


def bench(backend, system, fb, mm, trajectories, steps, repeats):
    best = np.inf
    for _ in range(repeats):
        integ = IntegratorConfig(trajectories=trajectories, master_seed=1, backend=backend, workers=1)
        ens = Ensemble(system, fb, mm, integ, Thermal(temperature=1e-4))
        t0 = time.perf_counter()
        ens.advance(steps)
        best = min(best, time.perf_counter() - t0)
    return best, ens.q.copy()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trajectories", type=int, default=32)
    ap.add_argument("--periods", type=int, default=200, help="periods of the fastest DOF")
    ap.add_argument("--N", type=float, default=2.0, help="measurement noise multiple")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    char = characterize(Ellipsoid.from_nm(48, 53), Beam(1064e-9, 0.07, 0.9))
    fb = FeedbackConfig(eta=(1e12,) * 3, zeta=(1e11,) * 2)
    mm = MeasurementModel(args.N)
    cases = {
        "x only": DofSystem.from_characterization(char).subset(("x",)),
        "5 DOF": DofSystem.from_characterization(char),
    }
    print(f"backends available: {', '.join(_backend.available())}")
    print(f"{'case':>8} {'backend':>9} {'seconds':>9} {'ns/traj-step':>13} {'speedup':>8}")
    for name, system in cases.items():
        steps = args.periods * 100
        results = {}
        for backend in _backend.available()[::-1]:
            results[backend] = bench(backend, system, fb, mm, args.trajectories, steps, args.repeats)
        base = results["python"][0]
        for backend, (sec, _) in results.items():
            ns = sec / (steps * args.trajectories) * 1e9
            print(f"{name:>8} {backend:>9} {sec:9.3f} {ns:13.1f} {base / sec:8.1f}x")
        if "compiled" in results:
            same = np.array_equal(results["compiled"][1], results["python"][1])
            print(f"{'':>8} identical final states: {same}")


if __name__ == "__main__":
    main()
