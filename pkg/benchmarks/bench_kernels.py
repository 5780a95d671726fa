"""Compare the numba and numpy backends on the package hot loops.

Backend choice happens at import time, so each backend runs in its own
subprocess (QNNSIM_NO_NUMBA selects the fallback) and reports timings as
JSON on stdout.  The parent prints a side-by-side table.  Numba JIT
compilation happens during warmup and is excluded from the timings.

Usage: python3 benchmarks/bench_kernels.py [--qubits 3] [--steps 251]
       [--repeats 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def measure(n_qubits: int, n_steps: int, repeats: int) -> dict:
    from qnnsim.dynamics import ParameterSchedule, TimeGrid, propagate
    from qnnsim.kernels import backend_name
    from qnnsim.learning import gradient
    from qnnsim.noise import total_noise
    from qnnsim.qcore import outer_product
    from qnnsim.witness import ghz_state, training_set

    grid = TimeGrid(float(n_steps), n_steps)
    schedule = ParameterSchedule.constant(grid, 0.002, 1e-4, 2e-4)
    rho0 = outer_product(ghz_state(n_qubits))
    noise = total_noise(0.027, seed=0)
    pairs = training_set(n_qubits)

    def best(func):
        func()  # warmup; first numba call compiles
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            func()
            times.append(time.perf_counter() - t0)
        return min(times)

    return {
        "backend": backend_name(),
        "propagate": best(lambda: propagate(rho0, schedule, n_qubits)),
        "propagate_noisy": best(
            lambda: propagate(rho0, schedule, n_qubits, noise=noise, run_id=0)),
        "gradient": best(lambda: gradient(schedule, pairs, n_qubits)),
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--qubits", type=int, default=3)
    parser.add_argument("--steps", type=int, default=251)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--measure", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.measure:
        print(json.dumps(measure(args.qubits, args.steps, args.repeats)))
        return 0

    results = {}
    for backend, no_numba in (("numba", ""), ("numpy", "1")):
        env = dict(os.environ, QNNSIM_NO_NUMBA=no_numba)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--measure",
             "--qubits", str(args.qubits), "--steps", str(args.steps),
             "--repeats", str(args.repeats)],
            capture_output=True, text=True, env=env)
        if proc.returncode != 0:
            print(proc.stderr, file=sys.stderr)
            return proc.returncode
        out = json.loads(proc.stdout.splitlines()[-1])
        if out["backend"] != backend:
            print(f"note: requested {backend}, measured {out['backend']} "
                  "(numba unavailable?)", file=sys.stderr)
        results[backend] = out

    print(f"{args.qubits} qubits, {args.steps} steps, best of {args.repeats}")
    print(f"{'kernel':<18} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for key in ("propagate", "propagate_noisy", "gradient"):
        tn, tp = results["numba"][key], results["numpy"][key]
        print(f"{key:<18} {tn * 1e3:>8.2f}ms {tp * 1e3:>8.2f}ms {tp / tn:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
