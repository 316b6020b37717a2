"""Compare the compiled and pure-numpy modal summation kernels.

The package selects the implementation at import time from the
ROOMFIELD_NO_NUMBA environment variable, so each path runs in a fresh
subprocess. Usage: python3 benchmarks/bench_accel.py [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json
import time

import numpy as np

from roomfield import GridSpec, Room, build_frequency_set, simulate_field
from roomfield._accel import USE_NUMBA

room = Room(4.14, 7.80, 2.78, t60=0.80)
spec = GridSpec(8, 8, up_x=4, up_y=4, z_o=1.0)
freqs = build_frequency_set(30.0, 300.0, 12)

# warm-up triggers compilation so it is excluded from the timing
simulate_field(room, (0.3, 0.4, 0.0), spec, freqs)

times = []
for _ in range(REPEATS):
    start = time.perf_counter()
    tensor = simulate_field(room, (0.3, 0.4, 0.0), spec, freqs)
    times.append(time.perf_counter() - start)

print(json.dumps({
    "numba": bool(USE_NUMBA),
    "best_s": min(times),
    "mean_s": sum(times) / len(times),
    "checksum": float(np.abs(tensor.values).sum()),
}))
"""


def run(no_numba, repeats):
    env = dict(os.environ)
    if no_numba:
        env["ROOMFIELD_NO_NUMBA"] = "1"
    else:
        env.pop("ROOMFIELD_NO_NUMBA", None)
    code = WORKLOAD.replace("REPEATS", str(repeats))
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    numba = run(False, args.repeats)
    numpy_only = run(True, args.repeats)

    if abs(numba["checksum"] - numpy_only["checksum"]) > 1e-6 * abs(
            numpy_only["checksum"]):
        raise SystemExit("kernel outputs disagree between paths")

    print(f"{'path':<12} {'best':>10} {'mean':>10}")
    for label, result in (("numba", numba), ("numpy", numpy_only)):
        print(f"{label:<12} {result['best_s'] * 1e3:>8.1f}ms "
              f"{result['mean_s'] * 1e3:>8.1f}ms")
    speedup = numpy_only["best_s"] / numba["best_s"]
    print(f"speedup: {speedup:.2f}x "
          f"(40 frequencies, 1024 grid points, 750 modes)")


if __name__ == "__main__":
    main()
