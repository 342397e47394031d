"""Wall-clock comparison of the numba kernels against the pure-numpy fallback.

Each configuration runs in a fresh interpreter because ``ISL_DISABLE_NUMBA``
is read at import time. Usage: ``python benchmarks/bench_kernels.py [--repeat K]``.
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, time
import numpy as np
from isl import _jit, schlesinger as S
from isl.fuchsian import monodromy, random_family

def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best

fam = random_family(2, np.random.default_rng(0), centered=True)
st = S.SchlesingerState.from_family(fam)
path = S.DeformationPath(st.moving, ([0.3, -0.2j],))
t0 = time.perf_counter()
monodromy(fam, tol=1e-10)
S.integrate_flow(st, path, 1e-10)
warm = time.perf_counter() - t0
repeat = {repeat}
print(json.dumps({{
    "numba": _jit.NUMBA_ENABLED,
    "first_call": warm,
    "monodromy": timed(lambda: monodromy(fam, tol=1e-10), repeat),
    "flow": timed(lambda: S.integrate_flow(st, path, 1e-10), repeat),
}}))
"""


def run(disable: bool, repeat: int) -> dict:
    env = {**os.environ, "ISL_DISABLE_NUMBA": "1" if disable else "0"}
    out = subprocess.run(
        [sys.executable, "-c", WORKLOAD.format(repeat=repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    print(f"{'task':<12}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for key in ("first_call", "monodromy", "flow"):
        print(f"{key:<12}{fast[key]:>12.4f}{slow[key]:>12.4f}{slow[key] / fast[key]:>10.1f}")


if __name__ == "__main__":
    main()
