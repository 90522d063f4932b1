"""Time the numba and numpy kernel backends side by side.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

The first numba call includes compilation (or a cache load); it is reported
separately and excluded from the steady-state timings.
"""

from __future__ import annotations

import argparse
import json
import platform
import time

import numpy as np

from qvsets import _kernels as K
from qvsets.quantum import random_unitary
from qvsets.topology import random_topology


def _hermitian(rng, n):
    u = random_unitary(rng, n)
    return (u * rng.normal(size=n)) @ u.conj().T


def _cases(rng):
    mats = {n: _hermitian(rng, n) for n in (4, 8, 16, 32)}
    sp = random_topology(rng, 8, density=0.08)
    arr, full = sp.open_array(), sp.full
    srt = np.sort(arr)
    yield "jacobi n=4", lambda b: K.jacobi_eigh(mats[4], backend=b)
    yield "jacobi n=8", lambda b: K.jacobi_eigh(mats[8], backend=b)
    yield "jacobi n=16", lambda b: K.jacobi_eigh(mats[16], backend=b)
    yield "jacobi n=32", lambda b: K.jacobi_eigh(mats[32], backend=b)
    yield f"heyting table ({arr.size} opens)", lambda b: K.heyting_table(arr, full, backend=b)
    yield f"adjunction ({arr.size} opens)", lambda b: K.adjunction_violation(arr, full, backend=b)
    yield f"closure ({arr.size} opens)", lambda b: K.closure_violation(srt, backend=b)
    yield "interior x256", lambda b: [K.interior_mask(arr, s, backend=b) for s in range(256)]


def _best(fn, backend, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(backend)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)

    backends = ["numpy"] + (["numba"] if K.numba is not None else [])
    rng = np.random.default_rng(args.seed)
    rows = []
    for name, fn in _cases(rng):
        row = {"kernel": name}
        for b in backends:
            t0 = time.perf_counter()
            fn(b)
            row[f"{b}_first_s"] = time.perf_counter() - t0
            row[f"{b}_s"] = _best(fn, b, args.repeat)
        if "numba_s" in row:
            row["speedup"] = row["numpy_s"] / row["numba_s"]
        rows.append(row)

    print(f"python {platform.python_version()}, numpy {np.__version__}, "
          f"numba {getattr(K.numba, '__version__', 'unavailable')}")
    print(f"{'kernel':32} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'numba 1st ms':>13}")
    for r in rows:
        nb = r.get("numba_s")
        print(f"{r['kernel']:32} {r['numpy_s'] * 1e3:10.3f} "
              + (f"{nb * 1e3:10.3f} {r['speedup']:8.1f} {r['numba_first_s'] * 1e3:13.1f}" if nb else f"{'-':>10}"))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
