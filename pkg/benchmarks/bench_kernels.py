"""Numba kernels against their numpy twins.

Two parts:

* in-process: each kernel pair on the structure tables of ``heisenberg(N)``
  and on random integer matrices, with a check that both return the same;
* end to end: ``check_axioms(heisenberg(N))`` in two fresh interpreters, one
  with ``NCLERAY_DISABLE_JIT=1``.

    python3 benchmarks/bench_kernels.py --window 3 --repeat 3
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from ncleray import kernels, models
from ncleray._backend import ENV_FLAG


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def _same(x, y):
    if isinstance(x, tuple) and len(x) == 4 and isinstance(x[0], (bool, np.bool_)):
        # rref: (ok, rank, pivots, rows); only the leading rank rows are defined
        ok, rank = bool(x[0]), int(x[1])
        return (ok == bool(y[0]) and rank == int(y[1]) and np.array_equal(x[2][:rank], y[2][:rank])
                and np.array_equal(x[3][:rank], y[3][:rank]))
    if isinstance(x, tuple):
        return all(_same(a, b) for a, b in zip(x, y))
    return np.array_equal(np.asarray(x), np.asarray(y))


def kernel_cases(N, seed):
    A = models.heisenberg(N)
    tabs = A.integer_tables
    sign = np.array([(-1) ** x for x in A.degrees], dtype=np.int64)
    rng = np.random.default_rng(seed)
    # sparse like the wedge matrices; dense random integer matrices overflow int64 within a few pivots
    m = ((rng.random((300, 300)) < 0.01) * rng.integers(1, 3, size=(300, 300))).astype(np.int64)
    return [
        ("rref_int 300x300", kernels.rref_int_jit, kernels.rref_int_np, (m,)),
        (f"leibniz_sweep N={N}", kernels.leibniz_sweep_jit, kernels.leibniz_sweep_np,
         (A.prod, tabs["W"], tabs["d"], sign)),
        (f"sigma_sweep N={N}", kernels.sigma_sweep_jit, kernels.sigma_sweep_np,
         (A.prod, tabs["sigma"], tabs["sigma_den"])),
        (f"assoc_sweep N={N}", kernels.assoc_sweep_jit, kernels.assoc_sweep_np, (A.prod,)),
    ]


def in_process(N, repeat, seed):
    rows = []
    for name, jit, ref, args in kernel_cases(N, seed):
        jit(*(a.copy() if isinstance(a, np.ndarray) else a for a in args))  # compile
        tj, oj = best_of(lambda: jit(*(a.copy() if isinstance(a, np.ndarray) else a for a in args)), repeat)
        tn, on = best_of(lambda: ref(*(a.copy() if isinstance(a, np.ndarray) else a for a in args)), repeat)
        rows.append((name, tj, tn, _same(oj, on)))
    return rows


SNIPPET = (
    "import time; t0 = time.perf_counter();"
    "from ncleray import models, dgalg, _backend;"
    "A = models.heisenberg({N}); r = dgalg.check_axioms(A);"
    "print(_backend.backend_name(), r.ok, time.perf_counter() - t0)"
)


def end_to_end(N):
    out = {}
    for jit in (True, False):
        env = dict(os.environ)
        env.pop(ENV_FLAG, None)
        if not jit:
            env[ENV_FLAG] = "1"
        res = subprocess.run([sys.executable, "-c", SNIPPET.format(N=N)], env=env,
                             capture_output=True, text=True, check=True)
        name, ok, secs = res.stdout.split()
        out[name] = (ok == "True", float(secs))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--window", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args(argv)

    print(f"{'kernel':<24}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}  agree")
    for name, tj, tn, same in in_process(args.window, args.repeat, args.seed):
        print(f"{name:<24}{tj:>12.5f}{tn:>12.5f}{tn / max(tj, 1e-9):>10.1f}  {same}")
    if not args.skip_e2e:
        e2e = end_to_end(args.window)
        print()
        print(f"check_axioms(heisenberg({args.window})) in a fresh interpreter, import and compile included")
        for name in ("numba", "numpy"):
            ok, secs = e2e[name]
            print(f"  {name:<6} {secs:8.2f} s  axioms ok: {ok}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
