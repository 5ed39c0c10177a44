"""Acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary
(and directly, when run as ``python3 tests/test_acceptance.py``).
"""

import itertools
import json
import os
import random
import subprocess
import sys
import time
from fractions import Fraction


sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from conftest import ACCEPTANCE  # noqa: E402
from ncleray import leray, models, specseq  # noqa: E402
from ncleray.dgalg import curvature, sheaf_cohomology  # noqa: E402
from randcx import random_filtered_complex  # noqa: E402
from randconn import random_connection, random_flat_connection  # noqa: E402

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SCEN = os.path.join(ROOT, "scenarios")


def record(k, ok, text):
    ACCEPTANCE[k] = (bool(ok), text)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {text}")
    return ok


# ---------------------------------------------------------------------------
# 1. engine laws
# ---------------------------------------------------------------------------


def check_engine_laws(count=200):
    t0 = time.perf_counter()
    bad = []
    for seed in range(count):
        fc = random_filtered_complex(random.Random(seed), max_dim=8, max_degree=5, max_depth=4)
        sr = specseq.run(fc, r_max=6)
        pages = sr.block_pages[0]
        if not all(pg.d_squared_zero() for pg in pages):
            bad.append((seed, "d_r d_r"))
        for r in range(1, 6):
            if specseq.turn_page(pages[r - 1]).dims != pages[r].dims:
                bad.append((seed, f"turn_page r={r}"))
        if specseq.e1_via_quotients(fc) != pages[0].dims:
            bad.append((seed, "E_1 route"))
        if not specseq.convergence_check(sr).ok:
            bad.append((seed, "E_inf"))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    return ok, f"{count} random filtered complexes, {len(bad)} law violations, {dt:.1f} s (limit 60 s)"


def test_criterion_1_engine_laws():
    ok, text = check_engine_laws()
    assert record(1, ok, text), text


# ---------------------------------------------------------------------------
# 2. ∇^[n+1] ∇^[n] = id ∧ R
# ---------------------------------------------------------------------------


def check_curvature_identity(count=24):
    A = models.heisenberg(2)
    rng = random.Random(2024)
    flat = curved = 0
    failures = []
    least = None
    for i in range(count):
        m = random_flat_connection(A, rng) if i % 2 else random_connection(A, rng)
        cr = curvature(m)
        if cr.is_flat:
            flat += 1
        else:
            curved += 1
        if not cr.squares_ok or cr.checked_degrees != (0, 1, 2):
            failures.append(i)
        cmin = min(cr.compared.values())
        least = cmin if least is None else min(least, cmin)
        if cmin == 0:
            failures.append(i)
    ok = not failures and flat > 0 and curved > 0 and count >= 20
    return ok, (f"{count} connections (rank <= 2) over heisenberg(2): {flat} flat, {curved} curved, "
                f"identity exact for n = 0, 1, 2, at least {least} of {A.S} sectors compared per degree, "
                f"failures {failures}")


def test_criterion_2_curvature_identity():
    ok, text = check_curvature_identity()
    assert record(2, ok, text), text


# ---------------------------------------------------------------------------
# 3. the N table
# ---------------------------------------------------------------------------

N_TABLE = {(0, 0): 1, (1, 0): 1, (0, 1): 2, (0, 2): 1, (0, 3): 0, (1, 1): 2, (1, 2): 1}


def check_n_table():
    t0 = time.perf_counter()
    fd = models.heisenberg_fibration(3)
    ranks = leray.n_ranks(fd)
    table_ok = all(ranks[pq] == x for pq, x in N_TABLE.items())
    high_ok = all(ranks[(m, 0)] == 0 for m in range(2, fd.top + 1))
    fib = leray.fibration_check(fd)
    dt = time.perf_counter() - t0
    got = tuple(ranks[pq] for pq in N_TABLE)
    ok = table_ok and high_ok and fib.ok and all(fib.cells.values()) and dt < 10
    return ok, (f"N ranks {got} for {tuple(N_TABLE)}, N_m0 = 0 for m > 1: {high_ok}, "
                f"fibration at every in-window cell: {fib.ok}, {dt:.1f} s (limit 10 s)")


def test_criterion_3_n_table():
    ok, text = check_n_table()
    assert record(3, ok, text), text


# ---------------------------------------------------------------------------
# 4. Leray with E = A
# ---------------------------------------------------------------------------


def _rows(dims, p_max, q_max):
    return [tuple(dims.get((p, q), 0) for p in range(p_max + 1)) for q in range(q_max + 1)]


def check_leray_e_equals_a():
    t0 = time.perf_counter()
    fd = models.heisenberg_fibration(3)
    ranks = tuple(leray.hat_h(fd, q).rank for q in range(3))
    flat = all(leray.nabla_q_curvature(fd, q).ok for q in range(3))
    cc = leray.cross_check(fd)
    e2 = _rows(cc.e2, 1, 2)
    degenerate = cc.e2 == cc.limit
    totals = leray.anti_diagonal_totals(cc.limit, fd.top)
    sheaf = tuple(sheaf_cohomology(fd.module).dims)
    dt = time.perf_counter() - t0
    ok = (ranks == (1, 2, 1) and flat and cc.ok and e2 == [(1, 1), (2, 2), (1, 1)] and degenerate
          and totals == (1, 3, 3, 1) == sheaf and dt < 30)
    return ok, (f"Ĥ ranks {ranks}, ∇_q flat {flat}, E_2 rows {e2}, E_2 = E_inf {degenerate}, "
                f"totals {totals}, H*(A;A,d) {sheaf}, {dt:.1f} s (limit 30 s)")


def test_criterion_4_leray_e_equals_a():
    ok, text = check_leray_e_equals_a()
    assert record(4, ok, text), text


# ---------------------------------------------------------------------------
# 5. twisted family against a per-sector Koszul oracle
# ---------------------------------------------------------------------------


def _rank(rows):
    rows = [list(r) for r in rows]
    rank, col = 0, 0
    ncols = len(rows[0]) if rows else 0
    while rank < len(rows) and col < ncols:
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col] / rows[rank][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
        col += 1
    return rank


def koszul_dims(beta):
    """Cohomology of ``β ∧ -`` on the exterior algebra of a 3-dimensional space."""
    subsets = {n: [s for s in itertools.combinations(range(3), n)] for n in range(4)}
    mats = {}
    for n in range(3):
        m = []
        for s in subsets[n]:
            row = [Fraction(0)] * len(subsets[n + 1])
            for i in range(3):
                if i in s or beta[i] == 0:
                    continue
                t = tuple(sorted(s + (i,)))
                sign = (-1) ** sum(1 for x in s if x < i)
                row[subsets[n + 1].index(t)] += sign * beta[i]
            m.append(row)
        mats[n] = m
    ranks = {n: _rank(mats[n]) for n in range(3)}
    out = []
    for n in range(4):
        dim = len(subsets[n])
        out.append(dim - (ranks[n] if n < 3 else 0) - (ranks[n - 1] if n > 0 else 0))
    return tuple(out)


def koszul_oracle(lam, N):
    by_sector = {}
    for g in itertools.product(range(-N, N + 1), repeat=3):
        n, m, k = g
        beta = (Fraction(n), Fraction(m), Fraction(k) + Fraction(n * m, 2) + Fraction(lam))
        dims = koszul_dims(beta)
        if any(dims):
            by_sector[g] = dims
    return by_sector


def check_twisted(N=3):
    lines = []
    ok = True
    for lam, expect in ((Fraction(1), {(0, 0, -1): (1, 3, 3, 1)}), (Fraction(1, 2), {})):
        oracle = koszul_oracle(lam, N)
        fd = models.heisenberg_fibration(N, lam)
        sheaf = sheaf_cohomology(fd.module)
        cc = leray.cross_check(fd)
        totals = leray.anti_diagonal_totals(cc.limit, fd.top)
        want_totals = tuple(sum(d[n] for d in expect.values()) for n in range(4))
        good = (oracle == expect and dict(sheaf.by_sector) == oracle and cc.ok
                and totals == tuple(sheaf.dims) == want_totals)
        ok = ok and good
        lines.append(f"λ={lam}: totals {totals}, sectors {sorted(sheaf.by_sector) or 'none'}, "
                     f"oracle agrees {dict(sheaf.by_sector) == oracle}")
    return ok, "; ".join(lines) + f" (oracle exhaustive over {(2 * N + 1) ** 3} sectors)"


def test_criterion_5_twisted_family():
    ok, text = check_twisted()
    assert record(5, ok, text), text


# ---------------------------------------------------------------------------
# 6. oracle gate
# ---------------------------------------------------------------------------


def check_oracle_gate():
    models.heisenberg(1)
    refused = total = 0
    for key in sorted(models.default_relations()):
        for pos in range(3):
            rel = models.default_relations()
            c = list(rel[key])
            c[pos] = c[pos] + Fraction(1, 3)
            rel[key] = c
            total += 1
            try:
                models.heisenberg(1, relations=rel)
            except models.OracleMismatch:
                refused += 1
    ok = refused == total
    return ok, f"default relations accepted; {refused} of {total} single-coefficient mutations refused"


def test_criterion_6_oracle_gate():
    ok, text = check_oracle_gate()
    assert record(6, ok, text), text


# ---------------------------------------------------------------------------
# 7 and 8: command line
# ---------------------------------------------------------------------------


def cli(*argv, seed="0"):
    env = dict(os.environ, PYTHONHASHSEED=seed)
    res = subprocess.run([sys.executable, "-m", "ncleray.cli", *argv], cwd=ROOT, env=env,
                         capture_output=True)
    return res.returncode, res.stdout, res.stderr


def check_serre():
    same = []
    for fmt in ("md", "json"):
        a = cli("leray", "heisenberg", "--serre", "--format", fmt)
        b = cli("leray", "heisenberg", "--lambda", "0", "--format", fmt)
        same.append(a[0] == b[0] == 0 and a[1] == b[1] and len(a[1]) > 0)
    return all(same), f"leray --serre vs --lambda 0 byte-identical: md {same[0]}, json {same[1]}"


def test_criterion_7_serre():
    ok, text = check_serre()
    assert record(7, ok, text), text


def s(name):
    return os.path.join("scenarios", name)


SCENARIOS = [
    (("validate", s("trivial_filtered.json")), 0),
    (("validate", s("no_filtration.json")), 0),
    (("validate", s("two_step.json")), 0),
    (("validate", s("d_squared_nonzero.json")), 1),
    (("validate", s("bad_rational.json")), 2),
    (("validate", s("heisenberg_N1.json")), 0),
    (("validate", s("u_inclusion_N1.json")), 0),
    (("validate", s("collapse_N1.json")), 0),
    (("pages", s("trivial_filtered.json")), 0),
    (("pages", s("two_step.json"), "--rmax", "1"), 0),
    (("pages", s("two_step.json"), "--format", "json"), 0),
    (("pages", s("no_filtration.json")), 2),
    (("pages", s("bad_rational.json")), 2),
    (("leray", s("heisenberg_N1.json")), 0),
    (("leray", s("u_inclusion_N1.json")), 0),
    (("leray", s("collapse_N1.json")), 1),
    (("leray", "identity"), 0),
    (("leray", "heisenberg", "--lambda", "1/0"), 2),
    (("leray", "heisenberg", "--format", "json"), 0),
    (("leray", "heisenberg", "--lambda", "1"), 0),
    (("leray", "heisenberg", "--lambda", "1/2", "--format", "json"), 0),
]


def _e2(out):
    rep = json.loads(out)
    return next(x for x in rep["sections"] if x["title"] == "pages")["grids"]["E_2"]


def check_cli():
    problems = []
    outputs = {}
    for argv, want in SCENARIOS:
        a = cli(*argv, seed="1")
        b = cli(*argv, seed="2")
        if a[0] != want:
            problems.append(f"{' '.join(argv)}: exit {a[0]} != {want}")
        if a != b:
            problems.append(f"{' '.join(argv)}: output differs between runs")
        outputs[argv] = a
    heis = outputs[("leray", "heisenberg", "--format", "json")][1]
    half = outputs[("leray", "heisenberg", "--lambda", "1/2", "--format", "json")][1]
    if _e2(heis) != [[1, 1], [2, 2], [1, 1]]:
        problems.append("heisenberg E_2 grid")
    if any(any(row) for row in _e2(half)):
        problems.append("λ=1/2 grid not zero")
    if b"witness" not in outputs[("validate", s("d_squared_nonzero.json"))][1]:
        problems.append("d² failure without witness")
    if b"cell: (1, 1)" not in outputs[("leray", s("collapse_N1.json"))][1]:
        problems.append("non-fibration without witness")
    return not problems, (f"{len(SCENARIOS)} scenarios run twice with different hash seeds; "
                          f"problems: {problems or 'none'}")


def test_criterion_8_cli():
    ok, text = check_cli()
    assert record(8, ok, text), text


CHECKS = [check_engine_laws, check_curvature_identity, check_n_table, check_leray_e_equals_a, check_twisted,
          check_oracle_gate, check_serre, check_cli]

if __name__ == "__main__":
    results = [record(k, *fn()) for k, fn in enumerate(CHECKS, start=1)]
    sys.exit(0 if all(results) else 1)
