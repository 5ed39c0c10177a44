import pytest

from ncleray import exactlin as el
from ncleray import leray, models, specseq
from ncleray.complexes import split_rows, validate_filtration
from ncleray.dgalg import trivial_module
from ncleray.formats import complex_from_json, filtered_sum_to_json


@pytest.fixture(scope="module")
def fd1():
    return models.heisenberg_fibration(1)


@pytest.fixture(scope="module")
def fd2():
    return models.heisenberg_fibration(2)


def test_identity_fibration():
    fd = models.identity_fibration(2)
    assert leray.hypotheses(fd).ok
    assert leray.fibration_check(fd).ok
    assert leray.n_ranks(fd) == {(0, 0): 1, (0, 1): 0, (1, 0): 1}
    cc = leray.cross_check(fd)
    assert cc.ok
    assert cc.e2[(0, 0)] == cc.e2[(1, 0)] == 1
    assert tuple(cc.totals) == (1, 1)


def test_n_table(fd2):
    ranks = leray.n_ranks(fd2)
    expect = {(0, 0): 1, (1, 0): 1, (0, 1): 2, (0, 2): 1, (0, 3): 0, (1, 1): 2, (1, 2): 1}
    for pq, x in expect.items():
        assert ranks[pq] == x, pq
    for m in range(2, 4):
        assert ranks[(m, 0)] == 0


def test_u_inclusion_is_a_fibration():
    A = models.heisenberg(2)
    fd = leray.FibrationData(models.u_inclusion(2, total=A), trivial_module(A))
    assert leray.hypotheses(fd).ok
    assert leray.fibration_check(fd).ok


def test_collapse_is_not_a_fibration():
    A = models.heisenberg(2)
    fd = leray.FibrationData(models.collapse(2, total=A), trivial_module(A))
    assert leray.hypotheses(fd).ok
    rep = leray.fibration_check(fd)
    assert not rep.ok
    cells = {tuple(f["cell"]) for f in rep.failures}
    assert (1, 1) in cells
    assert rep.cells[(0, 1)] and not rep.cells[(1, 1)]
    w = next(f for f in rep.failures if tuple(f["cell"]) == (1, 1))
    assert w["source_dim"] == 3 and w["target_dim"] == 0


def test_leray_filtration_is_valid(fd1):
    fs = leray.build_leray_filtration(fd1)
    for b in fs.blocks:
        assert validate_filtration(b.complex, b.filtration).ok


def test_hat_h_is_free(fd2):
    for q, r in enumerate((1, 2, 1, 0)):
        hh = leray.hat_h(fd2, q)
        assert hh.certificate is not None
        assert hh.rank == r
        assert hh.total_dim == 5 * r  # one copy per base sector


def test_nabla_q_serre_is_zero(fd2):
    for q in range(3):
        nq = leray.nabla_q(fd2, q)
        assert nq.report.ok  # representative independence and Leibniz over B
        assert el.is_zero(nq.matrix)
        assert leray.nabla_q_curvature(fd2, q).ok


def test_nabla_q_twisted():
    fd = models.heisenberg_fibration(2, lam=1)
    for q in range(3):
        nq = leray.nabla_q(fd, q)
        assert nq.report.ok
        assert leray.nabla_q_curvature(fd, q).ok
    assert leray.nabla_q(fd, 0).matrix.tolist() == [[1]]


def test_cross_check_small(fd2):
    cc = leray.cross_check(fd2)
    assert cc.ok, cc.failures
    assert tuple(cc.totals) == (1, 3, 3, 1)
    assert cc.e2 == cc.limit


def test_serre_mode_is_lambda_zero(fd2):
    s = leray.serre(fd2.iota)
    assert s.module.forms == fd2.module.forms
    assert leray.cross_check(s).e2 == leray.cross_check(fd2).e2


def test_export_round_trip(fd1):
    obj = filtered_sum_to_json(leray.build_leray_filtration(fd1))
    c, rows = complex_from_json(obj, raw=True)
    sr = specseq.run(split_rows(c, rows))
    run = leray.engine_run(fd1)
    for r in (1, 2, 3):
        assert sr.dims(r) == run.dims(r)


def test_window_mismatch_loses_certificate():
    # base window smaller than the total's: translates do not cover the orbits
    A = models.heisenberg(2)
    fd = leray.FibrationData(models.iota(1, 2, total=A), trivial_module(A))
    assert leray.fibration_check(fd).ok
    assert leray.hat_h(fd, 0).certificate is None
    assert leray.second_page(fd) is None
