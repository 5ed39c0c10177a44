import random

import numpy as np
import pytest

from ncleray import exactlin as el
from ncleray import models
from ncleray.dgalg import (
    ConnectionModule,
    DGAMorphism,
    NonFlatModule,
    SectorDGA,
    basis_form,
    check_axioms,
    check_module_leibniz,
    check_morphism,
    curvature,
    extend_connection,
    form_d,
    form_wedge,
    format_form,
    identity_morphism,
    sector_complex,
    sheaf_cohomology,
    trivial_module,
)
from ncleray.complexes import cohomology
from randconn import random_connection, random_flat_connection


def _copy(a, **changes):
    fields = dict(sectors=a.sectors, unit=a.unit, prod=a.prod.copy(), frame=a.frame, degrees=a.degrees,
                  wedge_table=a.wedge_table.copy(), commute=a.commute.copy(), d=a.d.copy(), name=a.name)
    fields.update(changes)
    return SectorDGA(**fields)


def test_models_satisfy_axioms(heis1):
    assert check_axioms(heis1).ok
    assert check_axioms(models.circle(2)).ok
    assert check_axioms(models.scalars()).ok


def test_wedge_corruption_has_witness(heis1):
    T = heis1.wedge_table.copy()
    i, j = heis1.frame.index("e^u"), heis1.frame.index("e^v")
    k = heis1.frame.index("e^u∧e^v") if "e^u∧e^v" in heis1.frame else int(np.flatnonzero(T[i, j] != 0)[0])
    T[i, j, k] = T[i, j, k] * 2
    rep = check_axioms(_copy(heis1, wedge_table=T))
    assert not rep.ok
    assert any("witness" in f for f in rep.failures)


def test_differential_corruption_is_caught(heis1):
    d = heis1.d.copy()
    g = heis1.index((1, 0, 0))
    d[g] = d[g] * 2
    assert not check_axioms(_copy(heis1, d=d)).ok


def test_form_arithmetic(heis1):
    a = heis1
    eu, ev = a.frame.index("e^u"), a.frame.index("e^v")
    x = basis_form(a, a.unit, eu)
    y = basis_form(a, a.unit, ev)
    xy, over = form_wedge(a, x, y)
    yx, _ = form_wedge(a, y, x)
    assert not over
    assert all(el.mat_equal(xy[g][None, :], -yx[g][None, :]) for g in xy)
    u = a.index((1, 0, 0))
    du = form_d(a, {u: basis_form(a, u, 0)[u]})
    assert format_form(a, du) == "1*(1, 0, 0)*e^u"
    assert format_form(a, {}) == "0"


def test_circle_cohomology():
    C = models.circle(3)
    h = sheaf_cohomology(trivial_module(C))
    assert h.dims == (1, 1)
    assert list(h.by_sector) == [(0,)]
    assert cohomology(sector_complex(C, C.index((2,)))).dims == (0, 0)


def test_flat_and_curved_examples(heis2):
    a = heis2
    eu, ev = a.frame.index("e^u"), a.frame.index("e^v")
    flat = ConnectionModule(a, 1, ((basis_form(a, a.unit, eu),),))
    cr = curvature(flat)
    assert cr.is_flat and cr.squares_ok
    assert check_module_leibniz(flat).ok
    # mutated: the coefficient of e^v now sits in sector u
    bent = ConnectionModule(a, 1, ((basis_form(a, a.index((1, 0, 0)), ev),),))
    cr = curvature(bent)
    assert not cr.is_flat and cr.squares_ok
    assert cr.witness and "sector" in cr.witness
    with pytest.raises(NonFlatModule):
        sheaf_cohomology(bent)


def test_connection_degree_is_checked(heis1):
    with pytest.raises(ValueError):
        ConnectionModule(heis1, 1, ((basis_form(heis1, heis1.unit, 0),),))


@pytest.mark.parametrize("seed", range(6))
def test_curvature_identity_random(heis1, seed):
    rng = random.Random(seed)
    m = random_connection(heis1, rng) if seed % 2 else random_flat_connection(heis1, rng)
    cr = curvature(m)
    assert cr.squares_ok
    assert cr.checked_degrees == tuple(range(heis1.top_degree))
    if seed % 2 == 0:
        assert cr.is_flat


def test_curvature_identity_check_is_not_vacuous(heis2):
    # compare ∇∘∇ against twice the curvature: must disagree for a curved connection
    from ncleray.dgalg import _blockmaps_agree, _id_wedge, curvature_forms

    a = heis2
    m = ConnectionModule(a, 1, ((basis_form(a, a.index((1, 0, 0)), a.frame.index("e^v")),),))
    R, truncated = curvature_forms(m)
    assert not truncated
    R2 = tuple(tuple({g: 2 * v for g, v in f.items()} for f in row) for row in R)
    lhs = extend_connection(m, 0).compose(extend_connection(m, 1))
    rhs = _id_wedge(m, R2, 0)
    assert _blockmaps_agree(lhs, rhs, lhs.overflow | rhs.overflow) is not None
    rhs = _id_wedge(m, R, 0)
    assert _blockmaps_agree(lhs, rhs, lhs.overflow | rhs.overflow) is None


def test_morphisms(heis1):
    C = models.circle(1)
    assert check_morphism(identity_morphism(C)).ok
    assert check_morphism(models.iota(1, total=heis1)).ok
    P = models.iota(1, total=heis1).frame_map.copy()
    P[1] = P[1] * 2  # e^z -> 2 e^w no longer intertwines d
    bad = DGAMorphism(C, heis1, models.iota(1, total=heis1).sector_map, P)
    assert not check_morphism(bad).ok


def test_sheaf_cohomology_needs_sector_diagonal(heis1):
    m = ConnectionModule(heis1, 1, ((basis_form(heis1, heis1.index((0, 0, 1)), heis1.frame.index("e^u")),),))
    if curvature(m).is_flat:
        with pytest.raises(ValueError):
            sheaf_cohomology(m)
    else:
        with pytest.raises(NonFlatModule):
            sheaf_cohomology(m)
