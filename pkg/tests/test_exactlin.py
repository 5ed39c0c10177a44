import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncleray import exactlin as el
from ncleray import kernels

small = st.integers(-3, 3)


def mats(rows, cols):
    return st.lists(st.lists(small, min_size=cols, max_size=cols), min_size=rows, max_size=rows)


@st.composite
def subspace_pair(draw, n=5):
    a = draw(st.integers(0, 4))
    b = draw(st.integers(0, 4))
    U = el.span(el.matrix(draw(mats(a, n))), n) if a else el.zero_space(n)
    V = el.span(el.matrix(draw(mats(b, n))), n) if b else el.zero_space(n)
    return U, V


def test_parse_and_format():
    assert el.parse_scalar("3/6") == el.Fraction(1, 2)
    assert el.parse_scalar(" -4 ") == -4
    assert el.format_scalar(el.Fraction(-2, 4)) == "-1/2"
    assert el.format_scalar(el.Fraction(3)) == "3"
    for bad in ("1/0", "x", "1.5", "", "2/"):
        with pytest.raises(ValueError):
            el.parse_scalar(bad)


@given(mats(4, 5), st.integers(0, 10**6))
def test_span_is_canonical(rows, seed):
    m = el.matrix(rows)
    rng = random.Random(seed)
    while True:
        t = el.matrix([[rng.randint(-2, 2) for _ in range(4)] for _ in range(4)])
        if el.rank(t) == 4:
            break
    assert el.span(m, 5) == el.span(el.matmul(t, m), 5)


@given(subspace_pair())
def test_dimension_formula(pair):
    U, V = pair
    assert el.sum_spaces(U, V).rank + el.intersect(U, V).rank == U.rank + V.rank


@given(subspace_pair(), subspace_pair())
def test_modular_law(p1, p2):
    U, V = p1
    W = el.sum_spaces(U, p2[0])  # U inside W
    lhs = el.intersect(W, el.sum_spaces(U, V))
    rhs = el.sum_spaces(U, el.intersect(W, V))
    assert lhs == rhs


@given(mats(4, 3), subspace_pair(n=3))
def test_preimage(rows, pair):
    M = el.matrix(rows)
    S = pair[0]
    P = el.preimage(M, S)
    for x in P.basis:
        assert S.contains_vector(x @ M)
    im = el.image(M)
    assert P.rank == el.kernel(M).rank + el.intersect(S, im).rank


@given(mats(3, 3))
def test_kernel_rank_nullity(rows):
    M = el.matrix(rows)
    K = el.kernel(M)
    assert all(el.is_zero(x @ M) for x in K.basis)
    assert K.rank + el.rank(M) == 3


@given(mats(3, 3), st.integers(0, 10**6))
def test_induced_map_does_not_depend_on_representatives(rows, seed):
    rng = random.Random(seed)
    M = el.matrix(rows)
    src = el.quotient(el.full_space(3), el.kernel(M))
    tgt = el.quotient(el.full_space(3), el.zero_space(3))
    base = el.induced_map(M, src, tgt)
    # move every representative by a random element of the divisor
    shifted = []
    for r in src.representatives:
        v = r.copy()
        for k in src.divisor.basis:
            v = v + k * rng.randint(-3, 3)
        shifted.append(v)
    for i, v in enumerate(shifted):
        assert list(tgt.coordinates(v @ M)) == list(base[i])


def test_induced_map_detects_ill_defined():
    M = el.identity(2)
    src = el.quotient(el.full_space(2), el.span([["1", "0"]], 2))
    tgt = el.quotient(el.full_space(2), el.zero_space(2))
    with pytest.raises(el.NotWellDefined):
        el.induced_map(M, src, tgt)


def test_inverse():
    m = el.matrix([["2", "1"], ["1", "1"]])
    assert el.mat_equal(el.matmul(m, el.inverse(m)), el.identity(2))
    with pytest.raises(ValueError):
        el.inverse(el.matrix([["1", "2"], ["2", "4"]]))


@settings(max_examples=50)
@given(st.integers(0, 10**6))
def test_integer_rref_backends_agree(seed):
    rng = np.random.default_rng(seed)
    m = ((rng.random((12, 15)) < 0.3) * rng.integers(-3, 4, size=(12, 15))).astype(np.int64)
    a = kernels.rref_int_jit(m.copy())
    b = kernels.rref_int_np(m.copy())
    assert bool(a[0]) == bool(b[0])
    if a[0]:
        r = int(a[1])
        assert r == int(b[1])
        assert np.array_equal(a[2][:r], b[2][:r]) and np.array_equal(a[3][:r], b[3][:r])
        assert el.mat_equal(el.rref_integer(m), el.rref(el.as_matrix(m.tolist())))


def test_rref_falls_back_past_int64():
    big = 2**40
    m = el.matrix([[big, 1, 0], [1, big, 1], [0, 1, big]])
    r = el.rref(m)
    assert r.shape == (3, 3) and el.mat_equal(r, el.identity(3))
