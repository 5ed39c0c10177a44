"""Sector-graded differential graded algebras, morphisms and connections.

A :class:`SectorDGA` is a DGA that splits as a direct sum over a finite
window of group-like *sectors* ``g``, each carrying a copy of one exterior
"frame" of invariant forms.  An element of degree ``n`` in sector ``g`` is
``g.w`` with ``w`` a combination of degree-``n`` frame forms.  Everything is
determined by four tables:

``prod[g, h]``
    sector index of ``g.h`` (``-1`` when it leaves the window)
``wedge_table[i, j, k]``
    coefficient of frame form ``k`` in ``e_i ^ e_j``
``commute[h, i, j]``
    moving a frame form past a sector: ``e_i . h = h . sum_j commute[h,i,j] e_j``
``d[g, i, j]``
    ``d(g.e_i) = sum_j d[g,i,j] g.e_j``

so that ``(g.w) ^ (h.t) = (gh) . commute_h(w) ^ t``.
"""

from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from math import gcd

import numpy as np

from . import exactlin as el
from . import kernels
from .complexes import CochainComplex, Report, cohomology
from .exactlin import Q0, Q1


class NonFlatModule(ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def _obj(a):
    a = np.asarray(a, dtype=object)
    out = np.empty(a.shape, dtype=object)
    for idx, x in np.ndenumerate(a):
        out[idx] = x if isinstance(x, Fraction) else Fraction(x)
    return out


def to_integer(a, limit=kernels.LIMIT):
    """``(ints, den)`` with ``a == ints / den``, or ``None`` if entries get too big."""
    flat = list(a.flat)
    den = 1
    for x in flat:
        q = x.denominator
        if den % q:
            den = den * q // gcd(den, q)
    ints = [x.numerator * (den // x.denominator) for x in flat]
    if ints and max(abs(v) for v in ints) >= limit:
        return None
    return np.array(ints, dtype=np.int64).reshape(a.shape), den


@dataclass(frozen=True, eq=False)
class SectorDGA:
    sectors: tuple
    unit: int
    prod: np.ndarray
    frame: tuple
    degrees: tuple
    wedge_table: np.ndarray
    commute: np.ndarray
    d: np.ndarray
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "prod", np.asarray(self.prod, dtype=np.int64))
        for attr in ("wedge_table", "commute", "d"):
            object.__setattr__(self, attr, _obj(getattr(self, attr)))
        S, F = len(self.sectors), len(self.frame)
        if self.prod.shape != (S, S):
            raise ValueError(f"product table has shape {self.prod.shape}, expected {(S, S)}")
        if self.wedge_table.shape != (F, F, F):
            raise ValueError("wedge table must be F x F x F")
        if self.commute.shape != (S, F, F) or self.d.shape != (S, F, F):
            raise ValueError("commute and d must be S x F x F")
        if list(self.degrees) != sorted(self.degrees) or (F and self.degrees[0] != 0):
            raise ValueError("frame must be sorted by degree with the unit form first")

    # -- shape -------------------------------------------------------------

    @property
    def S(self):
        return len(self.sectors)

    @property
    def F(self):
        return len(self.frame)

    @property
    def top_degree(self):
        return max(self.degrees)

    @cached_property
    def _index(self):
        return {s: i for i, s in enumerate(self.sectors)}

    def index(self, label):
        return self._index[label]

    def has(self, label):
        return label in self._index

    def frame_indices(self, n):
        return [i for i, x in enumerate(self.degrees) if x == n]

    def rank(self, n):
        return len(self.frame_indices(n))

    @cached_property
    def _offsets(self):
        return {n: self.frame_indices(n)[0] if self.rank(n) else 0 for n in range(self.top_degree + 2)}

    def offset(self, n):
        return self._offsets.get(n, self.F)

    # -- structure ---------------------------------------------------------

    def W(self, h):
        """``W[i, j, :]``: frame part of ``(g.e_i) ^ (h.e_j)``, any ``g``."""
        cache = self.__dict__.setdefault("_W", {})
        if h not in cache:
            F = self.F
            tabs = self.integer_tables
            if tabs is not None:
                den = tabs["W_den"]
                cache[h] = np.array([Fraction(int(x), den) for x in tabs["W"][h].flat],
                                    dtype=object).reshape(F, F, F)
            else:
                cache[h] = el.matmul(self.commute[h], self.wedge_table.reshape(F, F * F)).reshape(F, F, F)
        return cache[h]

    def d_block(self, g, n):
        """``d`` on sector ``g`` as a map from degree ``n`` to degree ``n + 1`` frames."""
        src, dst = self.frame_indices(n), self.frame_indices(n + 1)
        if not src or not dst:
            return el.zeros(len(src), len(dst))
        return self.d[g][np.ix_(src, dst)]

    def wedge_block(self, h, vec, n):
        """Matrix of ``x -> x ^ (h.vec)`` from degree ``n`` to degree ``n + |vec|``."""
        W = self.W(h)
        out = np.tensordot(np.asarray(vec, dtype=object), W, axes=([0], [1]))  # [i, k]
        deg = {self.degrees[t] for t in np.flatnonzero(np.array([x != 0 for x in vec]))}
        if not deg:
            return el.zeros(self.rank(n), 0)
        if len(deg) > 1:
            raise ValueError("wedge_block needs a homogeneous form")
        (p,) = deg
        return el.as_matrix(out[np.ix_(self.frame_indices(n), self.frame_indices(n + p))])

    def left_wedge_block(self, vec, g, n):
        """Matrix of ``x -> vec ^ x`` for ``vec`` in the unit sector, ``x`` in sector ``g``."""
        W = self.W(g)
        out = np.tensordot(np.asarray(vec, dtype=object), W, axes=([0], [0]))  # [j, k]
        nz = [self.degrees[t] for t, x in enumerate(vec) if x != 0]
        if not nz:
            return None
        p = nz[0]
        return el.as_matrix(out[np.ix_(self.frame_indices(n), self.frame_indices(n + p))])

    @cached_property
    def integer_tables(self):
        """Scaled int64 copies of the structure tables, or ``None`` when too large.

        ``W = commute . wedge_table`` is formed in integers; every sweep below
        multiplies at most three table entries and sums ``F^2`` terms, which
        the size bound keeps inside int64.
        """
        ti = to_integer(self.wedge_table)
        si = to_integer(self.commute)
        di = to_integer(self.d)
        if ti is None or si is None or di is None:
            return None
        T, tden = ti
        sig, sden = si
        d, dden = di
        F = self.F
        big = max(int(np.abs(x).max(initial=0)) for x in (T, sig, d))
        if big ** 3 * F ** 2 >= 1 << 62:
            return None
        W = np.einsum("hij,jkl->hikl", sig, T)
        wmax = int(np.abs(W).max(initial=0))
        if wmax * max(big, wmax) * F >= 1 << 62:
            return None
        return {"T": T, "T_den": tden, "sigma": sig, "sigma_den": sden, "d": d, "d_den": dden,
                "W": W, "W_den": sden * tden}


# ---------------------------------------------------------------------------
# forms: sparse sums of sector pieces
# ---------------------------------------------------------------------------


def form(a, pieces):
    """A form as ``{sector index: frame vector}``; zero pieces are dropped."""
    out = {}
    for g, v in pieces.items():
        v = np.array([x if isinstance(x, Fraction) else Fraction(x) for x in v], dtype=object)
        if len(v) != a.F:
            raise ValueError("frame vector of the wrong length")
        if not el.is_zero(v):
            out[g] = v
    return out


def basis_form(a, g, i, c=Q1):
    v = np.array([Q0] * a.F, dtype=object)
    v[i] = Fraction(c)
    return {g: v}


def form_add(x, y, c=Q1):
    out = {g: v.copy() for g, v in x.items()}
    for g, v in y.items():
        out[g] = out[g] + c * v if g in out else c * v
    return {g: v for g, v in out.items() if not el.is_zero(v)}


def form_scale(x, c):
    return {g: c * v for g, v in x.items()} if c != 0 else {}


def form_wedge(a, x, y):
    """``x ^ y``; returns ``(form, overflow)`` where overflow flags products past the window."""
    out = {}
    overflow = False
    for g, v in x.items():
        for h, t in y.items():
            gh = int(a.prod[g, h])
            if gh < 0:
                overflow = True
                continue
            W = a.W(h)
            piece = np.tensordot(np.tensordot(v, W, axes=([0], [0])), t, axes=([0], [0]))
            out[gh] = out[gh] + piece if gh in out else piece
    return {g: v for g, v in out.items() if not el.is_zero(v)}, overflow


def form_d(a, x):
    out = {}
    for g, v in x.items():
        w = v @ a.d[g]
        if not el.is_zero(w):
            out[g] = w
    return out


def form_degree(a, x):
    degs = {a.degrees[i] for v in x.values() for i, c in enumerate(v) if c != 0}
    if len(degs) > 1:
        raise ValueError("inhomogeneous form")
    return degs.pop() if degs else None


def forms_equal(x, y):
    return not form_add(x, y, -Q1)


def format_form(a, x):
    if not x:
        return "0"
    terms = []
    for g in sorted(x):
        for i, c in enumerate(x[g]):
            if c != 0:
                terms.append(f"{el.format_scalar(c)}*{a.sectors[g]}*{a.frame[i]}")
    return " + ".join(terms)


# ---------------------------------------------------------------------------
# axioms
# ---------------------------------------------------------------------------


def _basis(a, g, i):
    return {"sector": a.sectors[g], "form": a.frame[i]}


def _product_triple(a, g, i, h, j, l, k):
    """Both bracketings of ``(g e_i)(h e_j)(l e_k)``, or None when out of window."""
    gh, hl = a.prod[g, h], a.prod[h, l]
    if gh < 0 or hl < 0 or a.prod[gh, l] < 0 or a.prod[g, hl] < 0:
        return None
    x = a.W(h)[i, j, :]
    left = np.tensordot(x, a.W(l)[:, k, :], axes=([0], [0]))
    y = a.W(l)[j, k, :]
    right = np.tensordot(y, a.W(hl)[i, :, :], axes=([0], [0]))
    return (int(a.prod[gh, l]), left), (int(a.prod[g, hl]), right)


def _assoc_witness(a, candidates):
    for (g, i), (h, j), (l, k) in candidates:
        res = _product_triple(a, g, i, h, j, l, k)
        if res is None:
            continue
        (s1, left), (s2, right) = res
        if s1 != s2 or not el.mat_equal(left.reshape(1, -1), right.reshape(1, -1)):
            return [_basis(a, g, i), _basis(a, h, j), _basis(a, l, k)]
    return None


def _check_units(a, rep):
    u, F = a.unit, a.F
    for g in range(a.S):
        if a.prod[u, g] != g or a.prod[g, u] != g:
            rep.fail("unit sector is not a two-sided unit", axiom="unit", sector=a.sectors[g])
            return
    if not el.mat_equal(a.commute[u], el.identity(F)):
        rep.fail("unit sector does not commute with the frame", axiom="unit")
    for g in range(a.S):
        if a.commute[g][0, 0] != 1 or any(a.commute[g][0, j] != 0 for j in range(1, F)):
            rep.fail("unit form is not central", axiom="unit", sector=a.sectors[g])
            return
    T = a.wedge_table
    if not el.mat_equal(T[0], el.identity(F)) or not el.mat_equal(T[:, 0, :], el.identity(F)):
        rep.fail("unit form is not a two-sided unit of the frame", axiom="unit")


def _check_grading(a, rep):
    deg = np.array(a.degrees)
    for arr, what in ((a.wedge_table, "wedge"),):
        for i, j, k in zip(*np.nonzero(np.vectorize(lambda x: x != 0, otypes=[bool])(arr))):
            if deg[i] + deg[j] != deg[k]:
                rep.fail(f"{what} table is not graded", axiom="grading", forms=[a.frame[i], a.frame[j], a.frame[k]])
                return
    nz = np.vectorize(lambda x: x != 0, otypes=[bool])
    for g in range(a.S):
        for i, j in zip(*np.nonzero(nz(a.commute[g]))):
            if deg[i] != deg[j]:
                rep.fail("commutation does not preserve degree", axiom="grading", sector=a.sectors[g])
                return
        for i, j in zip(*np.nonzero(nz(a.d[g]))):
            if deg[j] != deg[i] + 1:
                rep.fail("d does not raise degree by one", axiom="grading", sector=a.sectors[g])
                return


def _check_d_squared(a, rep):
    for g in range(a.S):
        sq = el.matmul(a.d[g], a.d[g])
        if not el.is_zero(sq):
            i = next(i for i, row in enumerate(sq) if not el.is_zero(row))
            rep.fail("d∘d != 0", axiom=2, witness=[_basis(a, g, i)])
            return


def _check_leibniz(a, rep):
    tabs = a.integer_tables
    sign = np.array([(-1) ** x for x in a.degrees], dtype=np.int64)
    if tabs is not None:
        hit = kernels.leibniz_sweep(a.prod, tabs["W"], tabs["d"], sign)
        if hit[0] < 0:
            return
        g, h, i, j, _ = (int(x) for x in hit)
        rep.fail("graded Leibniz rule fails", axiom=3, witness=[_basis(a, g, i), _basis(a, h, j)])
        return
    # entries too large for int64: exact object arithmetic, same sweep
    Ws = np.stack([a.W(h) for h in range(a.S)])
    hit = kernels.leibniz_sweep_np(a.prod, Ws, a.d, sign.astype(object))
    if hit[0] >= 0:
        g, h, i, j, _ = (int(x) for x in hit)
        rep.fail("graded Leibniz rule fails", axiom=3, witness=[_basis(a, g, i), _basis(a, h, j)])


def _frame_assoc_failure(T):
    F = T.shape[0]
    m = T.reshape(F, F * F)
    # (e_i e_j) e_k  vs  e_i (e_j e_k)
    left = np.tensordot(T, T, axes=([2], [0]))  # [i, j, k, out]
    right = np.tensordot(T, T, axes=([1], [2])).transpose(0, 2, 3, 1)  # [i, j, k, out]
    del m
    for idx in zip(*np.nonzero(np.vectorize(lambda x: x != 0, otypes=[bool])(left - right))):
        return idx[:3]
    return None


def _check_associativity(a, rep):
    """Associativity on basis triples, checked through its factors.

    With ``(g w)(h t) = gh. s_h(w) ^ t`` both bracketings of a basis triple
    agree exactly when the sector product is associative, ``s_{hl} = s_h s_l``,
    every ``s_h`` is multiplicative for the frame wedge and the frame wedge is
    associative.  Each factor is swept separately; a failure is turned into
    an explicit failing basis triple.
    """
    u = a.unit
    hit = kernels.assoc_sweep(a.prod)
    if hit[0] >= 0:
        g, h, l = (int(x) for x in hit)
        w = _assoc_witness(a, [((g, 0), (h, 0), (l, 0))])
        rep.fail("sector product is not associative", axiom=1,
                 witness=w or [_basis(a, g, 0), _basis(a, h, 0), _basis(a, l, 0)])
        return
    tabs = a.integer_tables
    if tabs is not None:
        hit = kernels.sigma_sweep(a.prod, tabs["sigma"], tabs["sigma_den"])
    else:
        hit = kernels.sigma_sweep_np(a.prod, a.commute, Q1)
    if hit[0] >= 0:
        h, l, i, _ = (int(x) for x in hit)
        w = _assoc_witness(a, [((u, i), (h, 0), (l, 0))])
        rep.fail("commutation is not compatible with the sector product", axiom=1,
                 witness=w or [_basis(a, u, i), _basis(a, h, 0), _basis(a, l, 0)])
        return
    bad = _frame_assoc_failure(a.wedge_table)
    if bad is not None:
        i, j, k = (int(x) for x in bad)
        w = _assoc_witness(a, [((u, i), (u, j), (u, k))])
        rep.fail("frame wedge is not associative", axiom=1,
                 witness=w or [_basis(a, u, i), _basis(a, u, j), _basis(a, u, k)])
        return
    tabs = a.integer_tables
    if tabs is not None:
        T, sig = tabs["T"], tabs["sigma"]
        lhs = np.einsum("ijk,hkl->hijl", T, sig) * tabs["sigma_den"]
        rhs = np.einsum("hia,hjb,abl->hijl", sig, sig, T, optimize=True)
    else:
        lhs = np.einsum("ijk,hkl->hijl", a.wedge_table, a.commute)
        rhs = np.einsum("hia,hjb,abl->hijl", a.commute, a.commute, a.wedge_table)
    bad = np.argwhere(lhs != rhs)
    if len(bad):
        h, i, j, _ = (int(x) for x in bad[0])
        w = _assoc_witness(a, [((u, i), (u, j), (h, 0))])
        rep.fail("commutation is not multiplicative", axiom=1,
                 witness=w or [_basis(a, u, i), _basis(a, u, j), _basis(a, h, 0)])


def _check_generation(a, rep):
    """Axiom (5) per sector and degree; products with the unit sector suffice when they span."""
    u = a.unit
    for g in range(a.S):
        W = a.W(g)
        for n in range(1, a.top_degree):
            ones = a.frame_indices(1)
            src = a.frame_indices(n)
            dst = a.frame_indices(n + 1)
            rows = [W[i, j, dst] for i in ones for j in src]
            r = el.rank(el.as_matrix(rows)) if rows else 0
            if r != len(dst):
                rep.fail("Ω^1 ∧ Ω^n does not span Ω^{n+1}", axiom=5, sector=a.sectors[g], degree=n + 1,
                         rank=r, expected=len(dst))
                return
    del u


def _check_spanning(a, rep):
    """Axiom (6): ``A.dA`` spans ``Ω^1`` sector by sector."""
    ones = a.frame_indices(1)
    if not ones:
        return
    vec = {}
    for h in range(a.S):
        v = a.d[h][0, :] @ a.W(h)[0]
        vec[h] = tuple(v[ones])
    G, H = np.nonzero(a.prod >= 0)
    by_target = {}
    for gp, h in zip(G, H):
        by_target.setdefault(int(a.prod[gp, h]), set()).add(vec[int(h)])
    for g in range(a.S):
        rows = [list(v) for v in sorted(by_target.get(g, ()), key=lambda t: tuple(map(float, t))) if any(v)]
        r = el.rank(el.as_matrix(rows)) if rows else 0
        if r != len(ones):
            rep.fail("A.dA does not span Ω^1", axiom=6, sector=a.sectors[g], rank=r, expected=len(ones))
            return


def check_axioms(a):
    """All DGA axioms on in-window data; failures carry sector/basis witnesses."""
    rep = Report("dga")
    _check_units(a, rep)
    _check_grading(a, rep)
    _check_d_squared(a, rep)
    _check_leibniz(a, rep)
    _check_associativity(a, rep)
    _check_generation(a, rep)
    _check_spanning(a, rep)
    return rep


def sector_complex(a, g):
    """The de Rham complex of one sector: ``dims`` are the frame ranks."""
    top = a.top_degree
    dims = tuple(a.rank(n) for n in range(top + 1))
    return CochainComplex(dims, tuple(a.d_block(g, n) for n in range(top)))


# ---------------------------------------------------------------------------
# morphisms
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DGAMorphism:
    """``phi(g.w) = phi(g) . (frame_map applied to w)``; ``sector_map`` uses -1 for out of window."""

    source: SectorDGA
    target: SectorDGA
    sector_map: np.ndarray
    frame_map: np.ndarray
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "sector_map", np.asarray(self.sector_map, dtype=np.int64))
        object.__setattr__(self, "frame_map", _obj(self.frame_map))
        if self.sector_map.shape != (self.source.S,):
            raise ValueError("sector map must list one target per source sector")
        if self.frame_map.shape != (self.source.F, self.target.F):
            raise ValueError("frame map must be F_source x F_target")

    def apply(self, x):
        """Push a form forward; returns ``(form, overflow)``."""
        out = {}
        overflow = False
        for g, v in x.items():
            t = int(self.sector_map[g])
            if t < 0:
                overflow = True
                continue
            w = v @ self.frame_map
            out[t] = out[t] + w if t in out else w
        return {g: v for g, v in out.items() if not el.is_zero(v)}, overflow

    @property
    def overflow_sectors(self):
        return [self.source.sectors[g] for g in range(self.source.S) if self.sector_map[g] < 0]


def check_morphism(phi):
    """Unital, multiplicative on sectors, and intertwining ``d`` and ``∧``.

    The pair identities ``phi(x ^ y) = phi(x) ^ phi(y)`` and ``phi(dx) = d phi(x)``
    on basis elements reduce to: ``phi`` multiplicative on in-window sector pairs,
    ``Phi s_h = s_{phi(h)} Phi``-compatibility, ``Phi`` multiplicative on the frame,
    and ``d_g Phi = Phi d_{phi(g)}``.  Each is checked exactly.
    """
    B, A = phi.source, phi.target
    P, smap = phi.frame_map, phi.sector_map
    rep = Report("morphism")
    if smap[B.unit] != A.unit:
        rep.fail("unit sector not preserved", check="unital")
    if P[0, 0] != 1 or any(P[0, j] != 0 for j in range(1, A.F)):
        rep.fail("unit form not preserved", check="unital")
    degB, degA = B.degrees, A.degrees
    for i in range(B.F):
        for j in range(A.F):
            if P[i, j] != 0 and degB[i] != degA[j]:
                rep.fail("frame map does not preserve degree", check="grading", forms=[B.frame[i], A.frame[j]])
                return rep
    for g in range(B.S):
        for h in range(B.S):
            gh = B.prod[g, h]
            sg, sh = smap[g], smap[h]
            if gh < 0 or sg < 0 or sh < 0 or smap[gh] < 0:
                continue
            if A.prod[sg, sh] != smap[gh]:
                rep.fail("sector map is not multiplicative", check="wedge",
                         witness=[B.sectors[g], B.sectors[h]])
                return rep
    T_B, T_A = B.wedge_table, A.wedge_table
    lhs = np.tensordot(T_B, P, axes=([2], [0]))
    rhs = np.tensordot(np.tensordot(P, P, axes=0).transpose(0, 2, 1, 3), T_A, axes=([2, 3], [0, 1]))
    for i in range(B.F):
        for j in range(B.F):
            if not el.is_zero(lhs[i, j] - rhs[i, j]):
                rep.fail("frame map does not respect ∧", check="wedge", witness=[B.frame[i], B.frame[j]])
                return rep
    for h in range(B.S):
        t = smap[h]
        if t < 0:
            continue
        if not el.mat_equal(el.matmul(B.commute[h], P), el.matmul(P, A.commute[t])):
            rep.fail("frame map does not respect commutation", check="wedge", witness=[B.sectors[h]])
            return rep
    for g in range(B.S):
        t = smap[g]
        if t < 0:
            continue
        if not el.mat_equal(el.matmul(B.d[g], P), el.matmul(P, A.d[t])):
            i = next(i for i in range(B.F)
                     if not el.is_zero(el.matmul(B.d[g], P)[i] - el.matmul(P, A.d[t])[i]))
            rep.fail("d is not intertwined", check="d", witness=[_basis(B, g, i)])
            return rep
    return rep


def identity_morphism(a):
    return DGAMorphism(a, a, np.arange(a.S), el.identity(a.F), name="id")


# ---------------------------------------------------------------------------
# connections on free modules
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConnectionModule:
    """A free left module ``A^rank`` with ``∇ e_i = sum_j forms[i][j] ⊗ e_j``.

    ``declared_flat`` records module flatness in the tensor-product sense,
    which holds for free modules; it says nothing about curvature.
    """

    algebra: SectorDGA
    rank: int
    forms: tuple
    name: str = ""
    declared_flat: bool = True

    def __post_init__(self):
        if len(self.forms) != self.rank or any(len(row) != self.rank for row in self.forms):
            raise ValueError("connection forms must be rank x rank")
        for row in self.forms:
            for f in row:
                deg = form_degree(self.algebra, f)
                if deg not in (None, 1):
                    raise ValueError("connection forms must have degree 1")

    @property
    def sector_diagonal(self):
        u = self.algebra.unit
        return all(set(f) <= {u} for row in self.forms for f in row)

    def unit_form(self, i, j):
        f = self.forms[i][j]
        return f.get(self.algebra.unit, np.array([Q0] * self.algebra.F, dtype=object))


def trivial_module(a, name="trivial"):
    """``E = A`` with ``∇ = d``."""
    return ConnectionModule(a, 1, (({},),), name=name)


@dataclass
class BlockMap:
    """A map between sector-graded spaces as ``{(src, dst): matrix}``.

    ``overflow`` lists source sectors part of whose image fell outside the
    window, where the stored blocks are therefore incomplete.
    """

    src_degree: int
    dst_degree: int
    blocks: dict = field(default_factory=dict)
    overflow: set = field(default_factory=set)

    def add(self, g, h, m):
        if el.is_zero(m):
            self.blocks.setdefault((g, h), m)
            return
        if (g, h) in self.blocks:
            self.blocks[(g, h)] = self.blocks[(g, h)] + m
        else:
            self.blocks[(g, h)] = m

    def out_of(self, g):
        return {h: m for (s, h), m in self.blocks.items() if s == g}

    def is_sector_diagonal(self):
        return all(g == h or el.is_zero(m) for (g, h), m in self.blocks.items())

    def compose(self, other):
        """``self`` followed by ``other`` (row convention)."""
        out = BlockMap(self.src_degree, other.dst_degree)
        out.overflow = set(self.overflow)
        targets = {}
        for (g, h), m in self.blocks.items():
            targets.setdefault(g, []).append((h, m))
        for g, items in targets.items():
            for h, m in items:
                if h in other.overflow:
                    out.overflow.add(g)
                for k, n in other.out_of(h).items():
                    out.add(g, k, el.matmul(m, n))
        return out


def _tensor_dims(m, n):
    return m.algebra.rank(n) * m.rank


def _place(a, rank, mat_frame, i, j):
    """Expand a frame matrix into the ``(frame x module)`` basis, entry ``e_i -> e_j``."""
    r, c = mat_frame.shape
    out = el.zeros(r * rank, c * rank)
    out[i::rank, j::rank] = mat_frame
    return out


def extend_connection(m, n):
    """``∇^[n]`` on ``Ω^n A ⊗ E``: ``ω⊗e -> dω⊗e + (-1)^n ω∧∇e``, as a :class:`BlockMap`.

    Sector ``g`` has basis ``(ω, i)`` at index ``ω * rank + i`` with ``ω`` running
    over the degree-``n`` frame.
    """
    a = m.algebra
    if not 0 <= n <= a.top_degree:
        raise ValueError(f"degree {n} out of range 0..{a.top_degree}")
    r = m.rank
    out = BlockMap(n, n + 1)
    eye = el.identity(r)
    for g in range(a.S):
        out.add(g, g, el.kron(a.d_block(g, n), eye))
    sign = -1 if n % 2 else 1
    for i in range(r):
        for j in range(r):
            for s, vec in m.forms[i][j].items():
                if n + 1 > a.top_degree:
                    continue
                blk = a.wedge_block(s, vec, n)
                blk = _place(a, r, blk, i, j) * sign
                for g in range(a.S):
                    gs = int(a.prod[g, s])
                    if gs < 0:
                        out.overflow.add(g)
                        continue
                    out.add(g, gs, blk)
    return out


def check_module_leibniz(m):
    """``∇(a.e_i) = da ⊗ e_i + a.∇e_i`` on (sector, module basis) pairs, via form arithmetic."""
    a = m.algebra
    rep = Report("module")
    nab = extend_connection(m, 0)
    r = m.rank
    ones = a.frame_indices(1)
    for g in range(a.S):
        if g in nab.overflow:
            continue
        for i in range(r):
            expected = {}
            da = form_d(a, basis_form(a, g, 0))
            for j in range(r):
                piece = da if j == i else {}
                prodf, _ = form_wedge(a, basis_form(a, g, 0), m.forms[i][j])
                piece = form_add(piece, prodf)
                expected[j] = piece
            got = {j: {} for j in range(r)}
            for h, blk in nab.out_of(g).items():
                row = blk[i]
                for j in range(r):
                    v = np.array([Q0] * a.F, dtype=object)
                    v[ones] = row[j::r]
                    got[j] = form_add(got[j], {h: v})
            for j in range(r):
                if not forms_equal(expected[j], got[j]):
                    rep.fail("left Leibniz rule fails", sector=a.sectors[g], module_basis=i)
                    return rep
    return rep


@dataclass
class CurvatureReport:
    R: tuple  # R[i][j] = the Ω^2 form with R(e_i) = sum_j R[i][j] ⊗ e_j
    R_map: BlockMap
    is_flat: bool
    squares_ok: bool
    witness: dict = None
    overflow: bool = False
    checked_degrees: tuple = ()
    compared: dict = None  # degree -> number of sectors where the identity was compared


def curvature_forms(m):
    """``R_ij = dθ_ij - sum_k θ_ik ∧ θ_kj``."""
    a = m.algebra
    r = m.rank
    R = []
    overflow = False
    for i in range(r):
        row = []
        for j in range(r):
            x = form_d(a, m.forms[i][j])
            for k in range(r):
                p, o = form_wedge(a, m.forms[i][k], m.forms[k][j])
                overflow |= o
                x = form_add(x, p, -Q1)
            row.append(x)
        R.append(tuple(row))
    return tuple(R), overflow


def _id_wedge(m, R, n):
    """``ω⊗e_i -> ω ∧ R(e_i)`` from degree ``n`` to ``n + 2``."""
    a = m.algebra
    r = m.rank
    out = BlockMap(n, n + 2)
    if n + 2 > a.top_degree:
        return out
    for i in range(r):
        for j in range(r):
            for s, vec in R[i][j].items():
                blk = _place(a, r, a.wedge_block(s, vec, n), i, j)
                for g in range(a.S):
                    gs = int(a.prod[g, s])
                    if gs < 0:
                        out.overflow.add(g)
                        continue
                    out.add(g, gs, blk)
    return out


def _blockmaps_agree(x, y, skip):
    keys = set(x.blocks) | set(y.blocks)
    for key in sorted(keys):
        if key[0] in skip:
            continue
        mx, my = x.blocks.get(key), y.blocks.get(key)
        zx = mx is None or el.is_zero(mx)
        zy = my is None or el.is_zero(my)
        if zx and zy:
            continue
        if zx or zy or not el.mat_equal(mx, my):
            return key
    return None


def _truncated_sources(m):
    """Sectors ``g`` where ``∇∘∇`` is computed in full but ``R`` lost a piece.

    ``R`` drops products ``θ_ik ∧ θ_kj`` landing outside the window, while
    ``∇∘∇`` reaches ``g.s.t`` in two in-window steps.
    """
    a = m.algebra
    secs = sorted({g for row in m.forms for f in row for g in f})
    lost = [(s, t) for s in secs for t in secs if a.prod[s, t] < 0]
    out = set()
    for g in range(a.S):
        for s, t in lost:
            gs = a.prod[g, s]
            if gs >= 0 and a.prod[gs, t] >= 0:
                out.add(g)
                break
    return out


def curvature(m):
    """Curvature ``R = ∇^[1]∘∇`` and the identity ``∇^[n+1]∘∇^[n] = id∧R``."""
    a = m.algebra
    R, overflow = curvature_forms(m)
    n0 = extend_connection(m, 0)
    R_map = n0.compose(extend_connection(m, 1)) if a.top_degree >= 1 else BlockMap(0, 2)
    witness = None
    flat = True
    for i in range(m.rank):
        for j in range(m.rank):
            if R[i][j]:
                flat = False
                if witness is None:
                    g = min(R[i][j])
                    witness = {"sector": a.sectors[g], "module_basis": [i, j], "R": format_form(a, R[i][j])}
    ok = True
    checked = []
    blind = _truncated_sources(m) if overflow else set()
    compared = {}
    for n in range(a.top_degree):
        lhs = extend_connection(m, n)
        lhs = lhs.compose(extend_connection(m, n + 1)) if n + 1 <= a.top_degree else BlockMap(n, n + 2)
        rhs = _id_wedge(m, R, n)
        skip = lhs.overflow | rhs.overflow | blind
        bad = _blockmaps_agree(lhs, rhs, skip)
        checked.append(n)
        compared[n] = a.S - len(skip)
        if bad is not None:
            ok = False
            if witness is None:
                witness = {"sector": a.sectors[bad[0]], "degree": n}
    return CurvatureReport(R, R_map, flat, ok, witness, overflow, tuple(checked), compared)


# ---------------------------------------------------------------------------
# sheaf cohomology
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SheafCohomology:
    dims: tuple
    by_sector: dict  # sector label -> dims tuple (nonzero sectors only)
    classes: dict  # sector index -> CohomologyResult


def module_sector_complex(m, g, nabla=None):
    """``Ω^• A ⊗ E`` restricted to sector ``g`` with differential ``∇^[•]``."""
    a = m.algebra
    top = a.top_degree
    dims = tuple(_tensor_dims(m, n) for n in range(top + 1))
    ds = []
    for n in range(top):
        bm = nabla[n] if nabla else extend_connection(m, n)
        ds.append(bm.blocks.get((g, g), el.zeros(dims[n], dims[n + 1])))
    return CochainComplex(dims, tuple(ds))


def sheaf_cohomology(m):
    """``H^n(A; E, ∇)`` summed over the window's sectors.

    Requires zero curvature and a sector-diagonal connection (every shipped
    module is); a non-flat module raises :class:`NonFlatModule` with the
    curvature witness.
    """
    cr = curvature(m)
    if not cr.is_flat:
        raise NonFlatModule("connection has nonzero curvature", witness=cr.witness)
    if not m.sector_diagonal:
        raise ValueError("sheaf cohomology is implemented for sector-diagonal connections only")
    a = m.algebra
    top = a.top_degree
    nabla = [extend_connection(m, n) for n in range(top)]
    totals = [0] * (top + 1)
    by_sector, classes = {}, {}
    for g in range(a.S):
        h = cohomology(module_sector_complex(m, g, nabla))
        classes[g] = h
        if any(h.dims):
            by_sector[a.sectors[g]] = h.dims
        for n, x in enumerate(h.dims):
            totals[n] += x
    return SheafCohomology(tuple(totals), by_sector, classes)
