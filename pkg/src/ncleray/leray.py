"""The Leray spectral sequence of a differential fibration ``ι: B -> A``.

All spaces are built sector by sector over ``A``.  For an ``A``-sector ``g``::

    D_{p,q}(g)   span of  ι_*(b.ξ) ∧ (h.x)   with ι(b) h = g, |ξ| = p, |x| = q
    F^m C^n(g) = D_{m,n-m}(g) ⊗ E
    N_{p,q}(g) = D_{p,q}(g) / D_{p+1,q-1}(g)
    M_{p,q}(g) = F^p C^{p+q}(g) / F^{p+1} C^{p+q}(g)

The fiber complex is ``M_{0,•}`` with the differential induced by ``∇^[•]``, its
cohomology is ``Ĥ_•``, and ``∇_q`` is read off from ``∇^[q]`` of fiber cocycles.
"""

import random
from dataclasses import dataclass, field

import numpy as np

from . import exactlin as el
from . import specseq
from .complexes import FilteredComplex, FilteredSum, Filtration, Report, assemble
from .dgalg import (
    ConnectionModule,
    DGAMorphism,
    check_axioms,
    check_module_leibniz,
    check_morphism,
    curvature,
    extend_connection,
    form,
    module_sector_complex,
    sheaf_cohomology,
    trivial_module,
)
from .exactlin import Q0


class LerayError(RuntimeError):
    """An identity guaranteed by the construction failed."""


@dataclass(frozen=True, eq=False)
class FibrationData:
    iota: DGAMorphism
    module: ConnectionModule
    name: str = ""
    right_flat: tuple = None  # declared right-flatness of Ω^p B; free frames make it automatic

    def __post_init__(self):
        if self.module.algebra is not self.iota.target:
            raise ValueError("the module must live over the target of ι")
        if self.right_flat is None:
            object.__setattr__(self, "right_flat", tuple(True for _ in range(self.base.top_degree + 1)))

    @property
    def base(self):
        return self.iota.source

    @property
    def total(self):
        return self.iota.target

    @property
    def top(self):
        return self.total.top_degree

    @property
    def rank(self):
        return self.module.rank


def serre(iota, name="serre"):
    """Serre mode: the same pipeline with ``E = A`` and ``∇ = d``."""
    return FibrationData(iota, trivial_module(iota.target), name=name)


def _cache(fd):
    return fd.__dict__.setdefault("_cache", {})


def _memo(fd, key, fn):
    c = _cache(fd)
    if key not in c:
        c[key] = fn()
    return c[key]


def hypotheses(fd):
    """Axioms of both DGAs, ι a DGA morphism, E a module with zero curvature."""
    def go():
        rep = Report("hypotheses")
        rep.merge(check_axioms(fd.base))
        rep.merge(check_axioms(fd.total))
        rep.merge(check_morphism(fd.iota))
        rep.merge(check_module_leibniz(fd.module))
        cr = curvature(fd.module)
        if not cr.is_flat:
            rep.fail("module has nonzero curvature", witness=cr.witness)
        if not cr.squares_ok:
            rep.fail("∇^[n+1]∘∇^[n] != id∧R", witness=cr.witness)
        if not fd.module.sector_diagonal:
            rep.fail("connection mixes sectors")
        if fd.iota.overflow_sectors:
            rep.fail("ι sends base sectors out of window", witness=fd.iota.overflow_sectors[:3])
        if not all(fd.right_flat):
            rep.fail("Ω^p B not declared right flat")
        if not _right_free(fd.base):
            rep.fail("Ω^p B is not right free on the frame")
        return rep
    return _memo(fd, "hyp", go)


def _right_free(B):
    """``Ω^p B = ⊕ frame . B`` as right modules: every commutation matrix is invertible."""
    for h in range(B.S):
        try:
            el.inverse(B.commute[h])
        except ValueError:
            return False
    return True


# ---------------------------------------------------------------------------
# D, N and M
# ---------------------------------------------------------------------------


def _left_division(fd):
    """``{(b, g): h}`` with ``ι(b) h = g`` inside the window."""
    def go():
        A = fd.total
        out = {}
        for b in range(fd.base.S):
            x = int(fd.iota.sector_map[b])
            if x < 0:
                continue
            for h, g in enumerate(A.prod[x]):
                if g >= 0:
                    out[(b, int(g))] = h
        return out
    return _memo(fd, "ldiv", go)


def _wedge_int(fd, xi, h, q):
    """Integer matrix ``[j, k]`` proportional to ``x -> ι_*(1.ξ) ∧ (h.x)`` on degree ``q`` frames."""
    key = ("wint", xi, h, q)

    def go():
        A = fd.total
        tabs = A.integer_tables
        pint = _frame_map_int(fd)
        n = fd.base.degrees[xi] + q
        if tabs is None or pint is None or n > A.top_degree:
            return None
        part = pint[0][xi] @ tabs["W"][h].reshape(A.F, A.F * A.F)
        part = part.reshape(A.F, A.F)
        return part[np.ix_(A.frame_indices(q), A.frame_indices(n))], pint[1] * tabs["W_den"]
    return _memo(fd, key, go)


def _frame_map_int(fd):
    from .dgalg import to_integer
    return _memo(fd, "pint", lambda: to_integer(fd.iota.frame_map))


def wedge_matrix(fd, xi, h, q):
    """Exact matrix of ``x -> ι_*(1.ξ) ∧ (h.x)`` from degree ``q`` to degree ``q + |ξ|`` frames."""
    key = ("wfrac", xi, h, q)

    def go():
        A = fd.total
        n = fd.base.degrees[xi] + q
        if n > A.top_degree:
            return el.zeros(A.rank(q), 0)
        wi = _wedge_int(fd, xi, h, q)
        if wi is not None:
            m, den = wi
            return el.as_matrix(m) / den
        part = np.tensordot(fd.iota.frame_map[xi], A.W(h), axes=([0], [0]))
        return el.as_matrix(part[np.ix_(A.frame_indices(q), A.frame_indices(n))])
    return _memo(fd, key, go)


def d_space(fd, p, q, g):
    """``D_{p,q}(g)`` inside the degree ``p + q`` frame of ``A`` (no module factor)."""
    key = ("D", p, q, g)

    def go():
        A, B = fd.total, fd.base
        n = p + q
        if p < 0 or q < 0 or n > A.top_degree:
            return el.zero_space(A.rank(n) if 0 <= n <= A.top_degree else 0)
        xis = B.frame_indices(p)
        ldiv = _left_division(fd)
        hs = sorted({ldiv[(b, g)] for b in range(B.S) if (b, g) in ldiv})
        ints, fracs = [], []
        for h in hs:
            for xi in xis:
                wi = _wedge_int(fd, xi, h, q)
                if wi is not None:
                    ints.append(wi[0])
                else:
                    fracs.append(wedge_matrix(fd, xi, h, q))
        if fracs or not ints:
            rows = [r for m in fracs + [el.as_matrix(m) for m in ints] for r in m]
            return el.span(rows, A.rank(n))
        # the rows only matter up to a common positive scale
        return el.span_integer(np.vstack(ints), A.rank(n))
    return _memo(fd, key, go)


def _tensor_space(sp, r):
    if r == 1:
        return sp
    if sp.rank == 0:
        return el.zero_space(sp.ambient_dim * r)
    return el.span(el.kron(sp.basis, el.identity(r)), sp.ambient_dim * r)


def filtration_space(fd, m, n, g):
    """``F^m C^n(g) = D_{m,n-m}(g) ⊗ E``."""
    A = fd.total
    r = fd.rank
    if n < 0 or n > A.top_degree:
        return el.zero_space(0)
    if m <= 0:
        return el.full_space(A.rank(n) * r)
    if m > n:
        return el.zero_space(A.rank(n) * r)
    return _memo(fd, ("F", m, n, g), lambda: _tensor_space(d_space(fd, m, n - m, g), r))


def n_space(fd, p, q, g):
    return _memo(fd, ("N", p, q, g), lambda: el.quotient(d_space(fd, p, q, g), d_space(fd, p + 1, q - 1, g)))


def m_space(fd, p, q, g):
    n = p + q
    return _memo(fd, ("M", p, q, g),
                 lambda: el.quotient(filtration_space(fd, p, n, g), filtration_space(fd, p + 1, n, g)))


@dataclass(frozen=True, eq=False)
class SectorFamily:
    """One of ``D``/``N``/``M`` at ``(p, q)``, as a presentation per ``A``-sector."""

    p: int
    q: int
    spaces: dict

    @property
    def dims(self):
        return {g: (sp.dim if hasattr(sp, "divisor") else sp.rank) for g, sp in self.spaces.items()}

    @property
    def total_dim(self):
        return sum(self.dims.values())

    @property
    def frame_rank(self):
        """The common per-sector dimension, or ``None`` if sectors differ."""
        vals = set(self.dims.values())
        return vals.pop() if len(vals) == 1 else None


def build_spaces(fd, p, q):
    A = fd.total
    if p < 0 or q < 0 or p + q > A.top_degree:
        raise ValueError(f"({p}, {q}) is outside the degree range of the total DGA")
    D = SectorFamily(p, q, {g: d_space(fd, p, q, g) for g in range(A.S)})
    N = SectorFamily(p, q, {g: n_space(fd, p, q, g) for g in range(A.S)})
    M = SectorFamily(p, q, {g: m_space(fd, p, q, g) for g in range(A.S)})
    return D, N, M


def in_window_bidegrees(fd):
    top = fd.top
    return [(p, n - p) for n in range(top + 1) for p in range(n + 1)]


def n_ranks(fd):
    """``(p, q) -> per-sector rank of N_{p,q}`` (``None`` where sectors disagree)."""
    return {pq: build_spaces(fd, *pq)[1].frame_rank for pq in in_window_bidegrees(fd)}


# ---------------------------------------------------------------------------
# the fibration criterion
# ---------------------------------------------------------------------------


def _push(fd, xi, g, x, n_from):
    """Frame vector of ``ι_*(1.ξ) ∧ (g.x)`` with ``x`` a degree-``n_from`` frame vector of ``A``."""
    return np.asarray(x, dtype=object) @ wedge_matrix(fd, xi, g, n_from)


def wedge_map(fd, p, q, g, quotient=None):
    """Matrix of ``ξ ⊗ [x] -> [ι_*ξ ∧ x]`` from ``Λ^p B ⊗ N_{0,q}(g)`` to ``N_{p,q}(g)``.

    Rows are indexed ``ξ``-major over the base frame of degree ``p`` and the
    representatives of the source quotient.  With ``quotient=m_space`` the
    same map is built on ``M`` (module factor included).
    """
    space = quotient or n_space
    r = fd.rank if quotient is m_space else 1
    B = fd.base
    src = space(fd, 0, q, g)
    dst = space(fd, p, q, g)
    xis = B.frame_indices(p)
    out = el.zeros(len(xis) * src.dim, dst.dim)
    for a, xi in enumerate(xis):
        for i, x in enumerate(src.representatives):
            v = _push_module(fd, xi, g, x, q, r)
            if not dst.total.contains_vector(v):
                raise LerayError(f"ι_*ξ ∧ x escapes D_{{{p},{q}}} at sector {fd.total.sectors[g]}")
            out[a * src.dim + i, :] = dst.coordinates(v)
        for x in src.divisor.basis:
            v = _push_module(fd, xi, g, x, q, r)
            if not dst.divisor.contains_vector(v):
                raise LerayError(f"wedge map not well defined at ({p}, {q}), sector {fd.total.sectors[g]}")
    return out


def _push_module(fd, xi, g, x, q, r):
    if r == 1:
        return _push(fd, xi, g, x, q)
    parts = [_push(fd, xi, g, x[i::r], q) for i in range(r)]
    out = np.empty(len(parts[0]) * r, dtype=object)
    for i in range(r):
        out[i::r] = parts[i]
    return out


def fibration_check(fd):
    """Bijectivity of ``Ω^p B ⊗_B N_{0,q} -> N_{p,q}`` at every in-window ``(p, q)`` and sector."""
    def go():
        rep = Report("fibration")
        A = fd.total
        cells = {}
        for (p, q) in in_window_bidegrees(fd):
            ok = True
            for g in range(A.S):
                try:
                    m = wedge_map(fd, p, q, g)
                except LerayError as exc:
                    rep.fail(str(exc), cell=[p, q], sector=A.sectors[g])
                    ok = False
                    break
                rows, cols = m.shape
                rk = el.rank(m) if rows and cols else 0
                if not (rows == cols == rk):
                    rep.fail("wedge map is not an isomorphism", cell=[p, q], sector=A.sectors[g],
                             source_dim=rows, target_dim=cols, rank=rk)
                    ok = False
                    break
            cells[(p, q)] = ok
        rep.cells = cells
        return rep
    return _memo(fd, "fib", go)


# ---------------------------------------------------------------------------
# the Leray filtration
# ---------------------------------------------------------------------------


def _nabla(fd):
    return _memo(fd, "nabla", lambda: [extend_connection(fd.module, n) for n in range(fd.top + 1)])


def sector_block(fd, g):
    A = fd.total
    c = module_sector_complex(fd.module, g, _nabla(fd))
    levels = tuple(tuple(filtration_space(fd, m, n, g) for n in range(A.top_degree + 1))
                   for m in range(A.top_degree + 1))
    return FilteredComplex(c, Filtration(levels))


def build_leray_filtration(fd):
    """``Ω^•A ⊗ E`` with ``∇^[•]`` and ``F^m = ι_*Ω^m B ∧ Ω^{•-m} A ⊗ E``, one block per sector."""
    if not fd.module.sector_diagonal:
        raise ValueError("the Leray filtration is built sector by sector; the connection mixes sectors")

    def go():
        A = fd.total
        blocks = tuple(sector_block(fd, g) for g in range(A.S))
        return FilteredSum(blocks, labels=tuple(A.sectors), top=A.top_degree)
    return _memo(fd, "filt", go)


def leray_filtered_complex(fd):
    """The same filtered complex assembled into one (for export)."""
    return assemble(build_leray_filtration(fd))


# ---------------------------------------------------------------------------
# the fiber complex and Ĥ
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FiberComplex:
    spaces: dict  # (g, q) -> M_{0,q}(g)
    d: dict  # (g, q) -> matrix M_{0,q}(g) -> M_{0,q+1}(g)
    report: Report


def _action(fd, b, g, q):
    """Left multiplication by ``ι(b)`` from ``M_{0,q}(g)`` to ``M_{0,q}(ι(b) g)``, or None."""
    A = fd.total
    x = int(fd.iota.sector_map[b])
    t = int(A.prod[x, g]) if x >= 0 else -1
    if t < 0:
        return None, None
    # ι(b).(g.ω) = (ι(b) g).ω in frame coordinates
    src, dst = m_space(fd, 0, q, g), m_space(fd, 0, q, t)
    return t, el.induced_map(el.identity(src.ambient_dim), src, dst)


def fiber_complex(fd, check=True):
    def go():
        A = fd.total
        top = A.top_degree
        nab = _nabla(fd)
        spaces, d = {}, {}
        for g in range(A.S):
            for q in range(top + 1):
                spaces[(g, q)] = m_space(fd, 0, q, g)
            for q in range(top + 1):
                blk = nab[q].blocks.get((g, g))
                src = spaces[(g, q)]
                dst = spaces[(g, q + 1)] if q < top else el.quotient(el.zero_space(0), el.zero_space(0))
                if blk is None or q == top:
                    d[(g, q)] = el.zeros(src.dim, dst.dim)
                    continue
                try:
                    d[(g, q)] = el.induced_map(blk, src, dst)
                except el.NotWellDefined as exc:
                    raise LerayError(f"[∇^[{q}]] not well defined at sector {A.sectors[g]}") from exc
        rep = Report("fiber")
        if check:
            _check_b_linear(fd, spaces, d, rep)
        return FiberComplex(spaces, d, rep)
    return _memo(fd, "fiber", go)


def _check_b_linear(fd, spaces, d, rep):
    """Each fiber differential commutes with the ``B``-action (all in-window base sectors)."""
    A, B = fd.total, fd.base
    top = A.top_degree
    for b in range(B.S):
        if b == B.unit:
            continue
        for g in range(A.S):
            acts = []
            for q in range(top + 1):
                t, L = _action(fd, b, g, q)
                if t is None:
                    break
                acts.append((t, L))
            if len(acts) < top + 1:
                continue
            for q in range(top):
                t, L = acts[q]
                _, L1 = acts[q + 1]
                if not el.mat_equal(el.matmul(L, d[(t, q)]), el.matmul(d[(g, q)], L1)):
                    rep.fail("fiber differential is not B-linear", base_sector=B.sectors[b],
                             sector=A.sectors[g], degree=q)
                    return


@dataclass(frozen=True, eq=False)
class HatH:
    q: int
    classes: dict  # sector -> QuotientPresentation inside M_{0,q}(g) coordinates
    certificate: dict = None  # {"orbits": [(g0, dim)], "rank": r} when Ĥ_q is free over B

    @property
    def dims(self):
        return {g: c.dim for g, c in self.classes.items()}

    @property
    def total_dim(self):
        return sum(self.dims.values())

    @property
    def rank(self):
        return self.certificate["rank"] if self.certificate else None


def _orbits(fd):
    def go():
        A, B = fd.total, fd.base
        parent = list(range(A.S))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x
        for b in range(B.S):
            x = int(fd.iota.sector_map[b])
            if x < 0:
                continue
            for g in range(A.S):
                t = int(A.prod[x, g])
                if t >= 0:
                    ra, rb = find(g), find(t)
                    if ra != rb:
                        parent[max(ra, rb)] = min(ra, rb)
        orbits = {}
        for g in range(A.S):
            orbits.setdefault(find(g), []).append(g)
        return [sorted(v) for _, v in sorted(orbits.items())]
    return _memo(fd, "orbits", go)


def _translates(fd, g0):
    """``b -> ι(b) g0`` over base sectors, or None if it leaves the window."""
    A = fd.total
    out = []
    for b in range(fd.base.S):
        x = int(fd.iota.sector_map[b])
        t = int(A.prod[x, g0]) if x >= 0 else -1
        if t < 0:
            return None
        out.append(t)
    return out


def _class_action(fd, q, b, g, H):
    """Induced ``Ĥ_q(g) -> Ĥ_q(ι(b) g)`` via the action on representatives."""
    t, L = _action(fd, b, g, q)
    src, dst = H[g], H[t]
    m = el.zeros(src.dim, dst.dim)
    for i, y in enumerate(src.representatives):
        z = y @ L if L.shape[0] else y
        if not dst.total.contains_vector(z):
            raise LerayError("B-action does not preserve fiber cocycles")
        m[i, :] = dst.coordinates(z)
    for y in src.divisor.basis:
        if not dst.divisor.contains_vector(y @ L):
            raise LerayError("B-action does not preserve fiber coboundaries")
    return t, m


def hat_h(fd, q):
    """``Ĥ_q``: cohomology of the fiber complex, with a freeness certificate when one exists."""
    return _memo(fd, ("hatH", q), lambda: _hat_h(fd, q))


def _hat_h(fd, q):
    A, B = fd.total, fd.base
    fc = fiber_complex(fd)
    top = A.top_degree
    classes = {}
    for g in range(A.S):
        if q > top:
            classes[g] = el.quotient(el.zero_space(0), el.zero_space(0))
            continue
        out = fc.d[(g, q)]
        K = el.kernel(out) if out.shape[0] else el.zero_space(0)
        inc = fc.d[(g, q - 1)] if q > 0 else None
        I = el.image(inc) if inc is not None and inc.shape[0] else el.zero_space(K.ambient_dim)
        classes[g] = el.quotient(K, I)
    cert = {"orbits": [], "rank": 0}
    for orbit in _orbits(fd):
        if all(classes[g].dim == 0 for g in orbit):
            continue
        base = None
        for g0 in orbit:
            tr = _translates(fd, g0)
            if tr is not None and sorted(tr) == orbit and len(set(tr)) == len(tr):
                base = g0
                break
        if base is None:
            cert = None
            break
        dim0 = classes[base].dim
        for b in range(B.S):
            t, m = _class_action(fd, q, b, base, classes)
            if m.shape != (dim0, dim0) or (dim0 and el.rank(m) != dim0):
                cert = None
                break
        if cert is None:
            break
        cert["orbits"].append((base, dim0))
        cert["rank"] += dim0
    return HatH(q, classes, cert)


# ---------------------------------------------------------------------------
# ∇_q
# ---------------------------------------------------------------------------


def _decompose(fd, q, g, x):
    """Run the ∇_q algorithm on a fiber cocycle ``x`` of ``C^q(g)``.

    Returns a ``(base degree-1 frame) x Ĥ_q(g)`` coefficient matrix: row ``η`` holds
    the class of the ``y_η`` in ``∇^[q] x = Σ ι_*η ∧ y_η  (mod F^2)``.
    """
    A, B = fd.total, fd.base
    nab = _nabla(fd)
    blk = nab[q].blocks.get((g, g))
    z = x @ blk if blk is not None and blk.shape[1] else np.array([], dtype=object)
    H = hat_h(fd, q).classes[g]
    etas = B.frame_indices(1)
    if q + 1 > A.top_degree:
        return el.zeros(len(etas), H.dim)
    F1 = filtration_space(fd, 1, q + 1, g)
    if not F1.contains_vector(z):
        raise LerayError(f"∇^[{q}] of a fiber cocycle leaves F^1 at sector {A.sectors[g]}")
    M1 = m_space(fd, 1, q, g)
    c1 = np.array(M1.coordinates(z), dtype=object)
    iso = _memo(fd, ("wedge_m", 1, q, g), lambda: wedge_map(fd, 1, q, g, quotient=m_space))
    try:
        inv = specseq.inverse(iso)
    except specseq.EngineError as exc:
        raise LerayError(f"decomposition basis is not unique at sector {A.sectors[g]} (q={q})") from exc
    c0 = c1 @ inv if len(c1) else np.array([], dtype=object)
    M0 = m_space(fd, 0, q, g)
    out = el.zeros(len(etas), H.dim)
    fd_mat = fiber_complex(fd).d[(g, q)]
    for a in range(len(etas)):
        y = c0[a * M0.dim:(a + 1) * M0.dim]
        if fd_mat.shape[1] and not el.is_zero(y @ fd_mat):
            raise LerayError(f"y_η is not a fiber cocycle at sector {A.sectors[g]} (q={q})")
        out[a, :] = H.coordinates(y)
    return out


def _representative(fd, q, g, cls):
    """Lift a class of ``Ĥ_q(g)`` (a vector in ``M_{0,q}(g)`` coordinates) to ``C^q(g)``."""
    M0 = m_space(fd, 0, q, g)
    return cls @ M0.representatives if M0.dim else np.array([Q0] * M0.ambient_dim, dtype=object)


@dataclass(frozen=True, eq=False)
class NablaQ:
    q: int
    basis: tuple  # (A-sector, class index) per free generator of Ĥ_q
    matrix: np.ndarray  # rank x (base degree-1 frame * rank): ∇_q(c_i) = Σ η ⊗ c_j
    module: ConnectionModule  # Ĥ_q as a free module over B with this connection
    report: Report


def nabla_q(fd, q, seed=0, trials=3):
    return _memo(fd, ("nablaq", q), lambda: _nabla_q(fd, q, seed, trials))


def _nabla_q(fd, q, seed, trials):
    A, B = fd.total, fd.base
    hh = hat_h(fd, q)
    if hh.certificate is None:
        raise LerayError(f"Ĥ_{q} has no freeness certificate")
    if not fd.right_flat[1 if len(fd.right_flat) > 1 else 0]:
        raise LerayError("Ω^1 B must be right flat")
    rep = Report(f"nabla_{q}")
    etas = B.frame_indices(1)
    basis = []
    for g0, dim in hh.certificate["orbits"]:
        basis.extend((g0, i) for i in range(dim))
    r = len(basis)
    pos = {bc: i for i, bc in enumerate(basis)}
    mat = el.zeros(r, len(etas) * r)
    rng = random.Random(seed)
    nab = _nabla(fd)
    for i, (g0, ci) in enumerate(basis):
        H = hh.classes[g0]
        x = _representative(fd, q, g0, H.representatives[ci])
        coef = _decompose(fd, q, g0, x)
        # independence of the representative: add coboundaries and F^1 elements
        for _ in range(trials):
            y = x.copy()
            if q > 0 and nab[q - 1].blocks.get((g0, g0)) is not None:
                src = nab[q - 1].blocks[(g0, g0)]
                c = np.array([el.Fraction(rng.randint(-3, 3)) for _ in range(src.shape[0])], dtype=object)
                if len(c):
                    y = y + c @ src
            F1 = filtration_space(fd, 1, q, g0)
            if F1.rank:
                c = np.array([el.Fraction(rng.randint(-3, 3)) for _ in range(F1.rank)], dtype=object)
                y = y + c @ F1.basis
            if not el.mat_equal(_decompose(fd, q, g0, y), coef):
                rep.fail("∇_q depends on the representative", sector=A.sectors[g0], q=q)
        for a in range(len(etas)):
            for cj in range(H.dim):
                mat[i, a * r + pos[(g0, cj)]] = coef[a, cj]
    forms = []
    for i in range(r):
        row = []
        for j in range(r):
            v = np.array([Q0] * B.F, dtype=object)
            for a, e in enumerate(etas):
                v[e] = mat[i, a * r + j]
            row.append(form(B, {B.unit: v}))
        forms.append(tuple(row))
    mod = ConnectionModule(B, r, tuple(forms), name=f"hatH_{q}")
    _check_nabla_leibniz(fd, q, hh, basis, mod, rep)
    return NablaQ(q, tuple(basis), mat, mod, rep)


def _check_nabla_leibniz(fd, q, hh, basis, mod, rep):
    """``∇_q(b.c) = db ⊗ c + b.∇_q(c)`` for every base sector ``b`` and free generator ``c``."""
    A, B = fd.total, fd.base
    etas = B.frame_indices(1)
    for b in range(B.S):
        sinv = el.inverse(B.commute[b])
        alpha_b = B.d[b][0, :]
        for i, (g0, ci) in enumerate(basis):
            t, act = _class_action(fd, q, b, g0, hh.classes)
            x = _representative(fd, q, t, act[ci] @ hh.classes[t].representatives
                                if hh.classes[t].dim else np.array([], dtype=object))
            got = _decompose(fd, q, t, x)
            want = el.zeros(len(etas), hh.classes[t].dim)
            moved = (alpha_b @ sinv)[etas]
            for a in range(len(etas)):
                want[a, :] = want[a, :] + moved[a] * act[ci]
            for j, (g1, cj) in enumerate(basis):
                if g1 != g0:
                    continue
                theta = mod.unit_form(i, j) @ sinv
                for a, e in enumerate(etas):
                    if theta[e] != 0:
                        want[a, :] = want[a, :] + theta[e] * act[cj]
            if not el.mat_equal(got, want):
                rep.fail("∇_q violates the Leibniz rule over B", base_sector=B.sectors[b],
                         generator=[A.sectors[g0], ci], q=q)
                return


def nabla_q_curvature(fd, q):
    nq = nabla_q(fd, q)
    cr = curvature(nq.module)
    rep = Report(f"curvature_{q}")
    if not cr.is_flat:
        rep.fail("∇_q has nonzero curvature", q=q, witness=cr.witness)
    if not cr.squares_ok:
        rep.fail("∇_q fails ∇^[n+1]∘∇^[n] = id∧R", q=q)
    return rep


# ---------------------------------------------------------------------------
# pages and the cross-check
# ---------------------------------------------------------------------------


def engine_run(fd, r_max=4):
    return _memo(fd, ("run", r_max), lambda: specseq.run(build_leray_filtration(fd), r_max=r_max))


def first_page_prediction(fd):
    """``dim Ω^p B ⊗_B Ĥ_q`` summed over sectors: frame rank times total ``Ĥ_q``."""
    B = fd.base
    out = {}
    for (p, q) in in_window_bidegrees(fd):
        out[(p, q)] = B.rank(p) * hat_h(fd, q).total_dim if p <= B.top_degree else 0
    return out


def second_page(fd):
    """``H^p(B; Ĥ_q, ∇_q)`` or ``None`` when some ``Ĥ_q`` has no freeness certificate."""
    def go():
        top = fd.top
        out = {pq: 0 for pq in in_window_bidegrees(fd)}
        for q in range(top + 1):
            hh = hat_h(fd, q)
            if hh.certificate is None:
                return None
            if hh.certificate["rank"] == 0:
                continue
            h = sheaf_cohomology(nabla_q(fd, q).module)
            for p, x in enumerate(h.dims):
                if (p, q) in out:
                    out[(p, q)] = x
                elif x:
                    raise LerayError(f"second page has a class outside the degree range at {(p, q)}")
        return out
    return _memo(fd, "E2", go)


@dataclass
class CrossCheck(Report):
    e1: dict = field(default_factory=dict)
    e1_predicted: dict = field(default_factory=dict)
    e2: dict = field(default_factory=dict)
    e2_predicted: dict = None
    limit: dict = field(default_factory=dict)
    totals: tuple = ()
    sheaf: tuple = ()


def _dims_equal(a, b):
    keys = set(a) | set(b)
    return all(a.get(k, 0) == b.get(k, 0) for k in keys)


def cross_check(fd, r_max=4):
    run = engine_run(fd, r_max)
    rep = CrossCheck("cross_check")
    rep.e1 = run.dims(1)
    rep.e1_predicted = first_page_prediction(fd)
    if not _dims_equal(rep.e1, rep.e1_predicted):
        rep.fail("E_1 differs from Ω^p B ⊗_B Ĥ_q")
    rep.e2 = run.dims(2)
    rep.e2_predicted = second_page(fd)
    if rep.e2_predicted is not None and not _dims_equal(rep.e2, rep.e2_predicted):
        rep.fail("E_2 differs from H^p(B; Ĥ_q, ∇_q)")
    conv = specseq.convergence_check(run)
    rep.merge(conv)
    rep.limit = run.limit
    rep.totals = conv.cohomology
    rep.sheaf = sheaf_cohomology(fd.module).dims
    if tuple(rep.totals) != tuple(rep.sheaf):
        rep.fail("E_∞ totals differ from H*(A; E, ∇)", totals=list(rep.totals), sheaf=list(rep.sheaf))
    return rep


def anti_diagonal_totals(dims, top):
    return tuple(sum(dims.get((p, n - p), 0) for p in range(n + 1)) for n in range(top + 1))
