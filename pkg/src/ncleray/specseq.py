"""The spectral sequence of a filtered cochain complex.

Pages are computed from the closed formulas

    Z_r^{p,q} = F^p C^{p+q} ∩ d^{-1}(F^{p+r} C^{p+q+1})
    B_r^{p,q} = F^p C^{p+q} ∩ d(F^{p-r} C^{p+q-1})
    E_r^{p,q} = Z_r^{p,q} / (Z_{r-1}^{p+1,q-1} + B_{r-1}^{p,q})

with ``d_r`` the map induced by the single differential ``d``.  The recursion
``E_{r+1} = H(E_r, d_r)`` is kept as an independent second route
(:func:`turn_page`) and the two are compared cell by cell.
"""

from dataclasses import dataclass, field

from . import exactlin as el
from .complexes import (
    FilteredComplex,
    FilteredSum,
    Report,
    cohomology,
    quotient_complex,
    subcomplex,
    validate_complex,
    validate_filtration,
)


class EngineError(RuntimeError):
    """An identity that must hold for valid input failed: a bug, not bad data."""


class _Engine:
    """Memoised Z/B spaces of one filtered complex."""

    def __init__(self, fc):
        self.fc = fc
        self.c = fc.complex
        self.top = fc.max_degree
        self._pre = {}
        self._img = {}
        self._Z = {}
        self._B = {}
        self._cells = {}

    def _m(self, m, n):
        depth = self.fc.filtration.depth
        if m <= 0:
            return 0
        if m > n or m >= depth:
            return n + 1
        return m

    def F(self, m, n):
        return self.fc.F(m, n)

    def space(self, n):
        return el.zero_space(self.c.dim(n))

    def preimage(self, m, n):
        """``d^{-1}(F^m C^{n+1})`` inside ``C^n``."""
        key = (self._m(m, n + 1), n)
        if key not in self._pre:
            self._pre[key] = el.preimage(self.c.differential(n), self.F(m, n + 1))
        return self._pre[key]

    def image(self, m, n):
        """``d(F^m C^{n-1})`` inside ``C^n``."""
        key = (self._m(m, n - 1), n)
        if key not in self._img:
            if n <= 0:
                self._img[key] = self.space(n)
            else:
                self._img[key] = el.image_of(self.F(m, n - 1), self.c.differential(n - 1))
        return self._img[key]

    def Z(self, r, p, q):
        n = p + q
        if n < 0 or n > self.top:
            return self.space(n)
        key = (r, self._m(p, n), self._m(p + r, n + 1), n)
        if key not in self._Z:
            self._Z[key] = el.intersect(self.F(p, n), self.preimage(p + r, n))
        return self._Z[key]

    def B(self, r, p, q):
        n = p + q
        if n < 0 or n > self.top:
            return self.space(n)
        key = (self._m(p, n), self._m(p - r, n - 1), n)
        if key not in self._B:
            self._B[key] = el.intersect(self.F(p, n), self.image(p - r, n))
        return self._B[key]

    def cell(self, r, p, q):
        key = (r, p, q)
        if key not in self._cells:
            if p < 0 or q < 0 or p + q > self.top:
                n = p + q
                dim = self.c.dim(n) if 0 <= n <= self.top else 0
                z = el.zero_space(dim)
                self._cells[key] = el.quotient(z, z)
            else:
                top = self.Z(r, p, q)
                div = el.sum_spaces(self.Z(r - 1, p + 1, q - 1), self.B(r - 1, p, q))
                self._cells[key] = el.quotient(top, div)
        return self._cells[key]


def bidegrees(top):
    return [(p, n - p) for n in range(top + 1) for p in range(n + 1)]


@dataclass(frozen=True, eq=False)
class Page:
    """One page of one filtered complex.

    ``cells[(p, q)]`` presents ``E_r^{p,q}``; ``d[(p, q)]`` is the matrix of
    ``d_r : E_r^{p,q} -> E_r^{p+r, q-r+1}`` in representative coordinates.
    """

    r: int
    cells: dict
    d: dict
    engine: object = field(default=None, repr=False)

    @property
    def dims(self):
        return {pq: cell.dim for pq, cell in self.cells.items()}

    def target(self, p, q):
        return (p + self.r, q - self.r + 1)

    def d_squared_zero(self):
        for pq, m in self.d.items():
            nxt = self.d.get(self.target(*pq))
            if nxt is None or m.shape[0] == 0 or nxt.shape[1] == 0:
                continue
            if not el.is_zero(el.matmul(m, nxt)):
                return False
        return True

    def is_zero_differential(self):
        return all(el.is_zero(m) for m in self.d.values())


def _engine_for(src):
    if isinstance(src, _Engine):
        return src
    if isinstance(src, Page):
        return src.engine
    return _Engine(src)


def page(src, r):
    """``E_r`` of a :class:`FilteredComplex` (or of an engine already built for one)."""
    if r < 1:
        raise ValueError("pages start at r = 1")
    eng = _engine_for(src)
    c = eng.c
    cells = {}
    d = {}
    for (p, q) in bidegrees(eng.top):
        cells[(p, q)] = eng.cell(r, p, q)
    for (p, q), cell in cells.items():
        tp, tq = p + r, q - r + 1
        tgt = cells.get((tp, tq)) or eng.cell(r, tp, tq)
        try:
            d[(p, q)] = el.induced_map(c.differential(p + q), cell, tgt)
        except el.NotWellDefined as exc:
            raise EngineError(f"d_{r} not well defined at {(p, q)}") from exc
    return Page(r, cells, d, eng)


def boundary_spaces(src, r, p, q):
    """``(Z_r^{p,q}, B_r^{p,q})`` as subspaces of ``C^{p+q}``."""
    eng = _engine_for(src)
    return eng.Z(r, p, q), eng.B(r, p, q)


def inverse(m):
    try:
        return el.inverse(m)
    except ValueError as exc:
        raise EngineError(str(exc)) from exc


def turn_page(pg):
    """``E_{r+1} = H(E_r, d_r)``, compared against the directly computed page.

    The returned page's cells are ker/im presentations inside the
    coordinate spaces of ``E_r``; its differential is carried over from the
    direct page along the canonical isomorphism, which is checked to be
    bijective at every cell.
    """
    eng = pg.engine
    r = pg.r
    direct = page(eng, r + 1)
    incoming = {}
    for pq, m in pg.d.items():
        incoming[pg.target(*pq)] = m
    cells = {}
    phis = {}
    for (p, q), cell in pg.cells.items():
        out = pg.d[(p, q)]
        K = el.kernel(out)
        inc = incoming.get((p, q))
        I = el.image(inc) if inc is not None else el.zero_space(cell.dim)
        H = el.quotient(K, I)
        cells[(p, q)] = H
        nxt = direct.cells[(p, q)]
        phi = el.zeros(nxt.dim, H.dim)
        for i, x in enumerate(nxt.representatives):
            y = cell.coordinates(x)
            if not K.contains_vector(y):
                raise EngineError(f"E_{r + 1} class at {(p, q)} is not a d_{r}-cycle")
            phi[i, :] = H.coordinates(y)
        for x in nxt.divisor.basis:
            if not I.contains_vector(cell.coordinates(x)):
                raise EngineError(f"canonical map not well defined at {(p, q)}")
        if phi.shape[0] != phi.shape[1]:
            raise EngineError(f"dim E_{r + 1}^{(p, q)} = {nxt.dim} but H(E_{r}) has dim {H.dim}")
        phis[(p, q)] = phi
    d = {}
    for pq, m in direct.d.items():
        tgt = direct.target(*pq)
        if tgt in phis:
            d[pq] = el.matmul(el.matmul(inverse(phis[pq]), m), phis[tgt])
        else:
            d[pq] = el.zeros(cells[pq].dim, 0)
    return Page(r + 1, cells, d, eng)


# ---------------------------------------------------------------------------
# whole runs over direct sums
# ---------------------------------------------------------------------------


def _as_sum(src):
    if isinstance(src, FilteredSum):
        return src
    if isinstance(src, FilteredComplex):
        return FilteredSum((src,))
    raise TypeError(f"expected a filtered complex, got {type(src).__name__}")


def _add_dims(acc, dims):
    for pq, x in dims.items():
        acc[pq] = acc.get(pq, 0) + x


@dataclass(frozen=True, eq=False)
class SpectralRun:
    source: FilteredSum
    block_pages: tuple  # block_pages[b][r-1]
    stable_from: int

    r_last: int = 1

    def dims(self, r):
        acc = {pq: 0 for pq in bidegrees(self.source.max_degree)}
        for pages in self.block_pages:
            _add_dims(acc, pages[r - 1].dims)
        return acc

    @property
    def limit(self):
        return self.dims(self.r_last)

    def block_dims(self, b, r):
        return self.block_pages[b][r - 1].dims


def run(src, r_max=4, validate=True):
    """All pages up to ``max(r_max, max_degree + 1)`` for every block.

    From ``r = max_degree + 1`` on every differential leaves the first
    quadrant, so the last computed page is ``E_∞``.
    """
    fs = _as_sum(src)
    if validate:
        for b in fs.blocks:
            rep = validate_complex(b.complex).merge(validate_filtration(b.complex, b.filtration))
            if not rep:
                raise ValueError(f"invalid filtered complex: {rep.failures[0]}")
    r_inf = max(r_max, fs.max_degree + 1)
    block_pages = []
    stable = 1
    for b in fs.blocks:
        eng = _Engine(b)
        pages = [page(eng, r) for r in range(1, r_inf + 1)]
        if not pages[-1].is_zero_differential():
            raise EngineError("differential survives past the first-quadrant bound")
        s = len(pages)
        while s > 1 and pages[s - 2].is_zero_differential():
            s -= 1
        stable = max(stable, s)
        block_pages.append(tuple(pages))
    return SpectralRun(fs, tuple(block_pages), stable, r_inf)


def e1_via_quotients(fc):
    """``E_1^{p,q} = H^{p+q}(F^p C / F^{p+1} C)`` through explicit quotient complexes."""
    out = {}
    for p in range(fc.max_degree + 1):
        qc, _ = quotient_complex(fc, p)
        h = cohomology(qc).dims
        for n in range(p, fc.max_degree + 1):
            out[(p, n - p)] = h[n]
    return out


def filtered_cohomology(fc):
    """``dim F^p H^n`` where ``F^p H`` is the image of ``H(F^p C) -> H(C)``."""
    top = fc.max_degree
    H = cohomology(fc.complex)
    out = {}
    for p in range(top + 2):
        sub, spaces = subcomplex(fc, p)
        hs = cohomology(sub, check=False)
        for n in range(top + 1):
            cls = hs.classes[n]
            rows = []
            for rep in cls.representatives:
                x = rep @ spaces[n].basis if spaces[n].rank else None
                if x is not None:
                    rows.append(H.classes[n].coordinates(x))
            out[(p, n)] = el.rank(el.as_matrix(rows)) if rows else 0
    return H, out


@dataclass
class ConvergenceReport(Report):
    limit: dict = field(default_factory=dict)
    graded: dict = field(default_factory=dict)
    cohomology: tuple = ()


def convergence_check(sr):
    """``E_∞^{p,q}`` against ``F^p H^{p+q} / F^{p+1} H^{p+q}``, cellwise."""
    rep = ConvergenceReport("convergence")
    graded = {}
    totals = [0] * (sr.source.max_degree + 1)
    for b, fc in enumerate(sr.source.blocks):
        H, fh = filtered_cohomology(fc)
        for n, x in enumerate(H.dims):
            totals[n] += x
        top = fc.max_degree
        for n in range(top + 1):
            for p in range(n + 1):
                g = fh[(p, n)] - fh[(p + 1, n)]
                graded[(p, n - p)] = graded.get((p, n - p), 0) + g
    lim = sr.limit
    for pq in sorted(set(lim) | set(graded)):
        if lim.get(pq, 0) != graded.get(pq, 0):
            rep.fail("E_∞ differs from graded cohomology", cell=list(pq), e_inf=lim.get(pq, 0),
                     graded=graded.get(pq, 0))
    rep.limit = lim
    rep.graded = graded
    rep.cohomology = tuple(totals)
    return rep
