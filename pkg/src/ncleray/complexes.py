"""Cochain complexes, their cohomology, and decreasing filtrations.

A complex is bounded: degrees ``0..max_degree`` carry the spaces ``C^n`` of
dimension ``dims[n]`` and ``d[n]`` is the ``dims[n] x dims[n+1]`` matrix of
``C^n -> C^{n+1}``.  A filtration stores ``F^m C^n`` extensionally as
subspaces for ``m = 0..depth-1``; all deeper levels are zero.
"""

from dataclasses import dataclass, field

import numpy as np

from . import exactlin as el


@dataclass
class Report:
    """Outcome of a validation pass."""

    name: str
    ok: bool = True
    failures: list = field(default_factory=list)

    def fail(self, message, **where):
        self.ok = False
        self.failures.append({"message": message, **where})
        return self

    def merge(self, other):
        if not other.ok:
            self.ok = False
            self.failures.extend(other.failures)
        return self

    def __bool__(self):
        return self.ok


class InvalidComplex(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CochainComplex:
    dims: tuple
    d: tuple
    basis_labels: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))
        d = tuple(el.as_matrix(m) for m in self.d)
        object.__setattr__(self, "d", d)
        if len(d) != max(len(self.dims) - 1, 0):
            raise InvalidComplex(f"{len(self.dims)} degrees need {len(self.dims) - 1} differentials, got {len(d)}")
        for n, m in enumerate(d):
            if m.shape != (self.dims[n], self.dims[n + 1]):
                raise InvalidComplex(f"d[{n}] has shape {m.shape}, expected {(self.dims[n], self.dims[n + 1])}")

    @property
    def max_degree(self):
        return len(self.dims) - 1

    def dim(self, n):
        return self.dims[n] if 0 <= n <= self.max_degree else 0

    def differential(self, n):
        """``d : C^n -> C^{n+1}``, with zero maps outside the stored range."""
        if 0 <= n < self.max_degree:
            return self.d[n]
        return el.zeros(self.dim(n), self.dim(n + 1))

    def full(self, n):
        return el.full_space(self.dim(n))

    def zero(self, n):
        return el.zero_space(self.dim(n))


def validate_complex(c):
    """Check ``d_{n+1} d_n = 0``; failures carry the degree and a witness row."""
    rep = Report("complex")
    for n in range(c.max_degree - 1):
        prod = el.matmul(c.d[n], c.d[n + 1])
        for i, row in enumerate(prod):
            if not el.is_zero(row):
                rep.fail("d∘d != 0", degree=n, witness=i)
                break
    return rep


@dataclass(frozen=True, eq=False)
class CohomologyResult:
    classes: tuple  # QuotientPresentation per degree

    @property
    def dims(self):
        return tuple(q.dim for q in self.classes)


def cohomology(c, check=True):
    if check:
        rep = validate_complex(c)
        if not rep:
            raise InvalidComplex(f"not a complex: {rep.failures[0]}")
    classes = []
    for n in range(c.max_degree + 1):
        z = el.kernel(c.differential(n))
        b = el.image(c.differential(n - 1)) if n > 0 else c.zero(n)
        classes.append(el.quotient(z, b))
    return CohomologyResult(tuple(classes))


def euler_characteristic(dims):
    return sum((-1) ** n * x for n, x in enumerate(dims))


def shift(c, k):
    """Prepend ``k`` zero-dimensional degrees."""
    dims = (0,) * k + c.dims
    d = tuple(el.zeros(dims[n], dims[n + 1]) for n in range(k)) + c.d
    return CochainComplex(dims, d)


# ---------------------------------------------------------------------------
# filtrations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Filtration:
    levels: tuple  # levels[m][n] = F^m C^n

    @property
    def depth(self):
        return len(self.levels)


def trivial_filtration(c):
    return Filtration((tuple(c.full(n) for n in range(c.max_degree + 1)),))


def filtration_space(c, f, m, n):
    """Clamped access used by the spectral sequence engine."""
    if n < 0 or n > c.max_degree:
        return el.zero_space(0)
    if m <= 0:
        return c.full(n)
    if m > n or m >= f.depth:
        return c.zero(n)
    return f.levels[m][n]


def validate_filtration(c, f):
    """Check d-stability, monotonicity and boundedness exactly."""
    rep = Report("filtration")
    if f.depth == 0:
        return rep.fail("empty filtration", condition=3)
    for m, row in enumerate(f.levels):
        if len(row) != c.max_degree + 1:
            return rep.fail("level has the wrong number of degrees", m=m)
        for n, sp in enumerate(row):
            if sp.ambient_dim != c.dims[n]:
                return rep.fail("subspace ambient does not match C^n", m=m, n=n)
    for n in range(c.max_degree + 1):
        if not f.levels[0][n].is_full():
            rep.fail("F^0 C^n != C^n", condition=3, m=0, n=n)
    for m in range(f.depth):
        for n in range(c.max_degree + 1):
            sp = f.levels[m][n]
            if m > n and not sp.is_zero():
                rep.fail("F^m C^n != 0 for m > n", condition=3, m=m, n=n, witness=list(map(str, sp.basis[0])))
            if m + 1 < f.depth:
                w = el.is_subspace(f.levels[m + 1][n], sp)
                if w is not None:
                    rep.fail("F^{m+1} not inside F^m", condition=2, m=m, n=n, witness=list(map(str, w)))
            if n < c.max_degree and not sp.is_zero():
                target = f.levels[m][n + 1]
                for row in sp.basis:
                    if not target.contains_vector(row @ c.d[n]):
                        rep.fail("d(F^m C^n) not inside F^m C^{n+1}", condition=1, m=m, n=n,
                                 witness=list(map(str, row)))
                        break
    return rep


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    complex: CochainComplex
    filtration: Filtration

    def F(self, m, n):
        return filtration_space(self.complex, self.filtration, m, n)

    @property
    def max_degree(self):
        return self.complex.max_degree


def quotient_complex(fc, p):
    """The complex ``F^p C / F^{p+1} C`` with its induced differential."""
    c = fc.complex
    qs = [el.quotient(fc.F(p, n), fc.F(p + 1, n)) for n in range(c.max_degree + 1)]
    d = [el.induced_map(c.d[n], qs[n], qs[n + 1]) for n in range(c.max_degree)]
    return CochainComplex(tuple(q.dim for q in qs), tuple(d)), qs


def subcomplex(fc, p):
    """``F^p C`` as a complex in its own echelon bases, plus those bases."""
    c = fc.complex
    spaces = [fc.F(p, n) for n in range(c.max_degree + 1)]
    d = []
    for n in range(c.max_degree):
        src, dst = spaces[n], spaces[n + 1]
        m = el.zeros(src.rank, dst.rank)
        for i, row in enumerate(src.basis):
            m[i, :] = dst.coordinates(row @ c.d[n])
        d.append(m)
    return CochainComplex(tuple(s.rank for s in spaces), tuple(d)), spaces


# ---------------------------------------------------------------------------
# direct sums
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FilteredSum:
    """A direct sum of filtered complexes, processed block by block.

    ``offsets[b][n]`` are the global coordinates of block ``b`` in degree ``n``
    (only needed to reassemble a single complex).
    """

    blocks: tuple
    labels: tuple = None
    offsets: tuple = None
    top: int = None  # kept so an empty sum still knows its degree range

    @property
    def max_degree(self):
        if self.top is not None:
            return self.top
        return max((b.max_degree for b in self.blocks), default=0)


def _block_index_sets(c, rows):
    """Connected components of the support graph of ``d`` and the filtration rows.

    ``rows[m][n]`` is any matrix whose rows span ``F^m C^n``.
    """
    offs = np.cumsum((0,) + c.dims)
    total = int(offs[-1])
    parent = list(range(total))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for n, m in enumerate(c.d):
        for i, j in zip(*np.nonzero(m != 0)):
            union(int(offs[n] + i), int(offs[n + 1] + j))
    for level in rows:
        for n, basis in enumerate(level):
            for row in basis:
                nz = [int(offs[n] + j) for j in np.flatnonzero(row != 0)]
                for j in nz[1:]:
                    union(nz[0], j)
    comps = {}
    for x in range(total):
        comps.setdefault(find(x), []).append(x)
    out = []
    for members in sorted(comps.values()):
        per_degree = []
        for n in range(c.max_degree + 1):
            lo, hi = offs[n], offs[n + 1]
            per_degree.append([x - int(lo) for x in members if lo <= x < hi])
        out.append(per_degree)
    return out


def split_blocks(fc):
    """Decompose a filtered complex into independent blocks.

    Two basis vectors share a block when some differential entry or some
    filtration basis row links them.  The spectral sequence of the sum is the
    sum of the blocks' spectral sequences.
    """
    rows = [[sp.basis for sp in level] for level in fc.filtration.levels]
    return split_rows(fc.complex, rows)


def split_rows(c, rows):
    """:func:`split_blocks` from raw spanning rows, without reducing the large matrices.

    Every row lies inside one block, so each block's filtration is spanned
    by the restrictions of the rows it supports.
    """
    blocks = []
    offsets = []
    for per_degree in _block_index_sets(c, rows):
        dims = tuple(len(ix) for ix in per_degree)
        d = tuple(c.d[n][np.ix_(per_degree[n], per_degree[n + 1])] if dims[n] and dims[n + 1]
                  else el.zeros(dims[n], dims[n + 1]) for n in range(c.max_degree))
        sub = CochainComplex(dims, d)
        levels = tuple(tuple(_restrict_rows(lvl[n], per_degree[n]) for n in range(c.max_degree + 1))
                       for lvl in rows)
        blocks.append(FilteredComplex(sub, Filtration(levels)))
        offsets.append(tuple(tuple(ix) for ix in per_degree))
    return FilteredSum(tuple(blocks), offsets=tuple(offsets), top=c.max_degree)


def _restrict_rows(basis, idx):
    if not len(idx):
        return el.zero_space(0)
    keep = [row for row in basis if any(row[j] != 0 for j in idx)]
    if not keep:
        return el.zero_space(len(idx))
    return el.span([[row[j] for j in idx] for row in keep], len(idx))


def assemble(fs):
    """Reassemble a :class:`FilteredSum` into one filtered complex."""
    top = fs.max_degree
    dims = [sum(b.complex.dim(n) for b in fs.blocks) for n in range(top + 1)]
    starts = []
    acc = [0] * (top + 1)
    for b in fs.blocks:
        starts.append(tuple(acc))
        acc = [a + b.complex.dim(n) for n, a in enumerate(acc)]
    d = [el.zeros(dims[n], dims[n + 1]) for n in range(top)]
    for b, s in zip(fs.blocks, starts):
        for n in range(min(top, b.max_degree)):
            m = b.complex.d[n]
            d[n][s[n]:s[n] + m.shape[0], s[n + 1]:s[n + 1] + m.shape[1]] = m
    depth = max(b.filtration.depth for b in fs.blocks)
    levels = []
    for m in range(depth):
        level = []
        for n in range(top + 1):
            rows = []
            for b, s in zip(fs.blocks, starts):
                sp = b.F(m, n) if n <= b.max_degree else el.zero_space(0)
                for row in sp.basis:
                    v = [el.Q0] * dims[n]
                    v[s[n]:s[n] + len(row)] = list(row)
                    rows.append(v)
            # blocks occupy disjoint coordinates: the echelon rows, sorted by pivot, are already reduced
            rows.sort(key=lambda v: next(j for j, x in enumerate(v) if x != 0))
            level.append(el.Subspace(dims[n], el.as_matrix(rows) if rows else el.zeros(0, dims[n])))
        levels.append(tuple(level))
    return FilteredComplex(CochainComplex(tuple(dims), tuple(d)), Filtration(tuple(levels)))
