"""Exact linear algebra over the rationals.

Matrices are numpy object arrays holding :class:`fractions.Fraction` entries.
Vectors are rows and linear maps act on the right (``v @ M``) everywhere in
the package.  A :class:`Subspace` is stored by its reduced row-echelon basis,
which is canonical, so two subspaces are equal exactly when their bases are.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from . import kernels

Q0 = Fraction(0)
Q1 = Fraction(1)


class AmbientMismatch(ValueError):
    pass


class ContainmentError(ValueError):
    """A subspace was expected to contain another one and does not.

    ``witness`` is a vector in the smaller space that escapes the larger.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotWellDefined(ContainmentError):
    pass


# ---------------------------------------------------------------------------
# scalars and matrices
# ---------------------------------------------------------------------------


def parse_scalar(text):
    """Parse ``"p/q"`` or ``"n"`` into a Fraction; reject zero denominators."""
    if isinstance(text, bool):
        raise ValueError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"rationals are serialized as strings, got {text!r}")
    s = text.strip()
    num, sep, den = s.partition("/")
    try:
        n = int(num)
        q = int(den) if sep else 1
    except ValueError:
        raise ValueError(f"not a rational: {text!r}") from None
    if q == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(n, q)


def format_scalar(x):
    return str(Fraction(x))


def matrix(rows, ncols=None):
    """Build an object matrix of Fractions from nested sequences."""
    rows = [list(r) for r in rows]
    if not rows:
        return zeros(0, ncols or 0)
    out = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, r in enumerate(rows):
        if len(r) != out.shape[1]:
            raise ValueError("ragged matrix")
        for j, x in enumerate(r):
            out[i, j] = x if isinstance(x, Fraction) else Fraction(x)
    return out


def zeros(r, c):
    out = np.empty((r, c), dtype=object)
    out.fill(Q0)
    return out


def identity(n):
    out = zeros(n, n)
    for i in range(n):
        out[i, i] = Q1
    return out


def as_matrix(m):
    if isinstance(m, np.ndarray) and m.dtype == object and m.ndim == 2:
        return m
    if isinstance(m, np.ndarray):
        if m.ndim != 2:
            raise ValueError("expected a 2-d matrix")
        out = np.empty(m.shape, dtype=object)
        for idx, x in np.ndenumerate(m):
            out[idx] = Fraction(int(x)) if np.issubdtype(m.dtype, np.integer) else Fraction(x)
        return out
    return matrix(m)


def matmul(a, b):
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise AmbientMismatch(f"cannot multiply {a.shape} by {b.shape}")
    if a.shape[1] == 0:
        return zeros(a.shape[0], b.shape[1])
    return a @ b


def is_zero(m):
    return all(x == 0 for x in np.asarray(m).flat)


def mat_equal(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and all(x == y for x, y in zip(a.flat, b.flat))


def vstack(mats, ncols):
    mats = [m for m in mats if m.shape[0]]
    if not mats:
        return zeros(0, ncols)
    return np.vstack(mats)


def kron(a, b):
    a = as_matrix(a)
    b = as_matrix(b)
    out = zeros(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])
    for (i, j), x in np.ndenumerate(a):
        if x:
            out[i * b.shape[0]:(i + 1) * b.shape[0], j * b.shape[1]:(j + 1) * b.shape[1]] = x * b
    return out


# ---------------------------------------------------------------------------
# row reduction
# ---------------------------------------------------------------------------


def _integer_rows(m):
    """Scale each row by the lcm of its denominators; return Python int rows."""
    out = []
    for row in m:
        den = 1
        for x in row:
            q = x.denominator
            if q != 1:
                den = den * q // gcd(den, q)
        out.append([x.numerator * (den // x.denominator) for x in row])
    return out


def _rref_fraction(m):
    """Plain Gauss-Jordan over Fractions; the overflow fallback."""
    a = [list(r) for r in m]
    nr = len(a)
    nc = len(a[0]) if nr else 0
    rank = 0
    for col in range(nc):
        piv = next((i for i in range(rank, nr) if a[i][col] != 0), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        p = a[rank][col]
        a[rank] = [x / p for x in a[rank]]
        for i in range(nr):
            if i != rank and a[i][col] != 0:
                f = a[i][col]
                a[i] = [x - f * y for x, y in zip(a[i], a[rank])]
        rank += 1
        if rank == nr:
            break
    return matrix(a[:rank], nc) if rank else zeros(0, nc)


def _normalise(ints, rank, pivots, nc):
    out = np.empty((rank, nc), dtype=object)
    rows = ints[:rank].tolist()
    for i in range(rank):
        row = rows[i]
        p = row[pivots[i]]
        for j in range(nc):
            x = row[j]
            if x == 0:
                out[i, j] = Q0
            elif x == p:
                out[i, j] = Q1
            else:
                out[i, j] = Fraction(x, p)
    return out


def rref(m):
    """Reduced row-echelon form with zero rows dropped."""
    m = as_matrix(m)
    nr, nc = m.shape
    if nr == 0 or nc == 0 or is_zero(m):
        return zeros(0, nc)
    ints = _integer_rows(m)
    big = max(abs(x) for row in ints for x in row)
    if big < kernels.LIMIT:
        ok, rank, pivots, red = kernels.rref_int(np.array(ints, dtype=np.int64))
        if ok:
            return _normalise(red, int(rank), pivots, nc)
    return _rref_fraction(m)


def rref_integer(a):
    """RREF of an integer matrix (int64 array or nested ints), as Fractions."""
    a = np.asarray(a, dtype=object if not isinstance(a, np.ndarray) else a.dtype)
    nr, nc = a.shape
    if nr == 0 or nc == 0 or not a.any():
        return zeros(0, nc)
    if a.dtype != object and int(np.abs(a).max()) < kernels.LIMIT:
        ok, rank, pivots, red = kernels.rref_int(np.ascontiguousarray(a, dtype=np.int64))
        if ok:
            return _normalise(red, int(rank), pivots, nc)
    return rref(as_matrix(a))


def span_integer(a, ambient_dim):
    """Subspace spanned by the rows of an integer matrix."""
    a = np.asarray(a)
    if a.size == 0:
        return zero_space(ambient_dim)
    if a.shape[1] != ambient_dim:
        raise AmbientMismatch(f"vectors of length {a.shape[1]} in ambient {ambient_dim}")
    return Subspace(ambient_dim, rref_integer(a))


def pivot_columns(echelon):
    cols = []
    for row in echelon:
        for j, x in enumerate(row):
            if x != 0:
                cols.append(j)
                break
    return cols


# ---------------------------------------------------------------------------
# subspaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Subspace:
    ambient_dim: int
    basis: np.ndarray

    @property
    def rank(self):
        return self.basis.shape[0]

    dim = rank

    @property
    def pivots(self):
        return pivot_columns(self.basis)

    def is_zero(self):
        return self.rank == 0

    def is_full(self):
        return self.rank == self.ambient_dim

    def __eq__(self, other):
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.ambient_dim == other.ambient_dim and mat_equal(self.basis, other.basis)

    def __hash__(self):
        return hash((self.ambient_dim, tuple(self.basis.flat)))

    def __repr__(self):
        return f"Subspace(dim={self.rank}, ambient={self.ambient_dim})"

    def reduce(self, v):
        """Normal form of ``v`` modulo this subspace (zero iff ``v`` is inside)."""
        v = np.array(v, dtype=object)
        for row, col in zip(self.basis, self.pivots):
            c = v[col]
            if c != 0:
                v = v - c * row
        return v

    def contains_vector(self, v):
        return is_zero(self.reduce(v))

    def coordinates(self, v):
        """Coefficients of ``v`` in the echelon basis; raises if ``v`` is outside."""
        v = np.array(v, dtype=object)
        coeffs = [v[c] for c in self.pivots]
        rest = v - (np.array(coeffs, dtype=object) @ self.basis if self.rank else 0)
        if not is_zero(rest):
            raise ContainmentError("vector not in subspace", witness=v)
        return coeffs


def span(rows, ambient_dim):
    m = as_matrix(rows) if len(rows) else zeros(0, ambient_dim)
    if m.shape[1] != ambient_dim:
        raise AmbientMismatch(f"vectors of length {m.shape[1]} in ambient {ambient_dim}")
    return Subspace(ambient_dim, rref(m))


def zero_space(n):
    return Subspace(n, zeros(0, n))


def full_space(n):
    return Subspace(n, identity(n))


def image(m):
    """Row space of ``m``."""
    m = as_matrix(m)
    return Subspace(m.shape[1], rref(m))


def kernel(m):
    """``{v : v @ m = 0}``."""
    m = as_matrix(m)
    nr, nc = m.shape
    if nc == 0 or is_zero(m):
        return full_space(nr)
    # v @ m = 0  <=>  m.T @ v.T = 0: right null space of m.T
    ech = rref(m.T)
    piv = pivot_columns(ech)
    free = [j for j in range(nr) if j not in set(piv)]
    rows = []
    for f in free:
        v = [Q0] * nr
        v[f] = Q1
        for row, p in zip(ech, piv):
            v[p] = -row[f]
        rows.append(v)
    return span(rows, nr)


def _check_ambient(a, b):
    if a.ambient_dim != b.ambient_dim:
        raise AmbientMismatch(f"ambient {a.ambient_dim} vs {b.ambient_dim}")


def sum_spaces(a, b):
    _check_ambient(a, b)
    if a.is_zero() or b.is_full():
        return b
    if b.is_zero() or a.is_full():
        return a
    return Subspace(a.ambient_dim, rref(np.vstack([a.basis, b.basis])))


def intersect(a, b):
    _check_ambient(a, b)
    if a.is_zero() or b.is_full():
        return a
    if b.is_zero() or a.is_full():
        return b
    # x a + y b = 0  =>  x a lies in both
    rel = kernel(np.vstack([a.basis, b.basis]))
    coeffs = rel.basis[:, : a.rank]
    return Subspace(a.ambient_dim, rref(matmul(coeffs, a.basis)))


def annihilator_columns(w):
    """Matrix ``P`` (ambient x k) with ``y`` in ``w``  <=>  ``y @ P = 0``."""
    if w.is_zero():
        return identity(w.ambient_dim)
    return kernel(w.basis.T).basis.T


def preimage(f, w):
    """``{v : v @ f in w}``."""
    f = as_matrix(f)
    if f.shape[1] != w.ambient_dim:
        raise AmbientMismatch(f"map into dim {f.shape[1]}, subspace of dim {w.ambient_dim}")
    if w.is_full():
        return full_space(f.shape[0])
    return kernel(matmul(f, annihilator_columns(w)))


def image_of(space, f):
    """Image of a subspace under ``v -> v @ f``."""
    f = as_matrix(f)
    if space.ambient_dim != f.shape[0]:
        raise AmbientMismatch("subspace and map do not compose")
    if space.is_zero():
        return zero_space(f.shape[1])
    return image(matmul(space.basis, f))


def is_subspace(small, big):
    """Containment test; returns the first escaping basis vector or ``None``."""
    _check_ambient(small, big)
    if big.is_full():
        return None
    for row in small.basis:
        if not big.contains_vector(row):
            return row
    return None


# ---------------------------------------------------------------------------
# quotients
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuotientPresentation:
    """``total / divisor`` with representatives completing divisor to total.

    Representatives are the echelon basis of ``total`` reduced modulo
    ``divisor``; that choice is canonical.
    """

    total: Subspace
    divisor: Subspace
    representatives: np.ndarray

    @property
    def dim(self):
        return self.representatives.shape[0]

    @property
    def ambient_dim(self):
        return self.total.ambient_dim

    def coordinates(self, v):
        """Coordinates of the class of ``v`` (which must lie in ``total``)."""
        nf = self.divisor.reduce(v)
        rep = Subspace(self.ambient_dim, self.representatives)
        return rep.coordinates(nf)

    def coordinate_matrix(self, rows):
        rows = as_matrix(rows)
        out = zeros(rows.shape[0], self.dim)
        for i, r in enumerate(rows):
            out[i, :] = self.coordinates(r)
        return out

    def lift(self, coords):
        """A vector of ``total`` whose class has the given coordinates."""
        if self.dim == 0:
            return np.array([Q0] * self.ambient_dim, dtype=object)
        return np.array(coords, dtype=object) @ self.representatives


def _reduced_rows(divisor, rows):
    return [divisor.reduce(r) for r in rows]


def quotient(total, divisor):
    _check_ambient(total, divisor)
    w = is_subspace(divisor, total)
    if w is not None:
        raise ContainmentError("divisor is not contained in total", witness=w)
    n = total.ambient_dim
    if divisor.rank == total.rank:
        reps = zeros(0, n)
    elif divisor.is_zero():
        reps = total.basis
    else:
        reps = rref(as_matrix(_reduced_rows(divisor, total.basis)))
    return QuotientPresentation(total, divisor, reps)


def induced_map(f, src, dst):
    """Matrix of the map ``src -> dst`` induced by ``v -> v @ f``."""
    f = as_matrix(f)
    if f.shape != (src.ambient_dim, dst.ambient_dim):
        raise AmbientMismatch(f"map {f.shape} between ambients {src.ambient_dim}, {dst.ambient_dim}")
    for row in src.divisor.basis:
        if not dst.divisor.contains_vector(row @ f):
            raise NotWellDefined("divisor not mapped into divisor", witness=row)
    out = zeros(src.dim, dst.dim)
    for i, r in enumerate(src.representatives):
        y = r @ f
        if not dst.total.contains_vector(y):
            raise NotWellDefined("total not mapped into total", witness=r)
        out[i, :] = dst.coordinates(y)
    return out


def rank(m):
    return rref(m).shape[0]


def inverse(m):
    """Exact inverse of a square matrix; ``ValueError`` when singular."""
    m = as_matrix(m)
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError(f"not square: {m.shape}")
    if n == 0:
        return zeros(0, 0)
    aug = rref(np.hstack([m, identity(n)]))
    if aug.shape[0] != n or pivot_columns(aug) != list(range(n)):
        raise ValueError("singular matrix")
    return aug[:, n:]
