"""Integer kernels behind the exact linear algebra and the DGA axiom sweeps.

Every kernel comes in two flavours with the same contract: ``*_jit`` compiled
with numba and ``*_np`` written with vectorised numpy.  The public wrappers at
the bottom dispatch on :data:`ncleray._backend.USE_JIT`.

All kernels work on int64 numerators.  Callers scale rational data to a common
denominator first and must keep entries below :data:`LIMIT`; the kernels
themselves refuse (``ok=False``) rather than overflow, and the caller then
falls back to exact Python integers.
"""

import numpy as np

from ._backend import USE_JIT

LIMIT = 1 << 31

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


# ---------------------------------------------------------------------------
# fraction-free Gauss-Jordan elimination
# ---------------------------------------------------------------------------


@njit(cache=True)
def _gcd(a, b):
    if a < 0:
        a = -a
    if b < 0:
        b = -b
    while b:
        a, b = b, a % b
    return a


@njit(cache=True)
def _reduce_row(a, i):
    nc = a.shape[1]
    g = 0
    for j in range(nc):
        if a[i, j] != 0:
            g = _gcd(g, a[i, j])
            if g == 1:
                return
    if g > 1:
        for j in range(nc):
            a[i, j] //= g


@njit(cache=True)
def rref_int_jit(m):
    a = m.copy()
    nr, nc = a.shape
    pivots = np.full(nr, -1, dtype=np.int64)
    rank = 0
    for col in range(nc):
        if rank == nr:
            break
        piv = -1
        for i in range(rank, nr):
            if a[i, col] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(nc):
                t = a[rank, j]
                a[rank, j] = a[piv, j]
                a[piv, j] = t
        _reduce_row(a, rank)
        if a[rank, col] < 0:
            for j in range(nc):
                a[rank, j] = -a[rank, j]
        p = a[rank, col]
        for i in range(nr):
            if i == rank:
                continue
            f = a[i, col]
            if f == 0:
                continue
            g = _gcd(p, f)
            sp = p // g
            sf = f // g
            if sp >= LIMIT or sf >= LIMIT or -sf >= LIMIT:
                return False, rank, pivots, a
            for j in range(nc):
                x = a[i, j]
                y = a[rank, j]
                if x >= LIMIT or -x >= LIMIT or y >= LIMIT or -y >= LIMIT:
                    return False, rank, pivots, a
                a[i, j] = sp * x - sf * y
            _reduce_row(a, i)
        pivots[rank] = col
        rank += 1
    return True, rank, pivots, a


def rref_int_np(m):
    a = np.array(m, dtype=np.int64, copy=True)
    nr, nc = a.shape
    pivots = np.full(nr, -1, dtype=np.int64)
    rank = 0
    for col in range(nc):
        if rank == nr:
            break
        nz = np.flatnonzero(a[rank:, col])
        if nz.size == 0:
            continue
        piv = rank + int(nz[0])
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
        g = np.gcd.reduce(a[rank])
        if g > 1:
            a[rank] //= g
        if a[rank, col] < 0:
            a[rank] = -a[rank]
        p = a[rank, col]
        rows = np.flatnonzero(a[:, col])
        rows = rows[rows != rank]
        if rows.size:
            f = a[rows, col]
            g = np.gcd(p, f)
            sp = p // g
            sf = f // g
            if (
                np.abs(sf).max() >= LIMIT
                or sp.max() >= LIMIT
                or np.abs(a[rows]).max() >= LIMIT
                or np.abs(a[rank]).max() >= LIMIT
            ):
                return False, rank, pivots, a
            block = sp[:, None] * a[rows] - sf[:, None] * a[rank][None, :]
            gg = np.gcd.reduce(block, axis=1)
            gg[gg == 0] = 1
            a[rows] = block // gg[:, None]
        pivots[rank] = col
        rank += 1
    return True, rank, pivots, a


# ---------------------------------------------------------------------------
# sector DGA sweeps
# ---------------------------------------------------------------------------


@njit(cache=True)
def leibniz_sweep_jit(prod, W, d, sign):
    S = prod.shape[0]
    F = d.shape[1]
    for g in range(S):
        for h in range(S):
            gh = prod[g, h]
            if gh < 0:
                continue
            for i in range(F):
                for j in range(F):
                    for k in range(F):
                        lhs = 0
                        t1 = 0
                        t2 = 0
                        for l in range(F):
                            lhs += W[h, i, j, l] * d[gh, l, k]
                            t1 += d[g, i, l] * W[h, l, j, k]
                            t2 += d[h, j, l] * W[h, i, l, k]
                        if lhs != t1 + sign[i] * t2:
                            return np.array([g, h, i, j, k], dtype=np.int64)
    return np.full(5, -1, dtype=np.int64)


def leibniz_sweep_np(prod, W, d, sign):
    S = prod.shape[0]
    for g in range(S):
        hs = np.flatnonzero(prod[g] >= 0)
        if hs.size == 0:
            continue
        Wh = W[hs]
        lhs = np.einsum("hijl,hlk->hijk", Wh, d[prod[g, hs]])
        t1 = np.einsum("il,hljk->hijk", d[g], Wh)
        t2 = np.einsum("hjl,hilk->hijk", d[hs], Wh)
        bad = lhs != t1 + sign[None, :, None, None] * t2
        if bad.any():
            hh, i, j, k = np.argwhere(bad)[0]
            return np.array([g, hs[hh], i, j, k], dtype=np.int64)
    return np.full(5, -1, dtype=np.int64)


@njit(cache=True)
def sigma_sweep_jit(prod, sig, den):
    S = prod.shape[0]
    F = sig.shape[1]
    for h in range(S):
        for l in range(S):
            hl = prod[h, l]
            if hl < 0:
                continue
            for i in range(F):
                for k in range(F):
                    acc = 0
                    for j in range(F):
                        acc += sig[h, i, j] * sig[l, j, k]
                    if acc != den * sig[hl, i, k]:
                        return np.array([h, l, i, k], dtype=np.int64)
    return np.full(4, -1, dtype=np.int64)


def sigma_sweep_np(prod, sig, den):
    S = prod.shape[0]
    for h in range(S):
        ls = np.flatnonzero(prod[h] >= 0)
        if ls.size == 0:
            continue
        comp = np.einsum("ij,ljk->lik", sig[h], sig[ls])
        bad = comp != den * sig[prod[h, ls]]
        if bad.any():
            ll, i, k = np.argwhere(bad)[0]
            return np.array([h, ls[ll], i, k], dtype=np.int64)
    return np.full(4, -1, dtype=np.int64)


@njit(cache=True)
def assoc_sweep_jit(prod):
    S = prod.shape[0]
    for g in range(S):
        for h in range(S):
            gh = prod[g, h]
            for l in range(S):
                hl = prod[h, l]
                if gh < 0 or hl < 0:
                    continue
                if prod[gh, l] != prod[g, hl]:
                    return np.array([g, h, l], dtype=np.int64)
    return np.full(3, -1, dtype=np.int64)


def assoc_sweep_np(prod):
    S = prod.shape[0]
    for g in range(S):
        gh = prod[g]
        ok_h = np.flatnonzero(gh >= 0)
        if ok_h.size == 0:
            continue
        sub = prod[ok_h]  # rows h, columns l -> hl
        left = prod[gh[ok_h]]  # (gh) l
        right = np.where(sub >= 0, prod[g][np.maximum(sub, 0)], -2)
        bad = (sub >= 0) & (left != right)
        if bad.any():
            hh, l = np.argwhere(bad)[0]
            return np.array([g, ok_h[hh], l], dtype=np.int64)
    return np.full(3, -1, dtype=np.int64)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_JIT:
    rref_int = rref_int_jit
    leibniz_sweep = leibniz_sweep_jit
    sigma_sweep = sigma_sweep_jit
    assoc_sweep = assoc_sweep_jit
else:
    rref_int = rref_int_np
    leibniz_sweep = leibniz_sweep_np
    sigma_sweep = sigma_sweep_np
    assoc_sweep = assoc_sweep_np
