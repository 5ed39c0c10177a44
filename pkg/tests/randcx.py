"""Random filtered complexes with a known-valid filtration."""

from ncleray import exactlin as el
from ncleray.complexes import CochainComplex, FilteredComplex, Filtration


def _random_invertible(rng, n):
    while True:
        m = el.matrix([[rng.randint(-2, 2) for _ in range(n)] for _ in range(n)]) if n else el.zeros(0, 0)
        if el.rank(m) == n:
            return m


def random_filtered_complex(rng, max_dim=8, max_degree=5, max_depth=4, mix=True):
    """Build a filtered complex by choosing weights and a weight-respecting d.

    Each basis vector of ``C^n`` gets a weight in ``0..min(n, depth-1)`` and
    ``F^m C^n`` is spanned by weight ``>= m``.  ``d`` only raises weight and
    ``d∘d = 0`` is arranged column by column.  With ``mix`` the whole thing is
    conjugated by random invertible matrices so nothing is coordinate-aligned.
    """
    top = rng.randint(1, max_degree)
    depth = rng.randint(1, max_depth)
    dims = [rng.randint(0, max_dim) for _ in range(top + 1)]
    weights = [[rng.randint(0, min(n, depth - 1)) for _ in range(dims[n])] for n in range(top + 1)]
    d = []
    for n in range(top):
        m = el.zeros(dims[n], dims[n + 1])
        prev = d[-1] if d else None
        for j in range(dims[n + 1]):
            allowed = [i for i in range(dims[n]) if weights[n][i] <= weights[n + 1][j]]
            if not allowed or rng.random() < 0.25:
                continue
            if prev is None:
                for i in allowed:
                    m[i, j] = el.Fraction(rng.randint(-2, 2))
            else:
                # column j must be killed by prev: prev[:, allowed] @ c = 0
                sub = prev[:, allowed]
                ns = el.kernel(sub.T)
                if ns.rank == 0:
                    continue
                coeffs = [el.Fraction(rng.randint(-2, 2)) for _ in range(ns.rank)]
                c = el.matmul(el.matrix([coeffs]), ns.basis)[0]
                for i, x in zip(allowed, c):
                    m[i, j] = x
        d.append(m)
    levels = []
    for mlev in range(depth):
        levels.append([
            el.span([[el.Q1 if k == i else el.Q0 for k in range(dims[n])]
                     for i in range(dims[n]) if weights[n][i] >= mlev], dims[n])
            for n in range(top + 1)
        ])
    if mix:
        T = [_random_invertible(rng, x) for x in dims]
        Tinv = [el.inverse(t) for t in T]
        d = [el.matmul(el.matmul(Tinv[n], d[n]), T[n + 1]) for n in range(top)]
        levels = [[el.image_of(sp, T[n]) if sp.rank else el.zero_space(dims[n])
                   for n, sp in enumerate(lvl)] for lvl in levels]
    c = CochainComplex(tuple(dims), tuple(d))
    return FilteredComplex(c, Filtration(tuple(tuple(l) for l in levels)))
