"""Random connections on small free modules over a sector DGA."""

from fractions import Fraction

from ncleray import exactlin as el
from ncleray.dgalg import ConnectionModule, form


def _one_form(a, rng, sectors, scale=2):
    ones = a.frame_indices(1)
    pieces = {}
    for g in sectors:
        v = [el.Q0] * a.F
        for i in ones:
            v[i] = Fraction(rng.randint(-scale, scale), rng.choice((1, 2)))
        pieces[g] = v
    return form(a, pieces)


def steps(a):
    """The unit and the sectors one generator step away from it."""
    return [g for g, lab in enumerate(a.sectors) if sum(abs(x) for x in lab) <= 1]


def random_connection(a, rng, rank=None):
    """Arbitrary degree-1 connection forms, usually curved, often sector-mixing.

    Pieces sit on :func:`steps` so that ``∇∘∇`` stays inside the window for
    most sectors; wider pieces leave almost nothing comparable in small windows.
    """
    rank = rank or rng.randint(1, 2)
    pool = steps(a)
    forms = []
    for i in range(rank):
        row = []
        for j in range(rank):
            k = rng.randint(0, 2)
            row.append(_one_form(a, rng, rng.sample(pool, k)) if k else {})
        forms.append(tuple(row))
    return ConnectionModule(a, rank, tuple(forms), name="random")


def random_flat_connection(a, rng, rank=None):
    """``θ = Σ_x P_x(X) e^x`` in the unit sector with one random matrix ``X``.

    The coefficient matrices commute and unit-sector frame forms are closed,
    so ``dθ - θ∧θ = 0``.
    """
    rank = rank or rng.randint(1, 2)
    X = el.matrix([[rng.randint(-2, 2) for _ in range(rank)] for _ in range(rank)])
    pows = [el.identity(rank), X, el.matmul(X, X)]
    ones = a.frame_indices(1)
    coeff = {}
    for e in ones:
        cs = [Fraction(rng.randint(-2, 2), rng.choice((1, 2))) for _ in pows]
        m = el.zeros(rank, rank)
        for c, p in zip(cs, pows):
            m = m + c * p
        coeff[e] = m
    forms = []
    for i in range(rank):
        row = []
        for j in range(rank):
            v = [el.Q0] * a.F
            for e in ones:
                v[e] = coeff[e][i, j]
            row.append(form(a, {a.unit: v}))
        forms.append(tuple(row))
    return ConnectionModule(a, rank, tuple(forms), name="random flat")
