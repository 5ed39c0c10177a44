"""Concrete sector DGAs: the Heisenberg calculus, the Laurent circle, and maps between them.

Heisenberg sectors are the monomials ``u^n v^m w^k`` (labels ``(n, m, k)``)
with ``|n|, |m|, |k| <= N``; the group law is
``(n, m, k)(a, b, c) = (n + a, m + b, k + c - a*m)`` and the frame is the
exterior algebra on ``e^u, e^v, e^w``.  Circle sectors are ``z^j`` (labels
``(j,)``) with frame ``{1, e^z}``.

Before a Heisenberg model is returned its closed-form tables are compared
against :class:`RewritingOracle`, which knows nothing but the defining
relations and normal-orders words letter by letter.
"""

from fractions import Fraction
from itertools import product as iproduct

import numpy as np

from . import exactlin as el
from .dgalg import ConnectionModule, DGAMorphism, SectorDGA, form, trivial_module
from .exactlin import Q0, Q1

HALF = Fraction(1, 2)


class OracleMismatch(RuntimeError):
    """The rewriting oracle disagrees with the closed-form model tables."""


# ---------------------------------------------------------------------------
# frames
# ---------------------------------------------------------------------------


def _perm_sign(seq):
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def exterior_frame(gens, basis):
    """Labels, degrees and wedge table of an exterior algebra in a chosen basis.

    ``basis`` lists each basis monomial as a tuple of generator indices, in
    the order it is written (``(2, 0)`` is ``e^w ∧ e^u`` for ``gens = u, v, w``).
    """
    lookup = {}
    for idx, mono in enumerate(basis):
        lookup[tuple(sorted(mono))] = (idx, _perm_sign(mono))
    F = len(basis)
    T = np.empty((F, F, F), dtype=object)
    T.fill(Q0)
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            word = a + b
            if len(set(word)) < len(word):
                continue
            k, s = lookup[tuple(sorted(word))]
            T[i, j, k] = Fraction(_perm_sign(word) * s)
    labels = tuple("1" if not m else "∧".join(f"e^{gens[x]}" for x in m) for m in basis)
    return labels, tuple(len(m) for m in basis), T


def extend_multiplicative(T, degrees, one_block):
    """Extend a degree-1 frame map to the whole frame by ``f(x ∧ y) = f(x) ∧ f(y)``.

    ``one_block`` gives the images of the degree-1 frame forms as full frame
    vectors; higher basis forms are assumed to be wedge products of
    degree-1 forms with coefficient +-1 (true for the shipped frames).
    """
    F = len(degrees)
    ones = [i for i, d in enumerate(degrees) if d == 1]
    out = el.zeros(F, F)
    out[0, 0] = Q1
    for i, v in zip(ones, one_block):
        out[i, :] = v
    for n in range(2, max(degrees) + 1):
        for k in (i for i, d in enumerate(degrees) if d == n):
            # find a factorisation e_k = c * e_a ∧ e_b with |a| = 1
            done = False
            for a in ones:
                for b in (i for i, d in enumerate(degrees) if d == n - 1):
                    c = T[a, b, k]
                    if c != 0 and all(T[a, b, t] == 0 for t in range(F) if t != k):
                        x = np.tensordot(np.tensordot(out[a], T, axes=([0], [0])), out[b], axes=([0], [0]))
                        out[k, :] = x / c
                        done = True
                        break
                if done:
                    break
            if not done:
                raise ValueError(f"frame form {k} is not a wedge of lower forms")
    return out


HEIS_GENS = ("u", "v", "w")
HEIS_BASIS = ((), (0,), (1,), (2,), (0, 1), (2, 0), (2, 1), (0, 1, 2))


def heisenberg_frame():
    return exterior_frame(HEIS_GENS, HEIS_BASIS)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def heis_mul(g, h):
    n, m, k = g
    a, b, c = h
    return (n + a, m + b, k + c - a * m)


def alpha(g):
    """Frame coefficients of ``g^{-1} dg`` on ``(e^u, e^v, e^w)``."""
    n, m, k = g
    return (Fraction(n), Fraction(m), Fraction(k) + Fraction(n * m, 2))


def sigma1(h):
    """``e^x . h = h . sigma_h(e^x)`` on the degree-1 frame (rows ``e^u, e^v, e^w``)."""
    a, b, _ = h
    return (
        (Q1, Q0, Fraction(b, 2)),
        (Q0, Q1, -Fraction(a, 2)),
        (Q0, Q0, Q1),
    )


def _frame_vec(F, ones, coeffs):
    v = np.array([Q0] * F, dtype=object)
    for i, c in zip(ones, coeffs):
        v[i] = Fraction(c)
    return v


# ---------------------------------------------------------------------------
# the rewriting oracle
# ---------------------------------------------------------------------------

LETTERS = {"u": (0, 1), "U": (0, -1), "v": (1, 1), "V": (1, -1), "w": (2, 1), "W": (2, -1)}


def default_relations():
    """Moving a frame form right-to-left past one generator.

    ``rel[(y, x)]`` is the frame vector ``c`` with ``e^y . x = x . (c_u e^u + c_v e^v + c_w e^w)``:
    ``x e^x = e^x x``, ``e^w`` and ``w`` are central, ``e^v u = u (e^v - 1/2 e^w)``
    and ``e^u v = v (e^u + 1/2 e^w)``.
    """
    rel = {}
    for y in range(3):
        for x in range(3):
            c = [Q0, Q0, Q0]
            c[y] = Q1
            rel[(y, x)] = c
    rel[(1, 0)] = [Q0, Q1, -HALF]
    rel[(0, 1)] = [Q1, Q0, HALF]
    return rel


class RewritingOracle:
    """Normal-orders words in ``u^{±1}, v^{±1}, w^{±1}`` and ``e^u, e^v, e^w``.

    Normal form: sums of ``u^n v^m w^k . e^{i_1} ∧ ... ∧ e^{i_p}`` with
    ``i_1 < ... < i_p``.  Group letters are sorted with the rules that follow
    from ``uv = w^c vu`` (``c = 1``); frame letters are moved left past group
    letters with ``rel``, extended to ``x^{-1}`` by linearity in the exponent.
    """

    def __init__(self, relations=None, commutator=1):
        self.rel = relations or default_relations()
        self.c = commutator

    # group letters ------------------------------------------------------

    def _group_step(self, g, letter):
        n, m, k = g
        gen, e = LETTERS[letter]
        if gen == 2:
            return (n, m, k + e)
        if gen == 1:
            return (n, m + e, k)
        # v^m u^e = u^e v^m w^{-c e m}:  vu -> W uv,  Vu -> w uV,  vU -> w Uv,  VU -> W UV
        return (n + e, m, k - self.c * e * m)

    def _sigma(self, y, letter):
        gen, e = LETTERS[letter]
        base = self.rel[(y, gen)]
        # linear in the exponent: sigma_{x^e}(e^y) = e^y + e (rel - e^y)
        out = [e * c for c in base]
        out[y] += 1 - e
        return out

    # terms ---------------------------------------------------------------

    @staticmethod
    def _wedge_append(mono, idx):
        if idx in mono:
            return None, 0
        word = mono + (idx,)
        s = _perm_sign(word)
        return tuple(sorted(word)), s

    def times(self, elt, letter):
        """Right-multiply a normal form ``{(g, frame_tuple): coef}`` by one letter."""
        out = {}
        if letter.startswith("e"):
            y = HEIS_GENS.index(letter[1:])
            for (g, mono), c in elt.items():
                new, s = self._wedge_append(mono, y)
                if new is not None:
                    key = (g, new)
                    out[key] = out.get(key, Q0) + s * c
        else:
            for (g, mono), c in elt.items():
                # move the letter left through mono, one frame letter at a time
                acc = {(): c}
                for y in mono:
                    sy = self._sigma(y, letter)
                    nxt = {}
                    for part, cc in acc.items():
                        for z, cz in enumerate(sy):
                            if cz == 0:
                                continue
                            new, s = self._wedge_append(part, z)
                            if new is not None:
                                nxt[new] = nxt.get(new, Q0) + s * cc * cz
                    acc = nxt
                g2 = self._group_step(g, letter)
                for part, cc in acc.items():
                    key = (g2, part)
                    out[key] = out.get(key, Q0) + cc
        return {k: v for k, v in out.items() if v != 0}

    def word(self, letters, start=None, coef=Q1):
        elt = start if start is not None else {((0, 0, 0), ()): coef}
        for x in letters:
            elt = self.times(elt, x)
        return elt

    @staticmethod
    def add(x, y):
        out = dict(x)
        for k, v in y.items():
            out[k] = out.get(k, Q0) + v
        return {k: v for k, v in out.items() if v != 0}

    def d_letter(self, letter):
        """``d x = x e^x``; ``d x^{-1} = -e^x x^{-1}``."""
        gen, e = LETTERS[letter]
        ex = "e" + HEIS_GENS[gen]
        if e > 0:
            return Q1, [letter, ex]
        return -Q1, [ex, letter]

    def d_word(self, letters):
        """``d`` of a word by the Leibniz rule, each term normal-ordered from scratch."""
        total = {}
        for i, x in enumerate(letters):
            c, dx = self.d_letter(x)
            total = self.add(total, self.word(list(letters[:i]) + dx + list(letters[i + 1:]), coef=c))
        return total


def monomial_word(g):
    n, m, k = g
    return ["u" if n > 0 else "U"] * abs(n) + ["v" if m > 0 else "V"] * abs(m) + ["w" if k > 0 else "W"] * abs(k)


def swapped_word(g):
    """A second spelling of ``u^n v^m w^k``: ``v^m u^n w^{k + nm}``."""
    n, m, k = g
    k2 = k + n * m
    return ["v" if m > 0 else "V"] * abs(m) + ["u" if n > 0 else "U"] * abs(n) + ["w" if k2 > 0 else "W"] * abs(k2)


def _oracle_one_form(elt, g, where):
    out = [Q0, Q0, Q0]
    for (h, mono), c in elt.items():
        if h != g or len(mono) != 1:
            raise OracleMismatch(f"{where}: oracle produced a term {h}·{mono} outside sector {g} degree 1")
        out[mono[0]] += c
    return tuple(out)


def run_oracle(oracle, sectors, table_mul, sig, alphas):
    """Compare closed forms with the oracle on every window sector."""
    for g in sectors:
        for spell in (monomial_word, swapped_word):
            w = spell(g)
            got = oracle.word(w)
            if list(got) != [(g, ())]:
                raise OracleMismatch(f"{spell.__name__}({g}) normal-orders to {sorted(got)}")
            a = _oracle_one_form(oracle.d_word(w), g, f"d {spell.__name__}({g})")
            if a != alphas[g]:
                raise OracleMismatch(f"alpha{g}: oracle {a} != closed form {alphas[g]}")
        for y, name in enumerate(HEIS_GENS):
            got = oracle.word(monomial_word(g), start={((0, 0, 0), (y,)): Q1})
            s = _oracle_one_form(got, g, f"e^{name}·{g}")
            if s != tuple(sig[g][y]):
                raise OracleMismatch(f"commuting e^{name} past {g}: oracle {s} != closed form {tuple(sig[g][y])}")
        for x in LETTERS:
            (h, _), = oracle.word([x], start={(g, ()): Q1})
            t = table_mul(g, x)
            if t is not None and t != h:
                raise OracleMismatch(f"{g}·{x}: oracle {h} but product table {t}")


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _window(N, rank):
    return [t for t in iproduct(range(-N, N + 1), repeat=rank)]


def _prod_table(sectors, mul):
    idx = {s: i for i, s in enumerate(sectors)}
    S = len(sectors)
    prod = np.full((S, S), -1, dtype=np.int64)
    for i, g in enumerate(sectors):
        for j, h in enumerate(sectors):
            prod[i, j] = idx.get(mul(g, h), -1)
    return prod


def heisenberg(N=3, relations=None, check_oracle=True):
    """The Heisenberg calculus on the window ``|n|, |m|, |k| <= N``.

    Refuses (:class:`OracleMismatch`) when the rewriting oracle, run with
    ``relations``, disagrees with the closed-form tables anywhere in window.
    """
    if N < 1:
        raise ValueError("window N must be >= 1")
    labels, degrees, T = heisenberg_frame()
    F = len(labels)
    ones = [i for i, d in enumerate(degrees) if d == 1]
    sectors = _window(N, 3)
    S = len(sectors)
    prod = _prod_table(sectors, heis_mul)
    sig1 = {g: sigma1(g) for g in sectors}
    alphas = {g: alpha(g) for g in sectors}
    if check_oracle:
        idx = {t: i for i, t in enumerate(sectors)}
        steps = {"u": (1, 0, 0), "U": (-1, 0, 0), "v": (0, 1, 0), "V": (0, -1, 0), "w": (0, 0, 1), "W": (0, 0, -1)}

        def table_mul(g, x):
            t = prod[idx[g], idx[steps[x]]]
            return sectors[t] if t >= 0 else None

        run_oracle(RewritingOracle(relations), sectors, table_mul, sig1, alphas)
    commute = np.empty((S, F, F), dtype=object)
    dmat = np.empty((S, F, F), dtype=object)
    cache = {}
    for s, g in enumerate(sectors):
        key = (g[0], g[1])
        if key not in cache:
            cache[key] = extend_multiplicative(T, degrees, [_frame_vec(F, ones, row) for row in sig1[g]])
        commute[s] = cache[key]
        a = _frame_vec(F, ones, alphas[g])
        dmat[s] = np.tensordot(a, T, axes=([0], [0]))
    return SectorDGA(tuple(sectors), sectors.index((0, 0, 0)), prod, labels, degrees, T, commute, dmat,
                     name=f"heisenberg({N})")


def circle(N=3):
    """Laurent polynomials in ``z`` on ``|j| <= N`` with ``d z^j = j z^j e^z``."""
    if N < 1:
        raise ValueError("window N must be >= 1")
    labels, degrees, T = exterior_frame(("z",), ((), (0,)))
    sectors = _window(N, 1)
    S = len(sectors)
    prod = _prod_table(sectors, lambda g, h: (g[0] + h[0],))
    commute = np.empty((S, 2, 2), dtype=object)
    dmat = np.empty((S, 2, 2), dtype=object)
    for s, (j,) in enumerate(sectors):
        commute[s] = el.identity(2)
        dmat[s] = el.matrix([[0, j], [0, 0]])
    return SectorDGA(tuple(sectors), sectors.index((0,)), prod, labels, degrees, T, commute, dmat,
                     name=f"circle({N})")


def scalars():
    """The ground field as a one-sector DGA concentrated in degree 0."""
    T = np.empty((1, 1, 1), dtype=object)
    T[0, 0, 0] = Q1
    return SectorDGA(((),), 0, np.zeros((1, 1), dtype=np.int64), ("1",), (0,), T,
                     el.identity(1).reshape(1, 1, 1), el.zeros(1, 1).reshape(1, 1, 1), name="scalars")


def iota(N_B=3, N_A=None, base=None, total=None):
    """``z^j -> w^j``, ``e^z -> e^w`` from ``circle(N_B)`` into ``heisenberg(N_A)``."""
    N_A = N_B if N_A is None else N_A
    if N_B > N_A:
        raise ValueError(f"base window {N_B} exceeds total window {N_A}")
    B = base or circle(N_B)
    A = total or heisenberg(N_A)
    smap = [A.index((0, 0, j)) for (j,) in B.sectors]
    P = el.zeros(B.F, A.F)
    P[0, 0] = Q1
    P[1, A.frame.index("e^w")] = Q1
    return DGAMorphism(B, A, smap, P, name="iota")


def u_inclusion(N=3, base=None, total=None):
    """``z^j -> u^j``, ``e^z -> e^u``: the other circle, also a fibration."""
    B = base or circle(N)
    A = total or heisenberg(N)
    P = el.zeros(B.F, A.F)
    P[0, 0] = Q1
    P[1, A.frame.index("e^u")] = Q1
    return DGAMorphism(B, A, [A.index((j, 0, 0)) for (j,) in B.sectors], P, name="u_inclusion")


def collapse(N=3, base=None, total=None):
    """``z^j -> 1``, ``e^z -> 0``.

    A valid DGA morphism that is not a fibration: ``Ω^1 B ⊗ N_{0,q}`` is
    nonzero while ``N_{1,q} = 0``.
    """
    B = base or circle(N)
    A = total or heisenberg(N)
    P = el.zeros(B.F, A.F)
    P[0, 0] = Q1
    return DGAMorphism(B, A, [A.unit] * B.S, P, name="collapse")


def scalar_inclusion(A):
    """``ℚ -> A``: the trivial base."""
    B = scalars()
    P = el.zeros(1, A.F)
    P[0, 0] = Q1
    return DGAMorphism(B, A, [A.unit], P, name="scalars")


def twisted_module(lam=0, N=3, algebra=None):
    """Rank-1 free module over ``heisenberg(N)`` with ``∇(a) = da + a.λe^w``.

    ``λ = 0`` returns exactly the trivial module ``E = A``, ``∇ = d``.
    """
    A = algebra or heisenberg(N)
    lam = Fraction(lam)
    if lam == 0:
        return trivial_module(A)
    v = _frame_vec(A.F, [A.frame.index("e^w")], [lam])
    return ConnectionModule(A, 1, ((form(A, {A.unit: v}),),), name=f"twisted({lam})")


def _theta_image(a, b, c, d, g):
    n, m, k = g

    def power(h, e):
        out = (0, 0, 0)
        step = h if e >= 0 else (-h[0], -h[1], -h[2] - h[0] * h[1])  # inverse in the group law
        for _ in range(abs(e)):
            out = heis_mul(out, step)
        return out

    return heis_mul(heis_mul(power((a, b, 0), n), power((c, d, 0), m)), (0, 0, k))


def theta(a, b, c, d, N=1, target_N=None, source=None, target=None):
    """``u -> u^a v^b``, ``v -> u^c v^d``, ``w -> w`` with ``ad - bc = 1``.

    The frame map sends ``e^u`` to ``alpha(a, b, 0)`` and ``e^v`` to ``alpha(c, d, 0)``.
    Images leaving ``target_N`` are marked out of window (``sector_map = -1``)
    and listed in :attr:`DGAMorphism.overflow_sectors`.
    """
    if a * d - b * c != 1:
        raise ValueError(f"theta needs ad - bc = 1, got {a * d - b * c}")
    src = source or heisenberg(N)
    images = [_theta_image(a, b, c, d, g) for g in src.sectors]
    if target_N is None:
        target_N = max(max(abs(x) for x in im) for im in images)
        target_N = max(target_N, N)
    tgt = target or heisenberg(target_N)
    smap = [tgt.index(im) if tgt.has(im) else -1 for im in images]
    ones = tgt.frame_indices(1)
    rows = [_frame_vec(tgt.F, ones, alpha((a, b, 0))),
            _frame_vec(tgt.F, ones, alpha((c, d, 0))),
            _frame_vec(tgt.F, ones, (0, 0, 1))]
    P = extend_multiplicative(src.wedge_table, src.degrees, rows)
    return DGAMorphism(src, tgt, smap, P, name=f"theta({a},{b},{c},{d})")


# ---------------------------------------------------------------------------
# fibrations
# ---------------------------------------------------------------------------


def heisenberg_fibration(N=3, lam=0, N_B=None):
    """``circle(N_B) -> heisenberg(N)`` with the twisted module ``λ``."""
    from .leray import FibrationData

    A = heisenberg(N)
    i = iota(N if N_B is None else N_B, N, total=A)
    return FibrationData(i, twisted_module(lam, algebra=A), name=f"heisenberg(N={N}, λ={Fraction(lam)})")


def identity_fibration(N=3):
    """``B = A = circle(N)``, ``ι = id``, ``E = A``."""
    from .dgalg import identity_morphism
    from .leray import FibrationData

    C = circle(N)
    return FibrationData(identity_morphism(C), trivial_module(C), name=f"identity(N={N})")
