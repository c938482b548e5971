"""Two independent routes to the L-invariant of an admissible module, and their comparison.

The flag route (``fm_invariant``, ``fm_operator``) reads the de Rham flag against
the Frobenius eigenbasis and touches nothing but :mod:`filphin.exactlin`.  The
homological route (``gb_local``, ``gb_global``) builds the exceptional
subquotient and computes a connecting map in the semistable complex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from . import exactlin as xl
from . import phinmod as pm
from . import sscoh as sc


class LInvariantError(ValueError):
    """The requested invariant is not defined for this input."""


class DegenerateProjectionError(LInvariantError):
    """The top flag step has no component along the top Frobenius eigenline."""


class EmbeddingMismatchError(LInvariantError):
    """Different embeddings give different values."""


class BNotInvertibleError(LInvariantError):
    """The beta-coefficient of the connecting image vanishes."""


class Step1MismatchError(RuntimeError):
    """The extension class of the two-dimensional quotient disagrees with the flag invariant."""


# ---------------------------------------------------------------------------
# flag route (exactlin only)


def eigenbasis(M, m: int, v0: Sequence | None = None) -> list[tuple]:
    """``v_j = N^j v_0`` for ``j < n`` with ``v_0`` spanning the ``p^m``-eigenline."""
    n = M.phi.rows
    top = xl.eigenspace(M.phi, Fraction(M.p) ** m)
    if top.dim != 1:
        raise LInvariantError("the p^m-eigenspace has dimension %d, expected 1" % top.dim)
    if v0 is None:
        v0 = top.basis[0]
    else:
        v0 = xl.vector(v0)
        if xl.is_zero_vector(v0) or not top.contains(v0):
            raise LInvariantError("v0 does not span the p^m-eigenline")
    vs = [v0]
    for _ in range(n - 1):
        vs.append(M.mono @ vs[-1])
    if xl.Subspace.span(vs, n).dim != n:
        raise LInvariantError("N^j v0 (j < n) is not a basis; monodromy is not maximal")
    return vs


def _line_ratio(M, m: int, i: int, v0, embedding: int | None = None) -> Fraction:
    n = M.phi.rows
    vs = eigenbasis(M, m, v0)
    window = xl.Subspace.span(vs[i - 1:], n)
    values = []
    chosen = range(len(M.flags)) if embedding is None else [embedding]
    for s in chosen:
        fl = M.flags[s]
        line = xl.intersect(fl.step(n - i), window)
        if line.dim != 1:
            raise DegenerateProjectionError(
                "embedding %d: F_%d meets span(v_%d..v_%d) in dimension %d" % (s, n - i, i - 1, n - 1, line.dim)
            )
        coeffs = xl.coordinates(line.basis[0], vs)
        a, b = coeffs[i - 1], coeffs[i]
        if a == 0:
            raise DegenerateProjectionError("embedding %d: no v_%d component; the projection is degenerate" % (s, i - 1))
        values.append(-b / a)
    if any(v != values[0] for v in values):
        raise EmbeddingMismatchError("embeddings give different values: %s" % ", ".join(map(str, values)))
    return values[0]


def fm_invariant(M, m: int, v0: Sequence | None = None) -> Fraction:
    """The unique ``L`` with ``v_0 - L v_1`` spanning the projection of ``F_{n-1}``."""
    return _line_ratio(M, m, 1, v0)


def fm_operator(M, m: int, i: int, v0: Sequence | None = None, embedding: int | None = None) -> Fraction:
    """``L^(i)``: ratio read off the step ``F_{n-i}`` inside ``D^(i-1) + D^(i)``.

    Only ``L^(1)`` is forced to agree across embeddings; for ``i > 1`` pass
    ``embedding`` when the flags differ.
    """
    n = M.phi.rows
    if not 1 <= i <= n - 1:
        raise LInvariantError("operator index %d outside 1..%d" % (i, n - 1))
    if embedding is not None and not 0 <= embedding < len(M.flags):
        raise LInvariantError("embedding %d outside 0..%d" % (embedding, len(M.flags) - 1))
    return _line_ratio(M, m, i, v0, embedding)


def fm_operators(M, m: int, v0: Sequence | None = None) -> list[list[Fraction]]:
    """``[[L^(1), ..., L^(n-1)] per embedding]``."""
    return [[fm_operator(M, m, i, v0, s) for i in range(1, M.phi.rows)] for s in range(len(M.flags))]


def is_degenerate(L: Fraction) -> bool:
    return L == 0


# ---------------------------------------------------------------------------
# the two-dimensional top quotient


@dataclass(frozen=True)
class WTilde:
    """``M / Fil^phi_{n-2}`` with basis the images of ``v_0, v_1``, and its two rank-one ends."""

    module: pm.FilPhiNModule
    sub: pm.FilPhiNModule  # the line of v_1
    quot: pm.FilPhiNModule  # the line of v_0
    inclusion: xl.Matrix
    projection: xl.Matrix
    sub_data: pm.RankOneData
    quot_data: pm.RankOneData


def w_tilde(M: pm.FilPhiNModule, m: int, v0: Sequence | None = None) -> WTilde:
    n = M.n
    vs = eigenbasis(M, m, v0)
    Wt, _ = pm.quotient(M, xl.Subspace.span(vs[2:], n), complement=vs[:2])
    sub, inc = pm.submodule(Wt, xl.Subspace.span([(0, 1)], 2), basis=[(0, 1)])
    quot, proj = pm.quotient(Wt, xl.Subspace.span([(0, 1)], 2), complement=[(1, 0)])
    sub_data = pm.RankOneData(tuple(-f.weights[0] for f in sub.flags), -(m - 1))
    quot_data = pm.RankOneData(tuple(-f.weights[0] for f in quot.flags), -m)
    for end, data, name in ((sub, sub_data, "sub"), (quot, quot_data, "quotient")):
        ref = pm.rank_one(data, M.p)
        if (ref.phi, ref.mono, ref.flags) != (end.phi, end.mono, end.flags):
            raise LInvariantError("the %s end of the top quotient is not the expected character" % name)
    return WTilde(Wt, sub, quot, inc, proj, sub_data, quot_data)


@dataclass(frozen=True)
class Step1Result:
    cls: sc.CohClass
    expected: sc.CohClass
    L_FM: Fraction

    @property
    def rep(self) -> tuple:
        return self.cls.rep


def step1_class(M: pm.FilPhiNModule, m: int, v0: Sequence | None = None) -> Step1Result:
    """Extension class of the top quotient twisted so its quotient end is trivial.

    With ``v_0`` the lift of the trivial end and ``a`` in the sub such that
    ``v_0 + a`` lies in ``Fil^0`` for each embedding, the class is
    ``cl(a, (phi - 1) v_0, N v_0)``.  It must equal ``cl(-L v_1, 0, v_1)``.
    """
    L = fm_invariant(M, m, v0)
    wt = w_tilde(M, m, v0)
    inv = pm.rank_one(pm.RankOneData(tuple(-a for a in wt.quot_data.exponents), -wt.quot_data.norm_exponent), M.p)
    Wtw = pm.tensor_rank_one(wt.module, inv)
    sub, _ = pm.submodule(Wtw, xl.Subspace.span([(0, 1)], 2), basis=[(0, 1)])
    C = sc.build_st(sub)
    v0w = (Fraction(1), Fraction(0))
    xs = []
    for s in range(Wtw.e):
        F0 = Wtw.fil0(s)
        # v0 + t v1 in Fil^0
        coeffs = xl.solve_in_span(v0w, list(F0.basis) + [(0, 1)])
        if coeffs is None:
            raise Step1MismatchError("embedding %d: v0 has no Fil^0 lift modulo the sub" % s)
        xs.append((-coeffs[-1],))
    b = ((Wtw.phi @ v0w)[1] - v0w[1],)
    c = ((Wtw.mono @ v0w)[1],)
    if (Wtw.phi @ v0w)[0] != 1:
        raise Step1MismatchError("the quotient end is not trivial after twisting")
    rep = C.cochain(xs, b, c)
    if not C.is_cocycle(1, rep):
        raise Step1MismatchError("extension cochain is not a cocycle")
    got = C.cls(1, rep)
    expected = C.cls(1, C.cochain((-L,), (0,), (1,)))
    if got != expected:
        raise Step1MismatchError("extension class %s differs from cl(-L v1, 0, v1) with L = %s" % (list(map(str, rep)), L))
    return Step1Result(got, expected, L)


# ---------------------------------------------------------------------------
# homological route


@dataclass(frozen=True)
class LocalGB:
    L_W: Fraction
    a: Fraction
    b: Fraction
    connecting: sc.ConnectingMap
    alpha: sc.CohClass
    beta: sc.CohClass
    v_delta: tuple


def gb_local_data(
    M: pm.FilPhiNModule, m: int, eta_scale=1, delta_scale=1, eta: Sequence | None = None, delta: Sequence | None = None
) -> LocalGB:
    """Connecting-map computation on ``0 -> D -> W -> W/D -> 0`` for the exceptional subquotient.

    ``eta`` (a vector of ``W``) and ``delta`` (a vector of ``D`` in ``W``-coordinates)
    fix the bases; by default the canonical ones are used, scaled by the given factors.
    """
    D = pm.regular_submodule(M, m)
    W, lifts, d_in_w = pm.exceptional_presentation(M, m, D)
    if W.n != 2 or d_in_w.dim != 1:
        raise LInvariantError("exceptional subquotient has shape (%d, %d), expected (2, 1)" % (W.n, d_in_w.dim))
    if delta is None:
        delta = d_in_w.basis[0]
    delta = xl.vector(delta)
    if not d_in_w.contains(delta) or xl.is_zero_vector(delta):
        raise LInvariantError("delta does not span the image of D")
    sub, inc = pm.submodule(W, d_in_w, basis=[delta])
    quot, proj = pm.quotient(W, d_in_w)
    return local_ratio(sub, W, quot, inc, proj, eta_scale, delta_scale, eta, delta)


def local_ratio(sub, mid, quot, inc, proj, eta_scale=1, delta_scale=1, eta=None, delta=None) -> LocalGB:
    """``a / b`` for the connecting image of a generator of ``H^0(quot)`` in ``H^1(sub)``."""
    dmap = sc.connecting(sub, mid, quot, inc, proj)
    if len(dmap.source) != 1:
        raise LInvariantError("H^0 of the quotient has dimension %d, expected 1" % len(dmap.source))
    if eta is None:
        coeffs = [Fraction(eta_scale)]
    else:
        coeffs = xl.solve_in_span(proj @ xl.vector(eta), [dmap.source[0].rep])
        if coeffs is None or coeffs[0] == 0:
            raise LInvariantError("eta does not map to a generator of H^0 of the quotient")
    image = dmap(coeffs)
    alpha, beta = sc.alpha_beta(sub, (Fraction(delta_scale),))
    ab = image.complex.class_coordinates(image, [alpha, beta])
    if ab is None:
        raise LInvariantError("connecting image is not in span(alpha*, beta*)")
    a, b = ab
    if b == 0:
        raise BNotInvertibleError("connecting image has zero beta*-coefficient")
    return LocalGB(a / b, a, b, dmap, alpha, beta, tuple(delta) if delta is not None else inc.column(0))


def gb_local(M: pm.FilPhiNModule, m: int, eta_scale=1, delta_scale=1) -> Fraction:
    """``L(W)``: the ratio ``a/b`` in ``d(v_eta) = a alpha* + b beta*``."""
    return gb_local_data(M, m, eta_scale, delta_scale).L_W


def gb_global(modules: Sequence[tuple]) -> Fraction:
    """Product of the local ratios over all primes; all primes must share ``m``."""
    if not modules:
        raise LInvariantError("no primes given")
    ms = {m for _, m in modules}
    if len(ms) != 1:
        raise LInvariantError("primes use different twists %s" % sorted(ms))
    out = Fraction(1)
    for M, m in modules:
        out *= gb_local(M, m)
    return out


def step3_scalar(M: pm.FilPhiNModule, m: int, local: LocalGB | None = None, step1: Step1Result | None = None) -> Fraction:
    """Solve ``c (beta* + L(W) alpha*) = flip(cl W~)`` in ``H^1`` of ``D``.

    ``flip`` negates the de Rham component; without it the two classes are not
    proportional.  Both sides use ``v_1`` as the basis of the rank-one module.
    """
    vs = eigenbasis(M, m)
    if step1 is None:
        step1 = step1_class(M, m)
    v1_w = pm.exceptional_coordinates(M, m, pm.regular_submodule(M, m), vs[1])
    if local is None or local.v_delta != v1_w:
        local = gb_local_data(M, m, delta=v1_w)
    C = local.alpha.complex
    C1 = step1.cls.complex
    xs, b, c = C1.split(sc.sign_flip_dr(C1, step1.rep))
    target = C.cochain([tuple(x) for x in xs], b, c)
    gen = (local.beta + local.alpha.scale(local.L_W)).rep
    coeffs = xl.solve_in_span(target, [gen] + list(C.coboundaries(1).basis))
    if coeffs is None:
        raise LInvariantError("the two extension classes are not proportional")
    return coeffs[0]


# ---------------------------------------------------------------------------
# comparison


@dataclass
class PrimeReport:
    label: str
    p: int
    n: int
    e: int
    m: int
    L_FM: Fraction
    L_W: Fraction
    L_ops: list  # one list per embedding
    step1: str
    step3_scalar: Fraction | None
    degenerate: bool
    w_ranks: tuple

    def to_dict(self) -> dict:
        f = xl.format_scalar
        return {
            "label": self.label,
            "p": self.p,
            "n": self.n,
            "e": self.e,
            "m": self.m,
            "L_FM": f(self.L_FM),
            "L_W": f(self.L_W),
            "minus_L_FM": f(-self.L_FM),
            "L_ops": [[f(x) for x in row] for row in self.L_ops],
            "step1": self.step1,
            "step3_scalar": None if self.step3_scalar is None else f(self.step3_scalar),
            "degenerate": self.degenerate,
            "w_ranks": list(self.w_ranks),
        }


PROVENANCE = {
    "L_FM": "flag route: F_{n-1} written in the basis v_j = N^j v_0, ratio of the v_0 and v_1 coordinates",
    "L_ops": "flag route: F_{n-i} meet span(v_{i-1}..v_{n-1}), ratio of the v_{i-1} and v_i coordinates",
    "L_W": "homological route: connecting map of 0 -> D -> W -> W/D -> 0 in the semistable complex, a/b",
    "L_GB": "product of L_W over primes",
    "product": "product of -L_FM over primes",
    "step1": "extension class of M/Fil^phi_{n-2} twisted to a trivial quotient, checked against cl(-L_FM v1, 0, v1)",
    "step3_scalar": "c with c(beta* + L_W alpha*) equal to the step1 class with its de Rham part negated",
}


@dataclass
class LReport:
    primes: list
    L_GB: Fraction
    product: Fraction
    verdict: str
    hypotheses: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=lambda: dict(PROVENANCE))

    @property
    def equal(self) -> bool:
        return self.verdict == "equal"

    def to_dict(self) -> dict:
        return {
            "format": "filphin-report/1",
            "primes": [p.to_dict() for p in self.primes],
            "L_GB": xl.format_scalar(self.L_GB),
            "product_minus_L_FM": xl.format_scalar(self.product),
            "verdict": self.verdict,
            "hypotheses": {k: bool(v) for k, v in sorted(self.hypotheses.items())},
            "provenance": dict(self.provenance),
        }


def compare(
    modules: Sequence[tuple],
    labels: Sequence[str] | None = None,
    hypotheses: dict | None = None,
    corrupt: Callable | None = None,
    extras: bool = True,
) -> LReport:
    """Compute both sides for ``[(M, m), ...]`` and compare them exactly.

    ``corrupt(index, M)`` is a test hook applied after validation to the
    module handed to the homological route only.
    """
    if not modules:
        raise LInvariantError("no primes given")
    ms = {m for _, m in modules}
    if len(ms) != 1:
        raise LInvariantError("primes use different twists %s" % sorted(ms))
    for k, (M, m) in enumerate(modules):
        rep = pm.validate(M, m, hypotheses)
        if not rep.ok:
            raise pm.AdmissibilityError("prime %d fails axioms %s" % (k, ",".join(rep.failed() + rep.skipped())))
    labels = list(labels) if labels is not None else ["prime%d" % k for k in range(len(modules))]
    primes = []
    gb_side = []
    for k, (M, m) in enumerate(modules):
        L_fm = fm_invariant(M, m)
        Mg = corrupt(k, M) if corrupt is not None else M
        L_w = gb_local(Mg, m)
        gb_side.append((Mg, m))
        ops, s1, c, ranks = [], "not run", None, ()
        if extras:
            ops = fm_operators(M, m)
            res = step1_class(M, m)
            s1 = "ok"
            c = step3_scalar(M, m, step1=res) if Mg is M else None
            ranks = tuple(pm.w_ranks(M, m, pm.regular_submodule(M, m)))
        primes.append(PrimeReport(labels[k], M.p, M.n, M.e, m, L_fm, L_w, ops, s1, c, is_degenerate(L_fm), ranks))
    L_gb = Fraction(1)
    for r in primes:
        L_gb *= r.L_W
    product = Fraction(1)
    for r in primes:
        product *= -r.L_FM
    verdict = "equal" if L_gb == product else "unequal"
    hyp = {name: bool((hypotheses or {}).get(name)) for name in ("GB1", "GB2", "GB3")}
    return LReport(primes, L_gb, product, verdict, hyp)
