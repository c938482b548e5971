"""Filtered (phi, N)-modules over Q with weighted de Rham flags.

A :class:`FilPhiNModule` is the finite-dimensional stand-in for the semistable
module of a local Galois representation: a Frobenius matrix ``phi``, a
monodromy matrix ``mono`` and one complete weighted flag per embedding.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from fractions import Fraction
from typing import NamedTuple, Sequence

from .exactlin import (
    Matrix,
    Subspace,
    annihilator,
    apply_to,
    complement_in,
    coordinates,
    eigenspace,
    intersect,
    preimage,
    scalar,
    sum_spaces,
)


class MalformedModuleError(ValueError):
    """Structurally invalid data: wrong shapes, broken flags, bad labels."""


class AdmissibilityError(ValueError):
    """The module violates an assumption needed by the requested computation."""


class NotRegularError(AdmissibilityError):
    """The proposed submodule is not regular."""


@dataclass(frozen=True)
class WeightedFlag:
    """Complete decreasing flag ``F_0 > F_1 > ... > F_n`` with labels.

    ``weights[i - 1]`` labels the step ``F_{i-1} / F_i``; labels are nondecreasing.
    """

    steps: tuple
    weights: tuple

    def __post_init__(self):
        steps = tuple(self.steps)
        weights = tuple(int(w) for w in self.weights)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "weights", weights)
        if not steps:
            raise MalformedModuleError("flag has no steps")
        n = steps[0].ambient_dim
        if len(steps) != n + 1:
            raise MalformedModuleError("flag in dimension %d needs %d steps, got %d" % (n, n + 1, len(steps)))
        if len(weights) != n:
            raise MalformedModuleError("flag in dimension %d needs %d weights, got %d" % (n, n, len(weights)))
        for i, s in enumerate(steps):
            if s.ambient_dim != n:
                raise MalformedModuleError("flag step %d lives in dimension %d" % (i, s.ambient_dim))
            if s.dim != n - i:
                raise MalformedModuleError("flag step F_%d has dimension %d, expected %d" % (i, s.dim, n - i))
            if i and not s <= steps[i - 1]:
                raise MalformedModuleError("flag step F_%d is not contained in F_%d" % (i, i - 1))
        if any(a > b for a, b in zip(weights, weights[1:])):
            raise MalformedModuleError("flag weights %s are not nondecreasing" % (weights,))

    @classmethod
    def from_generators(cls, generators: Sequence[Sequence], weights: Sequence[int]) -> "WeightedFlag":
        """``F_j`` is spanned by the first ``n - j`` generators."""
        n = len(generators)
        steps = [Subspace.span(generators[: n - j], n) for j in range(n + 1)]
        return cls(tuple(steps), tuple(weights))

    @property
    def n(self) -> int:
        return len(self.weights)

    def step(self, i: int) -> Subspace:
        return self.steps[i]

    def fil(self, j: int) -> Subspace:
        """``Fil^j``: the span of the steps whose label is at least ``j``."""
        return self.steps[sum(1 for w in self.weights if w < j)]

    def shift(self, t: int) -> "WeightedFlag":
        return WeightedFlag(self.steps, tuple(w + t for w in self.weights))

    def transform(self, g: Matrix) -> "WeightedFlag":
        return WeightedFlag(tuple(apply_to(g, s) for s in self.steps), self.weights)

    def dual(self) -> "WeightedFlag":
        n = self.n
        steps = tuple(annihilator(self.steps[n - i]) for i in range(n + 1))
        return WeightedFlag(steps, tuple(-w for w in reversed(self.weights)))


def flag_from_chain(chain: Sequence[Subspace], weights: Sequence[int]) -> WeightedFlag:
    """Compress an induced chain (consecutive dimension drops of 0 or 1) into a flag."""
    steps = [chain[0]]
    labels = []
    for i in range(1, len(chain)):
        drop = chain[i - 1].dim - chain[i].dim
        if drop > 1 or drop < 0:
            raise MalformedModuleError("induced chain drops by %d at step %d" % (drop, i))
        if drop == 1:
            steps.append(chain[i])
            labels.append(weights[i - 1])
    return WeightedFlag(tuple(steps), tuple(labels))


@dataclass(frozen=True)
class FilPhiNModule:
    p: int
    phi: Matrix
    mono: Matrix
    flags: tuple
    twist: int = 0

    def __post_init__(self):
        object.__setattr__(self, "flags", tuple(self.flags))
        n = self.phi.rows
        if n < 1:
            raise MalformedModuleError("module dimension must be positive")
        if not self.phi.is_square():
            raise MalformedModuleError("phi is %dx%d, not square" % self.phi.shape)
        if self.mono.shape != self.phi.shape:
            raise MalformedModuleError("mono is %dx%d but phi is %dx%d" % (self.mono.shape + self.phi.shape))
        if not self.flags:
            raise MalformedModuleError("module needs at least one embedding flag")
        for s, fl in enumerate(self.flags):
            if not isinstance(fl, WeightedFlag):
                raise MalformedModuleError("flag %d is not a WeightedFlag" % s)
            if fl.n != n:
                raise MalformedModuleError("flag %d has dimension %d, module has %d" % (s, fl.n, n))
        if int(self.p) < 2:
            raise MalformedModuleError("p must be a prime, got %r" % (self.p,))

    @property
    def n(self) -> int:
        return self.phi.rows

    @property
    def e(self) -> int:
        return len(self.flags)

    def fil0(self, sigma: int) -> Subspace:
        return self.flags[sigma].fil(0)

    def full(self) -> Subspace:
        return Subspace.full(self.n)


class RankOneData(NamedTuple):
    """Exponents of ``prod sigma(z)^{a_sigma} * |Nm z|^b``.

    ``unramified`` is an extra Frobenius multiplier (an unramified twist);
    it is 1 for the characters written in the closed form above.
    """

    exponents: tuple
    norm_exponent: int
    unramified: Fraction = Fraction(1)


def rank_one(d: RankOneData, p: int) -> FilPhiNModule:
    """Phi-scalar ``p^{-b}`` (times the unramified part), ``N = 0``, weight ``-a_sigma``."""
    lam = Fraction(p) ** (-int(d.norm_exponent)) * scalar(d.unramified)
    flags = tuple(WeightedFlag((Subspace.full(1), Subspace.zero(1)), (-int(a),)) for a in d.exponents)
    return FilPhiNModule(p, Matrix([[lam]]), Matrix([[0]]), flags)


def tate_twist(M: FilPhiNModule, t: int) -> FilPhiNModule:
    s = Fraction(M.p) ** (-t)
    return FilPhiNModule(M.p, M.phi.scale(s), M.mono, tuple(f.shift(-t) for f in M.flags), M.twist + t)


def retwist(M: FilPhiNModule, m: int, new_m: int) -> FilPhiNModule:
    """Tate twist moving the eigenvalue pattern ``p^(m-i)`` to ``p^(new_m-i)``."""
    return tate_twist(M, m - new_m)


def cyclotomic_twist(M: FilPhiNModule) -> FilPhiNModule:
    return tate_twist(M, 1)


def tensor_rank_one(M: FilPhiNModule, R: FilPhiNModule) -> FilPhiNModule:
    """``M (x) R`` for a one-dimensional ``R`` with ``N = 0`` and matching embeddings."""
    if R.n != 1 or R.e != M.e or R.p != M.p:
        raise MalformedModuleError("tensor with a non-rank-one or mismatched module")
    lam = R.phi[0, 0]
    flags = tuple(f.shift(r.weights[0]) for f, r in zip(M.flags, R.flags))
    return FilPhiNModule(M.p, M.phi.scale(lam), M.mono, flags, M.twist)


def dual(M: FilPhiNModule) -> FilPhiNModule:
    try:
        phi = M.phi.inverse().T
    except ZeroDivisionError:
        raise AdmissibilityError("phi is not invertible; the dual is undefined") from None
    return FilPhiNModule(M.p, phi, -M.mono.T, tuple(f.dual() for f in M.flags), -M.twist)


def dual_cyclotomic(M: FilPhiNModule) -> FilPhiNModule:
    """``M^dual (chi_cyc)``."""
    return cyclotomic_twist(dual(M))


def transform(M: FilPhiNModule, g: Matrix) -> FilPhiNModule:
    """Transport all structure along the invertible change of basis ``g``."""
    gi = g.inverse()
    return FilPhiNModule(M.p, g @ M.phi @ gi, g @ M.mono @ gi, tuple(f.transform(g) for f in M.flags), M.twist)


def is_stable(M: FilPhiNModule, U: Subspace) -> bool:
    return apply_to(M.phi, U) <= U and apply_to(M.mono, U) <= U


def submodule(M: FilPhiNModule, U: Subspace, basis: Sequence[Sequence] | None = None):
    """Restriction to a ``(phi, N)``-stable subspace; returns ``(module, inclusion)``."""
    if not is_stable(M, U):
        raise AdmissibilityError("subspace is not stable under phi and N")
    basis = [tuple(b) for b in (U.basis if basis is None else basis)]
    if Subspace.span(basis, M.n) != U or len(basis) != U.dim:
        raise ValueError("basis does not span the subspace")
    if not basis:
        raise AdmissibilityError("zero submodule")
    k = len(basis)

    def induced(A: Matrix) -> Matrix:
        return Matrix.from_columns([coordinates(A @ b, basis) for b in basis], k)

    def coords(S: Subspace) -> Subspace:
        return Subspace.span([coordinates(v, basis) for v in intersect(S, U).basis], k)

    flags = tuple(flag_from_chain([coords(s) for s in f.steps], f.weights) for f in M.flags)
    inc = Matrix.from_columns(basis, M.n)
    return FilPhiNModule(M.p, induced(M.phi), induced(M.mono), flags, M.twist), inc


def subquotient(M: FilPhiNModule, upper: Subspace, lower: Subspace, complement=None):
    """``upper / lower`` with induced structure; returns ``(module, lifts)``.

    ``lifts`` holds, as columns, the vectors of ``upper`` whose images form
    the basis of the subquotient.
    """
    if not (is_stable(M, upper) and is_stable(M, lower)):
        raise AdmissibilityError("subquotient of non-stable subspaces")
    comp = [tuple(c) for c in (complement_in(upper, lower) if complement is None else complement)]
    k = upper.dim - lower.dim
    if k <= 0:
        raise AdmissibilityError("empty subquotient")
    if len(comp) != k or sum_spaces(lower, Subspace.span(comp, M.n)) != upper:
        raise ValueError("complement does not complete the lower subspace")
    full_basis = comp + list(lower.basis)

    def coords(v) -> list[Fraction]:
        return coordinates(v, full_basis)[:k]

    def induced(A: Matrix) -> Matrix:
        return Matrix.from_columns([coords(A @ c) for c in comp], k)

    def image_of(S: Subspace) -> Subspace:
        return Subspace.span([coords(v) for v in intersect(S, upper).basis], k)

    flags = tuple(flag_from_chain([image_of(s) for s in f.steps], f.weights) for f in M.flags)
    lifts = Matrix.from_columns(comp, M.n)
    return FilPhiNModule(M.p, induced(M.phi), induced(M.mono), flags, M.twist), lifts


def quotient(M: FilPhiNModule, lower: Subspace, complement=None):
    """``M / lower``; returns ``(module, projection matrix)``."""
    Q, lifts = subquotient(M, M.full(), lower, complement)
    basis = [lifts.column(j) for j in range(lifts.cols)] + list(lower.basis)
    k = lifts.cols
    proj = Matrix.from_columns([coordinates(e, basis)[:k] for e in Subspace.full(M.n).basis], k)
    return Q, proj


# ---------------------------------------------------------------------------
# admissibility


AXIOMS = {
    "a": "N phi = p phi N",
    "b": "phi diagonalizable with eigenvalues p^(m-i), one-dimensional eigenspaces",
    "c": "N maps D^(i) isomorphically onto D^(i+1) and kills D^(n-1)",
    "d": "F_i + Fil_i^phi is the whole space for every embedding",
    "e": "weight window k_(n) > m > k_(n-1) for every embedding",
    "f": "H^0(W^dual(chi_cyc)) = 0 on the exceptional subquotient",
}

# an axiom is only evaluated once its prerequisites pass
_PREREQS = {"a": (), "b": (), "c": ("a", "b"), "d": ("b",), "e": (), "f": ("a", "b", "d", "e")}


@dataclass(frozen=True)
class AxiomResult:
    status: str  # "pass" | "fail" | "skipped"
    witness: str = ""


@dataclass(frozen=True)
class AdmissibilityReport:
    m: int
    results: dict
    hypotheses: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r.status == "pass" for r in self.results.values())

    def failed(self) -> list[str]:
        return [k for k, r in self.results.items() if r.status == "fail"]

    def skipped(self) -> list[str]:
        return [k for k, r in self.results.items() if r.status == "skipped"]

    @property
    def hypotheses_declared(self) -> bool:
        return bool(self.hypotheses) and all(v is True for v in self.hypotheses.values())

    def lines(self) -> list[str]:
        out = []
        for k, r in self.results.items():
            s = "axiom (%s) %s: %s" % (k, r.status.upper(), AXIOMS[k])
            if r.witness:
                s += " -- " + r.witness
            out.append(s)
        for name in ("GB1", "GB2", "GB3"):
            v = self.hypotheses.get(name)
            out.append("hypothesis %s: %s" % (name, "declared" if v else "undeclared"))
        return out


def _fmt(A: Matrix) -> str:
    return "[" + ", ".join("[" + ", ".join(str(x) for x in row) + "]" for row in A.tolist()) + "]"


def frobenius_eigenvalue(M: FilPhiNModule, m: int, i: int) -> Fraction:
    return Fraction(M.p) ** (m - i)


def _eigenspaces(M: FilPhiNModule, m: int) -> list[Subspace]:
    return [eigenspace(M.phi, frobenius_eigenvalue(M, m, i)) for i in range(M.n)]


def eigenspace_decomposition(M: FilPhiNModule, m: int) -> list[Subspace]:
    """``D^(i)`` on which phi acts by ``p^(m-i)``; each must be a line."""
    spaces = _eigenspaces(M, m)
    dims = [s.dim for s in spaces]
    if any(d != 1 for d in dims):
        raise AdmissibilityError("Frobenius eigenspace dimensions %s, expected all 1" % (dims,))
    return spaces


def frobenius_filtration(M: FilPhiNModule, m: int) -> list[Subspace]:
    """``Fil_j^phi`` for ``j = 0..n``: the sum of ``D^(i)`` over ``i >= n - j``."""
    D = eigenspace_decomposition(M, m)
    n = M.n
    out = [Subspace.zero(n)]
    for j in range(1, n + 1):
        out.append(sum_spaces(*D[n - j:]))
    return out


def validate(M: FilPhiNModule, m: int, hypotheses: dict | None = None) -> AdmissibilityReport:
    """Check the axioms (a)-(f); structural problems raise MalformedModuleError."""
    n = M.n
    if n < 2:
        raise MalformedModuleError("admissibility needs dimension at least 2, got %d" % n)
    try:
        M.phi.inverse()
    except ZeroDivisionError:
        invertible = False
    else:
        invertible = True
    res: dict[str, AxiomResult] = {}

    def ready(k):
        return all(res[q].status == "pass" for q in _PREREQS[k])

    diff = M.mono @ M.phi - (M.phi @ M.mono).scale(M.p)
    if diff.is_zero():
        res["a"] = AxiomResult("pass")
    else:
        res["a"] = AxiomResult("fail", "N phi - p phi N = %s" % _fmt(diff))

    spaces = _eigenspaces(M, m)
    dims = [s.dim for s in spaces]
    if invertible and all(d == 1 for d in dims):
        res["b"] = AxiomResult("pass")
    else:
        res["b"] = AxiomResult(
            "fail",
            "eigenspace dimensions for p^(m-i), i=0..%d: %s%s" % (n - 1, dims, "" if invertible else "; phi singular"),
        )

    if ready("c"):
        bad = []
        for i in range(n - 1):
            img = apply_to(M.mono, spaces[i])
            if img != spaces[i + 1]:
                bad.append("N(D^(%d)) = %r" % (i, img))
        if not apply_to(M.mono, spaces[n - 1]).is_zero():
            bad.append("N does not kill D^(%d)" % (n - 1))
        res["c"] = AxiomResult("fail", "; ".join(bad)) if bad else AxiomResult("pass")
    else:
        res["c"] = AxiomResult("skipped", "prerequisite failed")

    if ready("d"):
        filphi = [Subspace.zero(n)] + [sum_spaces(*spaces[n - j:]) for j in range(1, n + 1)]
        bad = []
        for s, fl in enumerate(M.flags):
            for i in range(1, n):
                if sum_spaces(fl.step(i), filphi[i]).dim != n:
                    bad.append("embedding %d: F_%d meets Fil_%d^phi = %r" % (s, i, i, intersect(fl.step(i), filphi[i])))
        res["d"] = AxiomResult("fail", "; ".join(bad)) if bad else AxiomResult("pass")
    else:
        res["d"] = AxiomResult("skipped", "prerequisite failed")

    bad = []
    for s, fl in enumerate(M.flags):
        k = fl.weights
        if not (k[n - 1] > m > k[n - 2]):
            bad.append("embedding %d: weights %s, m = %d" % (s, list(k), m))
    res["e"] = AxiomResult("fail", "; ".join(bad)) if bad else AxiomResult("pass")

    if ready("f"):
        h0 = _gb4_local_h0(M, m)
        if h0 == 0:
            res["f"] = AxiomResult("pass")
        else:
            res["f"] = AxiomResult("fail", "dim H^0(W^dual(chi_cyc)) = %d" % h0)
    else:
        res["f"] = AxiomResult("skipped", "prerequisite failed")

    hyp = {name: (hypotheses or {}).get(name) for name in ("GB1", "GB2", "GB3")}
    return AdmissibilityReport(m, res, hyp)


def _gb4_local_h0(M: FilPhiNModule, m: int) -> int:
    from . import sscoh

    D = regular_submodule(M, m)
    W = exceptional_subquotient(M, m, D)
    return sscoh.h(sscoh.build_st(dual_cyclotomic(W)), 0)[0]


def regular_submodule(M: FilPhiNModule, m: int) -> Subspace:
    """``Fil_{n-1}^phi`` of the twist ``M(m)``; the twist leaves the subspace unchanged."""
    return frobenius_filtration(M, m)[M.n - 1]


def check_regular(T: FilPhiNModule, D: Subspace) -> None:
    """Raise NotRegularError unless ``D`` is stable and complementary to every ``Fil^0``."""
    if not is_stable(T, D):
        raise NotRegularError("submodule is not stable under phi and N")
    for s in range(T.e):
        F0 = T.fil0(s)
        if D.dim + F0.dim != T.n or not intersect(D, F0).is_zero():
            raise NotRegularError("embedding %d: D + Fil^0 is not a direct sum decomposition" % s)


def gb_filtration(M: FilPhiNModule, m: int, D: Subspace) -> list[Subspace]:
    """The five steps ``D_{-2} .. D_2`` for ``D`` inside the twist ``M(m)``."""
    T = tate_twist(M, m)
    check_regular(T, D)
    n = T.n
    p = Fraction(T.p)
    ident = Matrix.identity(n)
    fixed = eigenspace(T.phi, 1)
    d_fixed = intersect(D, fixed)
    d_low = intersect(D, eigenspace(T.phi, 1 / p))
    step = ident - T.phi.inverse().scale(1 / p)
    d_m1 = sum_spaces(apply_to(step, D), apply_to(T.mono, d_fixed))
    d_1 = sum_spaces(D, intersect(fixed, preimage(T.mono, d_low)))
    return [Subspace.zero(n), d_m1, D, d_1, Subspace.full(n)]


def exceptional_subquotient(M: FilPhiNModule, m: int, D: Subspace) -> FilPhiNModule:
    """``D_1 / D_{-1}`` with the induced structure of ``M(m)``."""
    return exceptional_presentation(M, m, D)[0]


def exceptional_presentation(M: FilPhiNModule, m: int, D: Subspace):
    """``(W, lifts, D_in_W)``: the subquotient, lift vectors, and the image of ``D`` in ``W``."""
    return _presentation(M, m, D)[:3]


def exceptional_coordinates(M: FilPhiNModule, m: int, D: Subspace, v) -> tuple:
    """Coordinates in ``W`` of the image of a vector ``v`` of ``D_1``."""
    W, lifts, _, lower = _presentation(M, m, D)
    basis = [lifts.column(j) for j in range(lifts.cols)] + list(lower.basis)
    return tuple(coordinates(v, basis)[: lifts.cols])


@lru_cache(maxsize=512)
def _presentation(M: FilPhiNModule, m: int, D: Subspace):
    steps = gb_filtration(M, m, D)
    T = tate_twist(M, m)
    W, lifts = subquotient(T, steps[3], steps[1])
    basis = [lifts.column(j) for j in range(lifts.cols)] + list(steps[1].basis)
    k = lifts.cols
    d_in_w = Subspace.span([coordinates(v, basis)[:k] for v in D.basis], k)
    return W, lifts, d_in_w, steps[1]


class WRanks(NamedTuple):
    w0: int
    w1: int
    m0: int
    m1: int

    @property
    def generic(self) -> bool:
        return (self.w0, self.w1) == (0, 0)


def w_ranks(M: FilPhiNModule, m: int, D: Subspace) -> WRanks:
    """Ranks of ``W_0, W_1, M_0, M_1`` in the decomposition of the exceptional subquotient."""
    from . import sscoh

    W = exceptional_subquotient(M, m, D)
    w0 = sscoh.h(sscoh.build_st(dual_cyclotomic(W)), 0)[0]
    w1 = sscoh.h(sscoh.build_st(W), 0)[0]
    rest = W.n - w0 - w1
    if rest % 2:
        raise AdmissibilityError("odd remainder %d in the rank decomposition" % rest)
    return WRanks(w0, w1, rest // 2, rest // 2)


def mutate(M: FilPhiNModule, **changes) -> FilPhiNModule:
    """Copy with fields replaced; a test helper for building negative examples."""
    return replace(M, **changes)
