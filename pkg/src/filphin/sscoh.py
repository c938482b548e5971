"""Semistable and crystalline complexes of filtered (phi, N)-modules.

Degree-one cochains of the semistable complex are stored as one flat vector::

    (x_1, ..., x_e, b, c)     x_s in D / Fil^0_s  (quotient coordinates),  b, c in D

with ``d1(a) = (a mod Fil^0, (phi - 1) a, N a)`` and ``d2(x, b, c) = N b - (p phi - 1) c``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exactlin import (
    Matrix,
    Subspace,
    apply_to,
    block_diag,
    eigenspace,
    image,
    intersect,
    kernel,
    preimage,
    quotient_lift,
    quotient_map,
    solve_in_span,
    sum_spaces,
    vector,
    vstack,
)
from .phinmod import FilPhiNModule, submodule


class ComplexError(ValueError):
    """A complex could not be built or a cohomology computation is ill-posed."""


class ClassDependenceError(ComplexError):
    """The canonical classes alpha*, beta* are not independent cocycle classes."""


class ExactnessError(ComplexError):
    """The maps handed to :func:`connecting` do not form a short exact sequence."""


class LiftError(ComplexError):
    """No Frobenius-fixed lift of an H^0 class exists."""


@dataclass(frozen=True, eq=False)
class CohClass:
    degree: int
    rep: tuple
    complex: "_Complex"

    def __eq__(self, other):
        if not isinstance(other, CohClass):
            return NotImplemented
        return (
            self.complex is other.complex
            and self.degree == other.degree
            and self.complex.is_coboundary(self.degree, tuple(a - b for a, b in zip(self.rep, other.rep)))
        )

    __hash__ = None

    def __add__(self, other: "CohClass") -> "CohClass":
        return CohClass(self.degree, tuple(a + b for a, b in zip(self.rep, other.rep)), self.complex)

    def __neg__(self) -> "CohClass":
        return CohClass(self.degree, tuple(-a for a in self.rep), self.complex)

    def scale(self, c) -> "CohClass":
        c = Fraction(c)
        return CohClass(self.degree, tuple(c * a for a in self.rep), self.complex)

    def is_zero(self) -> bool:
        return self.complex.is_coboundary(self.degree, self.rep)


class _Complex:
    """A finite cochain complex given by its differentials."""

    module: FilPhiNModule
    diffs: tuple  # d^0, d^1, ... as Matrices

    def term_dim(self, k: int) -> int:
        if k == 0:
            return self.diffs[0].cols
        return self.diffs[k - 1].rows

    @property
    def top(self) -> int:
        return len(self.diffs)

    def cocycles(self, k: int) -> Subspace:
        if k < self.top:
            return kernel(self.diffs[k])
        return Subspace.full(self.term_dim(k))

    def coboundaries(self, k: int) -> Subspace:
        if k == 0:
            return Subspace.zero(self.term_dim(0))
        return image(self.diffs[k - 1])

    def is_cocycle(self, k: int, v: Sequence) -> bool:
        return self.cocycles(k).contains(v)

    def is_coboundary(self, k: int, v: Sequence) -> bool:
        return self.coboundaries(k).contains(v)

    def cls(self, k: int, v: Sequence) -> CohClass:
        v = vector(v)
        if len(v) != self.term_dim(k):
            raise ComplexError("cochain of length %d in a degree-%d term of dimension %d" % (len(v), k, self.term_dim(k)))
        if not self.is_cocycle(k, v):
            raise ComplexError("vector is not a cocycle in degree %d" % k)
        return CohClass(k, v, self)

    def class_coordinates(self, c: CohClass, basis: Sequence[CohClass]) -> list[Fraction] | None:
        """Coefficients expressing ``c`` in the span of ``basis`` modulo coboundaries."""
        gens = [b.rep for b in basis] + list(self.coboundaries(c.degree).basis)
        sol = solve_in_span(c.rep, gens)
        return None if sol is None else sol[: len(basis)]


def h(C: _Complex, degree: int) -> tuple[int, list[CohClass]]:
    """Dimension of ``H^degree`` and coset representatives of a basis."""
    if degree < 0 or degree > C.top:
        raise ComplexError("degree %d outside 0..%d" % (degree, C.top))
    span = C.coboundaries(degree)
    reps = []
    for z in C.cocycles(degree).basis:
        if not span.contains(z):
            reps.append(CohClass(degree, z, C))
            span = sum_spaces(span, Subspace.span([z], span.ambient_dim))
    return len(reps), reps


class SemistableComplex(_Complex):
    def __init__(self, M: FilPhiNModule):
        self.module = M
        n = M.n
        ident = Matrix.identity(n)
        self.fil0 = tuple(M.fil0(s) for s in range(M.e))
        self.quot = tuple(quotient_map(F) for F in self.fil0)
        self.lift = tuple(quotient_lift(F) for F in self.fil0)
        d1 = vstack(list(self.quot) + [M.phi - ident, M.mono], n)
        dr = sum(q.rows for q in self.quot)
        neg = ident - M.phi.scale(M.p)
        d2 = Matrix([[0] * dr + list(M.mono.row(i)) + list(neg.row(i)) for i in range(n)], dr + 2 * n)
        if not (d2 @ d1).is_zero():
            raise ComplexError("d2 . d1 != 0: the module violates N phi = p phi N")
        self.diffs = (d1, d2)
        self.dr_dims = tuple(q.rows for q in self.quot)

    @property
    def d1(self) -> Matrix:
        return self.diffs[0]

    @property
    def d2(self) -> Matrix:
        return self.diffs[1]

    def cochain(self, x: Sequence[Sequence] | Sequence | None, b: Sequence | None, c: Sequence | None) -> tuple:
        """Assemble a degree-one cochain from ``x in D`` (or one per embedding), ``b``, ``c``.

        ``x`` given as a single vector of ``D`` is placed in every embedding slot.
        """
        n = self.module.n
        zero = (Fraction(0),) * n
        if x is None:
            xs = [zero] * self.module.e
        elif x and not isinstance(x[0], (tuple, list)):
            xs = [tuple(x)] * self.module.e
        else:
            xs = [tuple(v) for v in x]
        parts: list[Fraction] = []
        for q, v in zip(self.quot, xs):
            parts.extend(q @ vector(v))
        parts.extend(vector(b if b is not None else zero))
        parts.extend(vector(c if c is not None else zero))
        return tuple(parts)

    def split(self, v: Sequence) -> tuple[list[tuple], tuple, tuple]:
        """Inverse of :meth:`cochain` up to ``Fil^0``: dR parts lifted to ``D``."""
        n = self.module.n
        xs, off = [], 0
        for q, L in zip(self.quot, self.lift):
            xs.append(L @ tuple(v[off:off + q.rows]))
            off += q.rows
        return xs, tuple(v[off:off + n]), tuple(v[off + n:off + 2 * n])


class CrystallineComplex(_Complex):
    """``D_cris = ker N`` with the induced data; ``d(a) = (a mod Fil^0, (phi - 1) a)``."""

    def __init__(self, M: FilPhiNModule):
        self.source = M
        K = kernel(M.mono)
        if K.is_zero():
            raise ComplexError("D_cris is zero")
        Dc, inc = submodule(M, K)
        self.module = Dc
        self.inclusion = inc
        r = Dc.n
        quot = [quotient_map(Dc.fil0(s)) for s in range(Dc.e)]
        self.quot = tuple(quot)
        self.diffs = (vstack(quot + [Dc.phi - Matrix.identity(r)], r),)


def build_st(M: FilPhiNModule) -> SemistableComplex:
    return SemistableComplex(M)


def build_cris(M: FilPhiNModule) -> CrystallineComplex:
    return CrystallineComplex(M)


def euler_rhs(C: SemistableComplex) -> int:
    """``n - dim(term1) + n`` for the semistable complex."""
    n = C.module.n
    return n - C.term_dim(1) + n


def alpha_beta(M: FilPhiNModule, v: Sequence | None = None) -> tuple[CohClass, CohClass]:
    """``alpha* = cl(v, 0, 0)`` and ``beta* = -cl(0, 0, v)`` for a rank-one ``M``."""
    if M.n != 1:
        raise ComplexError("alpha*/beta* need a one-dimensional module, got dimension %d" % M.n)
    C = build_st(M)
    v = vector(v) if v is not None else (Fraction(1),)
    if v[0] == 0:
        raise ComplexError("v_delta must be nonzero")
    a = C.cochain(v, None, None)
    b = tuple(-x for x in C.cochain(None, None, v))
    for name, rep in (("alpha*", a), ("beta*", b)):
        if not C.is_cocycle(1, rep):
            raise ClassDependenceError("%s is not a cocycle (d2 != 0 on it)" % name)
    gens = [a, b] + list(C.coboundaries(1).basis)
    if Subspace.span(gens, C.term_dim(1)).dim != 2 + C.coboundaries(1).dim:
        raise ClassDependenceError("alpha* and beta* are dependent in H^1")
    return CohClass(1, a, C), CohClass(1, b, C)


@dataclass(frozen=True, eq=False)
class ConnectingMap:
    """``H^0(quot) -> H^1(sub)`` for a short exact sequence of modules."""

    source: tuple  # H^0(quot) basis classes
    images: tuple  # their images, classes in H^1(sub)
    sub_complex: SemistableComplex
    quot_complex: SemistableComplex
    lifts: tuple  # phi-fixed lifts in the middle module
    lift_unique: bool

    def __call__(self, coeffs: Sequence) -> CohClass:
        coeffs = [Fraction(c) for c in coeffs]
        if len(coeffs) != len(self.images):
            raise ComplexError("expected %d coefficients" % len(self.images))
        rep = [Fraction(0)] * self.sub_complex.term_dim(1)
        for c, im in zip(coeffs, self.images):
            rep = [r + c * x for r, x in zip(rep, im.rep)]
        return CohClass(1, tuple(rep), self.sub_complex)

    def apply_rep(self, v: Sequence) -> CohClass:
        """Image of the class represented by ``v`` in ``H^0(quot)``."""
        coords = solve_in_span(v, [s.rep for s in self.source])
        if coords is None:
            raise ComplexError("vector is not an H^0 class of the quotient")
        return self(coords)


def _weights_breaks(*flags) -> list[int]:
    vals = sorted({w for f in flags for w in f.weights})
    return vals + [vals[-1] + 1] if vals else [0]


def check_exact(sub: FilPhiNModule, mid: FilPhiNModule, quot: FilPhiNModule, inclusion: Matrix, projection: Matrix) -> None:
    """Raise ExactnessError unless ``0 -> sub -> mid -> quot -> 0`` is a strict exact sequence."""
    if inclusion.shape != (mid.n, sub.n) or projection.shape != (quot.n, mid.n):
        raise ExactnessError("map shapes do not match the modules")
    if inclusion.rank() != sub.n:
        raise ExactnessError("inclusion is not injective")
    if projection.rank() != quot.n:
        raise ExactnessError("projection is not surjective")
    if image(inclusion) != kernel(projection):
        raise ExactnessError("image of the inclusion is not the kernel of the projection")
    for name, a, b in (("phi", "phi", "phi"), ("N", "mono", "mono")):
        if inclusion @ getattr(sub, a) != getattr(mid, b) @ inclusion:
            raise ExactnessError("inclusion does not commute with %s" % name)
        if projection @ getattr(mid, a) != getattr(quot, b) @ projection:
            raise ExactnessError("projection does not commute with %s" % name)
    if not (sub.e == mid.e == quot.e):
        raise ExactnessError("embedding counts differ")
    for s in range(mid.e):
        for j in _weights_breaks(sub.flags[s], mid.flags[s], quot.flags[s]):
            if preimage(inclusion, mid.flags[s].fil(j)) != sub.flags[s].fil(j):
                raise ExactnessError("embedding %d: Fil^%d of the sub is not induced" % (s, j))
            if apply_to(projection, mid.flags[s].fil(j)) != quot.flags[s].fil(j):
                raise ExactnessError("embedding %d: Fil^%d of the quotient is not induced" % (s, j))


def connecting(sub: FilPhiNModule, mid: FilPhiNModule, quot: FilPhiNModule, inclusion: Matrix, projection: Matrix) -> ConnectingMap:
    """Connecting map: lift a class phi-equivariantly, apply ``d1`` in the middle, read it in the sub."""
    check_exact(sub, mid, quot, inclusion, projection)
    Cs, Cm, Cq = build_st(sub), build_st(mid), build_st(quot)
    _, h0 = h(Cq, 0)
    fixed = eigenspace(mid.phi, 1)
    fixed_imgs = [projection @ f for f in fixed.basis]
    lift_unique = intersect(fixed, image(inclusion)).is_zero()
    # term1(sub) -> term1(mid)
    blocks = [Cm.quot[s] @ inclusion @ Cs.lift[s] for s in range(mid.e)] + [inclusion, inclusion]
    t1 = block_diag(blocks)
    t1_cols = t1.columns()
    lifts, images = [], []
    for cls_ in h0:
        coeffs = solve_in_span(cls_.rep, fixed_imgs)
        if coeffs is None:
            raise LiftError("no Frobenius-fixed lift of %r" % (cls_.rep,))
        lift = tuple(sum((c * f[i] for c, f in zip(coeffs, fixed.basis)), Fraction(0)) for i in range(mid.n))
        y = Cm.d1 @ lift
        z = solve_in_span(y, t1_cols)
        if z is None:
            raise ExactnessError("d1 of the lift does not come from the sub")
        lifts.append(lift)
        images.append(Cs.cls(1, z))
    return ConnectingMap(tuple(h0), tuple(images), Cs, Cq, tuple(lifts), lift_unique)


def sign_flip_dr(C: SemistableComplex, rep: Sequence) -> tuple:
    """Negate the de Rham components of a degree-one cochain."""
    dr = sum(C.dr_dims)
    return tuple(-x for x in rep[:dr]) + tuple(rep[dr:])
