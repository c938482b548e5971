"""Exact rational linear algebra: matrices, canonical subspaces, flags.

Everything here works over :class:`fractions.Fraction`.  Subspaces are stored
by their reduced row-echelon basis, so two subspaces are equal exactly when
their stored bases are equal.

Column-vector convention: ``M[i, j]`` is the ``i``-th coordinate of the image
of the ``j``-th basis vector.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Scalar = Fraction
Vector = tuple  # tuple[Fraction, ...]

_SCALAR_RE = re.compile(r"^\s*(-?\d+)(?:\s*/\s*(\d+))?\s*$")


class DimensionError(ValueError):
    """Operands live in spaces of incompatible dimension."""


def scalar(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return parse_scalar(x)
    if isinstance(x, float):
        raise TypeError("floating point values are not accepted: %r" % (x,))
    return Fraction(x)


def parse_scalar(text: str) -> Fraction:
    """Parse ``"7/3"``, ``"-2"`` or ``"0"``.  Raises ValueError otherwise."""
    m = _SCALAR_RE.match(text)
    if m is None:
        raise ValueError("not a fraction string: %r" % (text,))
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValueError("zero denominator in %r" % (text,))
    return Fraction(num, den)


def format_scalar(x) -> str:
    return str(Fraction(x))


def vector(values: Iterable) -> Vector:
    return tuple(scalar(v) for v in values)


def is_zero_vector(v: Sequence) -> bool:
    return all(x == 0 for x in v)


def unit_vector(n: int, i: int) -> Vector:
    return tuple(Fraction(int(j == i)) for j in range(n))


def vadd(u: Sequence, v: Sequence) -> Vector:
    return tuple(a + b for a, b in zip(u, v))


def vsub(u: Sequence, v: Sequence) -> Vector:
    return tuple(a - b for a, b in zip(u, v))


def vscale(c, v: Sequence) -> Vector:
    c = scalar(c)
    return tuple(c * a for a in v)


def dot(u: Sequence, v: Sequence) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def lincomb(coeffs: Sequence, vectors: Sequence[Sequence], n: int) -> Vector:
    out = [Fraction(0)] * n
    for c, v in zip(coeffs, vectors):
        if c:
            for i, x in enumerate(v):
                out[i] += c * x
    return tuple(out)


class Matrix:
    """Immutable dense matrix of Fractions."""

    __slots__ = ("rows", "cols", "_e")

    def __init__(self, entries: Iterable[Iterable], cols: int | None = None):
        rows = tuple(tuple(scalar(x) for x in row) for row in entries)
        if cols is None:
            if not rows:
                raise DimensionError("cannot infer column count of an empty matrix")
            cols = len(rows[0])
        for r in rows:
            if len(r) != cols:
                raise DimensionError("ragged matrix rows")
        self.rows = len(rows)
        self.cols = cols
        self._e = rows

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls([[int(i == j) for j in range(n)] for i in range(n)], n)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Matrix":
        return cls([[0] * cols for _ in range(rows)], cols)

    @classmethod
    def diag(cls, values: Sequence) -> "Matrix":
        n = len(values)
        return cls([[values[i] if i == j else 0 for j in range(n)] for i in range(n)], n)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], rows: int) -> "Matrix":
        return cls([[c[i] for c in columns] for i in range(rows)], len(columns))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, idx):
        i, j = idx
        return self._e[i][j]

    def row(self, i: int) -> Vector:
        return self._e[i]

    def column(self, j: int) -> Vector:
        return tuple(r[j] for r in self._e)

    def columns(self) -> list[Vector]:
        return [self.column(j) for j in range(self.cols)]

    def tolist(self) -> list[list[Fraction]]:
        return [list(r) for r in self._e]

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and self._e == other._e

    def __hash__(self):
        return hash((self.rows, self.cols, self._e))

    def __repr__(self):
        body = "; ".join(" ".join(str(x) for x in r) for r in self._e)
        return "Matrix(%dx%d: [%s])" % (self.rows, self.cols, body)

    def _check_same(self, other: "Matrix"):
        if self.shape != other.shape:
            raise DimensionError("shape mismatch %s vs %s" % (self.shape, other.shape))

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check_same(other)
        return Matrix([[a + b for a, b in zip(r, s)] for r, s in zip(self._e, other._e)], self.cols)

    def __sub__(self, other: "Matrix") -> "Matrix":
        self._check_same(other)
        return Matrix([[a - b for a, b in zip(r, s)] for r, s in zip(self._e, other._e)], self.cols)

    def __neg__(self) -> "Matrix":
        return Matrix([[-a for a in r] for r in self._e], self.cols)

    def scale(self, c) -> "Matrix":
        c = scalar(c)
        return Matrix([[c * a for a in r] for r in self._e], self.cols)

    def __rmul__(self, c) -> "Matrix":
        return self.scale(c)

    def __matmul__(self, other):
        if isinstance(other, Matrix):
            if self.cols != other.rows:
                raise DimensionError("cannot multiply %s by %s" % (self.shape, other.shape))
            ocols = other.columns()
            return Matrix([[dot(r, c) for c in ocols] for r in self._e], other.cols)
        v = tuple(other)
        if len(v) != self.cols:
            raise DimensionError("cannot apply %s matrix to a vector of length %d" % (self.shape, len(v)))
        return tuple(dot(r, v) for r in self._e)

    def apply(self, v: Sequence) -> Vector:
        return self @ v

    @property
    def T(self) -> "Matrix":
        return Matrix([self.column(j) for j in range(self.cols)], self.rows)

    def __pow__(self, k: int) -> "Matrix":
        if self.rows != self.cols:
            raise DimensionError("power of a non-square matrix")
        if k < 0:
            return self.inverse() ** (-k)
        out = Matrix.identity(self.rows)
        for _ in range(k):
            out = out @ self
        return out

    def is_zero(self) -> bool:
        return all(x == 0 for r in self._e for x in r)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def rank(self) -> int:
        return len(rref(self._e, self.cols)[0])

    def inverse(self) -> "Matrix":
        if not self.is_square():
            raise DimensionError("inverse of a non-square matrix")
        n = self.rows
        aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(self._e)]
        red, pivots = rref(aug, 2 * n)
        if len(pivots) < n or pivots[n - 1] >= n:
            raise ZeroDivisionError("matrix is singular")
        return Matrix([r[n:] for r in red], n)

    def is_invertible(self) -> bool:
        return self.is_square() and self.rank() == self.rows


def vstack(blocks: Sequence[Matrix], cols: int) -> Matrix:
    rows = []
    for b in blocks:
        if b.cols != cols:
            raise DimensionError("vstack column mismatch")
        rows.extend(b.tolist())
    return Matrix(rows, cols)


def block_diag(blocks: Sequence[Matrix]) -> Matrix:
    cols = sum(b.cols for b in blocks)
    rows = []
    off = 0
    for b in blocks:
        for r in b.tolist():
            rows.append([Fraction(0)] * off + r + [Fraction(0)] * (cols - off - b.cols))
        off += b.cols
    return Matrix(rows, cols)


def rref(rows: Sequence[Sequence], ncols: int) -> tuple[list[Vector], list[int]]:
    """Reduced row-echelon form with leftmost pivots; zero rows dropped."""
    m = [list(map(scalar, r)) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pr = m[r]
        inv = 1 / pr[c]
        if inv != 1:
            pr = [x * inv for x in pr]
            m[r] = pr
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b if b else a for a, b in zip(m[i], pr)]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return [tuple(row) for row in m[:r]], pivots


@dataclass(frozen=True)
class Subspace:
    """A subspace of ``Q^ambient_dim``, stored by its canonical RREF basis."""

    ambient_dim: int
    basis: tuple

    def __post_init__(self):
        red, _ = rref(self.basis, self.ambient_dim)
        if tuple(red) != tuple(self.basis):
            object.__setattr__(self, "basis", tuple(red))

    @classmethod
    def span(cls, vectors: Iterable[Sequence], n: int) -> "Subspace":
        vecs = [vector(v) for v in vectors]
        for v in vecs:
            if len(v) != n:
                raise DimensionError("vector of length %d in %d-space" % (len(v), n))
        return cls._reduced(n, tuple(rref(vecs, n)[0]))

    @classmethod
    def _reduced(cls, n: int, basis: tuple) -> "Subspace":
        # basis already canonical; skip the second reduction
        obj = object.__new__(cls)
        object.__setattr__(obj, "ambient_dim", n)
        object.__setattr__(obj, "basis", basis)
        return obj

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, ())

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, tuple(unit_vector(n, i) for i in range(n)))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def pivots(self) -> list[int]:
        return [next(i for i, x in enumerate(b) if x != 0) for b in self.basis]

    def is_zero(self) -> bool:
        return not self.basis

    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    def contains(self, v: Sequence) -> bool:
        v = vector(v)
        if len(v) != self.ambient_dim:
            raise DimensionError("vector of length %d in %d-space" % (len(v), self.ambient_dim))
        # reduce against the pivots; RREF makes this a single pass
        rest = list(v)
        for b, p in zip(self.basis, self.pivots):
            c = rest[p]
            if c:
                rest = [x - c * y for x, y in zip(rest, b)]
        return is_zero_vector(rest)

    def __le__(self, other: "Subspace") -> bool:
        _check_ambient(self, other)
        return all(other.contains(b) for b in self.basis)

    def __repr__(self):
        vs = ", ".join("(" + ", ".join(str(x) for x in b) + ")" for b in self.basis)
        return "Subspace(%d, [%s])" % (self.ambient_dim, vs)


def _check_ambient(U: Subspace, V: Subspace):
    if U.ambient_dim != V.ambient_dim:
        raise DimensionError("ambient dimensions %d and %d differ" % (U.ambient_dim, V.ambient_dim))


def kernel(M: Matrix) -> Subspace:
    """``{v : M v = 0}``."""
    red, pivots = rref(M.tolist(), M.cols)
    free = [c for c in range(M.cols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * M.cols
        v[f] = Fraction(1)
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return Subspace.span(basis, M.cols)


def image(M: Matrix) -> Subspace:
    """Column space of ``M``."""
    return Subspace.span(M.columns(), M.rows)


def annihilator(U: Subspace) -> Subspace:
    """Linear forms (as coordinate vectors) vanishing on ``U``."""
    if U.is_zero():
        return Subspace.full(U.ambient_dim)
    return kernel(Matrix(U.basis, U.ambient_dim))


def equations(U: Subspace) -> Matrix:
    """A matrix whose kernel is exactly ``U`` (zero rows when ``U`` is full)."""
    ann = annihilator(U)
    return Matrix(ann.basis, U.ambient_dim)


def sum_spaces(*spaces: Subspace) -> Subspace:
    if not spaces:
        raise ValueError("sum of no subspaces")
    n = spaces[0].ambient_dim
    for s in spaces[1:]:
        _check_ambient(spaces[0], s)
    return Subspace.span([b for s in spaces for b in s.basis], n)


def intersect(*spaces: Subspace) -> Subspace:
    """Intersection, computed as the kernel of the stacked equations."""
    if not spaces:
        raise ValueError("intersection of no subspaces")
    n = spaces[0].ambient_dim
    for s in spaces[1:]:
        _check_ambient(spaces[0], s)
    rows = [r for s in spaces for r in annihilator(s).basis]
    if not rows:
        return Subspace.full(n)
    return kernel(Matrix(rows, n))


def apply_to(M: Matrix, U: Subspace) -> Subspace:
    """``M(U)``."""
    if M.cols != U.ambient_dim:
        raise DimensionError("map from %d-space applied to subspace of %d-space" % (M.cols, U.ambient_dim))
    return Subspace.span([M @ b for b in U.basis], M.rows)


def preimage(M: Matrix, U: Subspace) -> Subspace:
    """``{v : M v in U}``."""
    if M.rows != U.ambient_dim:
        raise DimensionError("preimage under a map into %d-space of a subspace of %d-space" % (M.rows, U.ambient_dim))
    eq = annihilator(U)
    if eq.is_zero():
        return Subspace.full(M.cols)
    return kernel(Matrix(eq.basis, M.rows) @ M)


def eigenspace(M: Matrix, lam) -> Subspace:
    if not M.is_square():
        raise DimensionError("eigenspace of a non-square matrix")
    return kernel(M - Matrix.identity(M.rows).scale(lam))


def solve_in_span(target: Sequence, generators: Sequence[Sequence]) -> list[Fraction] | None:
    """Coefficients ``c`` with ``sum c_i g_i = target``, or ``None``.

    With dependent generators the free coefficients are set to zero.
    """
    t = vector(target)
    n = len(t)
    gens = [vector(g) for g in generators]
    for g in gens:
        if len(g) != n:
            raise DimensionError("generator of length %d, target of length %d" % (len(g), n))
    k = len(gens)
    if k == 0:
        return [] if is_zero_vector(t) else None
    aug = [[g[i] for g in gens] + [t[i]] for i in range(n)]
    red, pivots = rref(aug, k + 1)
    if pivots and pivots[-1] == k:
        return None
    coeffs = [Fraction(0)] * k
    for row, p in zip(red, pivots):
        coeffs[p] = row[k]
    return coeffs


def coordinates(v: Sequence, basis: Sequence[Sequence]) -> list[Fraction]:
    """Coordinates of ``v`` in an independent ``basis``; raises if ``v`` is outside the span."""
    c = solve_in_span(v, basis)
    if c is None:
        raise ValueError("vector is not in the span of the given basis")
    return c


def quotient_map(U: Subspace) -> Matrix:
    """Projection ``Q^n -> Q^n / U`` in coordinates of the non-pivot unit vectors.

    The kernel is exactly ``U`` and ``quotient_map(U) @ quotient_lift(U)`` is the identity.
    """
    n = U.ambient_dim
    piv = U.pivots
    free = [j for j in range(n) if j not in piv]
    rows = []
    for j in free:
        row = [Fraction(0)] * n
        row[j] = Fraction(1)
        for b, p in zip(U.basis, piv):
            row[p] -= b[j]
        rows.append(row)
    return Matrix(rows, n)


def quotient_lift(U: Subspace) -> Matrix:
    """Section of :func:`quotient_map`: the non-pivot unit vectors as columns."""
    n = U.ambient_dim
    piv = U.pivots
    free = [j for j in range(n) if j not in piv]
    return Matrix.from_columns([unit_vector(n, j) for j in free], n) if free else Matrix.zeros(n, 0)


def complement_in(upper: Subspace, lower: Subspace) -> list[Vector]:
    """Vectors from ``upper``'s canonical basis extending a basis of ``lower`` to one of ``upper``."""
    _check_ambient(upper, lower)
    if not lower <= upper:
        raise ValueError("lower subspace is not contained in upper subspace")
    chosen: list[Vector] = []
    span = lower
    for b in upper.basis:
        if not span.contains(b):
            chosen.append(b)
            span = sum_spaces(span, Subspace.span([b], upper.ambient_dim))
    return chosen
