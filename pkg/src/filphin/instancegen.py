"""Seeded generator of admissible modules with a planted L, the fixtures, and the instance file format.

Randomness comes from SplitMix64 (Steele, Lea and Flood) so that a seed gives
the same instance in any language: state advances by ``0x9E3779B97F4A7C15``
and each output is the usual xor-shift-multiply finalizer of the new state.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import exactlin as xl
from .phinmod import FilPhiNModule, WeightedFlag

FORMAT = "filphin-instance/1"
HYPOTHESES = ("GB1", "GB2", "GB3")
MASK = (1 << 64) - 1
RETRIES = 64


class GenerationError(RuntimeError):
    pass


class InstanceFormatError(ValueError):
    """Unreadable instance file; the message names the offending line or field."""


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def below(self, k: int) -> int:
        """Uniform integer in ``[0, k)`` by rejection."""
        if k <= 0:
            raise ValueError("empty range")
        limit = (1 << 64) - ((1 << 64) % k)
        while True:
            x = self.next()
            if x < limit:
                return x % k

    def integer(self, lo: int, hi: int) -> int:
        return lo + self.below(hi - lo + 1)

    def rational(self, bound: int = 10) -> Fraction:
        return Fraction(self.integer(-bound, bound), self.integer(1, bound))

    def nonzero_rational(self, bound: int = 10) -> Fraction:
        while True:
            q = self.rational(bound)
            if q:
                return q


@dataclass(frozen=True)
class GenSpec:
    """Parameters of one generated prime.

    ``tails`` fixes, per embedding, the coefficients of ``v_2..v_{n-1}`` in the
    top flag generator; ``extensions`` fixes, per embedding, the generators
    added for ``F_{n-2}, ..., F_1``.  Both are sampled when left out.
    """

    p: int
    n: int
    e: int
    m: int
    weights: tuple
    planted_L: Fraction
    seed: int
    degenerate: bool = False
    conjugate: bool = True
    tails: tuple | None = None
    extensions: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "planted_L", xl.scalar(self.planted_L))
        object.__setattr__(self, "weights", tuple(tuple(int(k) for k in w) for w in self.weights))
        if self.p < 2 or any(self.p % d == 0 for d in range(2, int(self.p ** 0.5) + 1)):
            raise ValueError("p = %d is not prime" % self.p)
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.e < 1:
            raise ValueError("e must be at least 1")
        if len(self.weights) != self.e:
            raise ValueError("need one weight list per embedding (%d), got %d" % (self.e, len(self.weights)))
        for s, w in enumerate(self.weights):
            if len(w) != self.n:
                raise ValueError("embedding %d: need %d weights, got %d" % (s, self.n, len(w)))
            if any(a > b for a, b in zip(w, w[1:])):
                raise ValueError("embedding %d: weights %s not nondecreasing" % (s, list(w)))
            if not w[-1] > self.m > w[-2]:
                raise ValueError("embedding %d: need k_n > m > k_(n-1), got %s with m = %d" % (s, list(w), self.m))
        if self.planted_L == 0 and not self.degenerate:
            raise ValueError("planted L = 0 needs degenerate=True")
        if not 0 <= self.seed <= MASK:
            raise ValueError("seed must be a 64-bit unsigned integer")


def _fm2_ok(gens: list, n: int) -> bool:
    """Every ``F_i = span(gens[:n-i])`` is a complement of ``span(e_{n-i}..e_{n-1})``."""
    for i in range(1, n):
        F = xl.Subspace.span(gens[: n - i], n)
        fil = xl.Subspace.span([xl.unit_vector(n, j) for j in range(n - i, n)], n)
        if F.dim != n - i or xl.sum_spaces(F, fil).dim != n:
            return False
    return True


def _flag_generators(spec: GenSpec, rng: SplitMix64, s: int) -> list:
    n = spec.n
    if spec.tails is not None:
        tail = [xl.scalar(t) for t in spec.tails[s]]
    else:
        tail = [Fraction(rng.integer(-3, 3)) for _ in range(n - 2)]
    if len(tail) != n - 2:
        raise GenerationError("embedding %d: tail needs %d entries" % (s, n - 2))
    top = (Fraction(1), -spec.planted_L) + tuple(tail)
    if spec.extensions is not None:
        gens = [top] + [xl.vector(v) for v in spec.extensions[s]]
        if len(gens) != n - 1 or not _fm2_ok(gens, n):
            raise GenerationError("embedding %d: given flag generators violate transversality" % s)
        return gens
    gens = [top]
    for _ in range(n - 2):
        for _attempt in range(RETRIES):
            cand = tuple(Fraction(rng.integer(-3, 3)) for _ in range(n))
            if _partial_ok(gens + [cand], n):
                gens.append(cand)
                break
        else:
            raise GenerationError("embedding %d: retry budget exhausted" % s)
    return gens


def _partial_ok(gens: list, n: int) -> bool:
    k = len(gens)
    F = xl.Subspace.span(gens, n)
    fil = xl.Subspace.span([xl.unit_vector(n, j) for j in range(k, n)], n)
    return F.dim == k and xl.sum_spaces(F, fil).dim == n


def random_invertible(rng: SplitMix64, n: int) -> xl.Matrix:
    """Entries are small rationals (numerator and denominator bounded by 10)."""
    for _ in range(RETRIES):
        g = xl.Matrix([[rng.rational(10) for _ in range(n)] for _ in range(n)])
        if g.is_invertible():
            return g
    raise GenerationError("no invertible conjugator within the retry budget")


def generate(spec: GenSpec) -> FilPhiNModule:
    """Frobenius ``diag(p^m, ..., p^(m-n+1))``, shift monodromy, flags through ``v_0 - L v_1``."""
    rng = SplitMix64(spec.seed)
    n, p = spec.n, spec.p
    g = random_invertible(rng, n) if spec.conjugate else xl.Matrix.identity(n)
    phi = xl.Matrix.diag([Fraction(p) ** (spec.m - i) for i in range(n)])
    mono = xl.Matrix([[1 if i == j + 1 else 0 for j in range(n)] for i in range(n)])
    flags = []
    for s in range(spec.e):
        gens = _flag_generators(spec, rng, s)
        # generators listed from F_{n-1} upward; complete to the full space
        fl = WeightedFlag.from_generators(gens + _completion(gens, n), spec.weights[s])
        flags.append(fl.transform(g))
    gi = g.inverse()
    return FilPhiNModule(p, g @ phi @ gi, g @ mono @ gi, tuple(flags))


def _completion(gens: list, n: int) -> list:
    F = xl.Subspace.span(gens, n)
    return list(xl.complement_in(xl.Subspace.full(n), F))


# ---------------------------------------------------------------------------
# fixtures


FIX_A = GenSpec(p=5, n=2, e=1, m=1, weights=((0, 2),), planted_L=Fraction(7, 3), seed=0, conjugate=False)
FIX_B = GenSpec(
    p=3, n=3, e=1, m=2, weights=((0, 1, 4),), planted_L=Fraction(-2), seed=0, conjugate=False,
    tails=((1,),), extensions=(((0, 1, 1),),),
)
FIX_DEGENERATE = GenSpec(p=5, n=2, e=1, m=1, weights=((0, 2),), planted_L=Fraction(0), seed=0, degenerate=True, conjugate=False)


def fix_a() -> FilPhiNModule:
    return generate(FIX_A)


def fix_b() -> FilPhiNModule:
    return generate(FIX_B)


def fix_degenerate() -> FilPhiNModule:
    return generate(FIX_DEGENERATE)


# ---------------------------------------------------------------------------
# corpus

PRIMES = (2, 3, 5, 7, 11, 13)


def random_spec(rng: SplitMix64, m: int, n: int | None = None, e: int | None = None) -> GenSpec:
    n = n if n is not None else rng.integer(2, 5)
    e = e if e is not None else rng.integer(1, 2)
    p = PRIMES[rng.below(len(PRIMES))]
    weights = []
    for _ in range(e):
        lo = m - rng.integer(1, 3)
        hi = m + rng.integer(1, 3)
        rest = sorted(lo - rng.integer(0, 3) for _ in range(n - 2))
        weights.append(tuple(rest) + (lo, hi))
    L = rng.nonzero_rational(9)
    return GenSpec(p, n, e, m, tuple(weights), L, rng.next())


@dataclass
class CorpusGroup:
    m: int
    specs: list

    def modules(self) -> list:
        return [(generate(s), self.m) for s in self.specs]


def corpus(size: int = 500, seed: int = 2024) -> list:
    """Groups of one to three primes sharing ``m``; ``size`` instances in total.

    ``n`` cycles through 2..5 and ``e`` through 1, 2 so every pair is covered.
    """
    rng = SplitMix64(seed)
    groups, k = [], 0
    while k < size:
        m = rng.integer(-2, 4)
        count = min(rng.integer(1, 3), size - k)
        specs = []
        for _ in range(count):
            n = 2 + k % 4
            e = 1 + (k // 4) % 2
            specs.append(random_spec(rng, m, n, e))
            k += 1
        groups.append(CorpusGroup(m, specs))
    return groups


# ---------------------------------------------------------------------------
# instance files


@dataclass
class PrimeBlock:
    label: str
    module: FilPhiNModule
    m: int
    expected: dict = field(default_factory=dict)


@dataclass
class InstanceFile:
    primes: list
    hypotheses: dict = field(default_factory=lambda: {h: False for h in HYPOTHESES})
    version: str = FORMAT

    def modules(self) -> list:
        return [(b.module, b.m) for b in self.primes]

    def labels(self) -> list:
        return [b.label for b in self.primes]


def instance_from_specs(specs: Sequence[GenSpec], labels: Sequence[str] | None = None) -> InstanceFile:
    blocks = []
    for k, s in enumerate(specs):
        if labels:
            label = labels[k]
        elif len(specs) == 1:
            label = "p%d" % s.p
        else:
            label = "p%d-%d" % (s.p, k)
        blocks.append(PrimeBlock(label, generate(s), s.m, {"L_FM": s.planted_L}))
    return InstanceFile(blocks)


def _fmt_matrix(A: xl.Matrix) -> list:
    return [[xl.format_scalar(x) for x in row] for row in A.tolist()]


def _block_to_obj(b: PrimeBlock) -> dict:
    M = b.module
    return {
        "label": b.label,
        "p": M.p,
        "n": M.n,
        "e": M.e,
        "m": b.m,
        "twist": M.twist,
        "phi": _fmt_matrix(M.phi),
        "mono": _fmt_matrix(M.mono),
        "flags": [
            {
                "weights": list(fl.weights),
                "steps": [[[xl.format_scalar(x) for x in v] for v in fl.step(i).basis] for i in range(1, M.n)],
            }
            for fl in M.flags
        ],
        "expected": {k: xl.format_scalar(v) for k, v in sorted(b.expected.items())},
    }


def dumps(inst: InstanceFile) -> str:
    obj = {
        "format": inst.version,
        "hypotheses": {h: bool(inst.hypotheses.get(h, False)) for h in HYPOTHESES},
        "primes": [_block_to_obj(b) for b in inst.primes],
    }
    text = json.dumps(obj, indent=2)
    # keep innermost lists (rows, vectors, weight lists) on one line
    return _FLAT.sub(lambda mt: "[" + ", ".join(x.strip() for x in mt.group(1).split(",")) + "]", text) + "\n"


_FLAT = re.compile(r"\[([^\[\]{}]*)\]")


def write(inst: InstanceFile, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(inst))


class _Reader:
    def __init__(self):
        self.path = []

    def where(self) -> str:
        out = ""
        for part in self.path:
            out += "[%d]" % part if isinstance(part, int) else ("." if out else "") + part
        return out or "<root>"

    def fail(self, msg: str):
        raise InstanceFormatError("%s: %s" % (self.where(), msg))

    def get(self, obj, key, kind, default=None, required=True):
        if not isinstance(obj, dict):
            self.fail("expected an object")
        self.path.append(key)
        try:
            if key not in obj:
                if required:
                    self.fail("missing field")
                return default
            val = obj[key]
            if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
                self.fail("expected an integer, got %r" % (val,))
            if kind is list and not isinstance(val, list):
                self.fail("expected a list")
            if kind is dict and not isinstance(val, dict):
                self.fail("expected an object")
            if kind is str and not isinstance(val, str):
                self.fail("expected a string")
            return val
        finally:
            self.path.pop()

    def scalar(self, val, idx) -> Fraction:
        self.path.append(idx)
        try:
            if isinstance(val, bool):
                self.fail("expected a scalar")
            if isinstance(val, int):
                return Fraction(val)
            if not isinstance(val, str):
                self.fail("expected a fraction string, got %r" % (val,))
            try:
                return xl.parse_scalar(val)
            except (ValueError, ZeroDivisionError) as exc:
                self.fail("bad scalar %r (%s)" % (val, exc))
        finally:
            self.path.pop()

    def matrix(self, obj, key, n) -> xl.Matrix:
        rows = self.get(obj, key, list)
        self.path.append(key)
        try:
            if len(rows) != n:
                self.fail("expected %d rows, got %d" % (n, len(rows)))
            out = []
            for i, row in enumerate(rows):
                self.path.append(i)
                if not isinstance(row, list) or len(row) != n:
                    self.fail("expected a row of %d scalars" % n)
                out.append([self.scalar(x, j) for j, x in enumerate(row)])
                self.path.pop()
            return xl.Matrix(out)
        finally:
            self.path.pop()


def _parse_flag(r: _Reader, obj, n: int) -> WeightedFlag:
    from .phinmod import MalformedModuleError

    weights = r.get(obj, "weights", list)
    r.path.append("weights")
    if len(weights) != n or any(isinstance(w, bool) or not isinstance(w, int) for w in weights):
        r.fail("expected %d integer weights" % n)
    r.path.pop()
    steps_raw = r.get(obj, "steps", list)
    r.path.append("steps")
    if len(steps_raw) != n - 1:
        r.fail("expected %d inner steps F_1..F_%d, got %d" % (n - 1, n - 1, len(steps_raw)))
    steps = [xl.Subspace.full(n)]
    for i, vecs in enumerate(steps_raw):
        r.path.append(i)
        if not isinstance(vecs, list):
            r.fail("expected a list of basis vectors")
        basis = []
        for j, v in enumerate(vecs):
            r.path.append(j)
            if not isinstance(v, list) or len(v) != n:
                r.fail("expected a vector of length %d" % n)
            basis.append(tuple(r.scalar(x, k) for k, x in enumerate(v)))
            r.path.pop()
        S = xl.Subspace.span(basis, n)
        if S.dim != len(basis) or S.dim != n - (i + 1):
            r.fail("F_%d needs %d independent vectors" % (i + 1, n - i - 1))
        steps.append(S)
        r.path.pop()
    r.path.pop()
    steps.append(xl.Subspace.zero(n))
    try:
        return WeightedFlag(tuple(steps), tuple(weights))
    except MalformedModuleError as exc:
        r.fail(str(exc))


def _parse_block(r: _Reader, obj) -> PrimeBlock:
    from .phinmod import MalformedModuleError

    label = r.get(obj, "label", str)
    p = r.get(obj, "p", int)
    n = r.get(obj, "n", int)
    e = r.get(obj, "e", int)
    m = r.get(obj, "m", int)
    twist = r.get(obj, "twist", int, 0, required=False)
    if n < 1:
        r.path.append("n")
        r.fail("must be positive")
    phi = r.matrix(obj, "phi", n)
    mono = r.matrix(obj, "mono", n)
    flags_raw = r.get(obj, "flags", list)
    r.path.append("flags")
    if len(flags_raw) != e:
        r.fail("expected %d flags (one per embedding), got %d" % (e, len(flags_raw)))
    flags = []
    for s, fo in enumerate(flags_raw):
        r.path.append(s)
        flags.append(_parse_flag(r, fo, n))
        r.path.pop()
    r.path.pop()
    exp_raw = r.get(obj, "expected", dict, {}, required=False)
    r.path.append("expected")
    expected = {k: r.scalar(v, k) for k, v in sorted(exp_raw.items())}
    r.path.pop()
    try:
        M = FilPhiNModule(p, phi, mono, tuple(flags), twist)
    except MalformedModuleError as exc:
        r.fail(str(exc))
    return PrimeBlock(label, M, m, expected)


def loads(text: str) -> InstanceFile:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError("line %d, column %d: %s" % (exc.lineno, exc.colno, exc.msg)) from None
    r = _Reader()
    version = r.get(obj, "format", str)
    if version != FORMAT:
        raise InstanceFormatError("format: version mismatch, expected %r, got %r" % (FORMAT, version))
    hyp_raw = r.get(obj, "hypotheses", dict, {}, required=False)
    hyp = {}
    for h in HYPOTHESES:
        v = hyp_raw.get(h, False)
        if not isinstance(v, bool):
            r.path += ["hypotheses", h]
            r.fail("expected true or false")
        hyp[h] = v
    unknown = sorted(set(hyp_raw) - set(HYPOTHESES))
    if unknown:
        r.path.append("hypotheses")
        r.fail("unknown hypotheses %s" % unknown)
    blocks_raw = r.get(obj, "primes", list)
    if not blocks_raw:
        r.path.append("primes")
        r.fail("no primes")
    blocks = []
    for k, b in enumerate(blocks_raw):
        r.path += ["primes", k]
        blocks.append(_parse_block(r, b))
        r.path = []
    return InstanceFile(blocks, hyp, version)


def read(path) -> InstanceFile:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
