"""Lazard correspondence at finite level.

A Lie ring ``g`` over ``Z/p^N`` whose bracket is divisible by ``p^m``
(``m = 1`` for odd p, ``m = 2`` for p = 2) carries the Campbell-Hausdorff
group law.  Its level groups ``G^(n)/G^(n+i)`` are finite p-groups whose bar
homology is compared with exterior algebras and with Chevalley towers here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .algebra import FinGroup, FinRing, LieRing, congruence_quotient, gl_lie_ring, matrix_ring
from .complexes import ChainComplex, ChainMap, Tower, TowerMap
from .lie import chevalley_complex
from .linalg import (
    ContractError, FGAbelianGroup, IntMatrix, ResourceError, elementary_divisors_of_columns,
    factorize, prime_power, rank_of_columns, subquotient, valuation,
)

DEFAULT_GROUP_CAP = 10_000
MAX_BAR_RANK = 200_000
MAX_LAZY_COLUMNS = 1_000_000


def lazard_shift(p: int) -> int:
    """The exponent m: 1 for odd p and 2 for p = 2."""
    return 2 if p == 2 else 1


@lru_cache(maxsize=None)
def bernoulli_numbers(n: int) -> tuple[Fraction, ...]:
    """``B_0..B_n`` with ``B_1 = -1/2``."""
    B = [Fraction(1)]
    for k in range(1, n + 1):
        B.append(-sum(math.comb(k + 1, j) * B[j] for j in range(k)) / (k + 1))
    return tuple(B)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _vp_fraction(x: Fraction, p: int) -> int | float:
    if x == 0:
        return math.inf
    return valuation(x.numerator, p) - valuation(x.denominator, p)


def _residue(x: Fraction, q: int) -> int:
    return x.numerator * pow(x.denominator, -1, q) % q


class CHLaw:
    """Campbell-Hausdorff product on the integer lift of ``g``.

    Weight-w coefficients have denominators of p-valuation at most
    ``floor((w-1)/(p-1))``, so weight-w terms have valuation at least
    ``(w-1)m - floor((w-1)/(p-1))``; products at precision ``i`` keep the weights below the first ``w0``
    after which that bound stays ``>= i``, then check that weight ``w0``
    vanishes as well.
    """

    def __init__(self, g: LieRing, p: int | None = None):
        if p is None:
            p = g.p
        if p is None and g.modulus:
            pp = prime_power(g.modulus)
            p = pp[0] if pp else None
        if p is None:
            raise ValueError("the Lie ring must be p-adic (pass p for rings over Z)")
        if g.modulus and (prime_power(g.modulus) or (None,))[0] != p:
            raise ValueError(f"modulus {g.modulus} is not a power of {p}")
        self.g, self.p = g, p
        self.m = lazard_shift(p)
        self.N = prime_power(g.modulus)[1] if g.modulus else math.inf
        step = p ** self.m
        for (a, b), terms in g.tensor.items():
            for k, c in terms:
                if (c % g.modulus if g.modulus else c) % step:
                    raise ContractError(f"bracket [e{a}, e{b}] is not divisible by {step}",
                                        (a, b, k, c))
        half = g.modulus // 2
        # centred lifts keep antisymmetry exact over Q
        self.tensor = {key: tuple((k, c - g.modulus if g.modulus and c > half else c) for k, c in terms)
                       for key, terms in g.tensor.items()}
        self._caps: dict[int, int] = {}

    def denominator_bound(self, w: int) -> int:
        return (w - 1) // (self.p - 1)

    def weight_bound(self, w: int) -> int:
        return (w - 1) * self.m - self.denominator_bound(w)

    def weight_cap(self, precision: int) -> int:
        """Least ``w0`` such that every weight ``>= w0`` has valuation ``>= precision``."""
        if precision in self._caps:
            return self._caps[precision]
        p, m = self.p, self.m
        slope = m - 1 / (p - 1)
        horizon = int(math.ceil(precision / slope)) + 2
        w0 = 1
        for w in range(1, horizon + 1):
            if self.weight_bound(w) < precision:
                w0 = w + 1
        self._caps[precision] = w0
        return w0

    def _bracket(self, x: Sequence[Fraction], y: Sequence[Fraction]) -> list[Fraction]:
        out = [Fraction(0)] * self.g.rank
        tensor = self.tensor
        for i, a in enumerate(x):
            if not a:
                continue
            for j, b in enumerate(y):
                if not b:
                    continue
                ab = a * b
                for k, c in tensor.get((i, j), ()):
                    out[k] += ab * c
        return out

    def components(self, x: Sequence[int], y: Sequence[int], top: int) -> list[list[Fraction]]:
        """Weight components ``Z_1..Z_top`` of ``log(e^x e^y)``."""
        X = [Fraction(a) for a in x]
        Y = [Fraction(b) for b in y]
        s = [a + b for a, b in zip(X, Y)]
        diff = [a - b for a, b in zip(X, Y)]
        B = bernoulli_numbers(top)
        Z = [None, s]
        for n in range(1, top):
            acc = [c / 2 for c in self._bracket(diff, Z[n])]
            for q in range(1, n // 2 + 1):
                K = B[2 * q] / math.factorial(2 * q)
                if not K:
                    continue
                for comp in _compositions(n, 2 * q):
                    term = s
                    for k in reversed(comp):
                        term = self._bracket(Z[k], term)
                    acc = [a + K * t for a, t in zip(acc, term)]
            Z.append([a / (n + 1) for a in acc])
        return Z[1:]

    def multiply(self, x: Sequence[int], y: Sequence[int], precision: int) -> tuple[int, ...]:
        """``x * y`` modulo ``p^precision``, certified by one extra weight."""
        p = self.p
        w0 = self.weight_cap(precision)
        need = precision + self.denominator_bound(w0)
        if need > self.N and self.g.tensor:
            raise ResourceError(f"Lie ring precision {self.N} is below the {need} needed")
        comps = self.components(x, y, w0)
        extra = comps[-1]
        if any(_vp_fraction(c, p) < precision for c in extra):
            raise RuntimeError(f"weight {w0} term does not vanish modulo {p}^{precision}")
        q = p ** precision
        out = []
        for k in range(self.g.rank):
            total = sum((Z[k] for Z in comps[:-1]), Fraction(0))
            if total.denominator % p == 0:
                raise RuntimeError("Campbell-Hausdorff sum has a denominator divisible by p")
            out.append(_residue(total, q))
        return tuple(out)


def ch_multiply(g: LieRing, x: Sequence[int], y: Sequence[int], precision: int,
                p: int | None = None) -> tuple[int, ...]:
    return CHLaw(g, p).multiply(x, y, precision)


# ---------------------------------------------------------------- exp and log of matrices

def _series_cap(p: int, m: int, target: int, exp: bool) -> int:
    """Largest k whose term can survive modulo ``p^target``."""
    if m - 1 / (p - 1) <= 0:
        raise ValueError(f"the series do not converge for p = {p}, m = {m}")
    horizon = int(math.ceil(target / (m - 1 / (p - 1)))) + 2
    last = 0
    for k in range(1, horizon + 1):
        loss = valuation(math.factorial(k), p) if exp else valuation(k, p)
        if m * k - loss < target:
            last = k
    return last


@dataclass
class MatrixSeries:
    """Truncated exp or log on ``Mat_r(A / p^(m+i))`` given as coordinate tuples."""

    ring: FinRing
    r: int
    p: int
    m: int
    i: int
    direction: str
    terms: int
    work_modulus: int
    _lift: FinRing = field(repr=False)

    @property
    def modulus(self) -> int:
        return self.p ** (self.m + self.i)

    def _mul(self, X: Sequence[int], Y: Sequence[int]) -> tuple[int, ...]:
        return tuple(v % self.work_modulus for v in self._lift.multiply(X, Y))

    def multiply(self, X: Sequence[int], Y: Sequence[int]) -> tuple[int, ...]:
        q = self.modulus
        return tuple(v % q for v in self._lift.multiply(X, Y))

    def power(self, X: Sequence[int], k: int) -> tuple[int, ...]:
        acc = self.ring.unit
        for _ in range(k):
            acc = self.multiply(acc, X)
        return acc

    def __call__(self, X: Sequence[int]) -> tuple[int, ...]:
        p, q, step = self.p, self.modulus, self.p ** self.m
        unit = self._lift.unit
        if self.direction == "exp":
            N = tuple(x % q for x in X)
            if any(x % step for x in N):
                raise ValueError(f"exp needs an argument divisible by {step}")
        else:
            N = tuple((x - u) % q for x, u in zip(X, unit))
            if any(x % step for x in N):
                raise ValueError(f"log needs an argument congruent to 1 modulo {step}")
        out = list(unit) if self.direction == "exp" else [0] * len(N)
        power = N
        for k in range(1, self.terms + 1):
            if k > 1:
                power = self._mul(power, N)
            if self.direction == "exp":
                denom, sign = math.factorial(k), 1
            else:
                denom, sign = k, (1 if k % 2 else -1)
            e = valuation(denom, p)
            unit_part = denom // p ** e
            inv = pow(unit_part, -1, q)
            for j, v in enumerate(power):
                if v % p ** e:
                    raise RuntimeError("series term is not divisible by its denominator")
                out[j] += sign * (v // p ** e) * inv
        return tuple(v % q for v in out)


def exp_log_matrix(A: FinRing, r: int, m: int, i: int, direction: str) -> MatrixSeries:
    """``exp: p^m gl_r(A) -> GL_r(A)^(m)`` or ``log`` back, modulo ``p^(m+i)``.

    Powers are taken on integer lifts modulo ``p^(m+i+e)`` where ``e`` is the
    largest p-valuation of a denominator in the kept terms, so ``A`` must be
    known to that precision.
    """
    if direction not in ("exp", "log"):
        raise ValueError("direction is 'exp' or 'log'")
    p = A.p
    if p is None:
        raise ValueError("exp and log need a p-adic algebra")
    if m < lazard_shift(p) or i < 1:
        raise ValueError(f"need m >= {lazard_shift(p)} and i >= 1")
    exp = direction == "exp"
    K = _series_cap(p, m, m + i, exp)
    e = max((valuation(math.factorial(k) if exp else k, p) for k in range(1, K + 1)), default=0)
    if m + i + e > A.precision:
        raise ResourceError(f"precision {A.precision} is below the {m + i + e} needed to certify "
                            f"the {direction} series")
    lift = matrix_ring(A, r)
    level = matrix_ring(A.level(m + i), r)
    return MatrixSeries(level, r, p, m, i, direction, K, p ** (m + i + e), lift)


# ---------------------------------------------------------------- level groups

def scaled_lie_ring(g: LieRing, k: int, p: int) -> LieRing:
    """``g`` with bracket multiplied by ``p^k``; models ``p^k g`` as a Lie ring."""
    factor = p ** k
    entries = [[a, b, c, v * factor] for a, b, c, v in g._entries()]
    entries = [e for e in entries if not g.modulus or e[3] % g.modulus]
    return LieRing(g.modulus, g.rank, entries, g.labels, g.p, g.precision, validate=False)


def level_group(g: LieRing, m: int, i: int, n: int | None = None, p: int | None = None,
                cap: int = DEFAULT_GROUP_CAP) -> FinGroup:
    """``G^(n)/G^(n+i)`` for the Campbell-Hausdorff group of ``g`` (``n`` defaults to m).

    ``G^(j) = exp(p^(j-m) g)``, so the quotient is ``g / p^i g`` with the
    Campbell-Hausdorff product of ``p^(n-m) g``.  Elements are coordinate
    tuples modulo ``p^i`` in lexicographic order; reduction of coordinates
    gives the transition to level ``i - 1``.
    """
    law = CHLaw(g, p)
    p = law.p
    if m != law.m:
        raise ValueError(f"m must be {law.m} for p = {p}")
    n = m if n is None else n
    if n < m or i < 1:
        raise ValueError("need n >= m and i >= 1")
    if p ** (g.rank * i) > cap:
        raise ResourceError(f"level group of order {p}^{g.rank * i} exceeds the cap {cap}")
    if n > m:
        law = CHLaw(scaled_lie_ring(g, n - m, p), p)
    q = p ** i
    elements = list(itertools.product(range(q), repeat=g.rank))
    index = {x: k for k, x in enumerate(elements)}
    table = [[index[law.multiply(x, y, i)] for y in elements] for x in elements]
    G = FinGroup(table, 0, elements, cap=cap, validate=False)
    G.validate()
    G.law = law
    G.level_data = (p, m, n, i)
    return G


def level_reduction(G: FinGroup, H: FinGroup) -> list[int]:
    """Images of the coordinate reduction between level groups of one ``g``."""
    p, m, n, i = G.level_data
    if H.level_data[:3] != (p, m, n) or H.level_data[3] > i:
        raise ValueError("target must be a lower level of the same filtration")
    q = p ** H.level_data[3]
    return [H.index[tuple(x % q for x in g)] for g in G.elements]


# ---------------------------------------------------------------- bar complexes

class BarComplex:
    """Bar complex of a finite group, normalized unless ``normalized=False``.

    Degree-n generators are tuples ``[g_1|...|g_n]`` (no identity entries when
    normalized) indexed in mixed radix over the allowed letters.
    """

    def __init__(self, K: FinGroup, normalized: bool = True):
        self.group = K
        self.normalized = normalized
        e = K.identity
        self.letters = [g for g in range(K.order) if not (normalized and g == e)]
        self.position = {g: k for k, g in enumerate(self.letters)}
        self.base = len(self.letters)

    def rank(self, n: int) -> int:
        return self.base ** n if n >= 0 else 0

    def tuples(self, n: int) -> Iterator[tuple[int, ...]]:
        return itertools.product(self.letters, repeat=n)

    def index(self, t: Sequence[int]) -> int | None:
        out = 0
        for g in t:
            k = self.position.get(g)
            if k is None:
                return None
            out = out * self.base + k
        return out

    def boundary(self, t: Sequence[int]) -> dict[int, int]:
        n = len(t)
        col: dict[int, int] = {}
        table = self.group.table

        def add(face, c):
            j = self.index(face)
            if j is not None:
                v = col.get(j, 0) + c
                if v:
                    col[j] = v
                else:
                    col.pop(j, None)

        add(t[1:], 1)
        for k in range(n - 1):
            add(t[:k] + (table[t[k]][t[k + 1]],) + t[k + 2:], -1 if (k + 1) % 2 else 1)
        add(t[:-1], -1 if n % 2 else 1)
        return col

    def columns(self, n: int) -> Iterator[dict[int, int]]:
        if n < 1:
            return iter(())
        return (self.boundary(t) for t in self.tuples(n))

    def d(self, n: int, modulus: int = 0) -> IntMatrix:
        if self.rank(n) > MAX_BAR_RANK:
            raise ResourceError(f"bar degree {n} has rank {self.rank(n)} above {MAX_BAR_RANK}")
        return IntMatrix.from_columns(self.rank(n - 1), list(self.columns(n)), modulus)

    def complex(self, modulus: int = 0, degree_cap: int = 3) -> ChainComplex:
        ranks = {n: self.rank(n) for n in range(degree_cap + 1)}
        bds = {n: self.d(n, modulus) for n in range(1, degree_cap + 1)}
        return ChainComplex(modulus, ranks, bds)

    def _lazy(self, n: int) -> Iterator[dict[int, int]]:
        if self.rank(n) > MAX_LAZY_COLUMNS:
            raise ResourceError(f"bar degree {n} has rank {self.rank(n)} above {MAX_LAZY_COLUMNS}")
        return self.columns(n)

    def homology(self, n: int, modulus: int = 0) -> FGAbelianGroup:
        """``H_n`` with coefficients ``Z`` (modulus 0) or ``Z/p^k``, columns streamed.

        Integral torsion is read prime by prime from elementary divisors over
        ``Z/p^e``, doubling e until their number reaches the rational rank.
        """
        if n < 0:
            return FGAbelianGroup.trivial()
        pp = prime_power(modulus) if modulus else None
        if modulus and pp is None:
            raise ValueError("coefficients must be Z or Z/p^k")
        if modulus and pp[1] == 1:
            p = modulus
            r_in = rank_of_columns(self._lazy(n), self.rank(n - 1), p) if n else 0
            r_out = rank_of_columns(self._lazy(n + 1), self.rank(n), p)
            return FGAbelianGroup(0, (p,) * (self.rank(n) - r_in - r_out))
        if modulus:
            return self.complex(modulus, n + 1).homology(n)
        if n == 0:
            return FGAbelianGroup(1)
        target = self.rational_rank(n + 1)
        orders = []
        for p in factorize(self.group.order):
            e = 2
            while True:
                divisors = elementary_divisors_of_columns(self._lazy(n + 1), self.rank(n), p ** e)
                if len(divisors) == target:
                    break
                if len(divisors) > target:
                    raise RuntimeError("more elementary divisors than the rational rank")
                e *= 2
            orders.extend(d for d in divisors if d != 1)
        return FGAbelianGroup.from_orders(0, orders)

    def rational_rank(self, n: int) -> int:
        """Rank of ``d_n`` over Q: finite groups have rationally acyclic positive degrees."""
        out = 0
        for a in range(1, n):
            out = self.rank(a) - out
        return out

    def image_of(self, phi: Sequence[int], target: "BarComplex", n: int) -> dict[int, dict[int, int]]:
        """Induced chain map in degree n: column j goes to its image tuple (or vanishes)."""
        out = {}
        for j, t in enumerate(self.tuples(n)):
            k = target.index(tuple(phi[g] for g in t))
            if k is not None:
                out[j] = k
        return out


def bar_complex(K: FinGroup, coefficients: int = 0, degree_cap: int = 3,
                normalized: bool = True) -> ChainComplex:
    """Bar complex of K with coefficients ``Z`` (0) or ``Z/coefficients``."""
    return BarComplex(K, normalized).complex(coefficients, degree_cap)


def bar_homology(K: FinGroup, n: int, coefficients: int = 0) -> FGAbelianGroup:
    return BarComplex(K).homology(n, coefficients)


def _field_cycles(columns: Iterable[dict[int, int]], nrows: int, p: int) -> list[dict[int, int]]:
    """Kernel basis over F_p of the matrix with the given columns, as combinations."""
    pivots: dict[int, tuple[dict[int, int], dict[int, int]]] = {}
    kernel = []
    for j, col in enumerate(columns):
        vec = {r: v % p for r, v in col.items() if v % p}
        combo = {j: 1}
        while vec:
            row = max(vec)
            if row not in pivots:
                inv = pow(vec[row], -1, p)
                pivots[row] = ({r: v * inv % p for r, v in vec.items()},
                               {c: v * inv % p for c, v in combo.items()})
                break
            pv, pc = pivots[row]
            f = vec[row]
            for r, v in pv.items():
                x = (vec.get(r, 0) - f * v) % p
                if x:
                    vec[r] = x
                else:
                    vec.pop(r, None)
            for c, v in pc.items():
                x = (combo.get(c, 0) - f * v) % p
                if x:
                    combo[c] = x
                else:
                    combo.pop(c, None)
        else:
            kernel.append(combo)
    return kernel


def homology_image_mod_p(source: BarComplex, target: BarComplex, phi: Sequence[int],
                         n: int, p: int) -> int:
    """Dimension of the image of ``H_n(source, F_p) -> H_n(target, F_p)`` under ``phi``."""
    if n == 0:
        return 1
    cycles = _field_cycles(source._lazy(n), source.rank(n - 1), p)
    where = source.image_of(phi, target, n)
    mapped = []
    for z in cycles:
        col: dict[int, int] = {}
        for j, v in z.items():
            k = where.get(j)
            if k is not None:
                col[k] = (col.get(k, 0) + v) % p
        mapped.append({k: v for k, v in col.items() if v})
    r_b = rank_of_columns(target._lazy(n + 1), target.rank(n), p)
    r_all = rank_of_columns(itertools.chain(target._lazy(n + 1), mapped), target.rank(n), p)
    return r_all - r_b


# ---------------------------------------------------------------- p-special groups

@dataclass
class PSpecialReport:
    p: int
    steps: int
    degrees: dict[int, FGAbelianGroup]
    exponents: dict[int, int | float]
    bounds: dict[int, int]

    @property
    def holds(self) -> bool:
        return all(self.exponents[a] and self.bounds[a] % self.exponents[a] == 0
                   for a in self.degrees)

    def to_dict(self) -> dict:
        return {"p": self.p, "steps": self.steps,
                "degrees": {str(a): {"homology": str(h), "exponent": self.exponents[a],
                                     "bound": self.bounds[a]}
                            for a, h in self.degrees.items()},
                "holds": self.holds}


def special_bound(p: int, a: int, n: int) -> int:
    """``p^binom(a+n-1, n-1)``; an empty filtration (trivial group) gives 1."""
    if n == 0:
        return 1
    return p ** math.comb(a + n - 1, n - 1)


def check_p_special(K: FinGroup, filtration: Sequence[Sequence[int]], p: int) -> None:
    """Raise unless ``1 = K_0 < ... < K_n = K`` are normal with elementary abelian quotients."""
    layers = [set(F) for F in filtration]
    if not layers or layers[0] != {K.identity}:
        raise ContractError("filtration must start at the trivial subgroup", 0)
    if layers[-1] != set(range(K.order)):
        raise ContractError("filtration must end at the whole group", len(layers) - 1)
    t, inv = K.table, K.inverse
    for s, layer in enumerate(layers):
        if set(K.closure(layer)) != layer:
            raise ContractError("filtration term is not a subgroup", s)
        for g in range(K.order):
            for k in layer:
                if t[t[g][k]][inv[g]] not in layer:
                    raise ContractError("filtration term is not normal", s)
        if s == 0:
            continue
        if not layers[s - 1] <= layer:
            raise ContractError("filtration is not increasing", s)
        below = layers[s - 1]
        for a in layer:
            if K.power(a, p) not in below:
                raise ContractError("quotient is not killed by p", (s, a))
            for b in layer:
                if t[t[a][b]][inv[t[b][a]]] not in below:
                    raise ContractError("quotient is not abelian", (s, a, b))


def p_special_bound_check(K: FinGroup, filtration: Sequence[Sequence[int]], degree_cap: int,
                          p: int | None = None) -> PSpecialReport:
    """Integral ``H_a(K)`` for ``a <= degree_cap`` against the bound ``p^binom(a+n-1, n-1)``."""
    if p is None:
        primes = list(factorize(K.order)) if K.order > 1 else [2]
        if len(primes) != 1:
            raise ContractError("a p-special group has prime-power order", K.order)
        p = primes[0]
    check_p_special(K, filtration, p)
    steps = len(filtration) - 1
    bar = BarComplex(K)
    degrees, exps, bounds = {}, {}, {}
    for a in range(degree_cap + 1):
        H = bar.homology(a)
        degrees[a] = H
        exps[a] = H.exponent() if a else 1
        bounds[a] = special_bound(p, a, steps) if a else 1
    return PSpecialReport(p, steps, degrees, exps, bounds)


def heisenberg_group(p: int) -> tuple[FinGroup, list[list[int]]]:
    """Upper unitriangular 3x3 matrices over F_p with the filtration ``1 < Z(K) < K``."""
    def op(x, y):
        a, b, c = x
        u, v, w = y
        return ((a + u) % p, (b + v) % p, (c + w + a * v) % p)

    elements = list(itertools.product(range(p), repeat=3))
    K = FinGroup.from_operation(elements, op, (0, 0, 0))
    centre = [K.index[(0, 0, c)] for c in range(p)]
    return K, [[K.identity], centre, list(range(K.order))]


# ---------------------------------------------------------------- enveloping algebra and η

class TruncatedEnveloping:
    """``U(g')`` modulo ``p^i`` on the PBW basis, with ``g' = p^-m g``.

    Monomials are non-decreasing index tuples; products are straightened
    with ``e_b e_a = e_a e_b + [e_b, e_a]`` exactly modulo ``p^i``.
    """

    def __init__(self, g: LieRing, i: int, p: int | None = None):
        law = CHLaw(g, p)
        self.g, self.p, self.m, self.i = g, law.p, law.m, i
        if law.N < self.m + i:
            raise ResourceError(f"Lie ring precision {law.N} is below m + i = {self.m + i}")
        self.modulus = self.p ** i
        step = self.p ** self.m
        q = self.modulus
        self.structure = {}
        for (a, b), terms in g.tensor.items():
            self.structure[(a, b)] = tuple((k, (c % g.modulus if g.modulus else c) // step % q)
                                           for k, c in terms)
        self._straight: dict[tuple[int, ...], dict[tuple[int, ...], int]] = {}

    def straighten(self, word: tuple[int, ...]) -> dict[tuple[int, ...], int]:
        got = self._straight.get(word)
        if got is not None:
            return got
        q = self.modulus
        for pos in range(len(word) - 1):
            b, a = word[pos], word[pos + 1]
            if b > a:
                out: dict[tuple[int, ...], int] = {}
                swapped = word[:pos] + (a, b) + word[pos + 2:]
                for mono, c in self.straighten(swapped).items():
                    out[mono] = (out.get(mono, 0) + c) % q
                for k, c in self.structure.get((b, a), ()):
                    for mono, v in self.straighten(word[:pos] + (k,) + word[pos + 2:]).items():
                        out[mono] = (out.get(mono, 0) + c * v) % q
                out = {mo: v for mo, v in out.items() if v}
                break
        else:
            out = {word: 1}
        self._straight[word] = out
        return out

    def multiply(self, u: dict, v: dict) -> dict[tuple[int, ...], int]:
        q = self.modulus
        out: dict[tuple[int, ...], int] = {}
        for a, x in u.items():
            for b, y in v.items():
                for mono, c in self.straighten(a + b).items():
                    out[mono] = (out.get(mono, 0) + x * y * c) % q
        return {mo: c for mo, c in out.items() if c}

    def from_lie(self, x: Sequence[int]) -> dict[tuple[int, ...], int]:
        return {(k,): c % self.modulus for k, c in enumerate(x) if c % self.modulus}

    def one(self) -> dict[tuple[int, ...], int]:
        return {(): 1 % self.modulus}

    def monomials(self, degree_cap: int) -> list[tuple[int, ...]]:
        out = []
        for n in range(degree_cap + 1):
            out.extend(itertools.combinations_with_replacement(range(self.g.rank), n))
        return out


def pbw_degree_cap(p: int, m: int, i: int) -> int:
    """Largest n with ``mn - v_p(n!) < i``: higher terms of ``exp_U`` vanish modulo ``p^i``."""
    return _series_cap(p, m, i, True)


@dataclass
class EtaMap:
    """``g -> exp_U(log g)`` from ``G/G^(i)`` into ``U(g')`` modulo ``p^i``."""

    envelope: TruncatedEnveloping
    law: CHLaw
    degree_cap: int
    _group: FinGroup | None = field(default=None, repr=False)

    @property
    def quotient_precision(self) -> int:
        return self.envelope.i - self.envelope.m

    def image(self, x: Sequence[int]) -> dict[tuple[int, ...], int]:
        U = self.envelope
        p, m, q = U.p, U.m, U.modulus
        out = U.one()
        xp = U.from_lie(x)
        power = U.one()
        for n in range(1, self.degree_cap + 1):
            power = U.multiply(power, xp)
            e = valuation(math.factorial(n), p)
            scale = p ** (m * n - e) * pow(math.factorial(n) // p ** e, -1, q)
            for mono, c in power.items():
                out[mono] = (out.get(mono, 0) + scale * c) % q
        return {mo: c for mo, c in out.items() if c}

    def group(self, cap: int = DEFAULT_GROUP_CAP) -> FinGroup:
        """``G/G^(i)`` as a level group (built on first use)."""
        if self._group is None:
            U = self.envelope
            k = max(self.quotient_precision, 0)
            if k == 0:
                self._group = _trivial_group()
                self._group.elements = [(0,) * U.g.rank]
                self._group.index = {self._group.elements[0]: 0}
            else:
                self._group = level_group(U.g, U.m, k, p=U.p, cap=cap)
        return self._group

    def matrix(self) -> tuple[list[tuple[int, ...]], IntMatrix]:
        """PBW monomials of degree ``<= D`` and the images of all group elements as columns."""
        monos = self.envelope.monomials(self.degree_cap)
        row = {mo: k for k, mo in enumerate(monos)}
        cols = [{row[mo]: c for mo, c in self.image(x).items()} for x in self.group().elements]
        return monos, IntMatrix.from_columns(len(monos), cols, self.envelope.modulus)

    def respects_filtration(self, x: Sequence[int]) -> bool:
        step = self.envelope.p ** self.envelope.m
        img = self.image(x)
        return img.get((), 0) == 1 % self.envelope.modulus and all(
            c % step == 0 for mo, c in img.items() if mo)

    def multiplicativity_defect(self, x: Sequence[int], y: Sequence[int]) -> dict:
        """``η(xy) - η(x)η(y)``; also fails loudly if the product leaves PBW degree D."""
        U = self.envelope
        prod = U.multiply(self.image(x), self.image(y))
        if any(len(mo) > self.degree_cap for mo in prod):
            raise ResourceError(f"product has PBW degree above the cap {self.degree_cap}")
        if self.quotient_precision > 0:
            xy = self.law.multiply(x, y, self.quotient_precision)
        else:
            xy = tuple(0 for _ in x)
        lhs = self.image(xy)
        keys = set(lhs) | set(prod)
        diff = {mo: (lhs.get(mo, 0) - prod.get(mo, 0)) % U.modulus for mo in keys}
        return {mo: c for mo, c in diff.items() if c}


def eta_map(g: LieRing, m: int, i: int, degree_cap: int | None = None, p: int | None = None
            ) -> EtaMap:
    """The map η_i on ``G/G^(i) = g / p^(i-m) g`` into ``U(g')`` modulo ``p^i``."""
    U = TruncatedEnveloping(g, i, p)
    if m != U.m:
        raise ValueError(f"m must be {U.m} for p = {U.p}")
    D = pbw_degree_cap(U.p, U.m, i)
    if degree_cap is not None:
        if degree_cap < D:
            raise ResourceError(f"PBW cap {degree_cap} is below the certified {D}")
        D = degree_cap
    return EtaMap(U, CHLaw(g, U.p), D)


# ---------------------------------------------------------------- Λ(h) comparison

@dataclass
class HFpModule:
    """``h = g'/p g'`` as an F_p-vector space."""

    p: int
    dimension: int

    def exterior_dim(self, n: int) -> int:
        return math.comb(self.dimension, n)

    def divided_power_dim(self, n: int) -> int:
        return math.comb(self.dimension + n - 1, n)

    def finite_level_dim(self, n: int) -> int:
        """Degree-n dimension of ``Λ(h) ⊗ Γ(h)`` with Γ in even degrees."""
        return sum(self.exterior_dim(n - 2 * j) * self.divided_power_dim(j)
                   for j in range(n // 2 + 1))


def h_module(g: LieRing, p: int | None = None) -> HFpModule:
    law = CHLaw(g, p)
    return HFpModule(law.p, g.rank)


@dataclass
class LambdaReport:
    h: HFpModule
    n_start: int
    dims: dict[int, dict[int, int]]
    transitions: dict[int, dict[int, int]]
    stable: dict[int, int]

    def expected_level(self, n: int) -> int:
        return self.h.finite_level_dim(n)

    @property
    def levels_match(self) -> bool:
        return all(v == self.h.finite_level_dim(n) for row in self.dims.values() for n, v in row.items())

    @property
    def transitions_match(self) -> bool:
        return all(v == self.h.exterior_dim(n)
                   for row in self.transitions.values() for n, v in row.items())

    @property
    def stable_match(self) -> bool:
        return all(v == self.h.exterior_dim(n) for n, v in self.stable.items())

    @property
    def holds(self) -> bool:
        return self.levels_match and self.transitions_match and self.stable_match

    def to_dict(self) -> dict:
        return {"dimension": self.h.dimension, "p": self.h.p, "n_start": self.n_start,
                "levels": {str(i): {str(n): v for n, v in row.items()} for i, row in self.dims.items()},
                "transitions": {str(i): {str(n): v for n, v in row.items()}
                                for i, row in self.transitions.items()},
                "stable": {str(n): v for n, v in self.stable.items()}, "holds": self.holds}


def lambda_coalgebra_check(g: LieRing, m: int, n_start: int, depth: int, degree_cap: int,
                           p: int | None = None, cap: int = DEFAULT_GROUP_CAP) -> LambdaReport:
    """``H_n(G_{i,n_start}, F_p)`` for ``i <= depth`` and the images of the transitions.

    ``transitions[i][n]`` is the rank of ``H_n(G_{i+1}) -> H_n(G_i)`` and
    ``stable[n]`` the rank of the composite from the top level to level 1.
    """
    h = h_module(g, p)
    p = h.p
    groups = {i: level_group(g, m, i, n_start, p=p, cap=cap) for i in range(1, depth + 1)}
    bars = {i: BarComplex(G) for i, G in groups.items()}
    dims = {i: {n: bars[i].homology(n, p).rank_mod(p) for n in range(degree_cap + 1)}
            for i in groups}
    transitions = {}
    for i in range(1, depth):
        phi = level_reduction(groups[i + 1], groups[i])
        transitions[i] = {n: homology_image_mod_p(bars[i + 1], bars[i], phi, n, p)
                          for n in range(degree_cap + 1)}
    if depth >= 2:
        phi = level_reduction(groups[depth], groups[1])
        stable = {n: homology_image_mod_p(bars[depth], bars[1], phi, n, p)
                  for n in range(degree_cap + 1)}
    else:
        stable = {}
    return LambdaReport(h, n_start, dims, transitions, stable)


# ---------------------------------------------------------------- group versus Lie towers

def _exponent_profile(H: FGAbelianGroup, p: int) -> list[int]:
    out = sorted((valuation(t, p) for t in H.torsion), reverse=True)
    return out


def isogeny_distance(A: FGAbelianGroup, B: FGAbelianGroup, p: int) -> int | float:
    """Least k with matching cyclic factors ``Z/p^a``, ``Z/p^b`` all obeying ``|a-b| <= k``."""
    if A.free_rank != B.free_rank:
        return math.inf
    a, b = _exponent_profile(A, p), _exponent_profile(B, p)
    size = max(len(a), len(b))
    a += [0] * (size - len(a))
    b += [0] * (size - len(b))
    return max((abs(x - y) for x, y in zip(a, b)), default=0)


def _homology_image(f: ChainMap, n: int) -> FGAbelianGroup:
    if n > f.source.top_degree or n > f.target.top_degree:
        return FGAbelianGroup.trivial()
    Z = f.source.cycles(n)
    if Z.modulus != f.target.modulus:
        Z = Z.reduce_mod(f.target.modulus)
    B = f.target.boundary_span(n)
    return subquotient((f[n] @ Z).hstack(B), B)


def _trivial_group() -> FinGroup:
    return FinGroup([[0]])


@dataclass
class TowerComparison:
    p: int
    depth: int
    coefficients: int
    group_levels: dict[int, dict[int, FGAbelianGroup]]
    lie_levels: dict[int, dict[int, FGAbelianGroup]]
    group_stable: dict[int, dict[int, FGAbelianGroup]]
    lie_stable: dict[int, dict[int, FGAbelianGroup]]
    multipliers: dict[int, int | None]

    def to_dict(self) -> dict:
        def table(t):
            return {str(i): {str(n): str(h) for n, h in row.items()} for i, row in t.items()}
        return {"p": self.p, "depth": self.depth, "coefficients": self.coefficients,
                "group_levels": table(self.group_levels), "lie_levels": table(self.lie_levels),
                "group_stable": table(self.group_stable), "lie_stable": table(self.lie_stable),
                "multipliers": {str(n): k for n, k in self.multipliers.items()}}


def congruence_lie_comparison(A: FinRing, r: int, m: int, depth: int, degree_cap: int,
                              coefficients: int | None = None,
                              cap: int = DEFAULT_GROUP_CAP) -> TowerComparison:
    """Homology of ``GL_r(A)^(m)/GL_r(A)^(i)`` against ``C(gl_r(A_i))`` for ``i = 1..depth``.

    Coefficients are ``Z/p^j`` (default ``Z/p``).  For every degree the
    images of the top level in each lower level are compared factor by
    factor between the two towers; the reported
    multiplier is the least p-power matching them at every level, or
    ``None`` when free ranks differ.  This is a necessary condition for a
    quasi-isogeny of the two towers, not a construction of one.
    """
    p = A.p
    if p is None or depth < 1 or depth > A.precision:
        raise ValueError("need a p-adic algebra with precision >= depth >= 1")
    if m < lazard_shift(p):
        raise ValueError(f"need m >= {lazard_shift(p)} for p = {p}")
    if coefficients is None:
        coefficients = p
    pp = prime_power(coefficients) if coefficients > 1 else None
    if pp is None or pp[0] != p:
        raise ValueError(f"coefficients must be Z/{p}^j")
    groups, group_cx, lie_cx = {}, {}, {}
    for i in range(1, depth + 1):
        G = congruence_quotient(A, r, m, i - m, cap=cap) if i > m else _trivial_group()
        groups[i] = G
        group_cx[i] = bar_complex(G, coefficients, degree_cap + 1)
        C = chevalley_complex(_gl_level(A, r, i), min(degree_cap + 1, r * r * A.rank)).complex
        lie_cx[i] = C.reduce_mod(math.gcd(C.modulus, coefficients))
    group_levels = {i: {n: group_cx[i].homology(n) for n in range(degree_cap + 1)} for i in groups}
    lie_levels = {i: {n: _homology_or_zero(lie_cx[i], n) for n in range(degree_cap + 1)}
                  for i in groups}
    group_stable, lie_stable = {}, {}
    for i in range(1, depth):
        phi = _group_reduction(groups[depth], groups[i], p, m, i)
        gmap = ChainMap(group_cx[depth], group_cx[i],
                        {n: _bar_map_matrix(groups[depth], groups[i], phi, n, group_cx[i].modulus)
                         for n in group_cx[depth].degrees()}, validate=False)
        lmap = ChainMap(lie_cx[depth], lie_cx[i],
                        {n: IntMatrix.identity(lie_cx[depth].rank(n), lie_cx[i].modulus)
                         for n in lie_cx[depth].degrees()}, validate=False)
        group_stable[i] = {n: _homology_image(gmap, n) for n in range(degree_cap + 1)}
        lie_stable[i] = {n: _homology_image(lmap, n) for n in range(degree_cap + 1)}
    multipliers = {}
    for n in range(degree_cap + 1):
        k = max((isogeny_distance(group_stable[i][n], lie_stable[i][n], p) for i in group_stable),
                default=0)
        multipliers[n] = None if k == math.inf else p ** k
    return TowerComparison(p, depth, coefficients, group_levels, lie_levels, group_stable,
                           lie_stable, multipliers)


def _homology_or_zero(C: ChainComplex, n: int) -> FGAbelianGroup:
    # complexes stop at their top exterior degree
    return C.homology(n) if n <= C.top_degree else FGAbelianGroup.trivial()


def _gl_level(A: FinRing, r: int, i: int) -> LieRing:
    from .algebra import gl_lie_ring
    return gl_lie_ring(A.level(i), r)


def _group_reduction(G: FinGroup, H: FinGroup, p: int, m: int, i: int) -> list[int]:
    if H.order == 1:
        return [0] * G.order
    q = p ** i
    return [H.index[tuple(x % q for x in g)] for g in G.elements]


def _bar_map_matrix(G: FinGroup, H: FinGroup, phi: Sequence[int], n: int, modulus: int) -> IntMatrix:
    src, dst = BarComplex(G), BarComplex(H)
    where = src.image_of(phi, dst, n)
    return IntMatrix(dst.rank(n), src.rank(n), {(k, j): 1 for j, k in where.items()}, modulus)


def chevalley_scaling_tower(A: FinRing, r: int, m: int, degree_cap: int) -> TowerMap:
    """Inclusion ``C(p^m gl_r(A_i)) -> C(gl_r(A_i))`` levelwise, as a map of towers.

    The source Lie ring is ``gl_r(A_i)`` with bracket scaled by ``p^m``; its
    basis vector ``e`` goes to ``p^m e``, so degree n is ``p^(mn)`` times the
    identity.
    """
    if A.p is None:
        raise ValueError("scaling towers need a p-adic algebra")
    if m < 1:
        raise ValueError("need m >= 1")
    p = A.p
    src, tgt, comps = [], [], []
    for i in range(1, A.precision + 1):
        g = gl_lie_ring(A.level(i), r)
        cap = min(degree_cap, g.rank)
        S = chevalley_complex(scaled_lie_ring(g, m, p), cap).complex
        T = chevalley_complex(g, cap).complex
        src.append(S)
        tgt.append(T)
        comps.append(ChainMap(S, T, {n: IntMatrix.identity(S.rank(n), T.modulus).scale(p ** (m * n))
                                     for n in S.degrees()}))

    def reductions(levels):
        return [ChainMap(levels[i + 1], levels[i],
                         {n: IntMatrix.identity(levels[i + 1].rank(n), levels[i].modulus)
                          for n in levels[i + 1].degrees()})
                for i in range(len(levels) - 1)]

    return TowerMap(Tower(src, reductions(src)), Tower(tgt, reductions(tgt)), comps)
