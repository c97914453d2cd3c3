"""Hochschild, cyclic and Connes complexes of a ring given by structure constants.

``R^{⊗(n+1)}`` is indexed by tuples of basis indices in lexicographic order,
so tuple ``(i_0, ..., i_n)`` sits at position ``sum i_k d^(n-k)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

from .algebra import FinRing
from .complexes import (
    Bicomplex, ChainComplex, ChainMap, FilteredComplex, Tower, TowerMap, subcomplex_homology,
    total_complex,
)
from .linalg import FGAbelianGroup, IntMatrix, ResourceError

DEFAULT_DEGREE_CAP = 4
MAX_TENSOR_RANK = 300_000


def _check_size(R: FinRing, degree_cap: int) -> None:
    if degree_cap < 0:
        raise ValueError("degree cap must be non-negative")
    if R.rank ** (degree_cap + 1) > MAX_TENSOR_RANK:
        raise ResourceError(f"rank {R.rank}^{degree_cap + 1} exceeds the tensor cap {MAX_TENSOR_RANK}")


def _position(t: tuple[int, ...], d: int) -> int:
    out = 0
    for i in t:
        out = out * d + i
    return out


@lru_cache(maxsize=None)
def _tuples(d: int, length: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.product(range(d), repeat=length))


def face_sum(R: FinRing, n: int, prime: bool = False) -> IntMatrix:
    """``b = sum_{i<=n} (-1)^i d_i`` from ``R^{⊗n+1}`` to ``R^{⊗n}``; ``b'`` omits ``d_n``.

    ``d_i`` multiplies factors i and i+1; ``d_n`` multiplies the last factor
    into the first.
    """
    d, m = R.rank, R.modulus
    if n < 1:
        raise ValueError("faces start in degree 1")
    tensor = R.tensor
    cols = []
    last = n if prime else n + 1
    for t in _tuples(d, n + 1):
        col: dict[int, int] = {}
        for i in range(last):
            sign = -1 if i % 2 else 1
            if i < n:
                for k, c in tensor.get((t[i], t[i + 1]), ()):
                    pos = _position(t[:i] + (k,) + t[i + 2:], d)
                    col[pos] = col.get(pos, 0) + sign * c
            else:
                for k, c in tensor.get((t[n], t[0]), ()):
                    pos = _position((k,) + t[1:n], d)
                    col[pos] = col.get(pos, 0) + sign * c
        cols.append(col)
    return IntMatrix.from_columns(d ** n, cols, m)


def cyclic_operator(R: FinRing, n: int) -> IntMatrix:
    """``t(r_0⊗...⊗r_n) = (-1)^n r_n⊗r_0⊗...⊗r_{n-1}``."""
    d = R.rank
    sign = -1 if n % 2 else 1
    size = d ** (n + 1)
    data = {}
    for j, t in enumerate(_tuples(d, n + 1)):
        data[(_position((t[n],) + t[:n], d), j)] = sign
    return IntMatrix(size, size, data, R.modulus)


def norm_operator(R: FinRing, n: int) -> IntMatrix:
    """``N = 1 + t + ... + t^n``."""
    t = cyclic_operator(R, n)
    size = t.rows
    acc = IntMatrix.identity(size, R.modulus)
    power = IntMatrix.identity(size, R.modulus)
    for _ in range(n):
        power = t @ power
        acc = acc + power
    return acc


def hochschild_complex(R: FinRing, degree_cap: int = DEFAULT_DEGREE_CAP) -> ChainComplex:
    """``C(R)`` in degrees ``0..degree_cap`` (homology is exact below the cap)."""
    _check_size(R, degree_cap)
    d = R.rank
    ranks = {n: d ** (n + 1) for n in range(degree_cap + 1)}
    bds = {n: face_sum(R, n) for n in range(1, degree_cap + 1)}
    labels = {n: list(_tuples(d, n + 1)) for n in range(degree_cap + 1)}
    return ChainComplex(R.modulus, ranks, bds, labels)


def cyclic_bicomplex(R: FinRing, degree_cap: int = DEFAULT_DEGREE_CAP) -> Bicomplex:
    """Columns alternate ``b`` (even) and ``b'`` (odd); rows ``... N, 1-t, N, 1-t``.

    The horizontal and vertical maps commute; signs enter in the total complex.
    """
    _check_size(R, degree_cap)
    m = R.modulus
    b = {n: face_sum(R, n) for n in range(1, degree_cap + 1)}
    bp = {n: face_sum(R, n, prime=True) for n in range(1, degree_cap + 1)}
    one_minus_t, norm = {}, {}
    for n in range(degree_cap + 1):
        t = cyclic_operator(R, n)
        one_minus_t[n] = IntMatrix.identity(t.rows, m) - t
        norm[n] = norm_operator(R, n)
    ranks, hor, ver = {}, {}, {}
    for col in range(degree_cap + 1):
        for row in range(degree_cap + 1 - col):
            ranks[(col, row)] = R.rank ** (row + 1)
            if row >= 1:
                ver[(col, row)] = (bp if col % 2 else b)[row]
            if col >= 1:
                hor[(col, row)] = (one_minus_t if col % 2 else norm)[row]
    return Bicomplex(m, ranks, hor, ver)


def _orbit_data(R: FinRing, n: int):
    """Orbits of the rotation on ``R^{⊗n+1}``-basis tuples.

    Returns ``(reps, where, bad)``: lexicographically least representatives
    in order, and for every tuple its ``(orbit number, sign)`` so that
    ``e_tuple = sign * e_rep`` in the coinvariants; ``bad`` marks orbits whose
    full rotation acts by -1 (their class is 2-torsion).
    """
    d = R.rank
    reps: list[tuple[int, ...]] = []
    bad: list[bool] = []
    where: dict[tuple[int, ...], tuple[int, int]] = {}
    for t in _tuples(d, n + 1):
        if t in where:
            continue
        k = len(reps)
        reps.append(t)
        # e_{rot^j rep} = (-1)^(n j) t^j e_rep is identified with (-1)^(n j) e_rep
        cur, j = t, 0
        while True:
            sign = -1 if (n * j) % 2 else 1
            if cur in where:
                break
            where[cur] = (k, sign)
            cur = (cur[n],) + cur[:n]
            j += 1
        period = j
        bad.append((n * period) % 2 == 1)
    return reps, where, bad


def connes_complex(R: FinRing, degree_cap: int = DEFAULT_DEGREE_CAP, drop_signed: bool = False):
    """``C^λ(R)`` with the coinvariant projection from ``C(R)``.

    Returns ``(complex, projections)`` where ``projections[n]`` maps
    ``R^{⊗n+1}`` onto the basis of orbit classes.  Over odd moduli orbits of
    sign -1 vanish; over ``Z/2`` they are free; otherwise they survive as
    ``Z/2`` summands encoded by relations.  ``drop_signed`` discards those
    classes for every modulus, giving the quotient complex of ``C^λ`` by them.
    """
    _check_size(R, degree_cap)
    m = R.modulus
    drop_bad = drop_signed or m % 2 == 1
    keep_relations = m != 2 and not drop_bad
    ranks, projections, rels, labels = {}, {}, {}, {}
    for n in range(degree_cap + 1):
        reps, where, bad = _orbit_data(R, n)
        kept = [k for k in range(len(reps)) if not (drop_bad and bad[k])]
        new_index = {k: i for i, k in enumerate(kept)}
        ranks[n] = len(kept)
        labels[n] = [reps[k] for k in kept]
        data = {}
        for j, t in enumerate(_tuples(R.rank, n + 1)):
            k, sign = where[t]
            if k in new_index:
                data[(new_index[k], j)] = sign
        projections[n] = IntMatrix(len(kept), R.rank ** (n + 1), data, m)
        if keep_relations:
            twos = [{new_index[k]: 2} for k in kept if bad[k]]
            if twos:
                rels[n] = IntMatrix.from_columns(len(kept), twos, m)
    bds = {}
    d = R.rank
    for n in range(1, degree_cap + 1):
        lifts = IntMatrix(d ** (n + 1), ranks[n],
                          {(_position(rep, d), i): 1 for i, rep in enumerate(labels[n])}, m)
        bds[n] = projections[n - 1] @ face_sum(R, n) @ lifts
    C = ChainComplex(m, ranks, bds, labels, relations=rels)
    return C, projections


@dataclass
class CyclicPackage:
    ring: FinRing
    degree_cap: int
    hochschild: ChainComplex
    bicomplex: Bicomplex
    total: ChainComplex
    cyclic: FilteredComplex
    connes: ChainComplex
    projection: ChainMap
    kernel: dict[int, IntMatrix] = field(repr=False, default_factory=dict)

    def column_indices(self, n: int, column: int) -> list[int]:
        return [i for i, (c, _, _) in enumerate(self.total.labels.get(n, ())) if c == column]


def cyclic_package(R: FinRing, degree_cap: int = DEFAULT_DEGREE_CAP) -> CyclicPackage:
    """Cyclic bicomplex, its total complex with the column filtration, C^λ and π."""
    B = cyclic_bicomplex(R, degree_cap)
    CC = total_complex(B, degree_cap)
    levels = {}
    for a in range((degree_cap + 1) // 2 + 1):
        levels[a] = {n: [i for i, (c, _, _) in enumerate(CC.labels[n]) if c <= 2 * a]
                     for n in CC.degrees()}
    F = FilteredComplex(CC, levels)
    lam, proj = connes_complex(R, degree_cap)
    comps, kernel = {}, {}
    m = R.modulus
    for n in CC.degrees():
        col0 = [i for i, (c, _, _) in enumerate(CC.labels[n]) if c == 0]
        # column 0 comes first in the total basis
        data = {(i, j): v for (i, j), v in proj[n].items()}
        comps[n] = IntMatrix(lam.rank(n), CC.rank(n), data, m)
        gens = [{j: 1} for j in range(len(col0), CC.rank(n))]
        t = cyclic_operator(R, n)
        one_minus_t = IntMatrix.identity(t.rows, m) - t
        gens.extend(dict(c) for c in one_minus_t.columns() if c)
        kernel[n] = IntMatrix.from_columns(CC.rank(n), gens, m)
    pi = ChainMap(CC, lam, comps)
    return CyclicPackage(R, degree_cap, hochschild_complex(R, degree_cap), B, CC, F, lam, pi, kernel)


def connes_kernel_homology(P: CyclicPackage, n: int) -> FGAbelianGroup:
    """``H_n`` of ``Ker(π: CC(R) -> C^λ(R))``; the caller compares the exponent with ``n!``."""
    if n < 0 or n + 1 > P.degree_cap:
        raise ValueError(f"degree {n} needs a package with degree cap >= {n + 1}")
    return subcomplex_homology(P.total, P.kernel, n)


def cyclic_tower(A: FinRing, degree_cap: int = DEFAULT_DEGREE_CAP) -> tuple[Tower, TowerMap]:
    """``CC(A_i)`` for ``i = 1..N`` with reduction transitions, and π levelwise.

    The returned map's target is the tower of Connes complexes.
    """
    if A.p is None or A.precision < 2:
        raise ValueError("cyclic towers need a p-adic algebra of precision >= 2")
    packages = [cyclic_package(A.level(i), degree_cap) for i in range(1, A.precision + 1)]
    cc_levels = [P.total for P in packages]
    lam_levels = [P.connes for P in packages]

    def reductions(levels):
        return [ChainMap(levels[i + 1], levels[i],
                         {n: IntMatrix.identity(levels[i + 1].rank(n), levels[i].modulus)
                          for n in levels[i + 1].degrees()})
                for i in range(len(levels) - 1)]

    source = Tower(cc_levels, reductions(cc_levels))
    target = Tower(lam_levels, reductions(lam_levels))
    pi = TowerMap(source, target, [P.projection for P in packages])
    pi.packages = packages
    return source, pi
