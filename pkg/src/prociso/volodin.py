"""Volodin chain complexes ``X_r(R, J)`` as unions of triangular bar subcomplexes.

For a permutation σ, ``U^σ(R, J)`` consists of the matrices of ``GL_r(R)``
that reduce modulo J to σ-conjugates of upper unitriangular matrices.  The
normalized bar chains of all these subgroups span a subcomplex of the bar
complex of ``GL_r(R)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .algebra import FinGroup, FinRing, congruence_quotient, matrix_ring, with_ideal
from .complexes import ChainComplex, ChainMap
from .lazard import BarComplex
from .linalg import (
    ContractError, FGAbelianGroup, IntMatrix, ResourceError, elementary_divisors_of_columns,
)

Matrix = tuple[int, ...]

DEFAULT_DEGREE_CAP = 2
MAX_SUBGROUP = 5_000
MAX_CHAINS = 300_000


def _nilpotent(R: FinRing, J: list) -> bool:
    power = set(J)
    for _ in range(len(J) + 1):
        if power <= {R.zero()}:
            return True
        power = {R.multiply(a, b) for a in power for b in J}
    return False


def triangular_subgroup(R: FinRing, r: int, sigma: Sequence[int], J: Sequence = ()) -> list[Matrix]:
    """Elements of ``U^σ(R, J)``, sorted, with identity included.

    Entry ``(σ(a), σ(b))`` is free for ``a < b``, lies in ``1 + J`` for
    ``a = b`` and in J for ``a > b``.
    """
    M = matrix_ring(R, r)
    d = R.rank
    ring_elements = list(R.elements())
    ideal = list(J) if J else [R.zero()]
    one = R.unit
    diag = sorted({R.add(one, j) for j in ideal})
    slots = []
    for a in range(r):
        for b in range(r):
            if a < b:
                choices = ring_elements
            elif a == b:
                choices = diag
            else:
                choices = ideal
            slots.append(((sigma[a], sigma[b]), choices))
    size = 1
    for _, ch in slots:
        size *= len(ch)
    if size > MAX_SUBGROUP:
        raise ResourceError(f"triangular subgroup of order {size} exceeds {MAX_SUBGROUP}")
    out = []
    for pick in itertools.product(*(ch for _, ch in slots)):
        vec = [0] * (r * r * d)
        for ((a, b), _), v in zip(slots, pick):
            vec[(a * r + b) * d:(a * r + b + 1) * d] = v
        out.append(tuple(vec))
    # unipotent modulo a nilpotent ideal, hence invertible
    assert M.unit in out
    return sorted(set(out))


@dataclass
class VolodinComplex:
    r: int
    ring: FinRing
    ideal: tuple
    degree_cap: int
    complex: ChainComplex
    basis: dict[int, list[tuple[Matrix, ...]]]
    sigma_index: dict[tuple[int, ...], list[Matrix]] = field(repr=False)
    matrices: FinRing = field(repr=False)

    def homology(self, n: int) -> FGAbelianGroup:
        if n >= self.degree_cap:
            raise ValueError(f"H_{n} needs degree cap >= {n + 1}")
        return self.complex.homology(n)

    def reduced_homology(self, n: int) -> FGAbelianGroup:
        H = self.homology(n)
        if n == 0:
            if H.free_rank < 1:
                raise ContractError("degree-0 homology has no free summand", str(H))
            return FGAbelianGroup(H.free_rank - 1, H.torsion)
        return H

    def bar_inclusion(self, G: FinGroup) -> ChainMap:
        """Inclusion into the normalized bar complex of G (elements are matrices)."""
        bar = BarComplex(G)
        target = bar.complex(0, self.degree_cap)
        comps = {}
        for n in range(self.degree_cap + 1):
            data = {}
            for j, t in enumerate(self.basis[n]):
                k = bar.index(tuple(G.index[g] for g in t))
                if k is None:
                    raise ContractError("Volodin chain has an identity entry", t)
                data[(k, j)] = 1
            comps[n] = IntMatrix(target.rank(n), self.complex.rank(n), data, 0)
        return ChainMap(self.complex, target, comps)


def _check_ideal(R: FinRing, J: Sequence[Sequence[int]]) -> tuple[FinRing, list]:
    if not J:
        return R, []
    carrier = with_ideal(R, J)  # validates two-sided closure
    elements = carrier.ideal_elements()
    if not _nilpotent(R, elements):
        raise ContractError("relative Volodin complexes need a nilpotent ideal", J)
    return carrier, elements


def volodin_complex(r: int, R: FinRing, J: Sequence[Sequence[int]] = (),
                    degree_cap: int = DEFAULT_DEGREE_CAP) -> VolodinComplex:
    """``X_r(R, J)`` in degrees ``0..degree_cap`` (J empty gives the absolute case)."""
    if r < 1 or degree_cap < 1:
        raise ValueError("need r >= 1 and degree cap >= 1")
    R, ideal = _check_ideal(R, J)
    M = matrix_ring(R, r)
    one = M.unit
    subgroups = {}
    for sigma in itertools.permutations(range(r)):
        subgroups[sigma] = triangular_subgroup(R, r, sigma, ideal)
    letters = {s: [g for g in U if g != one] for s, U in subgroups.items()}
    basis: dict[int, list[tuple[Matrix, ...]]] = {0: [()]}
    for n in range(1, degree_cap + 1):
        chains = set()
        for s, L in letters.items():
            if len(L) ** n > MAX_CHAINS:
                raise ResourceError(f"degree {n} chains exceed {MAX_CHAINS}")
            chains.update(itertools.product(L, repeat=n))
        if len(chains) > MAX_CHAINS:
            raise ResourceError(f"degree {n} chains exceed {MAX_CHAINS}")
        basis[n] = sorted(chains)
    index = {n: {t: k for k, t in enumerate(b)} for n, b in basis.items()}
    products: dict[tuple[Matrix, Matrix], Matrix] = {}

    def mul(a, b):
        key = (a, b)
        if key not in products:
            products[key] = M.multiply(a, b)
        return products[key]

    bds = {}
    for n in range(1, degree_cap + 1):
        cols = []
        for t in basis[n]:
            col: dict[int, int] = {}
            faces = [(t[1:], 1)]
            for k in range(n - 1):
                faces.append((t[:k] + (mul(t[k], t[k + 1]),) + t[k + 2:], -1 if (k + 1) % 2 else 1))
            faces.append((t[:-1], -1 if n % 2 else 1))
            for face, c in faces:
                if one in face:
                    continue
                pos = index[n - 1].get(face)
                if pos is None:
                    raise ContractError("bar face leaves the Volodin span", (t, face))
                col[pos] = col.get(pos, 0) + c
            cols.append({k: v for k, v in col.items() if v})
        bds[n] = IntMatrix.from_columns(len(basis[n - 1]), cols, 0)
    C = ChainComplex(0, {n: len(b) for n, b in basis.items()}, bds)
    return VolodinComplex(r, R, tuple(ideal), degree_cap, C, basis, subgroups, M)


@dataclass
class AcyclicityReport:
    r: int
    n: int
    reduced: FGAbelianGroup

    @property
    def holds(self) -> bool:
        return self.reduced.is_trivial()

    def to_dict(self) -> dict:
        return {"r": self.r, "n": self.n, "reduced_homology": str(self.reduced), "holds": self.holds}


def acyclicity_check(r: int, R: FinRing, n: int) -> AcyclicityReport:
    """Reduced ``H_n(X_r(R))`` in the stable range ``r >= 2n + 1``."""
    if r < 2 * n + 1:
        raise ValueError(f"r = {r} is outside the range r >= {2 * n + 1}")
    X = volodin_complex(r, R, (), n + 1)
    return AcyclicityReport(r, n, X.reduced_homology(n))


@dataclass
class CongruenceComparison:
    """``H_1`` of a congruence subgroup against ``H_1`` of the relative Volodin complex."""

    group_h1: FGAbelianGroup
    volodin_h1: FGAbelianGroup
    cokernel: FGAbelianGroup

    @property
    def image_order(self) -> int:
        return self.volodin_h1.order() // self.cokernel.order()

    @property
    def kernel_order(self) -> int:
        return self.group_h1.order() // self.image_order

    def to_dict(self) -> dict:
        return {"group_h1": str(self.group_h1), "volodin_h1": str(self.volodin_h1),
                "cokernel": str(self.cokernel), "image_order": self.image_order,
                "kernel_order": self.kernel_order}


def _coker(columns, rows: int) -> FGAbelianGroup:
    divisors = elementary_divisors_of_columns(columns, rows, 0)
    return FGAbelianGroup.from_orders(rows - len(divisors), [abs(e) for e in divisors if abs(e) != 1])


def congruence_into_volodin(A: FinRing, r: int, m: int, i: int) -> CongruenceComparison:
    """``H_1`` of ``GL_r(A_i)^(m)`` mapped into ``H_1 X_r(A_i, p^m A_i)``.

    Degree-1 boundaries vanish in both normalized complexes, so each ``H_1``
    is a cokernel of ``d_2`` and the cokernel of the induced map is that of
    ``[d_2 | f_1]``.
    """
    if r > 2:
        raise ValueError("the comparison is only built for r <= 2")
    if i <= m:
        raise ValueError("need i > m so the congruence subgroup is nontrivial")
    G = congruence_quotient(A, r, m, i - m)
    Ai = A.level(i)
    p = A.p
    J = [[p ** m * v for v in Ai.basis(k)] for k in range(Ai.rank)]
    X = volodin_complex(r, Ai, J, 2)
    where = {t: k for k, t in enumerate(X.basis[1])}
    images = [{where[(G.elements[g],)]: 1} for g in range(G.order) if g != G.identity]
    rows = X.complex.rank(1)
    d2 = X.complex.d(2).columns()
    return CongruenceComparison(BarComplex(G).homology(1), _coker(d2, rows),
                                _coker(d2 + images, rows))
