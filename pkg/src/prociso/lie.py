"""Chevalley complexes, graded symmetric algebras and the trace map to cyclic chains.

The trace map sends ``x_1 ∧ ... ∧ x_n`` in ``Λ^n gl_r(R)`` to a sum over
permutations: each cycle of the permutation contributes the cyclic tensor of
matrix entries read around it, viewed as a generator of ``C^λ(R)[1]``, and
the cycles are multiplied in the graded symmetric algebra.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

from .algebra import FinGroup, FinRing, LieRing, gl_lie_ring, matrix_ring
from .complexes import (
    ChainComplex, ChainMap, Tower, TowerMap, subcomplex_homology,
    tensor_complexes, tensor_maps,
)
from .hochschild import _orbit_data, connes_complex
from .linalg import (
    ContractError, FGAbelianGroup, IntMatrix, ResourceError, image_contains, kernel_generators,
    subquotient, torsion_exponent,
)

MAX_BASIS = 200_000


# ---------------------------------------------------------------- permutations

def cycles_of(sigma: tuple[int, ...]) -> list[list[int]]:
    """Cycles ``[i_1, i_2, ...]`` with ``sigma(i_j) = i_{j-1}``, each starting at its least element.

    So walking a cycle applies the inverse permutation; cycles are sorted by
    their first element.
    """
    n = len(sigma)
    inverse = [0] * n
    for i, s in enumerate(sigma):
        inverse[s] = i
    seen = [False] * n
    out = []
    for start in range(n):
        if seen[start]:
            continue
        cyc, cur = [], start
        while not seen[cur]:
            seen[cur] = True
            cyc.append(cur)
            cur = inverse[cur]
        out.append(cyc)
    return out


def permutation_sign(word: list[int]) -> int:
    inv = sum(1 for a in range(len(word)) for b in range(a + 1, len(word)) if word[a] > word[b])
    return -1 if inv % 2 else 1


def partitions_desc(n: int, largest: int | None = None):
    """Partitions of n as non-increasing tuples, in reverse lexicographic order."""
    if largest is None:
        largest = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in partitions_desc(n - first, first):
            yield (first,) + rest


class PermutationAlgebra:
    """The symmetric group on n letters with its conjugacy classes."""

    def __init__(self, n: int):
        self.n = n
        self.elements = list(itertools.permutations(range(n)))
        self.index = {s: i for i, s in enumerate(self.elements)}
        self.classes: dict[tuple[int, ...], list[int]] = {}
        for i, s in enumerate(self.elements):
            self.classes.setdefault(self.cycle_type(s), []).append(i)

    @staticmethod
    def cycle_type(sigma) -> tuple[int, ...]:
        return tuple(sorted((len(c) for c in cycles_of(tuple(sigma))), reverse=True))

    @staticmethod
    def compose(a, b) -> tuple[int, ...]:
        """``a ∘ b``."""
        return tuple(a[b[i]] for i in range(len(b)))

    @staticmethod
    def inverse(a) -> tuple[int, ...]:
        out = [0] * len(a)
        for i, x in enumerate(a):
            out[x] = i
        return tuple(out)

    def class_order(self) -> list[tuple[int, ...]]:
        return [lam for lam in partitions_desc(self.n)]


# ---------------------------------------------------------------- Chevalley complexes

def _insert_sorted(k: int, rest: tuple[int, ...]) -> tuple[int, tuple[int, ...]] | None:
    """Sign and result of ``x_k ∧ x_rest`` with rest sorted; None if k repeats."""
    pos = 0
    for v in rest:
        if v == k:
            return None
        if v < k:
            pos += 1
    return (-1 if pos % 2 else 1), rest[:pos] + (k,) + rest[pos:]


@dataclass
class ChevalleyComplex:
    lie: LieRing
    complex: ChainComplex
    basis_labels: dict[int, list[tuple[int, ...]]]
    index: dict[int, dict[tuple[int, ...], int]] = field(repr=False)

    @property
    def degree_cap(self) -> int:
        return self.complex.top_degree

    @cached_property
    def tensor_square(self) -> ChainComplex:
        return tensor_complexes(self.complex, self.complex, self.degree_cap)

    def coproduct(self, n: int) -> IntMatrix:
        """``Δ(x_S) = Σ ±x_A ⊗ x_B`` over ordered splittings (shuffle signs)."""
        T = self.tensor_square
        off = T.tensor_offsets.get(n, {})
        data: dict[tuple[int, int], int] = {}
        for j, S in enumerate(self.basis_labels.get(n, ())):
            for mask in range(1 << n):
                A = tuple(S[t] for t in range(n) if mask >> t & 1)
                B = tuple(S[t] for t in range(n) if not mask >> t & 1)
                word = [t for t in range(n) if mask >> t & 1] + [t for t in range(n) if not mask >> t & 1]
                i = len(A)
                if i not in off:
                    continue
                pos = off[i] + self.index[i][A] * self.complex.rank(n - i) + self.index[n - i][B]
                data[(pos, j)] = data.get((pos, j), 0) + permutation_sign(word)
        return IntMatrix(T.rank(n), self.complex.rank(n), data, self.complex.modulus)

    def coproduct_map(self) -> ChainMap:
        comps = {n: self.coproduct(n) for n in self.complex.degrees()}
        return ChainMap(self.complex, self.tensor_square, comps)

    def unit_map(self, side: str) -> dict[int, IntMatrix]:
        return _unit_components(self.complex, self.tensor_square, side)


def _unit_components(C: ChainComplex, T: ChainComplex, side: str) -> dict[int, IntMatrix]:
    """``x ↦ 1⊗x`` (side 'left') or ``x ↦ x⊗1``; degree 0 must be the rank one base."""
    if C.rank(0) != 1:
        raise ValueError("unit maps need a connected coalgebra (rank one in degree 0)")
    comps = {}
    for n in C.degrees():
        off = T.tensor_offsets.get(n, {})
        i = 0 if side == "left" else n
        if i not in off:
            continue
        data = {}
        for j in range(C.rank(n)):
            pos = off[i] + (j if side == "left" else j * C.rank(0))
            data[(pos, j)] = 1
        comps[n] = IntMatrix(T.rank(n), C.rank(n), data, C.modulus)
    return comps


def chevalley_complex(g: LieRing, degree_cap: int | None = None) -> ChevalleyComplex:
    """``Λ^• g`` with ``∂(x_1∧…∧x_n) = Σ_{i<j} (-1)^{i+j} [x_i,x_j] ∧ …x̂_i…x̂_j…``."""
    d = g.rank
    cap = d if degree_cap is None else degree_cap
    if not 0 <= cap <= d:
        raise ValueError(f"degree cap {cap} must lie in 0..{d}")
    if sum(math.comb(d, n) for n in range(cap + 1)) > MAX_BASIS:
        raise ResourceError("Chevalley complex exceeds the basis cap")
    labels = {n: list(itertools.combinations(range(d), n)) for n in range(cap + 1)}
    index = {n: {S: i for i, S in enumerate(ls)} for n, ls in labels.items()}
    bds = {}
    for n in range(2, cap + 1):
        data: dict[tuple[int, int], int] = {}
        for col, S in enumerate(labels[n]):
            for a in range(n):
                for b in range(a + 1, n):
                    br = g.tensor.get((S[a], S[b]))
                    if not br:
                        continue
                    sign = -1 if (a + b) % 2 else 1
                    rest = S[:a] + S[a + 1:b] + S[b + 1:]
                    for k, c in br:
                        got = _insert_sorted(k, rest)
                        if got is None:
                            continue
                        s2, T = got
                        row = index[n - 1][T]
                        data[(row, col)] = data.get((row, col), 0) + sign * s2 * c
        bds[n] = IntMatrix(len(labels[n - 1]), len(labels[n]), data, g.modulus)
    C = ChainComplex(g.modulus, {n: len(ls) for n, ls in labels.items()}, bds, labels)
    return ChevalleyComplex(g, C, labels, index)


# ---------------------------------------------------------------- graded symmetric algebra

class SymShifted:
    """``Sym(C[1])`` truncated at total degree ``degree_cap``.

    A basis element of ``C_k`` becomes a generator of degree ``k+1``.
    Generators are ordered by decreasing degree, then by index; a monomial is
    the non-decreasing tuple of generator ids, odd generators at most once.
    Degree-n monomials are listed by their degree partition in reverse
    lexicographic order, then lexicographically.  If C carries relations the
    algebra is presented by the ideal they generate.
    """

    def __init__(self, C: ChainComplex, degree_cap: int):
        if min(C.degrees(), default=0) < 0:
            raise ValueError("Sym(C[1]) needs C in non-negative degrees")
        self.input = C
        self.degree_cap = degree_cap
        self.modulus = C.modulus
        gens = [(k + 1, k, i) for k in C.degrees() if k + 1 <= degree_cap for i in range(C.rank(k))]
        gens.sort(key=lambda g: (-g[0], g[2]))
        self.gen_degree = [g[0] for g in gens]
        self.gen_source = [(g[1], g[2]) for g in gens]
        self.gen_id = {(g[1], g[2]): t for t, g in enumerate(gens)}
        self.basis: dict[int, list[tuple[int, ...]]] = {}
        total = 0
        for n in range(degree_cap + 1):
            monos = list(self._monomials(n))
            monos.sort(key=self._order_key)
            self.basis[n] = monos
            total += len(monos)
            if total > MAX_BASIS:
                raise ResourceError("Sym(C[1]) exceeds the basis cap")
        self.index = {n: {m: i for i, m in enumerate(ms)} for n, ms in self.basis.items()}
        bds = {n: self._boundary(n) for n in range(1, degree_cap + 1)}
        rels = self._relations() if C.relations else {}
        self.complex = ChainComplex(self.modulus, {n: len(ms) for n, ms in self.basis.items()},
                                    bds, dict(self.basis), relations=rels)

    def _order_key(self, mono):
        return (tuple(-self.gen_degree[g] for g in mono), tuple(self.gen_source[g][1] for g in mono))

    def _monomials(self, n: int):
        degs = self.gen_degree

        def rec(start, remaining):
            if remaining == 0:
                yield ()
                return
            for g in range(start, len(degs)):
                dg = degs[g]
                if dg > remaining:
                    continue
                nxt = g + 1 if dg % 2 else g
                for rest in rec(nxt, remaining - dg):
                    yield (g,) + rest

        yield from rec(0, n)

    def weight(self, mono) -> int:
        return len(mono)

    def normalize(self, word) -> tuple[int, tuple[int, ...]]:
        """Sign and sorted monomial of a product of generators (0 if an odd one repeats)."""
        degs = self.gen_degree
        sign = 1
        odd = [g for g in word if degs[g] % 2]
        for a in range(len(odd)):
            for b in range(a + 1, len(odd)):
                if odd[a] > odd[b]:
                    sign = -sign
                elif odd[a] == odd[b]:
                    return 0, ()
        return sign, tuple(sorted(word))

    def multiply(self, m1, m2) -> tuple[int, tuple[int, ...]]:
        return self.normalize(tuple(m1) + tuple(m2))

    def _gen_boundary(self, g: int) -> list[tuple[int, int]]:
        k, i = self.gen_source[g]
        if k == 0:
            return []
        col = self.input.d(k).column(i)
        # C[1] carries -d
        return [(self.gen_id[(k - 1, r)], -v) for r, v in col.items()]

    def _boundary(self, n: int) -> IntMatrix:
        data: dict[tuple[int, int], int] = {}
        idx = self.index[n - 1]
        for col, mono in enumerate(self.basis[n]):
            prefix = 0
            for j, g in enumerate(mono):
                sign = -1 if prefix % 2 else 1
                for h, v in self._gen_boundary(g):
                    s, m = self.normalize(mono[:j] + (h,) + mono[j + 1:])
                    if s:
                        key = (idx[m], col)
                        data[key] = data.get(key, 0) + sign * s * v
                prefix += self.gen_degree[g]
        return IntMatrix(len(self.basis[n - 1]), len(self.basis[n]), data, self.modulus)

    def _relations(self) -> dict[int, IntMatrix]:
        out = {}
        for n in range(1, self.degree_cap + 1):
            cols = []
            for k, R in self.input.relations.items():
                deg = k + 1
                if deg > n:
                    continue
                for rel in R.columns():
                    for mono in self.basis[n - deg]:
                        col: dict[int, int] = {}
                        for i, v in rel.items():
                            s, m = self.normalize((self.gen_id[(k, i)],) + mono)
                            if s:
                                pos = self.index[n][m]
                                col[pos] = col.get(pos, 0) + s * v
                        if col:
                            cols.append(col)
            if cols:
                out[n] = IntMatrix.from_columns(len(self.basis[n]), cols, self.modulus)
        return out

    def weight_one_inclusion(self) -> ChainMap:
        """``C[1] -> Sym(C[1])`` onto the generators."""
        S = self.input.shift(1).truncate(self.degree_cap)
        comps = {}
        for n in S.degrees():
            data = {(self.index[n][(self.gen_id[(n - 1, i)],)], i): 1 for i in range(S.rank(n))}
            comps[n] = IntMatrix(self.complex.rank(n), S.rank(n), data, self.modulus)
        return ChainMap(S, self.complex, comps)

    @cached_property
    def tensor_square(self) -> ChainComplex:
        return tensor_complexes(self.complex, self.complex, self.degree_cap)

    def coproduct_terms(self, mono) -> dict[tuple[tuple[int, ...], tuple[int, ...]], int]:
        degs = self.gen_degree
        out: dict = {}
        k = len(mono)
        for mask in range(1 << k):
            left = tuple(mono[t] for t in range(k) if mask >> t & 1)
            right = tuple(mono[t] for t in range(k) if not mask >> t & 1)
            sign = 1
            for a in range(k):
                if mask >> a & 1:
                    continue
                for b in range(a + 1, k):
                    if mask >> b & 1 and degs[mono[a]] % 2 and degs[mono[b]] % 2:
                        sign = -sign
            out[(left, right)] = out.get((left, right), 0) + sign
        return out

    def coproduct(self, n: int) -> IntMatrix:
        T = self.tensor_square
        off = T.tensor_offsets.get(n, {})
        data: dict[tuple[int, int], int] = {}
        for j, mono in enumerate(self.basis[n]):
            for (left, right), v in self.coproduct_terms(mono).items():
                i = sum(self.gen_degree[g] for g in left)
                pos = off[i] + self.index[i][left] * self.complex.rank(n - i) + self.index[n - i][right]
                data[(pos, j)] = data.get((pos, j), 0) + v
        return IntMatrix(T.rank(n), self.complex.rank(n), data, self.modulus)

    def coproduct_map(self) -> ChainMap:
        comps = {n: self.coproduct(n) for n in self.complex.degrees()}
        return ChainMap(self.complex, self.tensor_square, comps)

    def unit_map(self, side: str) -> dict[int, IntMatrix]:
        return _unit_components(self.complex, self.tensor_square, side)


# ---------------------------------------------------------------- primitives

def coproduct_and_primitives(coalgebra, n: int) -> tuple[FGAbelianGroup, IntMatrix]:
    """Primitive part of ``H_n`` for a connected dg coalgebra.

    ``coalgebra`` is a ChevalleyComplex or SymShifted.  Computes the classes
    whose reduced coproduct ``Δ - 1⊗id - id⊗1`` is a boundary in ``C ⊗ C``.
    Returns the group and generating cycles as columns in ``C_n``.
    """
    C = coalgebra.complex
    if not C.is_free:
        raise ValueError("primitives are computed for complexes of free modules")
    T = coalgebra.tensor_square
    if n + 1 > T.top_degree and n < C.top_degree:
        raise ValueError("tensor square is too short")
    left, right = coalgebra.unit_map("left"), coalgebra.unit_map("right")
    reduced = coalgebra.coproduct(n)
    for part in (left, right):
        if n in part:
            reduced = reduced - part[n]
    Z = C.cycles(n)
    if Z.cols == 0:
        return FGAbelianGroup(), Z
    image = reduced @ Z
    B_T = T.d(n + 1) if n + 1 <= T.top_degree else IntMatrix.zeros(T.rank(n), 0, C.modulus)
    block = image.hstack(B_T.scale(-1)) if B_T.cols else image
    if block.rows == 0:
        coeffs = IntMatrix.identity(Z.cols, C.modulus)
    else:
        K = kernel_generators(block)
        coeffs = K.submatrix(list(range(Z.cols)), list(range(K.cols)))
    prim = Z @ coeffs
    B = C.boundary_span(n)
    return subquotient(prim.hstack(B) if B.cols else prim, B), prim


# ---------------------------------------------------------------- θ and κ

def theta(sigma, matrices, R: FinRing) -> dict[tuple[tuple[int, ...], ...], int]:
    """``θ_σ(f_1⊗…⊗f_n) = Π_α tr(f_{i_1} … f_{i_k})`` over the cycles of σ.

    Matrices are r×r nested lists of ring vectors.  The trace of a cycle is
    kept as the tensor ``Σ f_{i_1}[a_1][a_2] ⊗ … ⊗ f_{i_k}[a_k][a_1]``;
    the result maps tuples of per-cycle basis tuples to coefficients.
    """
    r = len(matrices[0])
    out: dict = {}
    parts = []
    for cyc in cycles_of(tuple(sigma)):
        terms: dict[tuple[int, ...], int] = {}
        for rows in itertools.product(range(r), repeat=len(cyc)):
            tensors = [{(): 1}]
            for j, i in enumerate(cyc):
                entry = matrices[i][rows[j]][rows[(j + 1) % len(cyc)]]
                tensors = [{key + (k,): c * v for key, c in t.items() for k, v in enumerate(entry) if v}
                           for t in tensors]
            for key, c in tensors[0].items():
                terms[key] = terms.get(key, 0) + c
        parts.append(terms)
    for combo in itertools.product(*(p.items() for p in parts)):
        key = tuple(k for k, _ in combo)
        val = math.prod(c for _, c in combo)
        out[key] = out.get(key, 0) + val
    m = R.modulus
    return {k: v % m if m else v for k, v in out.items() if (v % m if m else v)}


def theta_scalar(sigma, matrices, R: FinRing) -> int:
    """θ_σ for a rank one coefficient ring, as a number."""
    if R.rank != 1:
        raise ValueError("theta_scalar needs a rank one ring")
    return sum(theta(sigma, matrices, R).values()) % R.modulus if R.modulus else \
        sum(theta(sigma, matrices, R).values())


@dataclass
class LQTData:
    r: int
    ring: FinRing
    chevalley: ChevalleyComplex
    sym: SymShifted
    connes: ChainComplex
    map: ChainMap
    drop_signed: bool = False

    def commutation_defect(self, n: int) -> IntMatrix:
        """``∂κ_n - κ_{n-1}∂`` reduced modulo the target relations (zero iff κ commutes there)."""
        src, tgt = self.chevalley.complex, self.sym.complex
        diff = tgt.d(n) @ self.map[n] - self.map[n - 1] @ src.d(n)
        if diff.is_zero() or tgt.relations.get(n - 1) is None:
            return diff
        R = tgt.rel(n - 1)
        keep = [j for j, col in enumerate(diff.columns())
                if col and not image_contains(R, IntMatrix.from_columns(diff.rows, [col], diff.modulus))]
        return diff.submatrix(list(range(diff.rows)), keep)

    def respects_coproducts(self, n: int) -> bool:
        """``(κ⊗κ)Δ = Δκ`` on chains of degree n."""
        src, tgt = self.chevalley, self.sym
        cap = self.chevalley.degree_cap
        square = tensor_maps(self.map, self.map, src.tensor_square, tgt.tensor_square, cap,
                             validate=False)
        return square[n] @ src.coproduct(n) == tgt.coproduct(n) @ self.map[n]

    def is_chain_map(self, top: int | None = None) -> bool:
        top = self.chevalley.degree_cap if top is None else top
        return all(self.commutation_defect(n).is_zero() for n in range(1, top + 1))

    def surjective_in(self, n: int) -> bool:
        K = self.map[n]
        T = self.sym.complex
        if T.rank(n) == 0:
            return True
        span = K.hstack(T.rel(n)) if T.relations.get(n) is not None else K
        return image_contains(span, IntMatrix.identity(T.rank(n), T.modulus))

    def kernel_generators(self, n: int) -> IntMatrix:
        K = self.map[n]
        T = self.sym.complex
        if self.chevalley.complex.rank(n) == 0:
            return IntMatrix.zeros(0, 0, T.modulus)
        block = K.hstack(T.rel(n)) if T.relations.get(n) is not None else K
        if block.rows == 0:
            return IntMatrix.identity(K.cols, T.modulus)
        G = kernel_generators(block)
        return G.submatrix(list(range(K.cols)), list(range(G.cols)))

    def kernel_homology(self, n: int) -> FGAbelianGroup:
        if n + 1 > self.chevalley.degree_cap and n < self.chevalley.lie.rank:
            raise ValueError(f"degree {n} needs the complexes up to degree {n + 1}")
        if not self.is_chain_map(min(n + 1, self.chevalley.degree_cap)):
            raise ContractError("the kernel is not a subcomplex: κ does not commute with boundaries",
                                (n,))
        gens = {k: self.kernel_generators(k) for k in (n, n + 1)
                if k <= self.chevalley.degree_cap}
        return subcomplex_homology(self.chevalley.complex, gens, n)


def kappa(r: int, R: FinRing, degree_cap: int | None = None, drop_signed: bool = False) -> LQTData:
    """The trace map ``C(gl_r(R)) -> Sym(C^λ(R)[1])`` in degrees ``0..degree_cap``.

    With ``drop_signed`` the target uses ``C^λ`` modulo the classes of
    rotation orbits of sign -1 (the 2-torsion classes); this changes nothing
    over odd moduli.  Only that target makes the map commute with boundaries
    when 2 is not invertible: the 3-cycle term of ``κ(E11∧E12∧E21)`` has
    boundary ``[1⊗1]``, which is such a class.  Use
    :meth:`LQTData.commutation_defect` to inspect this.
    """
    g = gl_lie_ring(R, r)
    cap = min(g.rank, 4) if degree_cap is None else degree_cap
    if cap > g.rank:
        raise ValueError("degree cap exceeds rank of gl_r(R)")
    C = chevalley_complex(g, cap)
    lam, _ = connes_complex(R, max(cap - 1, 0), drop_signed=drop_signed)
    S = SymShifted(lam, cap)
    orbit_tables = {n: _orbit_data(R, n) for n in range(cap)}
    lam_pos = {n: {tuple(rep): i for i, rep in enumerate(lam.labels.get(n, ()))} for n in range(cap)}
    d = R.rank
    coords = [((s // d) // r, (s // d) % r, s % d) for s in range(g.rank)]
    comps = {}
    for n in range(cap + 1):
        data: dict[tuple[int, int], int] = {}
        perms = list(itertools.permutations(range(n)))
        for col, wedge in enumerate(C.basis_labels[n]):
            ent = [coords[s] for s in wedge]
            for sigma in perms:
                cyc = cycles_of(sigma)
                ok = all(ent[c[j]][1] == ent[c[(j + 1) % len(c)]][0] for c in cyc for j in range(len(c)))
                if not ok:
                    continue
                word = [i for c in cyc for i in c]
                sign = permutation_sign(word)
                gens = []
                for c in cyc:
                    tup = tuple(ent[i][2] for i in c)
                    reps, where, _ = orbit_tables[len(c) - 1]
                    k, s = where[tup]
                    pos = lam_pos[len(c) - 1].get(reps[k])
                    if pos is None:
                        sign = 0
                        break
                    sign *= s
                    gens.append(S.gen_id[(len(c) - 1, pos)])
                if not sign:
                    continue
                s2, mono = S.normalize(tuple(gens))
                if not s2:
                    continue
                row = S.index[n][mono]
                data[(row, col)] = data.get((row, col), 0) + sign * s2
        comps[n] = IntMatrix(S.complex.rank(n), C.complex.rank(n), data, R.modulus)
    f = ChainMap(C.complex, S.complex, comps, validate=False)
    return LQTData(r, R, C, S, lam, f, drop_signed)


def kernel_killing_search(r: int, n: int, rings, exponent_bound: int) -> int | None:
    """Least e <= bound killing ``H_n Ker(κ^r_R)`` for every sample ring, or None.

    Uses the target without the 2-torsion classes so that the kernel is a subcomplex.
    """
    if n > r:
        raise ValueError("need n <= r")
    e = 1
    for R in rings:
        data = kappa(r, R, min(n + 1, r * r * R.rank), drop_signed=True)
        H = data.kernel_homology(n)
        ex = torsion_exponent(H)
        if ex == math.inf:
            return None
        e = math.lcm(e, int(ex))
        if e > exponent_bound:
            return None
    return e


# ---------------------------------------------------------------- adjoint action

def general_linear_group(R: FinRing, r: int, cap: int = 10 ** 4) -> FinGroup:
    """``GL_r(R)`` for a finite ring, elements as ``Mat_r(R)`` coordinate tuples."""
    M = matrix_ring(R, r)
    if M.size() > 10 ** 6:
        raise ResourceError("matrix ring too large to enumerate units")
    one = M.unit
    elements = list(M.elements())
    units = []
    lookup = set(elements)
    for x in elements:
        if any(M.multiply(x, y) == one and M.multiply(y, x) == one for y in lookup):
            units.append(x)
            if len(units) > cap:
                raise ResourceError(f"GL_{r} exceeds the cap {cap}")
    G = FinGroup.from_operation(units, M.multiply, one, cap=cap)
    G.ring = M
    return G


def _wedge_action(C: ChevalleyComplex, n: int, images: list[tuple[int, ...]]) -> IntMatrix:
    """Λ^n of the linear map sending basis vector i to ``images[i]``."""
    m = C.complex.modulus
    data: dict[tuple[int, int], int] = {}
    for col, S in enumerate(C.basis_labels[n]):
        acc = {(): 1}
        for s in S:
            new: dict = {}
            for word, c in acc.items():
                for k, v in enumerate(images[s]):
                    if v and k not in word:
                        new[word + (k,)] = new.get(word + (k,), 0) + c * v
            acc = new
        for word, c in acc.items():
            srt = tuple(sorted(word))
            sign = permutation_sign(list(word))
            key = (C.index[n][srt], col)
            data[key] = data.get(key, 0) + sign * c
    return IntMatrix(C.complex.rank(n), C.complex.rank(n), data, m)


def lie_derivative(C: ChevalleyComplex, n: int, x: int) -> IntMatrix:
    """``L_x(y_1∧…∧y_n) = Σ y_1∧…∧[x, y_i]∧…∧y_n``."""
    g = C.lie
    data: dict[tuple[int, int], int] = {}
    for col, S in enumerate(C.basis_labels[n]):
        for i, s in enumerate(S):
            for k, c in g.tensor.get((x, s), ()):
                word = S[:i] + (k,) + S[i + 1:]
                if len(set(word)) < n:
                    continue
                key = (C.index[n][tuple(sorted(word))], col)
                data[key] = data.get(key, 0) + permutation_sign(list(word)) * c
    return IntMatrix(C.complex.rank(n), C.complex.rank(n), data, C.complex.modulus)


def contraction(C: ChevalleyComplex, n: int, x: int) -> IntMatrix:
    """``ι_x(ω) = -x ∧ ω`` from degree n to n+1, the homotopy with ``L_x = ∂ι_x + ι_x∂``."""
    data = {}
    for col, S in enumerate(C.basis_labels[n]):
        if x in S:
            continue
        word = (x,) + S
        data[(C.index[n + 1][tuple(sorted(word))], col)] = -permutation_sign(list(word))
    return IntMatrix(C.complex.rank(n + 1), C.complex.rank(n), data, C.complex.modulus)


def cartan_identity_holds(C: ChevalleyComplex, n: int, x: int) -> bool:
    """``L_x = ∂ι_x + ι_x∂`` on degree n (needs degree n+1 in the complex)."""
    cx = C.complex
    lhs = lie_derivative(C, n, x)
    rhs = cx.d(n + 1) @ contraction(C, n, x)
    if n >= 1:
        rhs = rhs + contraction(C, n - 1, x) @ cx.d(n)
    return lhs == rhs


@dataclass
class AdjointWitness:
    status: str
    multiplier: int | None
    degree: int
    generators: int
    cartan: bool
    bound: int
    per_generator: list[int] = field(default_factory=list)

    def __str__(self):
        if self.multiplier is None:
            return f"not_detected(bound={self.bound})"
        return f"trivial_up_to({self.multiplier})"


def adjoint_triviality(r: int, R: FinRing, n: int, multiplier_bound: int) -> AdjointWitness:
    """Least d with ``d (g·x - x) = 0`` in ``H_n C(gl_r(R))`` over generators g of GL_r(R)."""
    if n > r:
        raise ValueError("need n <= r")
    g = gl_lie_ring(R, r)
    C = chevalley_complex(g, min(n + 1, g.rank))
    G = general_linear_group(R, r)
    M = G.ring
    Z = C.complex.cycles(n)
    B = C.complex.boundary_span(n)
    per = []
    total = 1
    for gen in G.generators():
        a, ainv = G.elements[gen], G.elements[G.inverse[gen]]
        images = [M.multiply(M.multiply(a, g.basis(i)), ainv) for i in range(g.rank)]
        act = _wedge_action(C, n, images)
        moved = (act - IntMatrix.identity(act.rows, act.modulus)) @ Z if Z.cols else Z
        if moved.cols == 0 or moved.is_zero():
            per.append(1)
            continue
        span = moved.hstack(B) if B.cols else moved
        e = torsion_exponent(subquotient(span, B))
        per.append(int(e) if e != math.inf else 0)
        if e == math.inf:
            total = math.inf
        elif total != math.inf:
            total = math.lcm(total, int(e))
    cartan = all(cartan_identity_holds(C, k, x) for k in range(0, min(n, C.degree_cap - 1) + 1)
                 for x in range(g.rank)) if C.degree_cap >= 1 else True
    if total == math.inf or total > multiplier_bound:
        return AdjointWitness("not_detected", None, n, len(per), cartan, multiplier_bound, per)
    return AdjointWitness("trivial_up_to", int(total), n, len(per), cartan, multiplier_bound, per)


# ---------------------------------------------------------------- towers

def lqt_tower(A: FinRing, r: int, degree_cap: int) -> TowerMap:
    """Levelwise trace maps over ``A/p^i`` with reduction transitions (2-torsion classes dropped)."""
    if A.p is None:
        raise ValueError("lqt_tower needs a p-adic algebra")
    data = [kappa(r, A.level(i), degree_cap, drop_signed=True) for i in range(1, A.precision + 1)]

    def reductions(levels):
        return [ChainMap(levels[i + 1], levels[i],
                         {n: IntMatrix.identity(levels[i + 1].rank(n), levels[i].modulus)
                          for n in levels[i + 1].degrees()})
                for i in range(len(levels) - 1)]

    src = [D.chevalley.complex for D in data]
    tgt = [D.sym.complex for D in data]
    f = TowerMap(Tower(src, reductions(src)), Tower(tgt, reductions(tgt)), [D.map for D in data])
    f.levels_data = data
    return f


@dataclass
class PrimitiveComparison:
    degree: int
    primitives: FGAbelianGroup
    weight_one: FGAbelianGroup
    defect: FGAbelianGroup

    @property
    def equal(self) -> bool:
        return self.defect.is_trivial()


def weight_one_comparison(S: SymShifted, n: int) -> PrimitiveComparison:
    """Compare ``Prim H_n Sym(C[1])`` with the image of ``H_n(C[1])``.

    The defect is the quotient of the primitive classes by the weight-one classes.
    """
    prim, gens = coproduct_and_primitives(S, n)
    inc = S.weight_one_inclusion()
    src = inc.source
    B = S.complex.boundary_span(n)
    image = inc[n] @ src.cycles(n) if src.rank(n) else IntMatrix.zeros(S.complex.rank(n), 0, S.modulus)
    with_b = image.hstack(B) if B.cols else image
    weight_one = subquotient(with_b, B)
    defect = subquotient(gens.hstack(with_b), with_b)
    return PrimitiveComparison(n, prim, weight_one, defect)
