"""Chain complexes of finite free modules, bicomplexes, filtrations and towers.

A tower is a finite sequential inverse system ``X_1 <- X_2 <- ... <- X_N``
of chain complexes.  Questions about the pro-object it represents (is it
pro-zero, is a map of towers an isogeny on homology) are answered by bounded
searches over the available depth; a negative answer is always reported as
``not_detected`` together with the search bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .linalg import (
    ContractError, FGAbelianGroup, IntMatrix, factorize, homology_at, image_contains,
    kernel_generators, prime_power, rank, solve, subquotient,
)


def _zero(rows: int, cols: int, modulus: int) -> IntMatrix:
    return IntMatrix.zeros(rows, cols, modulus)


def _to_base(M: IntMatrix, modulus: int) -> IntMatrix:
    return M if M.modulus == modulus else M.reduce_mod(modulus)


class ChainComplex:
    """Non-negatively graded (unless shifted) complex of free modules.

    ``boundaries[n]`` is the matrix of ``d_n: C_n -> C_{n-1}``.  Missing
    boundaries are zero.  ``d_{n} d_{n+1} = 0`` is checked on construction.

    ``relations[n]`` optionally lists generators of a subcomplex to divide
    out; the complex then stands for ``C / Rel``, which lets non-free modules
    (such as cyclic coinvariants over ``Z/4``) be represented.
    """

    def __init__(self, modulus: int, ranks: dict[int, int] | Sequence[int],
                 boundaries: dict[int, IntMatrix] | None = None,
                 labels: dict[int, list] | None = None, validate: bool = True,
                 relations: dict[int, IntMatrix] | None = None):
        if not isinstance(ranks, dict):
            ranks = dict(enumerate(ranks))
        self.modulus = modulus
        self.ranks = {n: r for n, r in ranks.items() if r}
        self.boundaries = {}
        for n, d in (boundaries or {}).items():
            if d.modulus != modulus:
                raise ValueError(f"boundary d_{n} is over {d.base}, complex over modulus {modulus}")
            if d.shape != (self.rank(n - 1), self.rank(n)):
                raise ValueError(f"d_{n} has shape {d.shape}, expected "
                                 f"{(self.rank(n - 1), self.rank(n))}")
            if not d.is_zero():
                self.boundaries[n] = d
        self.labels = labels or {}
        self.relations: dict[int, IntMatrix] = {}
        for n, R in (relations or {}).items():
            if R.modulus != modulus or R.rows != self.rank(n):
                raise ValueError(f"relations in degree {n} do not fit the module")
            if not R.is_zero():
                self.relations[n] = R
        if validate:
            self.validate()

    def validate(self) -> None:
        for n in sorted(self.boundaries):
            if n + 1 in self.boundaries:
                prod = self.boundaries[n] @ self.boundaries[n + 1]
                if not prod.is_zero() and not self._in_relations(n - 1, prod):
                    i, j, v = prod.entries[0]
                    raise ContractError(f"d_{n} d_{n + 1} != 0", (n, i, j, v))
        for n, R in self.relations.items():
            image = self.d(n) @ R
            if not self._in_relations(n - 1, image):
                raise ContractError(f"relations in degree {n} are not a subcomplex", (n,))

    @property
    def is_free(self) -> bool:
        return not self.relations

    def rel(self, n: int) -> IntMatrix:
        got = self.relations.get(n)
        if got is not None:
            return got
        return _zero(self.rank(n), 0, self.modulus)

    def _in_relations(self, n: int, M: IntMatrix) -> bool:
        if M.is_zero():
            return True
        R = self.relations.get(n)
        return R is not None and image_contains(R, _to_base(M, self.modulus))

    def cycles(self, n: int) -> IntMatrix:
        """Generators of ``{x : d x in Rel_{n-1}}`` (plain cycles when free)."""
        d = self.d(n)
        if self.rank(n) == 0:
            return _zero(0, 0, self.modulus)
        R = self.relations.get(n - 1)
        if R is not None:
            d = d.hstack(R)
        if d.rows == 0:
            return IntMatrix.identity(self.rank(n), self.modulus)
        K = kernel_generators(d)
        if R is not None:
            K = K.submatrix(list(range(self.rank(n))), list(range(K.cols)))
        return K

    def boundary_span(self, n: int) -> IntMatrix:
        """Generators of ``d C_{n+1} + Rel_n``."""
        B = self.d(n + 1)
        R = self.relations.get(n)
        return B if R is None else B.hstack(R)

    def rank(self, n: int) -> int:
        return self.ranks.get(n, 0)

    def d(self, n: int) -> IntMatrix:
        got = self.boundaries.get(n)
        if got is not None:
            return got
        return _zero(self.rank(n - 1), self.rank(n), self.modulus)

    def degrees(self) -> list[int]:
        return sorted(self.ranks)

    @property
    def top_degree(self) -> int:
        return max(self.ranks, default=-1)

    def homology(self, n: int) -> FGAbelianGroup:
        if not self.relations:
            return homology_at(self.d(n), self.d(n + 1), check=False)
        if self.rank(n) == 0:
            return FGAbelianGroup()
        return subquotient(self.cycles(n), self.boundary_span(n))

    def homology_range(self, lo: int, hi: int) -> dict[int, FGAbelianGroup]:
        return {n: self.homology(n) for n in range(lo, hi + 1)}

    def truncate(self, cap: int) -> "ChainComplex":
        """Keep degrees <= cap (the homology below ``cap`` is unchanged)."""
        ranks = {n: r for n, r in self.ranks.items() if n <= cap}
        bds = {n: d for n, d in self.boundaries.items() if n <= cap}
        return ChainComplex(self.modulus, ranks, bds,
                            {n: l for n, l in self.labels.items() if n <= cap}, validate=False,
                            relations={n: R for n, R in self.relations.items() if n <= cap})

    def shift(self, k: int) -> "ChainComplex":
        """``C[k]_n = C_{n-k}`` with differential ``(-1)^k d``."""
        sign = -1 if k % 2 else 1
        return ChainComplex(self.modulus, {n + k: r for n, r in self.ranks.items()},
                            {n + k: d.scale(sign) for n, d in self.boundaries.items()},
                            {n + k: l for n, l in self.labels.items()}, validate=False,
                            relations={n + k: R for n, R in self.relations.items()})

    def reduce_mod(self, m: int) -> "ChainComplex":
        return ChainComplex(m, self.ranks, {n: d.reduce_mod(m) for n, d in self.boundaries.items()},
                            self.labels, validate=False,
                            relations={n: R.reduce_mod(m) for n, R in self.relations.items()})

    def direct_sum(self, other: "ChainComplex") -> "ChainComplex":
        if other.modulus != self.modulus:
            raise ValueError("direct sum needs a common base")
        degs = set(self.ranks) | set(other.ranks)
        ranks = {n: self.rank(n) + other.rank(n) for n in degs}
        bds = {n: IntMatrix.block_diag([self.d(n), other.d(n)]) for n in degs}
        rels = {n: IntMatrix.block_diag([self.rel(n), other.rel(n)])
                for n in set(self.relations) | set(other.relations)}
        return ChainComplex(self.modulus, ranks, bds, validate=False, relations=rels)

    def identity_map(self) -> "ChainMap":
        return ChainMap(self, self, {n: IntMatrix.identity(r, self.modulus)
                                     for n, r in self.ranks.items()})

    def __repr__(self) -> str:
        body = ", ".join(f"{n}:{r}" for n, r in sorted(self.ranks.items()))
        rel = ", presented" if self.relations else ""
        return (f"ChainComplex(base={'Z' if not self.modulus else f'Z/{self.modulus}'}, "
                f"ranks={{{body}}}{rel})")


def complex_from_boundaries(modulus: int, mats: dict[int, IntMatrix]) -> ChainComplex:
    """Build a complex whose ranks are read off the given boundary shapes."""
    ranks: dict[int, int] = {}
    for n, d in mats.items():
        ranks[n] = d.cols
        ranks[n - 1] = d.rows
    return ChainComplex(modulus, ranks, mats)


class ChainMap:
    """Degreewise matrices ``f_n: S_n -> T_n`` commuting with boundaries.

    The target base must divide the source base (or the source is over Z);
    that is what lets reduction maps ``A/p^{i+1} -> A/p^i`` be chain maps.
    """

    def __init__(self, source: ChainComplex, target: ChainComplex,
                 components: dict[int, IntMatrix], validate: bool = True):
        m = target.modulus
        if source.modulus and m and source.modulus % m:
            raise ValueError("chain maps need the target base to be a quotient of the source base")
        if m == 0 and source.modulus:
            raise ValueError("cannot map a torsion complex into a complex over Z")
        self.source, self.target, self.modulus = source, target, m
        self.components: dict[int, IntMatrix] = {}
        for n, f in components.items():
            f = _to_base(f, m)
            if f.shape != (target.rank(n), source.rank(n)):
                raise ValueError(f"component {n} has shape {f.shape}, expected "
                                 f"{(target.rank(n), source.rank(n))}")
            if not f.is_zero():
                self.components[n] = f
        if validate:
            self.validate()

    def __getitem__(self, n: int) -> IntMatrix:
        got = self.components.get(n)
        if got is not None:
            return got
        return _zero(self.target.rank(n), self.source.rank(n), self.modulus)

    def degrees(self) -> list[int]:
        return sorted(set(self.source.ranks) | set(self.target.ranks))

    def validate(self) -> None:
        m = self.modulus
        for n in self.degrees():
            left = self.target.d(n) @ self[n]
            right = self[n - 1] @ _to_base(self.source.d(n), m)
            diff = left - right
            if not diff.is_zero() and not self.target._in_relations(n - 1, diff):
                i, j, v = diff.entries[0]
                raise ContractError(f"chain map fails to commute in degree {n}", (n, i, j, v))
            if n in self.source.relations:
                moved = self[n] @ _to_base(self.source.relations[n], m)
                if not self.target._in_relations(n, moved):
                    raise ContractError(f"chain map does not preserve relations in degree {n}", (n,))

    def compose(self, other: "ChainMap") -> "ChainMap":
        """``self ∘ other``."""
        m = self.modulus
        comps = {n: self[n] @ _to_base(other[n], m) for n in other.degrees()}
        return ChainMap(other.source, self.target, comps, validate=False)

    def scale(self, c: int) -> "ChainMap":
        return ChainMap(self.source, self.target,
                        {n: f.scale(c) for n, f in self.components.items()}, validate=False)


# ---------------------------------------------------------------- bicomplexes

class Bicomplex:
    """First-quadrant bicomplex with commuting differentials.

    ``horizontal[(m, n)]`` maps slot (m, n) to (m-1, n); ``vertical[(m, n)]``
    maps (m, n) to (m, n-1).  The total differential on slot (m, n) is
    ``d_vert + (-1)^n d_horiz``, which squares to zero exactly when the two
    differentials commute.
    """

    def __init__(self, modulus: int, ranks: dict[tuple[int, int], int],
                 horizontal: dict[tuple[int, int], IntMatrix],
                 vertical: dict[tuple[int, int], IntMatrix], validate: bool = True):
        self.modulus = modulus
        self.ranks = {k: r for k, r in ranks.items() if r}
        self.horizontal = dict(horizontal)
        self.vertical = dict(vertical)
        if validate:
            self.validate()

    def rank(self, m: int, n: int) -> int:
        return self.ranks.get((m, n), 0)

    def dh(self, m: int, n: int) -> IntMatrix:
        got = self.horizontal.get((m, n))
        return got if got is not None else _zero(self.rank(m - 1, n), self.rank(m, n), self.modulus)

    def dv(self, m: int, n: int) -> IntMatrix:
        got = self.vertical.get((m, n))
        return got if got is not None else _zero(self.rank(m, n - 1), self.rank(m, n), self.modulus)

    def validate(self) -> None:
        for (m, n) in sorted(self.ranks):
            for name, mat, shape in (("horizontal", self.dh(m, n), (self.rank(m - 1, n), self.rank(m, n))),
                                     ("vertical", self.dv(m, n), (self.rank(m, n - 1), self.rank(m, n)))):
                if mat.shape != shape:
                    raise ValueError(f"{name} map at {(m, n)} has shape {mat.shape}, expected {shape}")
            for label, prod in (("vertical^2", self.dv(m, n - 1) @ self.dv(m, n)),
                                ("horizontal^2", self.dh(m - 1, n) @ self.dh(m, n))):
                if not prod.is_zero():
                    i, j, v = prod.entries[0]
                    raise ContractError(f"{label} != 0 at {(m, n)}", (m, n, i, j, v))
            comm = self.dv(m - 1, n) @ self.dh(m, n) - self.dh(m, n - 1) @ self.dv(m, n)
            if not comm.is_zero():
                i, j, v = comm.entries[0]
                raise ContractError(f"differentials do not commute at {(m, n)}; "
                                    "the total complex inserts the sign itself", (m, n, i, j, v))


def total_complex(B: Bicomplex, degree_cap: int) -> ChainComplex:
    """Total complex in degrees 0..degree_cap; slot blocks ordered by column.

    Labels of degree d are ``(m, n, i)`` for basis vector i of slot (m, n).
    """
    if degree_cap < 0:
        raise ValueError("degree cap must be non-negative")
    mod = B.modulus
    offsets: dict[int, dict[int, int]] = {}
    ranks: dict[int, int] = {}
    labels: dict[int, list] = {}
    for d in range(degree_cap + 1):
        off, pos = {}, 0
        lab = []
        for m in range(d + 1):
            r = B.rank(m, d - m)
            if r:
                off[m] = pos
                pos += r
                lab.extend((m, d - m, i) for i in range(r))
        offsets[d], ranks[d], labels[d] = off, pos, lab
    bds = {}
    for d in range(1, degree_cap + 1):
        data = {}
        for m, c0 in offsets[d].items():
            n = d - m
            if n - 1 >= 0 and m in offsets[d - 1]:
                r0 = offsets[d - 1][m]
                for (i, j), v in B.dv(m, n).items():
                    data[(r0 + i, c0 + j)] = v
            if m - 1 in offsets[d - 1]:
                r0 = offsets[d - 1][m - 1]
                sign = -1 if n % 2 else 1
                for (i, j), v in B.dh(m, n).items():
                    data[(r0 + i, c0 + j)] = data.get((r0 + i, c0 + j), 0) + sign * v
        bds[d] = IntMatrix(ranks[d - 1], ranks[d], data, mod)
    return ChainComplex(mod, ranks, bds, labels)


def cone_bicomplex(f: ChainMap) -> Bicomplex:
    """Two-column bicomplex ``source -> target`` (columns 1 and 0)."""
    S, T = f.source, f.target
    if S.modulus != T.modulus:
        raise ValueError("cone needs a common base")
    ranks, hor, ver = {}, {}, {}
    for n in set(S.ranks) | set(T.ranks):
        if n < 0:
            raise ValueError("cone bicomplex expects non-negative degrees")
        ranks[(0, n)] = T.rank(n)
        ranks[(1, n)] = S.rank(n)
        ver[(0, n)] = T.d(n)
        ver[(1, n)] = S.d(n)
        hor[(1, n)] = f[n]
    return Bicomplex(S.modulus, ranks, hor, ver)


# ---------------------------------------------------------------- filtrations

class FilteredComplex:
    """Increasing, exhaustive filtration by sub-bases.

    ``levels[a][n]`` lists the basis indices of ``C_n`` in ``F_a``; levels
    beyond the largest key are the whole complex and ``F_{-1} = 0``.
    """

    def __init__(self, ambient: ChainComplex, levels: dict[int, dict[int, Iterable[int]]]):
        self.ambient = ambient
        self.levels = {a: {n: tuple(sorted(set(ix))) for n, ix in lv.items()}
                       for a, lv in levels.items()}
        self.top = max(self.levels, default=-1)
        self.validate()

    def selection(self, a: int, n: int) -> tuple[int, ...]:
        if a < 0:
            return ()
        if a > self.top:
            return tuple(range(self.ambient.rank(n)))
        return self.levels[a].get(n, ())

    def validate(self) -> None:
        C = self.ambient
        for a in sorted(self.levels):
            for n in C.degrees():
                sel = set(self.selection(a, n))
                if not sel <= set(self.selection(a + 1, n)):
                    raise ContractError("filtration is not increasing", (a, n))
                below = set(self.selection(a, n - 1))
                for (i, j), v in C.d(n).items():
                    if j in sel and i not in below:
                        raise ContractError("filtration level is not a subcomplex", (a, n, i, j))

    def subcomplex(self, a: int) -> ChainComplex:
        C = self.ambient
        sel = {n: self.selection(a, n) for n in C.degrees()}
        ranks = {n: len(s) for n, s in sel.items()}
        bds = {n: C.d(n).submatrix(sel.get(n - 1, ()), s) for n, s in sel.items()}
        return ChainComplex(C.modulus, ranks, bds, validate=False)

    def graded_piece(self, a: int) -> ChainComplex:
        """``F_a / F_{a-1}`` on the complementary sub-basis."""
        C = self.ambient
        sel = {}
        for n in C.degrees():
            lower = set(self.selection(a - 1, n))
            sel[n] = tuple(i for i in self.selection(a, n) if i not in lower)
        ranks = {n: len(s) for n, s in sel.items()}
        bds = {n: C.d(n).submatrix(sel.get(n - 1, ()), s) for n, s in sel.items()}
        return ChainComplex(C.modulus, ranks, bds, validate=True)


def decalage(F: FilteredComplex, a: int) -> ChainComplex:
    """Degree n is ``{c in F_{a+n} C_n : d c in F_{a+n-1} C_{n-1}}``.

    Returned with an ``embedding`` attribute: degreewise inclusion matrices
    into the ambient complex (a chain map).  Needs base Z or a prime field so
    that the kernels are free.
    """
    if a < 0:
        raise ValueError("décalage index must be non-negative")
    C = F.ambient
    mod = C.modulus
    if not C.is_free:
        raise ValueError("décalage needs a complex of free modules")
    if mod and (prime_power(mod) is None or prime_power(mod)[1] != 1):
        raise ValueError("décalage is implemented over Z and prime fields")
    emb: dict[int, IntMatrix] = {}
    for n in C.degrees():
        S = F.selection(a + n, n)
        allowed = set(F.selection(a + n - 1, n - 1))
        bad_rows = [i for i in range(C.rank(n - 1)) if i not in allowed]
        if not S:
            emb[n] = _zero(C.rank(n), 0, mod)
            continue
        M = C.d(n).submatrix(bad_rows, S)
        K = kernel_generators(M) if M.rows else IntMatrix.identity(len(S), mod)
        # lift kernel coordinates on S to the ambient basis
        data = {(S[i], j): v for (i, j), v in K.items()}
        emb[n] = IntMatrix(C.rank(n), K.cols, data, mod)
    ranks = {n: E.cols for n, E in emb.items()}
    bds = {}
    for n, E in emb.items():
        if n - 1 not in emb or E.cols == 0 or emb[n - 1].cols == 0:
            continue
        image = C.d(n) @ E
        X = solve(emb[n - 1], image)
        if X is None:
            raise ContractError("décalage boundary leaves the previous component", (n,))
        bds[n] = X
    out = ChainComplex(mod, ranks, bds)
    out.embedding = ChainMap(out, C, emb)
    return out


def subcomplex_homology(C: ChainComplex, generators: dict[int, IntMatrix], n: int) -> FGAbelianGroup:
    """Homology in degree n of the subcomplex spanned by ``generators[k]`` in ``C_k``.

    The spans must form a subcomplex; this is not re-checked.  Over a prime
    field only ranks are computed, which keeps large sparse cases cheap.
    """
    mod = C.modulus
    G = generators.get(n, _zero(C.rank(n), 0, mod))
    G_next = generators.get(n + 1, _zero(C.rank(n + 1), 0, mod))
    if G.cols == 0:
        return FGAbelianGroup()
    pp = prime_power(mod) if mod else None
    d_G = C.d(n) @ G
    boundaries = C.d(n + 1) @ G_next
    if pp is not None and pp[1] == 1:
        dim = rank(G) - rank(d_G) - (rank(boundaries) if boundaries.cols else 0)
        return FGAbelianGroup.from_orders(0, [mod] * dim)
    if d_G.rows == 0:
        cycles = G
    else:
        cycles = G @ kernel_generators(d_G)
    return subquotient(cycles, boundaries)


# ---------------------------------------------------------------- tensor products

def tensor_complexes(C: ChainComplex, D: ChainComplex, degree_cap: int) -> ChainComplex:
    """``C ⊗ D`` with ``d(x⊗y) = dx⊗y + (-1)^{|x|} x⊗dy``.

    Degree n basis: blocks ``C_i ⊗ D_{n-i}`` by increasing i, each ordered
    lexicographically; labels are ``(i, a, b)``.
    """
    if C.modulus != D.modulus:
        raise ValueError(f"base mismatch in tensor product: {C.modulus} vs {D.modulus}")
    if not (C.is_free and D.is_free):
        raise ValueError("tensor products are implemented for free complexes")
    mod = C.modulus
    lo = min(C.degrees(), default=0) + min(D.degrees(), default=0)
    offsets: dict[int, dict[int, int]] = {}
    ranks: dict[int, int] = {}
    labels: dict[int, list] = {}
    for n in range(lo, degree_cap + 1):
        off, pos, lab = {}, 0, []
        for i in C.degrees():
            j = n - i
            rc, rd = C.rank(i), D.rank(j)
            if rc and rd:
                off[i] = pos
                pos += rc * rd
                lab.extend((i, a, b) for a in range(rc) for b in range(rd))
        offsets[n], ranks[n], labels[n] = off, pos, lab
    bds = {}
    for n in range(lo + 1, degree_cap + 1):
        data: dict[tuple[int, int], int] = {}
        for i, c0 in offsets[n].items():
            j = n - i
            rd = D.rank(j)
            if i - 1 in offsets[n - 1]:
                r0 = offsets[n - 1][i - 1]
                for (x2, x1), v in C.d(i).items():
                    for b in range(rd):
                        key = (r0 + x2 * rd + b, c0 + x1 * rd + b)
                        data[key] = data.get(key, 0) + v
            if i in offsets[n - 1]:
                r0 = offsets[n - 1][i]
                rd2 = D.rank(j - 1)
                sign = -1 if i % 2 else 1
                for (y2, y1), v in D.d(j).items():
                    for a in range(C.rank(i)):
                        key = (r0 + a * rd2 + y2, c0 + a * rd + y1)
                        data[key] = data.get(key, 0) + sign * v
        bds[n] = IntMatrix(ranks[n - 1], ranks[n], data, mod)
    out = ChainComplex(mod, ranks, bds, labels)
    out.tensor_offsets = offsets
    return out


def tensor_maps(f: ChainMap, g: ChainMap, source: ChainComplex, target: ChainComplex,
                degree_cap: int, validate: bool = True) -> ChainMap:
    """``f ⊗ g`` between tensor complexes built by :func:`tensor_complexes`."""
    mod = target.modulus
    comps = {}
    for n in range(degree_cap + 1):
        data: dict[tuple[int, int], int] = {}
        for i, c0 in source.tensor_offsets.get(n, {}).items():
            if i not in target.tensor_offsets.get(n, {}):
                continue
            r0 = target.tensor_offsets[n][i]
            j = n - i
            td = g.source.rank(j)
            tdd = g.target.rank(j)
            gmat = g[j]
            gitems = list(gmat.items())
            for (x2, x1), v in f[i].items():
                for (y2, y1), w in gitems:
                    key = (r0 + x2 * tdd + y2, c0 + x1 * td + y1)
                    data[key] = data.get(key, 0) + v * w
        comps[n] = IntMatrix(target.rank(n), source.rank(n), data, mod)
    return ChainMap(source, target, comps, validate=validate)


# ---------------------------------------------------------------- towers

class Tower:
    """``levels[0] <- levels[1] <- ...``; ``transitions[i]`` maps level i+1 to level i.

    Level indices here are 0-based; level 0 is the coarsest (i = 1).
    """

    def __init__(self, levels: Sequence[ChainComplex], transitions: Sequence[ChainMap]):
        if len(transitions) != len(levels) - 1:
            raise ValueError("a tower of depth N needs N-1 transitions")
        for i, t in enumerate(transitions):
            if t.source is not levels[i + 1] or t.target is not levels[i]:
                raise ValueError(f"transition {i} does not connect levels {i + 1} -> {i}")
        self.levels = list(levels)
        self.transitions = list(transitions)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def composite(self, j: int, i: int) -> ChainMap:
        """Transition composite from level j down to level i (j >= i)."""
        if j < i:
            raise ValueError("composite goes from a finer level to a coarser one")
        f = self.levels[i].identity_map()
        for k in range(i, j):
            f = f.compose(self.transitions[k])
        return f

    @classmethod
    def constant(cls, C: ChainComplex, depth: int) -> "Tower":
        levels = [C] * depth
        return cls(levels, [C.identity_map() for _ in range(depth - 1)])


class TowerMap:
    """Levelwise chain maps commuting exactly with the transitions."""

    def __init__(self, source: Tower, target: Tower, components: Sequence[ChainMap],
                 validate: bool = True):
        if source.depth != target.depth or len(components) != source.depth:
            raise ValueError("tower maps need equal depths and one component per level")
        for i, f in enumerate(components):
            if f.source is not source.levels[i] or f.target is not target.levels[i]:
                raise ValueError(f"component {i} does not connect matching levels")
        self.source, self.target, self.components = source, target, list(components)
        if validate:
            self.validate()

    def validate(self) -> None:
        for i in range(self.source.depth - 1):
            lhs = self.target.transitions[i].compose(self.components[i + 1])
            rhs = self.components[i].compose(self.source.transitions[i])
            for n in lhs.degrees():
                diff = lhs[n] - rhs[n]
                if not diff.is_zero():
                    r, c, v = diff.entries[0]
                    raise ContractError("transition square does not commute", (i, n, r, c, v))

    @classmethod
    def zero_into(cls, T: Tower) -> "TowerMap":
        zero_levels = [ChainComplex(L.modulus, {}) for L in T.levels]
        zt = Tower(zero_levels, [ChainMap(zero_levels[i + 1], zero_levels[i], {})
                                 for i in range(T.depth - 1)])
        return cls(zt, T, [ChainMap(zero_levels[i], T.levels[i], {}) for i in range(T.depth)])


@dataclass
class IsogenyVerdict:
    """Certificate of a bounded search.

    ``status`` is one of ``isogeny``, ``pro_zero``, ``bounded_torsion`` and
    ``not_detected``.  Positive verdicts keep a closure that re-runs the
    exact check for the witness.
    """

    status: str
    witness: int | None = None
    depth: int | None = None
    bound: int | None = None
    description: str = ""
    per_degree: dict[int, int | None] = field(default_factory=dict)
    lag: int | None = None
    _recheck: Callable[[], bool] | None = field(default=None, repr=False, compare=False)

    @property
    def positive(self) -> bool:
        return self.status != "not_detected"

    def reverify(self) -> bool:
        return bool(self._recheck and self._recheck())

    def __str__(self) -> str:
        if self.status in ("isogeny", "bounded_torsion"):
            return f"{self.status}({self.witness})"
        if self.status == "not_detected":
            return f"not_detected(depth={self.depth}, bound={self.bound})"
        return self.status

    def to_dict(self) -> dict:
        return {"status": self.status, "witness": self.witness, "depth": self.depth,
                "bound": self.bound, "lag": self.lag, "description": self.description,
                "per_degree": {str(k): v for k, v in self.per_degree.items()}}


class _LevelData:
    """Cycle generators and boundary columns of one complex in one degree."""

    def __init__(self, C: ChainComplex, n: int):
        self.C = C
        self.Z = C.cycles(n)
        self.B = C.boundary_span(n)


def _contained(S: IntMatrix, T: IntMatrix) -> bool:
    if T.cols == 0 or T.is_zero():
        return True
    if S.cols == 0:
        return False
    return image_contains(S, T)


class _HomologyCache:
    def __init__(self):
        self._store: dict[tuple[int, int], _LevelData] = {}

    def get(self, C: ChainComplex, n: int) -> _LevelData:
        key = (id(C), n)
        if key not in self._store:
            self._store[key] = _LevelData(C, n)
        return self._store[key]


def _composite_kills(T: Tower, j: int, i: int, n: int, e: int, cache: _HomologyCache) -> bool:
    """Whether ``e`` times the composite ``H_n(X_j) -> H_n(X_i)`` vanishes."""
    src, dst = cache.get(T.levels[j], n), cache.get(T.levels[i], n)
    if src.Z.cols == 0:
        return True
    f = T.composite(j, i)[n]
    img = (f @ _to_base(src.Z, f.modulus)).scale(e)
    return _contained(dst.B, img)


def default_pro_zero_levels(depth: int) -> range:
    """Levels (0-based) certified by :func:`pro_zero_verdict`: the lower half.

    A pro-zero tower may need lags that grow with the level (``Z/p^i`` under
    multiplication by p needs lag i), so only levels whose doubling still
    fits in the available depth are examined.
    """
    return range(max(1, depth // 2))


def pro_zero_verdict(T: Tower, n: int, levels: Iterable[int] | None = None) -> IsogenyVerdict:
    """Pro-zero if each examined level receives a zero composite on H_n."""
    if T.depth < 2:
        raise ValueError("pro-zero detection needs depth >= 2")
    levels = list(default_pro_zero_levels(T.depth) if levels is None else levels)
    cache = _HomologyCache()
    lag = 0
    for i in levels:
        found = None
        for j in range(i, T.depth):
            if _composite_kills(T, j, i, n, 1, cache):
                found = j
                break
        if found is None:
            return IsogenyVerdict("not_detected", depth=T.depth,
                                  description=f"H_{n} at level {i + 1} survives every available composite")
        lag = max(lag, found - i)

    def recheck(lag=lag):
        c = _HomologyCache()
        return all(any(_composite_kills(T, j, i, n, 1, c) for j in range(i, min(i + lag, T.depth - 1) + 1))
                   for i in levels)

    return IsogenyVerdict("pro_zero", witness=lag, depth=T.depth, lag=lag,
                          description=f"H_{n} dies after at most {lag} transitions "
                                      f"on levels {[i + 1 for i in levels]}",
                          _recheck=recheck)


def bounded_torsion_verdict(T: Tower, n: int, bound: int) -> IsogenyVerdict:
    """Least e <= bound killing the pro-group H_n(T) over the available depth."""
    cache = _HomologyCache()
    for e in _candidates(bound, _tower_primes([T])):
        if all(any(_composite_kills(T, j, i, n, e, cache) for j in range(i, T.depth))
               for i in range(T.depth - 1)):
            return IsogenyVerdict("bounded_torsion", witness=e, depth=T.depth, bound=bound,
                                  description=f"H_{n} pro-group killed by {e}",
                                  _recheck=lambda e=e: all(
                                      any(_composite_kills(T, j, i, n, e, _HomologyCache())
                                          for j in range(i, T.depth))
                                      for i in range(T.depth - 1)))
    return IsogenyVerdict("not_detected", depth=T.depth, bound=bound)


def _tower_primes(towers: Iterable[Tower]) -> list[int]:
    primes: set[int] = set()
    for T in towers:
        for L in T.levels:
            if L.modulus:
                primes.update(factorize(L.modulus))
    return sorted(primes)


def _candidates(bound: int, primes: Sequence[int]) -> list[int]:
    """Multipliers to try: 1, prime powers (primes in order), then factorials."""
    out: list[int] = []
    seen: set[int] = set()

    def push(x):
        if x <= bound and x not in seen:
            seen.add(x)
            out.append(x)

    push(1)
    for p in primes:
        q = p
        while q <= bound:
            push(q)
            q *= p
    k, f = 2, 2
    while f <= bound:
        push(f)
        k += 1
        f *= k
    return out


def _map_checks(f: TowerMap, n: int, e: int, cache: _HomologyCache,
                levels: Sequence[int]) -> tuple[bool, int]:
    """Whether pro-kernel and pro-cokernel of H_n(f) are killed by e; returns the lag used."""
    depth = f.source.depth
    lag = 0
    for i in levels:
        ok = False
        for j in range(i, depth):
            if _coker_killed(f, n, e, i, j, cache) and _ker_killed(f, n, e, i, j, cache):
                lag = max(lag, j - i)
                ok = True
                break
        if not ok:
            return False, lag
    return True, lag


def _coker_killed(f: TowerMap, n: int, e: int, i: int, j: int, cache: _HomologyCache) -> bool:
    Y = f.target
    yj, yi = cache.get(Y.levels[j], n), cache.get(Y.levels[i], n)
    if yj.Z.cols == 0:
        return True
    m = Y.levels[i].modulus
    img = (Y.composite(j, i)[n] @ _to_base(yj.Z, m)).scale(e)
    xi = cache.get(f.source.levels[i], n)
    parts = []
    if xi.Z.cols:
        parts.append(f.components[i][n] @ _to_base(xi.Z, m))
    if yi.B.cols:
        parts.append(yi.B)
    if not parts:
        return img.is_zero()
    S = parts[0]
    for P in parts[1:]:
        S = S.hstack(P)
    return _contained(S, img)


def _ker_killed(f: TowerMap, n: int, e: int, i: int, j: int, cache: _HomologyCache) -> bool:
    X, Y = f.source, f.target
    xj = cache.get(X.levels[j], n)
    if xj.Z.cols == 0:
        return True
    yj = cache.get(Y.levels[j], n)
    my = Y.levels[j].modulus
    fz = f.components[j][n] @ _to_base(xj.Z, my)
    # coefficients c with f(Z c) in B: kernel of [f Z | -B] over the target base
    block = fz if yj.B.cols == 0 else fz.hstack(yj.B.scale(-1))
    if block.rows == 0:
        coeffs = IntMatrix.identity(xj.Z.cols, my)
    else:
        K = kernel_generators(block)
        coeffs = K.submatrix(list(range(xj.Z.cols)), list(range(K.cols)))
    if coeffs.cols == 0:
        return True
    mx = X.levels[j].modulus
    if mx != my:
        # lift the solutions found modulo the target base; adding my * e_k
        # covers every other lift
        lifted = IntMatrix(coeffs.rows, coeffs.cols, dict(coeffs.items()), mx)
        coeffs = lifted.hstack(IntMatrix.identity(coeffs.rows, mx).scale(my))
    cyc = xj.Z @ coeffs if xj.Z.cols else xj.Z
    xi = cache.get(X.levels[i], n)
    img = (X.composite(j, i)[n] @ _to_base(cyc, X.levels[i].modulus)).scale(e)
    return _contained(xi.B, img)


def quasi_isogeny_verdict(f: TowerMap, max_degree: int, bound: int, min_degree: int = 0,
                          primes: Sequence[int] | None = None, per_degree: bool = False,
                          levels: Iterable[int] | None = None) -> IsogenyVerdict:
    """Search one multiplier e <= bound killing kernel and cokernel of H_n(f).

    The pro-kernel and pro-cokernel are tested at every level below the top
    unless ``levels`` (0-based) says otherwise; a level may use later
    transitions to die.  Candidates are tried as
    1, prime powers, then factorials.  With ``per_degree`` the least
    multiplier of every single degree is reported as well.
    """
    primes = list(primes) if primes is not None else _tower_primes([f.source, f.target])
    depth = f.source.depth
    levels = list(range(max(1, depth - 1)) if levels is None else levels)
    cands = _candidates(bound, primes)
    cache = _HomologyCache()
    degrees = range(min_degree, max_degree + 1)
    per: dict[int, int | None] = {}
    if per_degree:
        for n in degrees:
            per[n] = next((e for e in cands if _map_checks(f, n, e, cache, levels)[0]), None)
    for e in cands:
        results = [_map_checks(f, n, e, cache, levels) for n in degrees]
        if all(ok for ok, _ in results):
            lag = max((lg for _, lg in results), default=0)

            def recheck(e=e):
                c = _HomologyCache()
                return all(_map_checks(f, n, e, c, levels)[0] for n in degrees)

            return IsogenyVerdict("isogeny", witness=e, depth=depth, bound=bound,
                                  lag=lag, per_degree=per,
                                  description=f"kernels and cokernels of H_n, n in "
                                              f"[{min_degree},{max_degree}], killed by {e}",
                                  _recheck=recheck)
    return IsogenyVerdict("not_detected", depth=depth, bound=bound, per_degree=per)
