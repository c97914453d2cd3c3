"""Finite rings, Lie rings and finite groups given by structure constants.

Rings are free modules of finite rank over ``Z/m`` (``m = 0`` means Z) with a
bilinear multiplication tensor.  Everything is validated exhaustively on the
basis when constructed.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from collections.abc import Callable, Hashable, Iterable, Iterator, Mapping, Sequence
from typing import Any

from .linalg import ContractError, IntMatrix, ResourceError, image_contains, prime_power

Vector = tuple[int, ...]

DEFAULT_GROUP_CAP = 10 ** 4


def _tensor_from(entries, rank: int, modulus: int, what: str) -> dict[tuple[int, int], tuple[tuple[int, int], ...]]:
    """Normalise ``[[i, j, k, c], ...]`` or ``{(i, j): {k: c}}`` to a sparse tensor."""
    acc: dict[tuple[int, int], dict[int, int]] = {}
    if isinstance(entries, Mapping):
        items = ((i, j, k, c) for (i, j), row in entries.items() for k, c in row.items())
    else:
        items = entries
    for item in items:
        if len(item) != 4:
            raise ValueError(f"{what} entries are [i, j, k, coeff]")
        i, j, k, c = (int(t) for t in item)
        if not all(0 <= t < rank for t in (i, j, k)):
            raise ValueError(f"{what} index out of range: {(i, j, k)}")
        slot = acc.setdefault((i, j), {})
        slot[k] = slot.get(k, 0) + c
    out = {}
    for key, row in acc.items():
        terms = tuple(sorted((k, c % modulus if modulus else c) for k, c in row.items()
                             if (c % modulus if modulus else c)))
        if terms:
            out[key] = terms
    return out


def _reduce(v: Iterable[int], modulus: int) -> Vector:
    return tuple(x % modulus for x in v) if modulus else tuple(v)


def _base_to_json(modulus: int, p: int | None, precision: int | None) -> dict:
    if p is not None:
        return {"p": p, "precision": precision}
    return {"m": modulus}


def _parse_base(base: Mapping) -> tuple[int, int | None, int | None]:
    keys = set(base)
    if keys == {"p", "precision"}:
        p, n = int(base["p"]), int(base["precision"])
        pp = prime_power(p)
        if pp is None or pp[1] != 1 or n < 1:
            raise ValueError(f"bad p-adic base {dict(base)}")
        return p ** n, p, n
    if keys == {"m"}:
        m = int(base["m"])
        if m < 0 or m == 1:
            raise ValueError(f"bad modulus {m}")
        return m, None, None
    raise ValueError(f"base must be {{'p','precision'}} or {{'m'}}, got {sorted(keys)}")


def _check_keys(obj: Mapping, required: set[str], optional: set[str], what: str) -> None:
    keys = set(obj)
    missing = required - keys
    extra = keys - required - optional
    if missing:
        raise ValueError(f"{what}: missing fields {sorted(missing)}")
    if extra:
        raise ValueError(f"{what}: unknown fields {sorted(extra)}")


class FinRing:
    """Associative unital ring, free of rank ``rank`` over ``Z/modulus``.

    ``mult`` lists the structure constants ``e_i e_j = sum_k c e_k`` as
    ``[i, j, k, c]`` entries.  An optional two-sided ideal is given by
    generating vectors.  ``p``/``precision`` mark a truncated p-adic base.
    """

    def __init__(self, modulus: int, rank: int, mult, unit: Sequence[int],
                 ideal: Sequence[Sequence[int]] | None = None, labels: Sequence[str] | None = None,
                 p: int | None = None, precision: int | None = None, validate: bool = True):
        if rank < 1:
            raise ValueError("rings need rank >= 1")
        if len(unit) != rank:
            raise ValueError("unit has the wrong length")
        self.modulus = modulus
        self.rank = rank
        self.p, self.precision = p, precision
        self.tensor = _tensor_from(mult, rank, modulus, "mult")
        self.unit = _reduce(unit, modulus)
        self.ideal = tuple(_reduce(g, modulus) for g in (ideal or ()))
        if any(len(g) != rank for g in self.ideal):
            raise ValueError("ideal generator has the wrong length")
        self.labels = tuple(labels) if labels else tuple(f"e{i}" for i in range(rank))
        if validate:
            self.validate()

    # -- arithmetic
    def basis(self, i: int) -> Vector:
        return tuple(int(k == i) for k in range(self.rank))

    def zero(self) -> Vector:
        return (0,) * self.rank

    def one(self) -> Vector:
        return self.unit

    def add(self, x: Vector, y: Vector) -> Vector:
        return _reduce((a + b for a, b in zip(x, y)), self.modulus)

    def sub(self, x: Vector, y: Vector) -> Vector:
        return _reduce((a - b for a, b in zip(x, y)), self.modulus)

    def scale(self, c: int, x: Vector) -> Vector:
        return _reduce((c * a for a in x), self.modulus)

    def multiply(self, x: Vector, y: Vector) -> Vector:
        out = [0] * self.rank
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
        return _reduce(out, self.modulus)

    def product(self, factors: Iterable[Vector]) -> Vector:
        acc = self.unit
        for f in factors:
            acc = self.multiply(acc, f)
        return acc

    def is_commutative(self) -> bool:
        return all(self.tensor.get((i, j)) == self.tensor.get((j, i))
                   for i in range(self.rank) for j in range(i))

    def elements(self) -> Iterator[Vector]:
        if not self.modulus:
            raise ValueError("a ring over Z has infinitely many elements")
        return itertools.product(range(self.modulus), repeat=self.rank)

    def size(self) -> int:
        if not self.modulus:
            raise ValueError("a ring over Z has infinitely many elements")
        return self.modulus ** self.rank

    def ideal_span(self) -> IntMatrix:
        cols = [{k: v for k, v in enumerate(g) if v} for g in self.ideal]
        return IntMatrix.from_columns(self.rank, cols, self.modulus)

    def ideal_elements(self) -> list[Vector]:
        """All elements of the designated ideal (enumerated from generators)."""
        seen = {self.zero()}
        frontier = [self.zero()]
        while frontier:
            x = frontier.pop()
            for g in self.ideal:
                y = self.add(x, g)
                if y not in seen:
                    seen.add(y)
                    frontier.append(y)
        return sorted(seen)

    def truncate(self, modulus: int) -> "FinRing":
        """Base change to ``Z/modulus`` for a divisor of the current modulus."""
        if self.modulus and self.modulus % modulus:
            raise ValueError(f"{modulus} does not divide {self.modulus}")
        prec = None
        if self.p is not None:
            prec = 0
            while self.p ** prec < modulus:
                prec += 1
            if self.p ** prec != modulus:
                raise ValueError("p-adic truncation needs a power of p")
        return FinRing(modulus, self.rank, self._entries(), self.unit, self.ideal, self.labels,
                       self.p, prec, validate=False)

    def level(self, i: int) -> "FinRing":
        """The truncation ``A / p^i``."""
        if self.p is None:
            raise ValueError("level() needs a p-adic base")
        if not 1 <= i <= self.precision:
            raise ValueError(f"level {i} outside 1..{self.precision}")
        return self.truncate(self.p ** i)

    def _entries(self) -> list[list[int]]:
        return [[i, j, k, c] for (i, j), terms in sorted(self.tensor.items()) for k, c in terms]

    # -- validation
    def validate(self) -> None:
        d = self.rank
        basis = [self.basis(i) for i in range(d)]
        for i in range(d):
            if self.multiply(self.unit, basis[i]) != basis[i]:
                raise ContractError("left unit law fails", ("unit", i))
            if self.multiply(basis[i], self.unit) != basis[i]:
                raise ContractError("right unit law fails", (i, "unit"))
        prods = {(i, j): self.multiply(basis[i], basis[j]) for i in range(d) for j in range(d)}
        for i, j, k in itertools.product(range(d), repeat=3):
            if self.multiply(prods[i, j], basis[k]) != self.multiply(basis[i], prods[j, k]):
                raise ContractError("associativity fails", (i, j, k))
        if self.ideal:
            span = self.ideal_span()
            for g in self.ideal:
                for i in range(d):
                    for v in (self.multiply(basis[i], g), self.multiply(g, basis[i])):
                        col = IntMatrix.from_columns(d, [{k: x for k, x in enumerate(v) if x}],
                                                     self.modulus)
                        if not image_contains(span, col):
                            raise ContractError("ideal is not closed under multiplication", (g, i))

    # -- io
    def to_dict(self) -> dict:
        out = {"base": _base_to_json(self.modulus, self.p, self.precision), "rank": self.rank,
               "unit": list(self.unit), "mult": self._entries()}
        if self.ideal:
            out["ideal"] = [list(g) for g in self.ideal]
        return out

    @classmethod
    def from_dict(cls, obj: Mapping) -> "FinRing":
        _check_keys(obj, {"base", "rank", "unit", "mult"}, {"ideal"}, "ring")
        modulus, p, n = _parse_base(obj["base"])
        rank = int(obj["rank"])
        if p is not None:
            return PadicAlgebra(p, n, rank, obj["mult"], obj["unit"], obj.get("ideal"))
        return cls(modulus, rank, obj["mult"], obj["unit"], obj.get("ideal"))

    def __eq__(self, other):
        return (isinstance(other, FinRing) and self.modulus == other.modulus
                and self.rank == other.rank and self.tensor == other.tensor
                and self.unit == other.unit)

    def __hash__(self):
        return hash((self.modulus, self.rank, tuple(sorted(self.tensor.items())), self.unit))

    def __repr__(self):
        base = f"Z/{self.modulus}" if self.modulus else "Z"
        return f"{type(self).__name__}(base={base}, rank={self.rank})"


class PadicAlgebra(FinRing):
    """``A / p^N`` for an algebra A free of rank d over Z_p, with an ideal I."""

    def __init__(self, p: int, precision: int, rank: int, mult, unit, ideal=None,
                 labels=None, validate: bool = True):
        pp = prime_power(p)
        if pp is None or pp[1] != 1:
            raise ValueError(f"{p} is not prime")
        if precision < 1:
            raise ValueError("precision must be >= 1")
        super().__init__(p ** precision, rank, mult, unit, ideal, labels, p, precision, validate)

    def truncate(self, modulus: int) -> "PadicAlgebra":
        base = FinRing.truncate(self, modulus)
        return PadicAlgebra(self.p, base.precision, self.rank, base._entries(), base.unit,
                            base.ideal, self.labels, validate=False)


def zmod_ring(m: int) -> FinRing:
    """``Z/m`` as a rank one ring."""
    return FinRing(m, 1, [[0, 0, 0, 1]], [1], labels=["1"])


def padic_integers(p: int, precision: int) -> PadicAlgebra:
    """``Z_p / p^N`` with the ideal ``(p)``."""
    return PadicAlgebra(p, precision, 1, [[0, 0, 0, 1]], [1], ideal=[[p]], labels=["1"])


def dual_numbers(m: int) -> FinRing:
    """``Z/m[eps] / (eps^2)``."""
    return FinRing(m, 2, [[0, 0, 0, 1], [0, 1, 1, 1], [1, 0, 1, 1]], [1, 0], labels=["1", "eps"])


def with_ideal(A: FinRing, ideal: Sequence[Sequence[int]]) -> FinRing:
    """Copy of ``A`` carrying the given two-sided ideal."""
    if isinstance(A, PadicAlgebra):
        return PadicAlgebra(A.p, A.precision, A.rank, A._entries(), A.unit, ideal, A.labels)
    return FinRing(A.modulus, A.rank, A._entries(), A.unit, ideal, A.labels)


def matrix_ring(A: FinRing, r: int) -> FinRing:
    """``Mat_r(A)``; basis ``E_ab * e_k`` at index ``(a * r + b) * d + k``."""
    if r < 1:
        raise ValueError("matrix size must be >= 1")
    d = A.rank
    mult = []
    for a, b, c in itertools.product(range(r), repeat=3):
        for (k, l), terms in A.tensor.items():
            for s, v in terms:
                mult.append([(a * r + b) * d + k, (b * r + c) * d + l, (a * r + c) * d + s, v])
    unit = [0] * (r * r * d)
    for a in range(r):
        for k, v in enumerate(A.unit):
            unit[(a * r + a) * d + k] = v
    ideal = []
    for a, b in itertools.product(range(r), repeat=2):
        for g in A.ideal:
            vec = [0] * (r * r * d)
            vec[(a * r + b) * d:(a * r + b + 1) * d] = g
            ideal.append(vec)
    labels = [f"E{a + 1}{b + 1}*{A.labels[k]}" for a in range(r) for b in range(r) for k in range(d)]
    if isinstance(A, PadicAlgebra):
        return PadicAlgebra(A.p, A.precision, r * r * d, mult, unit, ideal, labels, validate=False)
    return FinRing(A.modulus, r * r * d, mult, unit, ideal, labels, validate=False)


def matrix_entry(A: FinRing, r: int, M: Vector, a: int, b: int) -> Vector:
    d = A.rank
    return tuple(M[(a * r + b) * d:(a * r + b + 1) * d])


def matrix_from_entries(A: FinRing, r: int, entries: Mapping[tuple[int, int], Vector]) -> Vector:
    d = A.rank
    out = [0] * (r * r * d)
    for (a, b), v in entries.items():
        out[(a * r + b) * d:(a * r + b + 1) * d] = v
    return _reduce(out, A.modulus)


class LieRing:
    """Lie ring free of rank ``rank`` over ``Z/modulus`` (``0`` = Z).

    ``bracket`` lists ``[e_i, e_j] = sum_k c e_k`` as ``[i, j, k, c]``; both
    orders must be present.  Alternation and Jacobi are checked on the basis.
    """

    def __init__(self, modulus: int, rank: int, bracket, labels: Sequence[str] | None = None,
                 p: int | None = None, precision: int | None = None, validate: bool = True):
        if rank < 1:
            raise ValueError("Lie rings need rank >= 1")
        self.modulus = modulus
        self.rank = rank
        self.p, self.precision = p, precision
        self.tensor = _tensor_from(bracket, rank, modulus, "bracket")
        self.labels = tuple(labels) if labels else tuple(f"x{i}" for i in range(rank))
        if validate:
            self.validate()

    def basis(self, i: int) -> Vector:
        return tuple(int(k == i) for k in range(self.rank))

    def zero(self) -> Vector:
        return (0,) * self.rank

    def add(self, x: Vector, y: Vector) -> Vector:
        return _reduce((a + b for a, b in zip(x, y)), self.modulus)

    def scale(self, c: int, x: Vector) -> Vector:
        return _reduce((c * a for a in x), self.modulus)

    def bracket(self, x: Sequence[int], y: Sequence[int]) -> Vector:
        out = [0] * self.rank
        for i, a in enumerate(x):
            if not a:
                continue
            for j, b in enumerate(y):
                if not b:
                    continue
                for k, c in self.tensor.get((i, j), ()):
                    out[k] += a * b * c
        return _reduce(out, self.modulus)

    def basis_bracket(self, i: int, j: int) -> dict[int, int]:
        return dict(self.tensor.get((i, j), ()))

    def is_abelian(self) -> bool:
        return not self.tensor

    def validate(self) -> None:
        d = self.rank
        for i in range(d):
            if self.tensor.get((i, i)):
                raise ContractError("bracket is not alternating", (i, i))
            for j in range(i):
                fwd = self.bracket(self.basis(i), self.basis(j))
                back = self.bracket(self.basis(j), self.basis(i))
                if self.add(fwd, back) != self.zero():
                    raise ContractError("bracket is not antisymmetric", (i, j))
        basis = [self.basis(i) for i in range(d)]
        br = {(i, j): self.bracket(basis[i], basis[j]) for i in range(d) for j in range(d)}
        for i, j, k in itertools.combinations(range(d), 3):
            total = self.add(self.add(self.bracket(basis[i], br[j, k]),
                                      self.bracket(basis[j], br[k, i])),
                             self.bracket(basis[k], br[i, j]))
            if total != self.zero():
                raise ContractError("Jacobi identity fails", (i, j, k))

    def truncate(self, modulus: int) -> "LieRing":
        if self.modulus and self.modulus % modulus:
            raise ValueError(f"{modulus} does not divide {self.modulus}")
        prec = None
        if self.p is not None:
            prec = next(t for t in range(self.precision + 1) if self.p ** t >= modulus)
        return LieRing(modulus, self.rank, self._entries(), self.labels, self.p, prec, validate=False)

    def _entries(self) -> list[list[int]]:
        return [[i, j, k, c] for (i, j), terms in sorted(self.tensor.items()) for k, c in terms]

    def to_dict(self) -> dict:
        return {"base": _base_to_json(self.modulus, self.p, self.precision), "rank": self.rank,
                "bracket": self._entries()}

    @classmethod
    def from_dict(cls, obj: Mapping) -> "LieRing":
        _check_keys(obj, {"base", "rank", "bracket"}, set(), "Lie ring")
        modulus, p, n = _parse_base(obj["base"])
        return cls(modulus, int(obj["rank"]), obj["bracket"], p=p, precision=n)

    def __eq__(self, other):
        return (isinstance(other, LieRing) and self.modulus == other.modulus
                and self.rank == other.rank and self.tensor == other.tensor)

    def __hash__(self):
        return hash((self.modulus, self.rank, tuple(sorted(self.tensor.items()))))

    def __repr__(self):
        base = f"Z/{self.modulus}" if self.modulus else "Z"
        return f"LieRing(base={base}, rank={self.rank})"


def gl_lie_ring(A: FinRing, r: int) -> LieRing:
    """``gl_r(A)`` with the commutator bracket of ``Mat_r(A)``."""
    M = matrix_ring(A, r)
    bracket = []
    for i in range(M.rank):
        for j in range(M.rank):
            ij = dict(M.tensor.get((i, j), ()))
            for k, c in M.tensor.get((j, i), ()):
                ij[k] = ij.get(k, 0) - c
            bracket.extend([i, j, k, c] for k, c in sorted(ij.items()) if c)
    return LieRing(M.modulus, M.rank, bracket, M.labels, A.p, A.precision)


def abelian_lie_ring(modulus: int, rank: int) -> LieRing:
    return LieRing(modulus, rank, [])


class FinGroup:
    """Finite group given by its multiplication table on indices ``0..n-1``.

    ``elements`` optionally carries hashable representatives (for instance
    matrices); associativity is certified by Light's test on a generating set.
    """

    def __init__(self, table: Sequence[Sequence[int]], identity: int = 0,
                 elements: Sequence[Hashable] | None = None, labels: Sequence[str] | None = None,
                 cap: int = DEFAULT_GROUP_CAP, validate: bool = True):
        n = len(table)
        if n == 0:
            raise ValueError("a group has at least one element")
        if n > cap:
            raise ResourceError(f"group of order {n} exceeds the cap {cap}")
        self.table = [list(row) for row in table]
        self.identity = identity
        self.elements = list(elements) if elements is not None else list(range(n))
        if len(self.elements) != n:
            raise ValueError("elements and table disagree in size")
        self.index = {g: i for i, g in enumerate(self.elements)}
        self.labels = list(labels) if labels else None
        self.inverse = [0] * n
        if validate:
            self.validate()
        for a in range(n):
            row = self.table[a]
            self.inverse[a] = next(b for b in range(n) if row[b] == identity)

    @property
    def order(self) -> int:
        return len(self.table)

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def power(self, a: int, k: int) -> int:
        if k < 0:
            a, k = self.inverse[a], -k
        acc = self.identity
        for _ in range(k):
            acc = self.table[acc][a]
        return acc

    def element_order(self, a: int) -> int:
        k, x = 1, a
        while x != self.identity:
            x = self.table[x][a]
            k += 1
        return k

    def exponent(self) -> int:
        from math import lcm
        out = 1
        for a in range(self.order):
            out = lcm(out, self.element_order(a))
        return out

    def is_abelian(self) -> bool:
        t = self.table
        return all(t[a][b] == t[b][a] for a in range(self.order) for b in range(a))

    def closure(self, gens: Iterable[int]) -> list[int]:
        """Sorted indices of the subgroup generated by ``gens``."""
        gens = list(gens)
        seen = {self.identity}
        queue = deque([self.identity])
        while queue:
            x = queue.popleft()
            for g in gens:
                y = self.table[x][g]
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        return sorted(seen)

    def generators(self) -> list[int]:
        """A small generating set chosen greedily."""
        gens: list[int] = []
        span = {self.identity}
        for a in range(self.order):
            if a not in span:
                gens.append(a)
                span = set(self.closure(gens))
                if len(span) == self.order:
                    break
        return gens

    def subgroup(self, members: Sequence[int]) -> "FinGroup":
        """The subgroup on ``members`` (must be closed), relabelled in the given order."""
        pos = {g: i for i, g in enumerate(members)}
        if self.identity not in pos:
            raise ValueError("subgroup must contain the identity")
        try:
            table = [[pos[self.table[a][b]] for b in members] for a in members]
        except KeyError:
            raise ContractError("subset is not closed under multiplication", ()) from None
        sub = FinGroup(table, pos[self.identity], [self.elements[g] for g in members],
                       validate=False)
        sub.parent_indices = list(members)
        return sub

    def validate(self) -> None:
        n, t, e = self.order, self.table, self.identity
        if not 0 <= e < n:
            raise ContractError("identity index out of range", (e,))
        full = set(range(n))
        for a in range(n):
            if len(t[a]) != n:
                raise ContractError("table row has the wrong length", (a,))
            if set(t[a]) != full:
                raise ContractError("table row is not a permutation", (a,))
            if t[e][a] != a or t[a][e] != a:
                raise ContractError("identity law fails", (a,))
        for col in range(n):
            if {t[a][col] for a in range(n)} != full:
                raise ContractError("table column is not a permutation", (col,))
        # Light's test: middle elements satisfying associativity form a submagma
        for g in self.generators():
            for x in range(n):
                xg = t[x][g]
                row_x, row_xg = t[x], t[xg]
                for y in range(n):
                    if row_xg[y] != row_x[t[g][y]]:
                        raise ContractError("associativity fails", (x, g, y))

    @classmethod
    def from_operation(cls, elements: Sequence[Hashable], op: Callable[[Any, Any], Any],
                       identity: Hashable, cap: int = DEFAULT_GROUP_CAP,
                       validate: bool = True) -> "FinGroup":
        elements = list(elements)
        if len(elements) > cap:
            raise ResourceError(f"group of order {len(elements)} exceeds the cap {cap}")
        index = {g: i for i, g in enumerate(elements)}
        try:
            table = [[index[op(a, b)] for b in elements] for a in elements]
        except KeyError:
            raise ContractError("operation leaves the element set", ()) from None
        return cls(table, index[identity], elements, cap=cap, validate=validate)

    @classmethod
    def generated_by(cls, gens: Sequence[Hashable], op: Callable[[Any, Any], Any],
                     identity: Hashable, cap: int = DEFAULT_GROUP_CAP) -> "FinGroup":
        """Closure of ``gens`` under ``op``, identity first then breadth-first order."""
        seen = {identity: 0}
        order = [identity]
        queue = deque([identity])
        while queue:
            x = queue.popleft()
            for g in gens:
                y = op(x, g)
                if y not in seen:
                    if len(order) >= cap:
                        raise ResourceError(f"generated group exceeds the cap {cap}")
                    seen[y] = len(order)
                    order.append(y)
                    queue.append(y)
        return cls.from_operation(order, op, identity, cap)

    def to_dict(self) -> dict:
        return {"table": self.table, "identity": self.identity}

    @classmethod
    def from_dict(cls, obj: Mapping, cap: int = DEFAULT_GROUP_CAP) -> "FinGroup":
        _check_keys(obj, {"table"}, {"identity", "labels"}, "group")
        return cls(obj["table"], int(obj.get("identity", 0)), labels=obj.get("labels"), cap=cap)

    def __repr__(self):
        return f"FinGroup(order={self.order})"


def congruence_quotient(A: PadicAlgebra, r: int, m: int, i: int,
                        cap: int = DEFAULT_GROUP_CAP) -> FinGroup:
    """``GL_r(A)^(m) / GL_r(A)^(m+i)`` as matrices ``1 + p^m X`` over ``A / p^(m+i)``.

    Elements are coordinate tuples of ``Mat_r(A / p^(m+i))``, enumerated
    lexicographically in the entries of X modulo ``p^i``.
    """
    if not isinstance(A, FinRing) or A.p is None:
        raise ValueError("congruence quotients need a p-adic algebra")
    if r < 1 or m < 1 or i < 1:
        raise ValueError("need r >= 1, m >= 1 and i >= 1")
    if m + i > A.precision:
        raise ValueError(f"m + i = {m + i} exceeds the precision {A.precision}")
    p = A.p
    d = r * r * A.rank
    if p ** (i * d) > cap:
        raise ResourceError(f"congruence quotient of order {p}^{i * d} exceeds the cap {cap}")
    M = matrix_ring(A.level(m + i), r)
    one = M.unit
    step = p ** m
    elements = [M.add(one, tuple(step * x for x in X))
                for X in itertools.product(range(p ** i), repeat=d)]
    G = FinGroup.from_operation(elements, M.multiply, one, cap=cap, validate=False)
    G.validate()
    G.ring = M
    G.congruence_data = (p, r, m, i)
    return G


def congruence_reduction(G: FinGroup, H: FinGroup) -> list[int]:
    """Images under reduction ``mod p^(m+i-1)`` from one congruence quotient to the next."""
    p, r, m, i = G.congruence_data
    if H.congruence_data != (p, r, m, i - 1):
        raise ValueError("target must be the congruence quotient with one fewer step")
    q = p ** (m + i - 1)
    return [H.index[tuple(x % q for x in g)] for g in G.elements]


def homomorphism_kernel(G: FinGroup, H: FinGroup, images: Sequence[int]) -> list[int]:
    """Kernel of a map given by images, after checking it is a homomorphism."""
    for a in range(G.order):
        for b in range(G.order):
            if images[G.table[a][b]] != H.table[images[a]][images[b]]:
                raise ContractError("map is not a homomorphism", (a, b))
    return [a for a in range(G.order) if images[a] == H.identity]


def load_algebra(obj: Mapping | str):
    """Parse a ring or Lie ring description (a dict or JSON text)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if "bracket" in obj:
        return LieRing.from_dict(obj)
    return FinRing.from_dict(obj)
