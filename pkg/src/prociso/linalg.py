"""Exact linear algebra over Z and Z/m.

Scalars are Python ints throughout, so nothing overflows.  A base ring is
encoded by its modulus: ``0`` stands for Z, ``m >= 2`` for Z/m.

Large sparse matrices go through a column reduction that only pivots on
units (the ``low`` entry of each column, as in persistence algorithms);
columns that cannot be pivoted are deferred and finished densely.  Small
matrices use a dense Smith normal form with tracked transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

DENSE_CUTOFF = 64


class ContractError(ValueError):
    """A mathematical precondition failed; ``witness`` locates the failure."""

    def __init__(self, message: str, witness=None):
        super().__init__(message if witness is None else f"{message} (witness: {witness})")
        self.witness = witness


class ResourceError(RuntimeError):
    """A configured size cap would be exceeded."""


# ---------------------------------------------------------------- numbers

def factorize(n: int) -> dict[int, int]:
    """Prime factorisation of a positive integer by trial division."""
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def prime_power(m: int) -> tuple[int, int] | None:
    """Return ``(p, k)`` if ``m = p**k`` with ``k >= 1``, else ``None``."""
    if m < 2:
        return None
    f = factorize(m)
    if len(f) != 1:
        return None
    (p, k), = f.items()
    return p, k


def valuation(x: int, p: int) -> int | float:
    """p-adic valuation of a nonzero integer; ``inf`` for zero."""
    if x == 0:
        return math.inf
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def base_name(modulus: int) -> str:
    return "Z" if modulus == 0 else f"Z/{modulus}"


def _check_modulus(modulus: int) -> None:
    if modulus < 0 or modulus == 1:
        raise ValueError(f"invalid base modulus {modulus}; use 0 for Z or m >= 2")


def _crt(residues: Sequence[int], moduli: Sequence[int]) -> int:
    x, m = 0, 1
    for r, q in zip(residues, moduli):
        t = ((r - x) * pow(m, -1, q)) % q
        x += m * t
        m *= q
    return x % m


# ---------------------------------------------------------------- groups

@dataclass(frozen=True)
class FGAbelianGroup:
    """Finitely generated abelian group ``Z^free_rank + Z/d_1 + ... + Z/d_k``
    with ``d_1 | d_2 | ... | d_k`` and every ``d_i > 1``."""

    free_rank: int = 0
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "torsion", tuple(int(d) for d in self.torsion))
        if self.free_rank < 0:
            raise ValueError("free rank must be non-negative")
        for d in self.torsion:
            if d <= 1:
                raise ValueError(f"invariant factor {d} must exceed 1")
        for a, b in zip(self.torsion, self.torsion[1:]):
            if b % a:
                raise ValueError(f"divisibility chain broken: {a} does not divide {b}")

    @classmethod
    def from_orders(cls, free_rank: int, orders: Iterable[int]) -> "FGAbelianGroup":
        """Normalise a direct sum of cyclic groups of the given orders."""
        by_prime: dict[int, list[int]] = {}
        for d in orders:
            d = abs(int(d))
            if d == 0:
                free_rank += 1
                continue
            for p, e in factorize(d).items() if d > 1 else ():
                by_prime.setdefault(p, []).append(p ** e)
        length = max((len(v) for v in by_prime.values()), default=0)
        factors = [1] * length
        for powers in by_prime.values():
            powers.sort(reverse=True)
            for i, q in enumerate(powers):
                factors[length - 1 - i] *= q
        return cls(free_rank, tuple(f for f in factors if f > 1))

    @classmethod
    def trivial(cls) -> "FGAbelianGroup":
        return cls()

    def __add__(self, other: "FGAbelianGroup") -> "FGAbelianGroup":
        return FGAbelianGroup.from_orders(self.free_rank + other.free_rank,
                                          self.torsion + other.torsion)

    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    def is_finite(self) -> bool:
        return self.free_rank == 0

    def order(self) -> int | float:
        return math.inf if self.free_rank else math.prod(self.torsion)

    def exponent(self) -> int:
        """Last invariant factor; 0 when there is a free part, 1 if trivial."""
        if self.free_rank:
            return 0
        return self.torsion[-1] if self.torsion else 1

    def rank_mod(self, p: int) -> int:
        """Dimension of ``G / pG`` over F_p."""
        return self.free_rank + sum(1 for d in self.torsion if d % p == 0)

    def elementary_divisors(self) -> list[int]:
        out = []
        for d in self.torsion:
            out.extend(p ** e for p, e in factorize(d).items())
        return sorted(out)

    def to_dict(self) -> dict:
        return {"free_rank": self.free_rank, "torsion": list(self.torsion)}

    def __str__(self) -> str:
        parts = []
        if self.free_rank:
            parts.append("Z" if self.free_rank == 1 else f"Z^{self.free_rank}")
        parts.extend(f"Z/{d}" for d in self.torsion)
        return " + ".join(parts) if parts else "0"


def torsion_exponent(group: FGAbelianGroup) -> int | float:
    """Smallest n with n*G = 0, or ``math.inf`` when G has a free summand."""
    return math.inf if group.free_rank else group.exponent()


# ---------------------------------------------------------------- matrices

class IntMatrix:
    """Immutable sparse matrix over Z (modulus 0) or Z/m.

    Entries are stored reduced, without zeros, keyed by ``(row, col)``.
    """

    __slots__ = ("rows", "cols", "modulus", "_data", "_hash")

    def __init__(self, rows: int, cols: int, entries=(), modulus: int = 0):
        _check_modulus(modulus)
        if rows < 0 or cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        self.rows, self.cols, self.modulus = int(rows), int(cols), int(modulus)
        data: dict[tuple[int, int], int] = {}
        items = entries.items() if isinstance(entries, dict) else \
            (((i, j), v) for i, j, v in entries)
        for (i, j), v in items:
            if not (0 <= i < rows and 0 <= j < cols):
                raise ValueError(f"entry ({i}, {j}) outside a {rows}x{cols} matrix")
            if (i, j) in data and not isinstance(entries, dict):
                raise ValueError(f"duplicate entry at ({i}, {j})")
            v = int(v) % modulus if modulus else int(v)
            if v:
                data[(i, j)] = v
            else:
                data.pop((i, j), None)
        self._data = data
        self._hash = None

    # construction helpers
    @classmethod
    def _trusted(cls, rows, cols, data, modulus):
        m = cls.__new__(cls)
        m.rows, m.cols, m.modulus, m._data, m._hash = rows, cols, modulus, data, None
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int, modulus: int = 0) -> "IntMatrix":
        return cls(rows, cols, (), modulus)

    @classmethod
    def identity(cls, n: int, modulus: int = 0) -> "IntMatrix":
        return cls(n, n, [(i, i, 1) for i in range(n)], modulus)

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[int]], modulus: int = 0,
                   ncols: int | None = None) -> "IntMatrix":
        nrows = len(rows)
        if ncols is None:
            ncols = len(rows[0]) if nrows else 0
        for r in rows:
            if len(r) != ncols:
                raise ValueError("ragged dense matrix")
        return cls(nrows, ncols, [(i, j, v) for i, r in enumerate(rows)
                                  for j, v in enumerate(r) if v], modulus)

    @classmethod
    def from_columns(cls, rows: int, columns: Sequence[dict], modulus: int = 0) -> "IntMatrix":
        return cls(rows, len(columns),
                   [(i, j, v) for j, c in enumerate(columns) for i, v in c.items()], modulus)

    @classmethod
    def diagonal(cls, values: Sequence[int], rows: int | None = None,
                 cols: int | None = None, modulus: int = 0) -> "IntMatrix":
        rows = len(values) if rows is None else rows
        cols = len(values) if cols is None else cols
        return cls(rows, cols, [(i, i, v) for i, v in enumerate(values)], modulus)

    # access
    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def nnz(self) -> int:
        return len(self._data)

    @property
    def base(self) -> str:
        return base_name(self.modulus)

    @property
    def entries(self) -> list[tuple[int, int, int]]:
        """Sorted ``(row, col, value)`` triplets."""
        return sorted((i, j, v) for (i, j), v in self._data.items())

    def items(self):
        return self._data.items()

    def __getitem__(self, key: tuple[int, int]) -> int:
        i, j = key
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(key)
        return self._data.get((i, j), 0)

    def to_dense(self) -> list[list[int]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for (i, j), v in self._data.items():
            out[i][j] = v
        return out

    def columns(self) -> list[dict[int, int]]:
        cols: list[dict[int, int]] = [dict() for _ in range(self.cols)]
        for (i, j), v in self._data.items():
            cols[j][i] = v
        return cols

    def row_dicts(self) -> list[dict[int, int]]:
        rows: list[dict[int, int]] = [dict() for _ in range(self.rows)]
        for (i, j), v in self._data.items():
            rows[i][j] = v
        return rows

    def column(self, j: int) -> dict[int, int]:
        return {i: v for (i, jj), v in self._data.items() if jj == j}

    def is_zero(self) -> bool:
        return not self._data

    # algebra
    def _same_base(self, other: "IntMatrix") -> None:
        if self.modulus != other.modulus:
            raise ValueError(f"base mismatch: {self.base} vs {other.base}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return (self.shape == other.shape and self.modulus == other.modulus
                and self._data == other._data)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.rows, self.cols, self.modulus,
                               frozenset(self._data.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"IntMatrix({self.rows}x{self.cols} over {self.base}, nnz={self.nnz})"

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        self._same_base(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        data = dict(self._data)
        m = self.modulus
        for k, v in other._data.items():
            s = data.get(k, 0) + v
            if m:
                s %= m
            if s:
                data[k] = s
            else:
                data.pop(k, None)
        return IntMatrix._trusted(self.rows, self.cols, data, m)

    def __neg__(self) -> "IntMatrix":
        return self.scale(-1)

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        return self + (-other)

    def scale(self, c: int) -> "IntMatrix":
        m = self.modulus
        data = {}
        for k, v in self._data.items():
            s = v * c
            if m:
                s %= m
            if s:
                data[k] = s
        return IntMatrix._trusted(self.rows, self.cols, data, m)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        self._same_base(other)
        if self.cols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        m = self.modulus
        right = other.row_dicts()
        acc: dict[tuple[int, int], int] = {}
        for (i, k), a in self._data.items():
            for j, b in right[k].items():
                acc[(i, j)] = acc.get((i, j), 0) + a * b
        data = {}
        for key, v in acc.items():
            if m:
                v %= m
            if v:
                data[key] = v
        return IntMatrix._trusted(self.rows, other.cols, data, m)

    def apply(self, vec: dict[int, int]) -> dict[int, int]:
        """Multiply by a sparse column vector given as ``{index: value}``."""
        cols = self._column_cache()
        out: dict[int, int] = {}
        for j, c in vec.items():
            for i, v in cols.get(j, {}).items():
                out[i] = out.get(i, 0) + c * v
        m = self.modulus
        return {i: (v % m if m else v) for i, v in out.items() if (v % m if m else v)}

    def _column_cache(self) -> dict[int, dict[int, int]]:
        cache: dict[int, dict[int, int]] = {}
        for (i, j), v in self._data.items():
            cache.setdefault(j, {})[i] = v
        return cache

    def transpose(self) -> "IntMatrix":
        return IntMatrix._trusted(self.cols, self.rows,
                                  {(j, i): v for (i, j), v in self._data.items()},
                                  self.modulus)

    @property
    def T(self) -> "IntMatrix":
        return self.transpose()

    def reduce_mod(self, m: int) -> "IntMatrix":
        """Reduce entries to Z/m (allowed from Z or from Z/m' with m | m')."""
        if self.modulus and self.modulus % m:
            raise ValueError(f"cannot reduce {self.base} to Z/{m}")
        return IntMatrix(self.rows, self.cols, self._data, m)

    def lift(self) -> "IntMatrix":
        """The same canonical representatives viewed over Z."""
        return IntMatrix._trusted(self.rows, self.cols, dict(self._data), 0)

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "IntMatrix":
        rpos = {r: a for a, r in enumerate(rows)}
        cpos = {c: b for b, c in enumerate(cols)}
        data = {(rpos[i], cpos[j]): v for (i, j), v in self._data.items()
                if i in rpos and j in cpos}
        return IntMatrix._trusted(len(rows), len(cols), data, self.modulus)

    def hstack(self, other: "IntMatrix") -> "IntMatrix":
        self._same_base(other)
        if self.rows != other.rows:
            raise ValueError("hstack needs equal row counts")
        data = dict(self._data)
        data.update({(i, j + self.cols): v for (i, j), v in other._data.items()})
        return IntMatrix._trusted(self.rows, self.cols + other.cols, data, self.modulus)

    def vstack(self, other: "IntMatrix") -> "IntMatrix":
        self._same_base(other)
        if self.cols != other.cols:
            raise ValueError("vstack needs equal column counts")
        data = dict(self._data)
        data.update({(i + self.rows, j): v for (i, j), v in other._data.items()})
        return IntMatrix._trusted(self.rows + other.rows, self.cols, data, self.modulus)

    @staticmethod
    def block_diag(blocks: Sequence["IntMatrix"], modulus: int | None = None) -> "IntMatrix":
        m = blocks[0].modulus if blocks else (modulus or 0)
        data, r0, c0 = {}, 0, 0
        for b in blocks:
            if b.modulus != m:
                raise ValueError("block_diag needs a common base")
            data.update({(i + r0, j + c0): v for (i, j), v in b._data.items()})
            r0 += b.rows
            c0 += b.cols
        return IntMatrix._trusted(r0, c0, data, m)

    # text format
    def to_triplets(self) -> str:
        """One ``row col value`` line per entry, 0-indexed, sorted."""
        return "".join(f"{i} {j} {v}\n" for i, j, v in self.entries)

    @classmethod
    def from_triplets(cls, text: str, rows: int, cols: int, modulus: int = 0) -> "IntMatrix":
        entries = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'row col value'")
            entries.append(tuple(int(x) for x in parts))
        return cls(rows, cols, entries, modulus)


# ---------------------------------------------------------------- dense SNF

@dataclass(frozen=True)
class SNFResult:
    """``U @ A @ V == D`` with U, V invertible over the base ring."""

    D: IntMatrix
    U: IntMatrix
    V: IntMatrix
    pivots: tuple[int, ...]
    U_inv: IntMatrix | None = field(default=None, repr=False, compare=False)
    V_inv: IntMatrix | None = field(default=None, repr=False, compare=False)

    @property
    def rank(self) -> int:
        return len(self.pivots)


class _DenseSNF:
    """Dense Smith form over Z or a local ring Z/p^k, tracking transforms.

    ``U`` and ``Uinv`` follow the row operations, ``V`` and ``Vinv`` the
    column operations, so that ``U A V = D`` and ``Uinv`` is ``U^{-1}``.
    """

    def __init__(self, A: list[list[int]], nrows: int, ncols: int, modulus: int,
                 track: bool = True):
        self.m = modulus
        self.A = [row[:] for row in A]
        self.n, self.c = nrows, ncols
        self.track = track
        if modulus:
            pk = prime_power(modulus)
            if pk is None:
                raise ValueError("dense local SNF needs a prime-power modulus")
            self.p, self.k = pk
        if track:
            self.U = [[int(i == j) for j in range(nrows)] for i in range(nrows)]
            self.Ui = [[int(i == j) for j in range(nrows)] for i in range(nrows)]
            self.V = [[int(i == j) for j in range(ncols)] for i in range(ncols)]
            self.Vi = [[int(i == j) for j in range(ncols)] for i in range(ncols)]
        self.diag: list[int] = []

    def _red(self, x):
        return x % self.m if self.m else x

    # elementary operations (each keeps U A V = D and the inverses in sync)
    def swap_rows(self, a, b):
        if a == b:
            return
        A = self.A
        A[a], A[b] = A[b], A[a]
        if self.track:
            self.U[a], self.U[b] = self.U[b], self.U[a]
            for row in self.Ui:
                row[a], row[b] = row[b], row[a]

    def swap_cols(self, a, b):
        if a == b:
            return
        for row in self.A:
            row[a], row[b] = row[b], row[a]
        if self.track:
            for row in self.V:
                row[a], row[b] = row[b], row[a]
            self.Vi[a], self.Vi[b] = self.Vi[b], self.Vi[a]

    def add_row(self, dst, src, c):
        """row_dst += c * row_src"""
        if not c:
            return
        r, s = self.A[dst], self.A[src]
        red = self._red
        for j in range(self.c):
            if s[j]:
                r[j] = red(r[j] + c * s[j])
        if self.track:
            u, us = self.U[dst], self.U[src]
            for j in range(self.n):
                if us[j]:
                    u[j] = red(u[j] + c * us[j])
            for row in self.Ui:
                if row[dst]:
                    row[src] = red(row[src] - c * row[dst])

    def add_col(self, dst, src, c):
        """col_dst += c * col_src"""
        if not c:
            return
        red = self._red
        for row in self.A:
            if row[src]:
                row[dst] = red(row[dst] + c * row[src])
        if self.track:
            for row in self.V:
                if row[src]:
                    row[dst] = red(row[dst] + c * row[src])
            vd, vs = self.Vi[dst], self.Vi[src]
            for j in range(self.c):
                if vd[j]:
                    vs[j] = red(vs[j] - c * vd[j])

    def scale_row(self, a, u, uinv):
        red = self._red
        self.A[a] = [red(x * u) for x in self.A[a]]
        if self.track:
            self.U[a] = [red(x * u) for x in self.U[a]]
            for row in self.Ui:
                if row[a]:
                    row[a] = red(row[a] * uinv)

    # pivot rules
    def _key(self, x):
        if self.m:
            return valuation(x, self.p)
        return abs(x)

    def _find_pivot(self, t):
        best, where = None, None
        for i in range(t, self.n):
            row = self.A[i]
            for j in range(t, self.c):
                x = row[j]
                if x:
                    k = self._key(x)
                    if best is None or k < best:
                        best, where = k, (i, j)
                        if k == 0:
                            return where
        return where

    def run(self) -> list[int]:
        t = 0
        while t < min(self.n, self.c):
            where = self._find_pivot(t)
            if where is None:
                break
            self.swap_rows(t, where[0])
            self.swap_cols(t, where[1])
            if self.m:
                self._local_step(t)
            else:
                self._integer_step(t)
            t += 1
        return self.diag

    def _local_step(self, t):
        p, A = self.p, self.A
        a = A[t][t]
        v = valuation(a, p)
        pv = p ** v
        unit = (a // pv) % self.m
        inv = pow(unit, -1, self.m)
        self.scale_row(t, inv, unit)
        for i in range(t + 1, self.n):
            x = A[i][t]
            if x:
                self.add_row(i, t, -(x // pv))
        for j in range(t + 1, self.c):
            x = A[t][j]
            if x:
                self.add_col(j, t, -(x // pv))
        self.diag.append(pv)

    def _integer_step(self, t):
        A = self.A
        while True:
            changed = False
            piv = A[t][t]
            for i in range(t + 1, self.n):
                if A[i][t]:
                    self.add_row(i, t, -(A[i][t] // piv))
            for j in range(t + 1, self.c):
                if A[t][j]:
                    self.add_col(j, t, -(A[t][j] // piv))
            # a smaller remainder becomes the new pivot
            best, where = abs(piv), None
            for i in range(t + 1, self.n):
                x = A[i][t]
                if x and abs(x) < best:
                    best, where = abs(x), (i, t)
            for j in range(t + 1, self.c):
                x = A[t][j]
                if x and abs(x) < best:
                    best, where = abs(x), (t, j)
            if where is not None:
                self.swap_rows(t, where[0])
                self.swap_cols(t, where[1])
                continue
            # row and column are clear; enforce divisibility of the remainder
            for i in range(t + 1, self.n):
                row = A[i]
                if any(row[j] % piv for j in range(t + 1, self.c)):
                    self.add_row(t, i, 1)
                    changed = True
                    break
            if not changed:
                break
        if A[t][t] < 0:
            self.scale_row(t, -1, -1)
        self.diag.append(A[t][t])


def _as_matrix(rows: list[list[int]], nrows: int, ncols: int, modulus: int) -> IntMatrix:
    return IntMatrix(nrows, ncols,
                     [(i, j, v) for i, r in enumerate(rows) for j, v in enumerate(r) if v],
                     modulus)


def _dense_rows(A: IntMatrix) -> list[list[int]]:
    return A.to_dense()


def smith_normal_form(A: IntMatrix) -> SNFResult:
    """Smith normal form ``U A V = D``.

    Over Z the diagonal is a divisibility chain of positive integers.  Over
    Z/p^k pivots are chosen by lowest p-valuation, ties broken by
    lexicographic (row, col), and the diagonal holds powers of p.  Other
    moduli are split by the Chinese remainder theorem and glued back.
    """
    m = A.modulus
    if m and prime_power(m) is None:
        return _snf_crt(A)
    eng = _DenseSNF(_dense_rows(A), A.rows, A.cols, m, track=True)
    diag = eng.run()
    D = IntMatrix.diagonal(diag, A.rows, A.cols, m)
    return SNFResult(D=D,
                     U=_as_matrix(eng.U, A.rows, A.rows, m),
                     V=_as_matrix(eng.V, A.cols, A.cols, m),
                     pivots=tuple(diag),
                     U_inv=_as_matrix(eng.Ui, A.rows, A.rows, m),
                     V_inv=_as_matrix(eng.Vi, A.cols, A.cols, m))


def _snf_crt(A: IntMatrix) -> SNFResult:
    m = A.modulus
    qs = [p ** e for p, e in sorted(factorize(m).items())]
    parts = [smith_normal_form(A.reduce_mod(q)) for q in qs]

    def glue(mats, rows, cols):
        dense = [M.to_dense() for M in mats]
        return IntMatrix(rows, cols,
                         [(i, j, _crt([d[i][j] for d in dense], qs))
                          for i in range(rows) for j in range(cols)], m)

    n, c = A.shape
    D = glue([r.D for r in parts], n, c)
    pivots = tuple(math.gcd(D[i, i], m) for i in range(min(n, c)) if D[i, i])
    return SNFResult(D=D, U=glue([r.U for r in parts], n, n),
                     V=glue([r.V for r in parts], c, c), pivots=pivots,
                     U_inv=glue([r.U_inv for r in parts], n, n),
                     V_inv=glue([r.V_inv for r in parts], c, c))


# ---------------------------------------------------------------- sparse reduction

def _unit_test(modulus: int):
    if modulus == 0:
        return lambda x: x == 1 or x == -1
    p, _ = prime_power(modulus)
    return lambda x: x % p != 0


def _inverse(u: int, modulus: int) -> int:
    return u if modulus == 0 else pow(u, -1, modulus)


@dataclass
class ColumnReduction:
    """Outcome of unit-pivot column reduction of one matrix.

    ``pivot_rows`` are the rows owned by a unit pivot; ``residual`` holds the
    columns that could not be pivoted, restricted to the remaining rows
    (they vanish on ``pivot_rows``).  Elementary divisors of the original
    matrix are ``1`` for every pivot plus those of the residual.
    """

    nrows: int
    pivot_rows: set[int]
    pivot_cols: list[int]
    residual: list[dict[int, int]]
    residual_cols: list[int]

    @property
    def unit_rank(self) -> int:
        return len(self.pivot_rows)


def reduce_columns(columns: Iterable[dict[int, int]], nrows: int, modulus: int) -> ColumnReduction:
    """Unit-pivot column reduction (persistence-style, pivot at the lowest row).

    ``modulus`` must be 0 or a prime power.  Columns are consumed lazily, so
    a generator keeps memory proportional to the pivots.
    """
    is_unit = _unit_test(modulus)
    m = modulus
    pivots: dict[int, dict[int, int]] = {}
    pivot_cols: list[int] = []
    deferred: list[tuple[int, dict[int, int]]] = []

    def subtract(col, pc, f):
        for r, v in pc.items():
            x = col.get(r, 0) - f * v
            if m:
                x %= m
            if x:
                col[r] = x
            else:
                col.pop(r, None)

    for j, col in enumerate(columns):
        col = dict(col)
        while col:
            low = max(col)
            pc = pivots.get(low)
            if pc is None:
                break
            subtract(col, pc, col[low] * _inverse(pc[low], m))
        if not col:
            continue
        low = max(col)
        if is_unit(col[low]):
            pivots[low] = col
            pivot_cols.append(j)
        else:
            deferred.append((j, col))

    residual, residual_cols = [], []
    for j, col in deferred:
        while True:
            hits = [r for r in col if r in pivots]
            if not hits:
                break
            r = max(hits)
            pc = pivots[r]
            subtract(col, pc, col[r] * _inverse(pc[r], m))
        if col:
            residual.append(col)
            residual_cols.append(j)
    return ColumnReduction(nrows, set(pivots), pivot_cols, residual, residual_cols)


def _compact(columns: list[dict[int, int]], keep_rows: Sequence[int]) -> tuple[list[list[int]], int]:
    pos = {r: a for a, r in enumerate(keep_rows)}
    dense = [[0] * len(columns) for _ in keep_rows]
    for j, col in enumerate(columns):
        for r, v in col.items():
            dense[pos[r]][j] = v
    return dense, len(keep_rows)


def _split_modulus(modulus: int) -> list[int]:
    return [p ** e for p, e in sorted(factorize(modulus).items())]


def elementary_divisors(A: IntMatrix) -> list[int]:
    """Nonzero diagonal entries of the Smith form (prime-power or Z base).

    Units are reported as 1.  Over Z/p^k the entries are powers of p.
    """
    m = A.modulus
    if m and prime_power(m) is None:
        raise ValueError("elementary_divisors needs Z or a prime-power modulus")
    if A.rows <= DENSE_CUTOFF and A.cols <= DENSE_CUTOFF:
        return _DenseSNF(A.to_dense(), A.rows, A.cols, m, track=False).run()
    return elementary_divisors_of_columns(A.columns(), A.rows, m)


def elementary_divisors_of_columns(columns: Iterable[dict[int, int]], nrows: int,
                                   modulus: int) -> list[int]:
    """Like :func:`elementary_divisors` for lazily supplied sparse columns."""
    red = reduce_columns(columns, nrows, modulus)
    keep = [r for r in range(nrows) if r not in red.pivot_rows]
    rest: list[int] = []
    if red.residual:
        dense, n = _compact(red.residual, keep)
        rest = _DenseSNF(dense, n, len(red.residual), modulus, track=False).run()
    return [1] * red.unit_rank + rest


def rank(A: IntMatrix) -> int:
    """Rank over Q for base Z, number of nonzero Smith entries otherwise."""
    m = A.modulus
    if m and prime_power(m) is None:
        return max(rank(A.reduce_mod(q)) for q in _split_modulus(m))
    return len(elementary_divisors(A))


def rank_of_columns(columns: Iterable[dict[int, int]], nrows: int, p: int) -> int:
    """Rank over the prime field F_p of lazily supplied columns."""
    return reduce_columns(columns, nrows, p).unit_rank


# ---------------------------------------------------------------- dense module toolkit

def _dense_snf(rows: list[list[int]], nrows: int, ncols: int, modulus: int) -> _DenseSNF:
    eng = _DenseSNF(rows, nrows, ncols, modulus, track=True)
    eng.run()
    return eng


def kernel_generators(A: IntMatrix) -> IntMatrix:
    """Columns generating ``{x : A x = 0}`` (a basis over Z or a field)."""
    m = A.modulus
    if m and prime_power(m) is None:
        raise ValueError("kernel_generators needs Z or a prime-power modulus")
    eng = _dense_snf(A.to_dense(), A.rows, A.cols, m)
    gens = []
    for j in range(A.cols):
        d = eng.diag[j] if j < len(eng.diag) else 0
        if d == 0:
            scale = 1
        elif m:
            scale = m // d          # d = p^a, kernel of p^a is p^(k-a)
            if d == 1:
                continue
        else:
            continue
        gens.append({i: (eng.V[i][j] * scale) % m if m else eng.V[i][j] * scale
                     for i in range(A.cols) if eng.V[i][j]})
    return IntMatrix.from_columns(A.cols, [{i: v for i, v in g.items() if v} for g in gens], m)


def image_contains(S: IntMatrix, T: IntMatrix) -> bool:
    """Whether every column of T lies in the span of the columns of S."""
    return solve(S, T) is not None


def solve(S: IntMatrix, T: IntMatrix) -> IntMatrix | None:
    """Some X with ``S X = T``, or ``None`` if no solution exists."""
    m = S.modulus
    if m != T.modulus or S.rows != T.rows:
        raise ValueError("solve needs matching bases and row counts")
    if m and prime_power(m) is None:
        qs = _split_modulus(m)
        parts = [solve(S.reduce_mod(q), T.reduce_mod(q)) for q in qs]
        if any(x is None for x in parts):
            return None
        dense = [x.to_dense() for x in parts]
        return IntMatrix(S.cols, T.cols,
                         [(i, j, _crt([d[i][j] for d in dense], qs))
                          for i in range(S.cols) for j in range(T.cols)], m)
    eng = _dense_snf(S.to_dense(), S.rows, S.cols, m)
    U, V, diag = eng.U, eng.V, eng.diag
    tcols = T.columns()
    out_cols = []
    for t in tcols:
        ut = [0] * S.rows
        for i in range(S.rows):
            s = sum(U[i][k] * v for k, v in t.items())
            ut[i] = s % m if m else s
        y = [0] * S.cols
        for i in range(S.rows):
            x = ut[i]
            if not x:
                continue
            if i >= len(diag):
                return None
            d = diag[i]
            if m:
                p = eng.p
                if valuation(x, p) < valuation(d, p):
                    return None
                # d = p^a; choose y with p^a y = x mod p^k
                y[i] = (x // d) % m
            else:
                if x % d:
                    return None
                y[i] = x // d
        col = {}
        for r in range(S.cols):
            s = sum(V[r][c] * y[c] for c in range(S.cols) if y[c])
            s = s % m if m else s
            if s:
                col[r] = s
        out_cols.append(col)
    return IntMatrix.from_columns(S.cols, out_cols, m)


def subquotient(S: IntMatrix, T: IntMatrix) -> FGAbelianGroup:
    """Structure of span(S) / span(T) for column spans with span(T) inside span(S).

    Works over Z, Z/p^k and (via CRT) any Z/m.
    """
    m = S.modulus
    if m != T.modulus or S.rows != T.rows:
        raise ValueError("subquotient needs matching bases and ambient ranks")
    if m and prime_power(m) is None:
        out = FGAbelianGroup()
        for q in _split_modulus(m):
            out = out + subquotient(S.reduce_mod(q), T.reduce_mod(q))
        return out
    eng = _dense_snf(S.to_dense(), S.rows, S.cols, m)
    U, diag = eng.U, eng.diag
    r = len(diag)
    # coordinates of T after the row transform
    tcols = T.columns()
    rel_cols = []
    for t in tcols:
        col = {}
        for i in range(S.rows):
            s = sum(U[i][k] * v for k, v in t.items())
            s = s % m if m else s
            if not s:
                continue
            if i >= r:
                raise ContractError("span(T) is not contained in span(S)", ("row", i))
            d = diag[i]
            if (s % d) if not m else valuation(s, eng.p) < valuation(d, eng.p):
                raise ContractError("span(T) is not contained in span(S)", ("row", i))
            col[i] = s // d
        rel_cols.append(col)
    if not m:
        R = IntMatrix.from_columns(r, rel_cols, 0)
        divs = elementary_divisors(R) if R.rows and R.cols else []
        return FGAbelianGroup.from_orders(r - len(divs), [d for d in divs if d > 1])
    # generator i has order m / diag[i]; relations taken modulo m
    orders = [m // d for d in diag]
    gens = [i for i in range(r) if orders[i] > 1]
    gpos = {i: a for a, i in enumerate(gens)}
    cols = [{gpos[i]: orders[i]} for i in gens]
    for col in rel_cols:
        c = {gpos[i]: v % orders[i] for i, v in col.items() if i in gpos and v % orders[i]}
        if c:
            cols.append(c)
    if not gens:
        return FGAbelianGroup()
    R = IntMatrix.from_columns(len(gens), cols, m)
    divs = _DenseSNF(R.to_dense(), R.rows, R.cols, m, track=False).run()
    # each relation divisor p^v leaves a cyclic factor Z/p^v
    orders_out = [d for d in divs if d > 1] + [m] * (len(gens) - len(divs))
    return FGAbelianGroup.from_orders(0, orders_out)


# ---------------------------------------------------------------- homology

def check_composable(d_n: IntMatrix, d_next: IntMatrix) -> None:
    """Raise ContractError with a witness entry unless ``d_n @ d_next == 0``."""
    if d_n.modulus != d_next.modulus:
        raise ValueError(f"base mismatch: {d_n.base} vs {d_next.base}")
    if d_n.cols != d_next.rows:
        raise ValueError(f"incompatible shapes {d_n.shape} and {d_next.shape}")
    prod = d_n @ d_next
    if not prod.is_zero():
        i, j, v = prod.entries[0]
        raise ContractError("boundary composite is nonzero", (i, j, v))


def homology_at(d_n: IntMatrix, d_next: IntMatrix, check: bool = True) -> FGAbelianGroup:
    """``ker d_n / im d_next`` as a finitely generated abelian group.

    ``d_n`` maps C_n to C_{n-1} and ``d_next`` maps C_{n+1} to C_n.  Over
    Z/p^k a free summand of C_n surviving to homology appears as a cyclic
    factor of order p^k.
    """
    if check:
        check_composable(d_n, d_next)
    elif d_n.cols != d_next.rows:
        raise ValueError(f"incompatible shapes {d_n.shape} and {d_next.shape}")
    m = d_n.modulus
    if m and prime_power(m) is None:
        out = FGAbelianGroup()
        for q in _split_modulus(m):
            out = out + homology_at(d_n.reduce_mod(q), d_next.reduce_mod(q), check=False)
        return out
    c = d_n.cols
    if m == 0:
        r_n = rank(d_n)
        divs = elementary_divisors(d_next)
        return FGAbelianGroup.from_orders(c - r_n - len(divs), [d for d in divs if d > 1])
    p, k = prime_power(m)
    if k == 1:
        return FGAbelianGroup.from_orders(0, [p] * (c - rank(d_n) - rank(d_next)))
    return _local_homology(d_n, d_next, p, k)


def _local_homology(d_n: IntMatrix, d_next: IntMatrix, p: int, k: int) -> FGAbelianGroup:
    m = p ** k
    c = d_n.cols
    # unit pivots of d_next pair cells of C_n with C_{n+1}
    red1 = reduce_columns(d_next.columns(), c, m)
    alive = [i for i in range(c) if i not in red1.pivot_rows]
    # unit pivots of d_n (via its transpose) pair further cells with C_{n-1}
    rows_of_dn = d_n.row_dicts()
    alive_pos = {i: a for a, i in enumerate(alive)}
    cochains = []
    for row in rows_of_dn:
        col = {alive_pos[j]: v for j, v in row.items() if j in alive_pos}
        if col:
            cochains.append(col)
    red2 = reduce_columns(cochains, len(alive), m)
    final = [a for a in range(len(alive)) if a not in red2.pivot_rows]
    final_cells = [alive[a] for a in final]
    fpos = {cell: b for b, cell in enumerate(final_cells)}
    n_final = len(final_cells)
    if n_final == 0:
        return FGAbelianGroup()
    # residual d_next restricted to surviving cells
    nxt_cols = []
    for col in red1.residual:
        cc = {fpos[i]: v for i, v in col.items() if i in fpos}
        if cc:
            nxt_cols.append(cc)
    # residual d_n: residual cochains restricted to surviving cells, transposed
    dn_rows = []
    final_set = {a: b for b, a in enumerate(final)}
    for col in red2.residual:
        rr = {final_set[a]: v for a, v in col.items() if a in final_set}
        if rr:
            dn_rows.append(rr)
    Dn = IntMatrix(len(dn_rows), n_final,
                   [(i, j, v) for i, r in enumerate(dn_rows) for j, v in r.items()], m)
    Dnext = IntMatrix.from_columns(n_final, nxt_cols, m)
    Z = kernel_generators(Dn) if Dn.rows else IntMatrix.identity(n_final, m)
    return subquotient(Z, Dnext)


def homology_over_field_dim(d_n: IntMatrix, d_next: IntMatrix) -> int:
    """Dimension of homology when the base is a prime field."""
    return homology_at(d_n, d_next).rank_mod(d_n.modulus)
