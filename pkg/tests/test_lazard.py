import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from prociso.algebra import FinGroup, LieRing, padic_integers
from prociso.lazard import (
    BarComplex, CHLaw, TruncatedEnveloping, bar_complex, ch_multiply, chevalley_scaling_tower,
    congruence_lie_comparison,
    eta_map, exp_log_matrix, h_module, heisenberg_group, isogeny_distance, lambda_coalgebra_check,
    level_group, level_reduction, p_special_bound_check, pbw_degree_cap, special_bound,
)
from prociso.linalg import ContractError, FGAbelianGroup, ResourceError

from oracles import invariant_factors_by_minors


# ---- oracles

def scaled_nilpotent(p, n, k, precision):
    """Basis ``s E_ab`` (a < b) of ``s n_n`` with ``s = p^k``: bracket constants are ``s`` times n_n's."""
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    pos = {ab: t for t, ab in enumerate(pairs)}
    s = p ** k
    entries = []
    for (a, b), (c, d) in itertools.product(pairs, repeat=2):
        if b == c:
            entries.append([pos[(a, b)], pos[(c, d)], pos[(a, d)], s])
        if d == a:
            entries.append([pos[(a, b)], pos[(c, d)], pos[(c, b)], -s])
    g = LieRing(p ** precision, len(pairs), entries, p=p, precision=precision)
    return g, pairs, s


def _qmat_mul(A, B):
    n = len(A)
    return [[sum(A[i][k] * B[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def _qexp(X):
    n = len(X)
    out = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    term = [row[:] for row in out]
    for k in range(1, n + 1):
        term = [[v / k for v in row] for row in _qmat_mul(term, X)]
        out = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(out, term)]
    return out


def _qlog(M):
    n = len(M)
    N = [[M[i][j] - int(i == j) for j in range(n)] for i in range(n)]
    out = [[Fraction(0)] * n for _ in range(n)]
    power = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for k in range(1, n + 1):
        power = _qmat_mul(power, N)
        out = [[a + Fraction((-1) ** (k + 1), k) * b for a, b in zip(r1, r2)]
               for r1, r2 in zip(out, power)]
    return out


def ch_by_matrices(x, y, pairs, n, s, q):
    """Campbell-Hausdorff product inside unipotent matrices: log(exp X exp Y) over Q."""
    def mat(v):
        M = [[Fraction(0)] * n for _ in range(n)]
        for (a, b), c in zip(pairs, v):
            M[a][b] = Fraction(s * c)
        return M
    Z = _qlog(_qmat_mul(_qexp(mat(x)), _qexp(mat(y))))
    out = []
    for a, b in pairs:
        z = Z[a][b] / s
        out.append(z.numerator * pow(z.denominator, -1, q) % q)
    return tuple(out)


def bracket_gl2_scaled(p, precision):
    """``p gl_2``: basis ``p E_ab`` with bracket constants ``p`` times those of gl_2."""
    pos = {(a, b): 2 * a + b for a in range(2) for b in range(2)}
    entries = []
    for (a, b), (c, d) in itertools.product(pos, repeat=2):
        acc = {}
        if b == c:
            acc[pos[(a, d)]] = acc.get(pos[(a, d)], 0) + p
        if d == a:
            acc[pos[(c, b)]] = acc.get(pos[(c, b)], 0) - p
        entries.extend([pos[(a, b)], pos[(c, d)], k, v] for k, v in acc.items() if v)
    return LieRing(p ** precision, 4, entries, p=p, precision=precision)


def two_dim(p=3, precision=8):
    return LieRing(p ** precision, 2, [[0, 1, 1, p], [1, 0, 1, -p]], p=p, precision=precision)


def cyclic(n):
    return FinGroup([[(a + b) % n for b in range(n)] for a in range(n)])


def dihedral8():
    def op(x, y):
        a, s = x
        b, t = y
        return ((a + (b if s == 0 else -b)) % 4, (s + t) % 2)
    return FinGroup.from_operation([(a, s) for s in range(2) for a in range(4)], op, (0, 0))


def abelianization_orders(G):
    comm = {G.mul(G.mul(a, b), G.mul(G.inverse[a], G.inverse[b])) for a in range(G.order)
            for b in range(G.order)}
    return G.order // len(G.closure(comm))


def min_generators(G):
    for k in range(G.order + 1):
        for S in itertools.combinations(range(G.order), k):
            if len(G.closure(S)) == G.order:
                return k


def mat_exp_oracle(X, q, terms=25):
    """Σ X^k / k! with 2x2 rational matrices, reduced mod q."""
    M = [[Fraction(X[0]), Fraction(X[1])], [Fraction(X[2]), Fraction(X[3])]]
    out = [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(1)]]
    term = [row[:] for row in out]
    for k in range(1, terms):
        term = [[v / k for v in row] for row in _qmat_mul(term, M)]
        out = [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(out, term)]
    return tuple(v.numerator * pow(v.denominator, -1, q) % q for row in out for v in row)


# ---- Campbell-Hausdorff

def test_ch_identity_and_abelian():
    g = two_dim()
    assert ch_multiply(g, (4, 7), (0, 0), 3) == (4, 7)
    assert ch_multiply(g, (0, 0), (4, 7), 3) == (4, 7)
    ab = LieRing(3 ** 4, 2, [], p=3, precision=4)
    assert ch_multiply(ab, (4, 7), (5, 8), 3) == (9, 15)


@pytest.mark.parametrize("p,n,k", [(3, 4, 1), (5, 4, 1), (2, 4, 2), (3, 5, 1)])
def test_ch_matches_unipotent_matrices(p, n, k):
    g, pairs, s = scaled_nilpotent(p, n, k, 10)
    law = CHLaw(g)
    rng = random.Random(p * n)
    for prec in (1, 2, 3):
        q = p ** prec
        for _ in range(15):
            x = tuple(rng.randrange(q) for _ in pairs)
            y = tuple(rng.randrange(q) for _ in pairs)
            assert law.multiply(x, y, prec) == ch_by_matrices(x, y, pairs, n, s, q)


def test_ch_low_weights():
    g = two_dim()
    law = CHLaw(g)
    x, y = (1, 0), (0, 1)
    Z = law.components(x, y, 3)
    assert Z[0] == [1, 1]
    assert Z[1] == [Fraction(v, 2) for v in g.bracket(x, y)]
    # weight 3 from the Dynkin form (1/12)([x,[x,y]] - [y,[x,y]])
    xy = g.bracket(x, y)
    w3 = [Fraction(a - b, 12) for a, b in zip(g.bracket(x, xy), g.bracket(y, xy))]
    assert Z[2] == w3


def test_weight_cap_and_divisibility():
    law = CHLaw(two_dim())
    assert law.weight_cap(2) == 4
    assert all(law.weight_bound(w) >= 2 for w in range(4, 40))
    with pytest.raises(ContractError):
        CHLaw(LieRing(27, 2, [[0, 1, 1, 1], [1, 0, 1, -1]], p=3, precision=3))
    with pytest.raises(ContractError):
        CHLaw(LieRing(2 ** 5, 2, [[0, 1, 1, 2], [1, 0, 1, -2]], p=2, precision=5))


def test_ch_needs_precision():
    with pytest.raises(ResourceError):
        ch_multiply(two_dim(precision=3), (1, 1), (1, 2), 3)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["two", "gl2"]), st.integers(1, 3), st.data())
def test_ch_associative(name, prec, data):
    g = two_dim() if name == "two" else bracket_gl2_scaled(3, 8)
    law = CHLaw(g)
    q = 3 ** prec
    x, y, z = (tuple(data.draw(st.integers(0, q - 1)) for _ in range(g.rank)) for _ in range(3))
    assert law.multiply(law.multiply(x, y, prec), z, prec) == law.multiply(x, law.multiply(y, z, prec), prec)
    assert law.multiply(x, tuple(-v % q for v in x), prec) == (0,) * g.rank


# ---- exp and log

def test_exp_of_nilpotent_is_exact():
    E = exp_log_matrix(padic_integers(3, 4), 2, 1, 2, "exp")
    assert E((0, 3, 0, 0)) == (1, 3, 0, 1)


def test_exp_matches_rational_series():
    E = exp_log_matrix(padic_integers(3, 4), 2, 1, 2, "exp")
    rng = random.Random(5)
    for _ in range(40):
        X = tuple(3 * rng.randrange(9) for _ in range(4))
        assert E(X) == mat_exp_oracle(X, 27)


@pytest.mark.parametrize("p,m,prec", [(3, 1, 4), (5, 1, 3), (2, 2, 5)])
def test_exp_log_inverse(p, m, prec):
    i = 2 if p != 2 else 1
    A = padic_integers(p, prec)
    E = exp_log_matrix(A, 2, m, i, "exp")
    L = exp_log_matrix(A, 2, m, i, "log")
    q, step = p ** (m + i), p ** m
    rng = random.Random(p)
    for _ in range(50):
        X = tuple(step * rng.randrange(q // step) for _ in range(4))
        assert L(E(X)) == X
        Y = E(X)
        assert E(L(Y)) == Y
        assert E(tuple(p * v % q for v in X)) == E.power(Y, p)


def test_exp_log_errors():
    with pytest.raises(ResourceError):
        exp_log_matrix(padic_integers(3, 3), 2, 1, 2, "exp")
    with pytest.raises(ValueError):
        exp_log_matrix(padic_integers(2, 6), 2, 1, 2, "exp")
    E = exp_log_matrix(padic_integers(3, 4), 2, 1, 2, "exp")
    with pytest.raises(ValueError):
        E((1, 0, 0, 0))


# ---- level groups

def test_abelian_level_group_is_a_product():
    g = LieRing(3 ** 4, 2, [], p=3, precision=4)
    G = level_group(g, 1, 2)
    assert G.order == 81
    for a, b in itertools.product(range(0, 81, 7), repeat=2):
        x, y = G.elements[a], G.elements[b]
        assert G.elements[G.mul(a, b)] == tuple((u + v) % 9 for u, v in zip(x, y))


@pytest.mark.parametrize("i", [1, 2])
def test_level_group_order_and_graded_pieces(i):
    g = two_dim()
    G = level_group(g, 1, i)
    assert G.order == 3 ** (2 * i)
    for j in range(i):
        S = [k for k, x in enumerate(G.elements) if all(v % 3 ** j == 0 for v in x)]
        T = [k for k, x in enumerate(G.elements) if all(v % 3 ** (j + 1) == 0 for v in x)]
        assert set(G.closure(S)) == set(S)
        Q = [(a, b) for a in S for b in S]
        assert all(G.mul(G.mul(a, b), G.inverse[G.mul(b, a)]) in T for a, b in Q)
        assert all(G.power(a, 3) in T for a in S)
        assert len(S) // len(T) == 9


@pytest.mark.parametrize("g_name,i", [("two", 1), ("two", 2), ("gl2", 1)])
def test_level_group_abelianization(g_name, i):
    g = two_dim() if g_name == "two" else bracket_gl2_scaled(3, 8)
    G = level_group(g, 1, i)
    q = 3 ** i
    cols = [list(g.bracket(g.basis(a), g.basis(b))) for a in range(g.rank) for b in range(g.rank)]
    cols += [[q * int(k == j) for k in range(g.rank)] for j in range(g.rank)]
    rows = [[c[r] % g.modulus for c in cols] for r in range(g.rank)]
    # lift: the bracket constants are small positive or negative integers
    rows = [[v if v < g.modulus // 2 else v - g.modulus for v in row] for row in rows]
    factors = invariant_factors_by_minors(rows)
    expected = FGAbelianGroup.from_orders(0, [f for f in factors if f not in (0, 1)])
    assert abelianization_orders(G) == expected.order()
    assert BarComplex(G).homology(1) == expected


def test_scaled_levels_and_reduction():
    g = two_dim()
    G2 = level_group(g, 1, 2, n=2)
    G1 = level_group(g, 1, 1, n=2)
    assert G2.order == 81
    phi = level_reduction(G2, G1)
    for a, b in itertools.product(range(0, 81, 5), repeat=2):
        assert phi[G2.mul(a, b)] == G1.mul(phi[a], phi[b])


def test_level_group_cap():
    with pytest.raises(ResourceError):
        level_group(two_dim(), 1, 3, cap=100)


# ---- bar complexes

def test_trivial_group_bar():
    T = FinGroup([[0]])
    C = bar_complex(T, 0, 3)
    assert C.homology(0) == FGAbelianGroup(1)
    assert all(C.homology(n).is_trivial() for n in (1, 2))


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_cyclic_group_homology_is_periodic(n):
    B = BarComplex(cyclic(n))
    for k in range(1, 4):
        expected = FGAbelianGroup(0, (n,)) if k % 2 else FGAbelianGroup.trivial()
        assert B.homology(k) == expected
    assert B.homology(2, n if n in (2, 3) else 0) == (FGAbelianGroup(0, (n,)) if n in (2, 3)
                                                       else FGAbelianGroup.trivial())


def test_normalized_and_unnormalized_agree():
    for G in (cyclic(3), dihedral8()):
        a = bar_complex(G, 0, 3, normalized=True)
        b = bar_complex(G, 0, 3, normalized=False)
        assert b.rank(2) == G.order ** 2
        for n in range(3):
            assert a.homology(n) == b.homology(n)


def test_heisenberg_abelianization():
    K, _ = heisenberg_group(3)
    assert BarComplex(K).homology(1) == FGAbelianGroup(0, (3, 3))
    assert abelianization_orders(K) == 9


@pytest.mark.parametrize("make,p", [(lambda: cyclic(4), 2), (dihedral8, 2),
                                    (lambda: heisenberg_group(3)[0], 3),
                                    (lambda: level_group(two_dim(), 1, 1), 3)])
def test_frattini_rank(make, p):
    G = make()
    assert BarComplex(G).homology(1, p).rank_mod(p) == min_generators(G)


# ---- p-special bound

def test_special_bound_values():
    assert special_bound(3, 2, 1) == 3
    assert special_bound(3, 3, 2) == 81
    assert special_bound(2, 2, 3) == 2 ** 6


def test_cyclic_p_group_bound():
    for p in (2, 3, 5):
        G = cyclic(p)
        rep = p_special_bound_check(G, [[0], list(range(p))], 3)
        assert rep.holds and all(rep.exponents[a] in (1, p) for a in range(4))


def test_heisenberg_bound_low_degrees():
    K, F = heisenberg_group(3)
    rep = p_special_bound_check(K, F, 2)
    assert rep.steps == 2
    assert rep.degrees[2] == FGAbelianGroup(0, (3, 3))
    assert rep.holds and rep.bounds[2] == 27


def test_trivial_group_bound():
    rep = p_special_bound_check(FinGroup([[0]]), [[0]], 2, p=3)
    assert rep.holds and all(rep.degrees[a].is_trivial() for a in (1, 2))


def test_filtration_validation():
    with pytest.raises(ContractError):
        p_special_bound_check(cyclic(9), [[0], list(range(9))], 1)
    D = dihedral8()
    refl = D.index[(0, 1)]
    with pytest.raises(ContractError):
        p_special_bound_check(D, [[D.identity], sorted({D.identity, refl}), list(range(8))], 1)
    centre = sorted({D.identity, D.index[(2, 0)]})
    rep = p_special_bound_check(D, [[D.identity], centre, list(range(8))], 2)
    assert rep.holds


# ---- enveloping algebra and η

def test_enveloping_is_associative():
    U = TruncatedEnveloping(bracket_gl2_scaled(3, 8), 3)
    rng = random.Random(3)
    for _ in range(30):
        a, b, c = ({tuple(sorted(rng.choices(range(4), k=rng.randrange(3)))): rng.randrange(1, 27)}
                   for _ in range(3))
        assert U.multiply(U.multiply(a, b), c) == U.multiply(a, U.multiply(b, c))


def test_pbw_cap():
    assert pbw_degree_cap(3, 1, 2) == 1
    assert pbw_degree_cap(3, 1, 4) == 4
    assert pbw_degree_cap(2, 2, 3) == 1
    assert pbw_degree_cap(2, 2, 5) == 2


def test_eta_identity_and_abelian_exponential():
    g = LieRing(3 ** 6, 2, [], p=3, precision=6)
    E = eta_map(g, 1, 4)
    assert E.image((0, 0)) == {(): 1}
    q = 81
    x = (2, 5)
    # commutative oracle: sum over n of 3^n/n! (x0 a + x1 b)^n
    expected = {}
    for n in range(0, 8):
        for k in range(n + 1):
            coeff = Fraction(3 ** n, math.factorial(n)) * math.comb(n, k) * x[0] ** k * x[1] ** (n - k)
            mono = (0,) * k + (1,) * (n - k)
            expected[mono] = (expected.get(mono, 0)
                              + coeff.numerator * pow(coeff.denominator, -1, q)) % q
    assert E.image(x) == {mo: c for mo, c in expected.items() if c}


@pytest.mark.parametrize("name,i", [("two", 2), ("two", 3), ("two", 4), ("gl2", 3)])
def test_eta_multiplicative(name, i):
    g = two_dim() if name == "two" else bracket_gl2_scaled(3, 8)
    E = eta_map(g, 1, i)
    q = 3 ** (i - 1)
    rng = random.Random(i)
    for _ in range(20):
        x = tuple(rng.randrange(q) for _ in range(g.rank))
        y = tuple(rng.randrange(q) for _ in range(g.rank))
        assert E.multiplicativity_defect(x, y) == {}
        assert E.respects_filtration(x)
        lifted = tuple(v + q * rng.randrange(4) for v in x)
        assert E.image(lifted) == E.image(x)


def test_eta_matrix_shape():
    E = eta_map(two_dim(), 1, 3)
    monos, M = E.matrix()
    assert M.cols == 81 and M.rows == len(monos)
    with pytest.raises(ResourceError):
        eta_map(two_dim(), 1, 4, degree_cap=2)


# ---- Λ(h)

def test_h_module():
    h = h_module(two_dim())
    assert h.dimension == 2 and h.finite_level_dim(2) == 3 and h.exterior_dim(2) == 1


@pytest.mark.parametrize("p,m,depth,cap", [(3, 1, 2, 3), (2, 2, 3, 3)])
def test_lambda_rank_one(p, m, depth, cap):
    g = LieRing(p ** 6, 1, [], p=p, precision=6)
    rep = lambda_coalgebra_check(g, m, m, depth, cap)
    assert all(v == 1 for row in rep.dims.values() for v in row.values())
    assert rep.transitions[1] == {0: 1, 1: 1, 2: 0, 3: 0}
    assert rep.holds


def test_lambda_two_dim_first_level():
    rep = lambda_coalgebra_check(two_dim(), 1, 1, 1, 2)
    assert rep.dims[1] == {0: 1, 1: 2, 2: 3}
    assert rep.levels_match


# ---- group and Lie towers

def test_isogeny_distance():
    assert isogeny_distance(FGAbelianGroup(0, (3,)), FGAbelianGroup(0, (9,)), 3) == 1
    assert isogeny_distance(FGAbelianGroup(0, (3, 9)), FGAbelianGroup(0, (27,)), 3) == 1
    assert isogeny_distance(FGAbelianGroup(1), FGAbelianGroup(0), 3) == math.inf


def test_rank_one_tower_comparison():
    C = congruence_lie_comparison(padic_integers(3, 4), 1, 1, 4, 2, coefficients=27)
    assert C.multipliers[1] == 3
    assert [C.group_stable[i][1] for i in (1, 2, 3)] == [
        FGAbelianGroup(), FGAbelianGroup(0, (3,)), FGAbelianGroup(0, (9,))]
    assert [C.lie_stable[i][1] for i in (1, 2, 3)] == [
        FGAbelianGroup(0, (3,)), FGAbelianGroup(0, (9,)), FGAbelianGroup(0, (27,))]
    # with Z/3 coefficients H_2 of both towers dies along the transitions
    D = congruence_lie_comparison(padic_integers(3, 4), 1, 1, 4, 2)
    assert D.multipliers == {0: 1, 1: 3, 2: 1}
    assert all(D.group_stable[i][2].is_trivial() and D.lie_stable[i][2].is_trivial() for i in (1, 2, 3))


def test_comparison_rejects_bad_coefficients():
    with pytest.raises(ValueError):
        congruence_lie_comparison(padic_integers(3, 3), 1, 1, 3, 1, coefficients=2)


# ---- scaling of Chevalley towers

@pytest.mark.parametrize("r,N", [(1, 1), (2, 2)])
def test_chevalley_scaling_tower(r, N):
    from prociso.complexes import quasi_isogeny_verdict
    from prociso.linalg import IntMatrix
    f = chevalley_scaling_tower(padic_integers(3, 4), r, 1, N)
    for comp in f.components:
        for n in range(N + 1):
            assert comp[n] == IntMatrix.identity(comp.source.rank(n), comp.target.modulus).scale(3 ** n)
    v = quasi_isogeny_verdict(f, N, 3 ** N)
    assert v.status == "isogeny" and v.witness == 3 ** N and v.reverify()
    per = quasi_isogeny_verdict(f, N, 3 ** N, per_degree=True).per_degree
    assert per[0] == 1 and per[1] == 3
    with pytest.raises(ValueError):
        chevalley_scaling_tower(padic_integers(3, 2), 1, 0, 1)
