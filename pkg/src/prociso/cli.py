"""Command-line front end: verification suites and one-shot computations.

``prociso suite NAME [--config FILE] [--output FILE]`` runs a named suite and
writes a JSON report.  ``prociso compute SUBCOMMAND ...`` prints homology in
invariant-factor notation or boundary matrices as ``row col value`` triplets.

Exit codes: 0 success, 1 a check failed, 2 bad input or unknown name,
3 a resource cap was exceeded.
"""

from __future__ import annotations

import argparse
import contextlib
import itertools
import json
import math
import os
import random
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Sequence

from . import hochschild, lazard, lie, volodin
from .algebra import (
    FinGroup, FinRing, LieRing, congruence_quotient, dual_numbers, load_algebra,
    matrix_ring, padic_integers, zmod_ring,
)
from .complexes import (
    ChainComplex, ChainMap, Tower, TowerMap, pro_zero_verdict,
    quasi_isogeny_verdict,
)
from .linalg import ContractError, FGAbelianGroup, IntMatrix, ResourceError

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3

# Every record names one of these statements; a record whose reference is
# missing here is a programming error (drift guard).
REFERENCES: dict[str, str] = {
    "connes-kernel-exponent": "H_n of the kernel of CC(R) -> C^lambda(R) is killed by n!",
    "kappa-chain-map": "the trace map C(gl_r(R)) -> Sym(C^lambda(R)[1]) commutes with differentials",
    "kappa-surjective": "the trace map is surjective in degrees n <= r",
    "theta-duality": "theta_sigma(f_1 x ... x f_n) is the trace of (f_1 x ... x f_n) P_sigma on V^n",
    "kernel-killing": "one nonzero integer kills H_n Ker(kappa^r_R) for every ring R and n <= r",
    "lqt-tower-isogeny": "the levelwise trace map of p-adic towers is a quasi-isogeny up to degree r",
    "lambda-levels": "H_n(G_{i,n}, F_p) has the dimension of Lambda(h) x Gamma(h) in degree n",
    "lambda-transitions": "tower transitions on H_n(G_{i,n}, F_p) have image of dimension dim Lambda^n(h)",
    "p-special-bound": "H_a(K, Z) of a p-special group with n steps is killed by p^binom(a+n-1, n-1)",
    "ch-associative": "the Campbell-Hausdorff product on g/p^i g is associative",
    "exp-log-inverse": "exp and log are mutually inverse between p^m gl_r(A_i) and GL_r(A_i)^(m)",
    "exp-power": "exp(pa) = exp(a)^p",
    "eta-multiplicative": "eta(gh) = eta(g) eta(h) modulo p^i",
    "eta-filtration": "eta(g) is 1 modulo p^m times the augmentation ideal",
    "volodin-acyclic": "reduced H_n of X_r(R) vanishes for r >= 2n + 1",
    "volodin-control": "X_2(F_2) is a wedge of two circles of type B(Z/2) in degree 1",
    "volodin-relative": "X_1(Z/4, (2)) is the bar complex of 1 + (2) = Z/2",
    "volodin-congruence": "H_1 of the congruence subgroup maps onto H_1 of the relative Volodin complex",
    "pro-zero-multiplication": "a tower with multiplication-by-p transitions on Z/p^i is pro-zero",
    "isogeny-multiplication": "multiplication by 2 on a constant tower is an isogeny of multiplier 2",
    "connes-projection-isogeny": "the projection CC(A_i) -> C^lambda(A_i) is a tower quasi-isogeny bounded by n!",
    "chevalley-scaling-isogeny": "C(p^m gl_r) -> C(gl_r) is p^(mn) in degree n, hence an isogeny up to degree N",
    "group-lie-multiplier": "H_1 of the congruence tower and of the Lie tower differ by a multiplier p",
    "primitives-weight-one": "primitives of H_n Sym(C[1]) are the weight-one classes H_n(C[1])",
}

DEFAULT_CAPS = {"max_group_order": 10_000, "max_chain_rank": 300_000, "max_pbw_degree": 12}
DEFAULT_SEED = 20_240_601

TWO_DIM = {"base": {"p": 3, "precision": 8}, "rank": 2, "bracket": [[0, 1, 1, 3], [1, 0, 1, -3]]}

SUITE_DEFAULTS: dict[str, dict[str, Any]] = {
    "connes-bound": {"rings": ["Z/4", "Z/9", "F_2[e]", "Mat_2(F_2)"], "max_degree": 4},
    "lqt": {"rings": ["F_2", "F_3", "Z/4"], "ranks": [1, 2, 3], "target": "dropped",
            "theta_ring": "F_2", "theta_max_degree": 3, "kill_rank": 2, "kill_degree": 2,
            "kill_bound": 10_000, "tower_ring": "Z_3^3", "tower_rank": 2, "tower_bound": 100},
    "lazard-lambda": {"lie": TWO_DIM, "m": 1, "n_start": 1, "depth": 2, "degree_cap": 2},
    "p-special": {"p": 3, "degree_cap": 3},
    "ch-exp-log": {"lie": TWO_DIM, "ch_precision": 3, "triples": 200, "ring": "Z_3^4", "m": 1,
                   "i": 2, "samples": 100},
    "eta": {"lie": TWO_DIM, "m": 1, "i": 2, "pairs": 50},
    "volodin": {"acyclic": [[3, "F_2", 1]], "congruence": ["Z_3^2"]},
    "towers": {"pro_zero_depth": 6, "connes_ring": "Z_3^3", "connes_degree": 3,
               "scaling_ring": "Z_3^4", "scaling_rank": 2, "scaling_degree": 2,
               "comparison_ring": "Z_3^4", "comparison_depth": 4},
    "primitives": {"ring": "F_5[e]", "max_degree": 3},
}
SUITES = tuple(SUITE_DEFAULTS)
COMMON_KEYS = {"seed", "workers", "record_runtime"} | set(DEFAULT_CAPS)


class InputError(Exception):
    """Malformed input; the message names the location."""


# ---------------------------------------------------------------- input parsing

_NAMED = re.compile(r"^(?:Z/(\d+)|F_(\d+)|F_(\d+)\[e\]|Z_(\d+)\^(\d+)|Z)$")


def named_ring(text: str) -> FinRing:
    """``Z``, ``Z/n``, ``F_p``, ``F_p[e]`` (dual numbers), ``Z_p^N`` or ``Mat_r(...)``."""
    text = text.strip()
    mat = re.match(r"^Mat_(\d+)\((.*)\)$", text)
    if mat:
        return matrix_ring(named_ring(mat.group(2)), int(mat.group(1)))
    hit = _NAMED.match(text)
    if not hit:
        raise InputError(f"unknown ring name {text!r}")
    zmod, field_p, dual_p, padic_p, padic_n = hit.groups()
    if text == "Z":
        return zmod_ring(0)
    if zmod:
        return zmod_ring(int(zmod))
    if field_p:
        return zmod_ring(int(field_p))
    if dual_p:
        return dual_numbers(int(dual_p))
    return padic_integers(int(padic_p), int(padic_n))


def _read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _algebra(obj: Any, where: str):
    try:
        if isinstance(obj, str):
            return named_ring(obj)
        return load_algebra(obj)
    except InputError as exc:
        raise InputError(f"{where}: {exc}") from exc
    except (ValueError, KeyError, TypeError, ContractError) as exc:
        raise InputError(f"{where}: {exc}") from exc


def load_ring(arg: str) -> FinRing:
    """A ring from a JSON file or a ring name."""
    if os.path.exists(arg):
        R = _algebra(_read_json(arg), arg)
    else:
        R = _algebra(arg, "--ring")
    if not isinstance(R, FinRing):
        raise InputError(f"{arg}: expected a ring, found a Lie ring")
    return R


def load_lie(arg: str) -> LieRing:
    if not os.path.exists(arg):
        raise InputError(f"{arg}: no such file")
    g = _algebra(_read_json(arg), arg)
    if not isinstance(g, LieRing):
        raise InputError(f"{arg}: expected a Lie ring (a 'bracket' field)")
    return g


def group_from_dict(obj: Any, cap: int = DEFAULT_CAPS["max_group_order"]) -> FinGroup:
    """Explicit table, or a reference to a construction.

    Constructions: ``{"construction": "cyclic", "order": n}``,
    ``{"construction": "heisenberg", "p": p}``,
    ``{"construction": "congruence_quotient", "ring": R, "r": r, "m": m, "i": i}`` and
    ``{"construction": "level_group", "lie": g, "m": m, "i": i}``.
    """
    if not isinstance(obj, dict):
        raise ValueError("group description must be an object")
    kind = obj.get("construction")
    if kind is None:
        return FinGroup.from_dict(obj, cap=cap)
    fields = {"cyclic": {"order"}, "heisenberg": {"p"},
              "congruence_quotient": {"ring", "r", "m", "i"}, "level_group": {"lie", "m", "i"}}
    if kind not in fields:
        raise ValueError(f"unknown construction {kind!r}")
    extra = set(obj) - fields[kind] - {"construction"}
    missing = fields[kind] - set(obj)
    if extra or missing:
        raise ValueError(f"{kind}: missing {sorted(missing)}, unknown {sorted(extra)}")
    if kind == "cyclic":
        n = int(obj["order"])
        if n > cap:
            raise ResourceError(f"group of order {n} exceeds the cap {cap}")
        return FinGroup([[(a + b) % n for b in range(n)] for a in range(n)])
    if kind == "heisenberg":
        K, _ = lazard.heisenberg_group(int(obj["p"]))
        return K
    if kind == "congruence_quotient":
        A = _algebra(obj["ring"], "ring")
        return congruence_quotient(A, int(obj["r"]), int(obj["m"]), int(obj["i"]), cap=cap)
    g = _algebra(obj["lie"], "lie")
    return lazard.level_group(g, int(obj["m"]), int(obj["i"]), cap=cap)


def load_group(arg: str, cap: int = DEFAULT_CAPS["max_group_order"]) -> FinGroup:
    obj = _read_json(arg)
    try:
        return group_from_dict(obj, cap)
    except (ValueError, KeyError, TypeError, ContractError) as exc:
        raise InputError(f"{arg}: {exc}") from exc


def parse_coeff(text: str | None) -> int:
    """``Z`` gives 0, ``Zmod:k`` gives k."""
    if text is None or text == "Z":
        return 0
    hit = re.fullmatch(r"Zmod:(\d+)", text)
    if not hit or int(hit.group(1)) < 2:
        raise InputError(f"--coeff: expected Z or Zmod:k with k >= 2, got {text!r}")
    return int(hit.group(1))


def parse_permutation(text: str, n: int | None = None) -> tuple[int, ...]:
    """Cycle notation with 1-based points, e.g. ``(1 2 3)(4 5)``; ``a -> b`` along each cycle."""
    text = text.strip()
    if not re.fullmatch(r"(\(\s*\d+(\s+\d+)*\s*\)|\(\s*\))*", text):
        raise InputError(f"--perm: cannot parse {text!r}")
    cycles = [[int(t) - 1 for t in c.split()] for c in re.findall(r"\(([^)]*)\)", text)]
    points = [x for c in cycles for x in c]
    if any(x < 0 for x in points) or len(set(points)) != len(points):
        raise InputError(f"--perm: repeated or non-positive points in {text!r}")
    size = max([x + 1 for x in points] + [n or 0])
    sigma = list(range(size))
    for c in cycles:
        for a, b in zip(c, c[1:] + c[:1]):
            sigma[a] = b
    return tuple(sigma)


def format_homology(groups: dict[int, FGAbelianGroup]) -> str:
    return "; ".join(f"H_{n} = {H}" for n, H in sorted(groups.items()))


# ---------------------------------------------------------------- caps

@contextlib.contextmanager
def resource_caps(caps: dict[str, int]):
    """Apply chain-rank caps to the engine modules for the duration of a check."""
    rank = caps["max_chain_rank"]
    saved = [(hochschild, "MAX_TENSOR_RANK"), (lazard, "MAX_BAR_RANK"), (lie, "MAX_BASIS"),
             (volodin, "MAX_CHAINS")]
    old = [getattr(mod, name) for mod, name in saved]
    for mod, name in saved:
        setattr(mod, name, rank)
    try:
        yield
    finally:
        for (mod, name), value in zip(saved, old):
            setattr(mod, name, value)


def _guard_order(G: FinGroup, caps: dict[str, int]) -> FinGroup:
    if G.order > caps["max_group_order"]:
        raise ResourceError(f"group of order {G.order} exceeds max_group_order")
    return G


# ---------------------------------------------------------------- checks
# Each check returns a list of records (dicts without the runtime); they are
# pure functions of their JSON arguments so they can run in worker processes.

def _record(check: str, inputs: dict, bound: Any, observed: Any, passed: bool) -> dict:
    if check not in REFERENCES:
        raise KeyError(f"check {check!r} has no registered reference")
    return {"check": check, "reference": REFERENCES[check], "inputs": inputs,
            "bound": bound, "observed": observed, "pass": bool(passed)}


def _homology_record(H: FGAbelianGroup) -> dict:
    return {"group": str(H), "free_rank": H.free_rank, "torsion": list(H.torsion)}


def check_connes(ring: str, max_degree: int, caps: dict, seed: int) -> list[dict]:
    P = hochschild.cyclic_package(named_ring(ring), max_degree + 1)
    out = []
    for n in range(max_degree + 1):
        H = hochschild.connes_kernel_homology(P, n)
        bound = math.factorial(n)
        e = H.exponent()
        out.append(_record("connes-kernel-exponent", {"ring": ring, "n": n}, bound,
                           dict(_homology_record(H), exponent=e), e != 0 and bound % e == 0))
    return out


def check_kappa(ring: str, r: int, target: str, caps: dict, seed: int) -> list[dict]:
    top = min(r, 3)
    D = lie.kappa(r, named_ring(ring), top, drop_signed=(target == "dropped"))
    inputs = {"ring": ring, "r": r, "target": target, "degrees": top}
    chain = {n: D.commutation_defect(n).is_zero() for n in range(1, top + 1)}
    onto = {n: D.surjective_in(n) for n in range(top + 1)}
    return [
        _record("kappa-chain-map", inputs, "zero defect in every degree",
                {str(n): ok for n, ok in chain.items()}, all(chain.values())),
        _record("kappa-surjective", inputs, "surjective in degrees <= r",
                {str(n): ok for n, ok in onto.items()}, all(onto.values())),
    ]


def _kron_trace(mats, sigma, r, modulus):
    """Trace of ``(f_1 x ... x f_n) P_sigma`` on ``V^n``, computed entrywise."""
    n = len(mats)
    total = 0
    for a in itertools.product(range(r), repeat=n):
        b = [0] * n
        for i in range(n):
            b[sigma[i]] = a[i]
        total += math.prod(mats[k][a[k]][b[k]] for k in range(n))
    return total % modulus if modulus else total


def check_theta(ring: str, r: int, max_degree: int, caps: dict, seed: int) -> list[dict]:
    R = named_ring(ring)
    if R.rank != 1:
        raise ValueError("theta duality is checked over rank one rings")
    units = [[[int((a, b) == (x, y)) for b in range(r)] for a in range(r)]
             for x in range(r) for y in range(r)]
    out = []
    for n in range(1, max_degree + 1):
        bad = 0
        count = 0
        for choice in itertools.product(units, repeat=n):
            vecs = [[[(v,) for v in row] for row in M] for M in choice]
            for sigma in itertools.permutations(range(n)):
                count += 1
                if lie.theta_scalar(sigma, vecs, R) != _kron_trace(choice, sigma, r, R.modulus):
                    bad += 1
        out.append(_record("theta-duality", {"ring": ring, "r": r, "n": n}, 0,
                           {"pairs": count, "mismatches": bad}, bad == 0))
    return out


def check_kernel_killing(rings: list, r: int, n: int, bound: int, caps: dict, seed: int) -> list[dict]:
    e = lie.kernel_killing_search(r, n, [named_ring(x) for x in rings], bound)
    return [_record("kernel-killing", {"rings": rings, "r": r, "n": n}, bound, e,
                    e is not None and e <= bound)]


def check_lqt_tower(ring: str, r: int, bound: int, caps: dict, seed: int) -> list[dict]:
    f = lie.lqt_tower(named_ring(ring), r, r)
    v = quasi_isogeny_verdict(f, r, bound)
    return [_record("lqt-tower-isogeny", {"ring": ring, "r": r, "degrees": r}, bound, v.to_dict(),
                    v.status == "isogeny" and v.reverify())]


def check_lambda(lie_data: dict, m: int, n_start: int, depth: int, degree_cap: int,
                 caps: dict, seed: int) -> list[dict]:
    g = load_algebra(lie_data)
    rep = lazard.lambda_coalgebra_check(g, m, n_start, depth, degree_cap,
                                        cap=caps["max_group_order"])
    inputs = {"m": m, "n_start": n_start, "depth": depth, "degree_cap": degree_cap}
    out = []
    for i, row in rep.dims.items():
        expected = {str(n): rep.expected_level(n) for n in row}
        out.append(_record("lambda-levels", dict(inputs, level=i), expected,
                           {str(n): v for n, v in row.items()}, rep.levels_match
                           and all(v == rep.expected_level(n) for n, v in row.items())))
    for i, row in rep.transitions.items():
        expected = {str(n): rep.h.exterior_dim(n) for n in row}
        out.append(_record("lambda-transitions", dict(inputs, level=i), expected,
                           {str(n): v for n, v in row.items()},
                           all(v == rep.h.exterior_dim(n) for n, v in row.items())))
    return out


def check_p_special(p: int, degree_cap: int, caps: dict, seed: int) -> list[dict]:
    K, filtration = lazard.heisenberg_group(p)
    _guard_order(K, caps)
    out = []
    cyclic = FinGroup([[(a + b) % p for b in range(p)] for a in range(p)])
    for name, G, filt in [(f"Z/{p}", cyclic, [[0], list(range(p))]),
                          (f"Heisenberg({p})", K, filtration)]:
        rep = lazard.p_special_bound_check(G, filt, degree_cap, p)
        for a in range(1, degree_cap + 1):
            e = rep.exponents[a]
            out.append(_record("p-special-bound", {"group": name, "steps": rep.steps, "a": a},
                               rep.bounds[a], dict(_homology_record(rep.degrees[a]), exponent=e),
                               bool(e) and rep.bounds[a] % e == 0))
    return out


def check_ch(lie_data: dict, precision: int, triples: int, caps: dict, seed: int) -> list[dict]:
    g = load_algebra(lie_data)
    law = lazard.CHLaw(g)
    q = law.p ** precision
    rng = random.Random(seed)
    bad = 0
    for _ in range(triples):
        x, y, z = (tuple(rng.randrange(q) for _ in range(g.rank)) for _ in range(3))
        left = law.multiply(law.multiply(x, y, precision), z, precision)
        if left != law.multiply(x, law.multiply(y, z, precision), precision):
            bad += 1
    return [_record("ch-associative", {"precision": precision, "triples": triples, "seed": seed},
                    0, {"failures": bad}, bad == 0)]


def check_exp_log(ring: str, m: int, i: int, samples: int, caps: dict, seed: int) -> list[dict]:
    A = named_ring(ring)
    E = lazard.exp_log_matrix(A, 2, m, i, "exp")
    L = lazard.exp_log_matrix(A, 2, m, i, "log")
    p = A.p
    q, step = p ** (m + i), p ** m
    d = 4 * A.rank
    rng = random.Random(seed + 1)
    log_exp = exp_log = power = 0
    for _ in range(samples):
        X = tuple(step * rng.randrange(q // step) for _ in range(d))
        Y = E(X)
        log_exp += L(Y) != X
        exp_log += E(L(Y)) != Y
        power += E(tuple(p * v % q for v in X)) != E.power(Y, p)
    inputs = {"ring": ring, "r": 2, "m": m, "i": i, "samples": samples, "seed": seed}
    return [
        _record("exp-log-inverse", inputs, 0, {"log_exp_failures": log_exp, "exp_log_failures": exp_log},
                log_exp == 0 and exp_log == 0),
        _record("exp-power", inputs, 0, {"failures": power}, power == 0),
    ]


def check_eta(lie_data: dict, m: int, i: int, pairs: int, caps: dict, seed: int) -> list[dict]:
    g = load_algebra(lie_data)
    E = lazard.eta_map(g, m, i)
    if E.degree_cap > caps["max_pbw_degree"]:
        raise ResourceError(f"PBW degree {E.degree_cap} exceeds max_pbw_degree")
    q = E.envelope.p ** max(E.quotient_precision, 0)
    rng = random.Random(seed + 2)
    bad = unfiltered = 0
    for _ in range(pairs):
        x = tuple(rng.randrange(q) for _ in range(g.rank))
        y = tuple(rng.randrange(q) for _ in range(g.rank))
        bad += bool(E.multiplicativity_defect(x, y))
        unfiltered += not E.respects_filtration(x)
    inputs = {"m": m, "i": i, "pairs": pairs, "pbw_degree": E.degree_cap, "seed": seed}
    return [_record("eta-multiplicative", inputs, 0, {"failures": bad}, bad == 0),
            _record("eta-filtration", inputs, 0, {"failures": unfiltered}, unfiltered == 0)]


def check_volodin_acyclic(r: int, ring: str, n: int, caps: dict, seed: int) -> list[dict]:
    rep = volodin.acyclicity_check(r, named_ring(ring), n)
    return [_record("volodin-acyclic", {"r": r, "ring": ring, "n": n}, "0",
                    _homology_record(rep.reduced), rep.holds)]


def check_volodin_examples(caps: dict, seed: int) -> list[dict]:
    X = volodin.volodin_complex(2, zmod_ring(2), (), 2)
    H = X.reduced_homology(1)
    Y = volodin.volodin_complex(1, zmod_ring(4), [[2]], 2)
    K = Y.homology(1)
    return [
        _record("volodin-control", {"r": 2, "ring": "F_2", "n": 1}, "Z/2 + Z/2",
                _homology_record(H), H == FGAbelianGroup(0, (2, 2))),
        _record("volodin-relative", {"r": 1, "ring": "Z/4", "ideal": "(2)", "n": 1}, "Z/2",
                _homology_record(K), K == FGAbelianGroup(0, (2,))),
    ]


def check_volodin_congruence(ring: str, caps: dict, seed: int) -> list[dict]:
    A = named_ring(ring)
    m = lazard.lazard_shift(A.p)
    c = volodin.congruence_into_volodin(A, 1, m, A.precision)
    return [_record("volodin-congruence", {"ring": ring, "r": 1, "m": m, "i": A.precision},
                    "trivial cokernel", c.to_dict(), c.cokernel.is_trivial())]


def _multiplication_tower(p: int, depth: int) -> Tower:
    levels = [ChainComplex(p ** i, {0: 1}) for i in range(1, depth + 1)]
    trans = [ChainMap(levels[i + 1], levels[i], {0: IntMatrix(1, 1, [(0, 0, p)], p ** (i + 1))})
             for i in range(depth - 1)]
    return Tower(levels, trans)


def check_tower_basics(depth: int, caps: dict, seed: int) -> list[dict]:
    T = _multiplication_tower(3, depth)
    v = pro_zero_verdict(T, 0)
    C = ChainComplex(0, {0: 1})
    const = Tower.constant(C, 3)
    f = TowerMap(const, const, [ChainMap(L, L, {0: IntMatrix(1, 1, [(0, 0, 2)], 0)})
                                for L in const.levels])
    w = quasi_isogeny_verdict(f, 0, 10)
    return [
        _record("pro-zero-multiplication", {"p": 3, "depth": depth}, "pro_zero", v.to_dict(),
                v.status == "pro_zero" and v.reverify()),
        _record("isogeny-multiplication", {"depth": 3}, 2, w.to_dict(),
                w.status == "isogeny" and w.witness == 2 and w.reverify()),
    ]


def check_connes_tower(ring: str, degree: int, caps: dict, seed: int) -> list[dict]:
    _, pi = hochschild.cyclic_tower(named_ring(ring), degree + 1)
    bound = math.factorial(degree)
    v = quasi_isogeny_verdict(pi, degree, bound)
    return [_record("connes-projection-isogeny", {"ring": ring, "degrees": degree}, bound, v.to_dict(),
                    v.status == "isogeny" and bound % v.witness == 0 and v.reverify())]


def check_scaling_tower(ring: str, r: int, degree: int, caps: dict, seed: int) -> list[dict]:
    A = named_ring(ring)
    f = lazard.chevalley_scaling_tower(A, r, 1, degree)
    bound = A.p ** degree
    v = quasi_isogeny_verdict(f, degree, bound)
    return [_record("chevalley-scaling-isogeny", {"ring": ring, "r": r, "m": 1, "degrees": degree},
                    bound, v.to_dict(),
                    v.status == "isogeny" and bound % v.witness == 0 and v.reverify())]


def check_group_lie(ring: str, depth: int, caps: dict, seed: int) -> list[dict]:
    A = named_ring(ring)
    m = lazard.lazard_shift(A.p)
    c = lazard.congruence_lie_comparison(A, 1, m, depth, 2, cap=caps["max_group_order"])
    return [_record("group-lie-multiplier", {"ring": ring, "r": 1, "m": m, "depth": depth,
                                             "coefficients": c.coefficients},
                    A.p, c.to_dict(), c.multipliers[1] == A.p and c.multipliers[0] == 1)]


def check_primitives(ring: str, max_degree: int, caps: dict, seed: int) -> list[dict]:
    lam, _ = hochschild.connes_complex(named_ring(ring), max_degree)
    S = lie.SymShifted(lam, max_degree + 1)
    out = []
    for n in range(1, max_degree + 1):
        c = lie.weight_one_comparison(S, n)
        out.append(_record("primitives-weight-one", {"ring": ring, "n": n}, "zero defect",
                           {"primitives": str(c.primitives), "weight_one": str(c.weight_one),
                            "defect": str(c.defect)}, c.equal))
    return out


# ---------------------------------------------------------------- suites

Task = tuple[str, Callable[..., list], dict]


def suite_tasks(name: str, cfg: dict) -> list[Task]:
    """Ordered ``(label, check, kwargs)`` triples for a suite."""
    if name == "connes-bound":
        return [(f"connes[{R}]", check_connes, {"ring": R, "max_degree": cfg["max_degree"]})
                for R in cfg["rings"]]
    if name == "lqt":
        tasks: list[Task] = [(f"kappa[{R},r={r}]", check_kappa, {"ring": R, "r": r, "target": cfg["target"]})
                             for r in cfg["ranks"] for R in cfg["rings"]]
        tasks += [(f"theta[r={r}]", check_theta,
                   {"ring": cfg["theta_ring"], "r": r, "max_degree": cfg["theta_max_degree"]})
                  for r in cfg["ranks"]]
        tasks.append(("kernel-killing", check_kernel_killing,
                      {"rings": cfg["rings"], "r": cfg["kill_rank"], "n": cfg["kill_degree"],
                       "bound": cfg["kill_bound"]}))
        tasks.append(("lqt-tower", check_lqt_tower,
                      {"ring": cfg["tower_ring"], "r": cfg["tower_rank"], "bound": cfg["tower_bound"]}))
        return tasks
    if name == "lazard-lambda":
        return [("lambda", check_lambda, {"lie_data": cfg["lie"], "m": cfg["m"], "n_start": cfg["n_start"],
                                          "depth": cfg["depth"], "degree_cap": cfg["degree_cap"]})]
    if name == "p-special":
        return [("p-special", check_p_special, {"p": cfg["p"], "degree_cap": cfg["degree_cap"]})]
    if name == "ch-exp-log":
        return [("ch", check_ch, {"lie_data": cfg["lie"], "precision": cfg["ch_precision"],
                                  "triples": cfg["triples"]}),
                ("exp-log", check_exp_log, {"ring": cfg["ring"], "m": cfg["m"], "i": cfg["i"],
                                            "samples": cfg["samples"]})]
    if name == "eta":
        return [("eta", check_eta, {"lie_data": cfg["lie"], "m": cfg["m"], "i": cfg["i"],
                                    "pairs": cfg["pairs"]})]
    if name == "volodin":
        tasks = [(f"acyclic[r={r},{R},n={n}]", check_volodin_acyclic, {"r": r, "ring": R, "n": n})
                 for r, R, n in cfg["acyclic"]]
        tasks.append(("examples", check_volodin_examples, {}))
        tasks += [(f"congruence[{R}]", check_volodin_congruence, {"ring": R}) for R in cfg["congruence"]]
        return tasks
    if name == "towers":
        return [("basics", check_tower_basics, {"depth": cfg["pro_zero_depth"]}),
                ("connes-tower", check_connes_tower, {"ring": cfg["connes_ring"],
                                                      "degree": cfg["connes_degree"]}),
                ("scaling-tower", check_scaling_tower, {"ring": cfg["scaling_ring"], "r": cfg["scaling_rank"],
                                                        "degree": cfg["scaling_degree"]}),
                ("group-lie", check_group_lie, {"ring": cfg["comparison_ring"],
                                                "depth": cfg["comparison_depth"]})]
    if name == "primitives":
        return [("primitives", check_primitives, {"ring": cfg["ring"], "max_degree": cfg["max_degree"]})]
    raise InputError(f"unknown suite {name!r}")


def resolve_config(name: str, overrides: dict | None) -> dict:
    if name not in SUITE_DEFAULTS:
        raise InputError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    overrides = overrides or {}
    if not isinstance(overrides, dict):
        raise InputError("config must be a JSON object")
    allowed = set(SUITE_DEFAULTS[name]) | COMMON_KEYS
    unknown = sorted(set(overrides) - allowed)
    if unknown:
        raise InputError(f"config: unknown keys {unknown} for suite {name}")
    cfg = dict(SUITE_DEFAULTS[name])
    cfg.update({k: v for k, v in DEFAULT_CAPS.items()})
    cfg.update({"seed": DEFAULT_SEED, "workers": 1, "record_runtime": False})
    cfg.update(overrides)
    return cfg


def _run_task(task: tuple[str, Callable, dict, dict, int]) -> dict:
    label, fn, kwargs, caps, seed = task
    start = time.perf_counter()
    outcome: dict[str, Any] = {"label": label}
    try:
        with resource_caps(caps):
            outcome["records"] = fn(caps=caps, seed=seed, **kwargs)
    except ResourceError as exc:
        outcome["error"] = ("resource", str(exc))
    except InputError as exc:
        outcome["error"] = ("input", str(exc))
    outcome["runtime"] = time.perf_counter() - start
    return outcome


def run_suite(name: str, config_path: str | None = None, output_path: str | None = None,
              stream=None) -> int:
    """Run a suite, write its JSON report and print a summary; returns the exit code."""
    stream = stream or sys.stdout
    try:
        overrides = _read_json(config_path) if config_path else {}
        cfg = resolve_config(name, overrides)
        tasks = suite_tasks(name, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    caps = {k: int(cfg[k]) for k in DEFAULT_CAPS}
    seed = int(cfg["seed"])
    jobs = [(label, fn, kwargs, caps, seed) for label, fn, kwargs in tasks]
    workers = max(1, int(cfg["workers"]))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_task, jobs))
    else:
        outcomes = [_run_task(job) for job in jobs]

    records, lines, code = [], [], EXIT_OK
    for out in outcomes:
        if "error" in out:
            kind, msg = out["error"]
            check_code = EXIT_RESOURCE if kind == "resource" else EXIT_INPUT
            code = max(code, check_code)
            rec = {"check": out["label"], "error": kind, "message": msg, "pass": False}
            if cfg["record_runtime"]:
                rec["runtime"] = round(out["runtime"], 3)
            records.append(rec)
            lines.append(f"{'CAP ' if kind == 'resource' else 'ERR '} {out['label']}: {msg}"
                         f"  ({out['runtime']:.2f}s)")
            continue
        share = out["runtime"] / max(len(out["records"]), 1)
        for rec in out["records"]:
            if rec["reference"] != REFERENCES.get(rec["check"]):
                raise RuntimeError(f"record {rec['check']} is not in the reference registry")
            if cfg["record_runtime"]:
                rec["runtime"] = round(share, 3)
            records.append(rec)
            if not rec["pass"] and code == EXIT_OK:
                code = EXIT_FAIL
            lines.append(f"{'PASS' if rec['pass'] else 'FAIL'} {rec['check']} "
                         f"{json.dumps(rec['inputs'], sort_keys=True)}")
        lines.append(f"     [{out['label']}: {out['runtime']:.2f}s]")
    if code == EXIT_INPUT and any(r.get("error") == "resource" for r in records):
        code = EXIT_RESOURCE
    status = {EXIT_OK: "pass", EXIT_FAIL: "fail", EXIT_INPUT: "error", EXIT_RESOURCE: "resource"}[code]
    report = {"suite": name, "config": cfg, "status": status, "records": records}
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if output_path is None:
        output_path = f"{name}.report.json"
    if output_path != "-":
        with open(output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    for line in lines:
        print(line, file=stream)
    passed = sum(1 for r in records if r["pass"])
    print(f"suite {name}: {status} ({passed}/{len(records)} checks passed)", file=stream)
    if output_path == "-":
        stream.write(text)
    return code


# ---------------------------------------------------------------- compute

def _emit(args, groups: dict[int, FGAbelianGroup], prefix: str = "") -> None:
    if args.format == "json":
        print(json.dumps({"homology": {str(n): H.to_dict() | {"group": str(H)}
                                       for n, H in sorted(groups.items())},
                          **({"level": prefix} if prefix else {})}, sort_keys=True))
    else:
        print((f"{prefix}: " if prefix else "") + format_homology(groups))


def _complex_output(args, C: ChainComplex, top: int, prefix: str = "") -> None:
    coeff = parse_coeff(args.coeff)
    if coeff:
        if C.modulus and C.modulus % coeff:
            raise InputError(f"--coeff: Z/{coeff} is not a quotient of the base Z/{C.modulus}")
        C = C.reduce_mod(coeff)
    if args.matrix is not None:
        print(C.d(args.matrix).to_triplets(), end="")
        return
    _emit(args, {n: C.homology(n) for n in range(top + 1)}, prefix)


def _levels(R: FinRing, depth: int | None) -> list[tuple[str, FinRing]]:
    if depth is None:
        return [("", R)]
    if R.p is None:
        raise InputError("--depth needs a p-adic ring")
    if depth > R.precision:
        raise InputError(f"--depth {depth} exceeds the precision {R.precision}")
    return [(f"level {i}", R.level(i)) for i in range(1, depth + 1)]


def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise InputError(f"--{n.replace('_', '-')} is required for {args.command}")


def compute(args) -> int:
    cmd = args.command
    degree = args.degree if args.degree is not None else 2
    if cmd in ("hochschild", "cyclic"):
        _need(args, "ring")
        for label, R in _levels(load_ring(args.ring), args.depth):
            if cmd == "hochschild":
                C = hochschild.hochschild_complex(R, degree + 1)
            else:
                C = hochschild.cyclic_package(R, degree + 1).total
            _complex_output(args, C, degree, label)
        return EXIT_OK
    if cmd == "chevalley":
        _need(args, "lie")
        g = load_lie(args.lie)
        top = min(degree, g.rank)
        C = lie.chevalley_complex(g, min(top + 1, g.rank)).complex
        _complex_output(args, C, top)
        return EXIT_OK
    if cmd == "bar":
        _need(args, "group")
        G = load_group(args.group)
        coeff = parse_coeff(args.coeff)
        bar = lazard.BarComplex(G)
        if args.matrix is not None:
            print(bar.d(args.matrix, coeff).to_triplets(), end="")
        else:
            _emit(args, {n: bar.homology(n, coeff) for n in range(degree + 1)})
        return EXIT_OK
    if cmd == "homology":
        _need(args, "complex")
        C = load_complex(args.complex)
        _complex_output(args, C, args.degree if args.degree is not None else C.top_degree)
        return EXIT_OK
    if cmd == "kappa":
        _need(args, "ring")
        R = load_ring(args.ring)
        D = lie.kappa(args.rank, R, degree, drop_signed=not args.full_target)
        if args.matrix is not None:
            print(D.map[args.matrix].to_triplets(), end="")
            return EXIT_OK
        chain = D.is_chain_map()
        if args.format == "json":
            print(json.dumps({"chain_map": chain,
                              "surjective": {str(n): D.surjective_in(n) for n in range(degree + 1)},
                              "kernel_homology": {str(n): str(D.kernel_homology(n)) for n in range(degree)}
                              if chain else None}, sort_keys=True))
        else:
            print(f"chain map: {'yes' if chain else 'no'}")
            print("surjective: " + ", ".join(f"{n}={'yes' if D.surjective_in(n) else 'no'}"
                                             for n in range(degree + 1)))
            if chain:
                print("kernel: " + format_homology({n: D.kernel_homology(n) for n in range(degree)}))
        return EXIT_OK
    if cmd == "theta":
        _need(args, "perm", "matrices")
        R = load_ring(args.ring) if args.ring else zmod_ring(0)
        mats = _matrix_list(args.matrices, R)
        sigma = parse_permutation(args.perm, len(mats))
        if len(sigma) != len(mats):
            raise InputError(f"--perm acts on {len(sigma)} points but {len(mats)} matrices were given")
        if R.rank == 1:
            value: Any = lie.theta_scalar(sigma, mats, R)
            print(json.dumps({"theta": value}) if args.format == "json" else value)
        else:
            terms = lie.theta(sigma, mats, R)
            rows = {" | ".join(",".join(map(str, c)) for c in key): v for key, v in sorted(terms.items())}
            if args.format == "json":
                print(json.dumps({"theta": rows}, sort_keys=True))
            else:
                for k, v in rows.items():
                    print(f"{v} * [{k}]")
        return EXIT_OK
    if cmd == "ch-mult":
        _need(args, "lie", "x", "y")
        g = load_lie(args.lie)
        x, y = _vector(args.x, g.rank, "--x"), _vector(args.y, g.rank, "--y")
        precision = args.precision if args.precision is not None else 1
        z = lazard.ch_multiply(g, x, y, precision)
        print(json.dumps({"product": list(z)}) if args.format == "json" else " ".join(map(str, z)))
        return EXIT_OK
    if cmd == "level-group":
        _need(args, "lie")
        g = load_lie(args.lie)
        law = lazard.CHLaw(g)
        depth = args.depth if args.depth is not None else 1
        out = {}
        for i in range(1, depth + 1):
            G = lazard.level_group(g, law.m, i)
            bar = lazard.BarComplex(G)
            out[i] = (G.order, bar.homology(1))
        if args.format == "json":
            print(json.dumps({str(i): {"order": o, "H_1": str(H)} for i, (o, H) in out.items()},
                             sort_keys=True))
        else:
            for i, (o, H) in out.items():
                print(f"level {i}: order = {o}; H_1 = {H}")
        return EXIT_OK
    if cmd == "volodin":
        _need(args, "ring")
        R = load_ring(args.ring)
        J = json.loads(args.ideal) if args.ideal else []
        X = volodin.volodin_complex(args.rank, R, J, degree + 1)
        _emit(args, {n: X.homology(n) for n in range(degree + 1)})
        return EXIT_OK
    raise InputError(f"unknown subcommand {cmd!r}")


def _vector(text: str, rank: int, where: str) -> tuple[int, ...]:
    try:
        v = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{where}: {exc.msg} at column {exc.colno}") from exc
    if not isinstance(v, list) or len(v) != rank or not all(isinstance(a, int) for a in v):
        raise InputError(f"{where}: expected a list of {rank} integers")
    return tuple(v)


def _matrix_list(arg: str, R: FinRing) -> list:
    """Square matrices as nested lists; entries are integers (rank one) or coordinate lists."""
    data = _read_json(arg) if os.path.exists(arg) else _parse_inline(arg)
    if not isinstance(data, list) or not data:
        raise InputError("--matrices: expected a non-empty list of matrices")
    r = len(data[0])
    out = []
    for k, M in enumerate(data):
        if not isinstance(M, list) or len(M) != r or any(not isinstance(row, list) or len(row) != r for row in M):
            raise InputError(f"--matrices[{k}]: expected a {r}x{r} matrix")
        rows = []
        for row in M:
            entries = []
            for e in row:
                v = [e] if isinstance(e, int) else e
                if not isinstance(v, list) or len(v) != R.rank:
                    raise InputError(f"--matrices[{k}]: entry {e!r} is not a ring element")
                entries.append(tuple(a % R.modulus if R.modulus else a for a in v))
            rows.append(entries)
        out.append(rows)
    return out


def _parse_inline(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"--matrices: {exc.msg} at column {exc.colno}") from exc


def load_complex(path: str) -> ChainComplex:
    """``{"modulus": m, "ranks": {"n": r}, "boundaries": {"n": [[row, col, value], ...]}}``."""
    obj = _read_json(path)
    try:
        if not isinstance(obj, dict):
            raise ValueError("expected an object")
        extra = set(obj) - {"modulus", "ranks", "boundaries"}
        if extra:
            raise ValueError(f"unknown fields {sorted(extra)}")
        m = int(obj.get("modulus", 0))
        ranks = {int(n): int(r) for n, r in obj["ranks"].items()}
        bds = {}
        for n, entries in obj.get("boundaries", {}).items():
            n = int(n)
            bds[n] = IntMatrix(ranks.get(n - 1, 0), ranks.get(n, 0),
                               [tuple(int(v) for v in e) for e in entries], m)
        return ChainComplex(m, ranks, bds)
    except (ValueError, KeyError, TypeError, AttributeError, ContractError) as exc:
        raise InputError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------- entry point

COMPUTE_COMMANDS = ("hochschild", "cyclic", "chevalley", "bar", "kappa", "theta", "ch-mult",
                    "level-group", "volodin", "homology")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prociso", description="Exact homological algebra engine.")
    sub = parser.add_subparsers(dest="mode", required=True)
    s = sub.add_parser("suite", help="run a verification suite")
    s.add_argument("name", nargs="?", help=f"one of {', '.join(SUITES)}")
    s.add_argument("--config", help="JSON file overriding suite parameters")
    s.add_argument("--output", help="report path ('-' for stdout)")
    s.add_argument("--list", action="store_true", help="list suites and exit")
    c = sub.add_parser("compute", help="compute one object")
    c.add_argument("command", choices=COMPUTE_COMMANDS)
    c.add_argument("--ring", help="ring JSON file or name such as Z/4, F_3[e], Z_3^4, Mat_2(F_2)")
    c.add_argument("--lie", help="Lie ring JSON file")
    c.add_argument("--group", help="group JSON file")
    c.add_argument("--complex", help="chain complex JSON file")
    c.add_argument("--degree", type=int, help="top homological degree")
    c.add_argument("--depth", type=int, help="number of tower levels")
    c.add_argument("--coeff", help="Z or Zmod:k")
    c.add_argument("--format", choices=("human", "json"), default="human")
    c.add_argument("--perm", help="permutation in cycle notation, e.g. '(1 2 3)'")
    c.add_argument("--matrices", help="JSON list of matrices (inline or a file)")
    c.add_argument("--rank", type=int, default=1, help="matrix size r")
    c.add_argument("--ideal", help="JSON list of ideal generators")
    c.add_argument("--x", help="Lie ring element as a JSON list")
    c.add_argument("--y", help="Lie ring element as a JSON list")
    c.add_argument("--precision", type=int, help="Campbell-Hausdorff precision i")
    c.add_argument("--matrix", type=int, help="print d_N (or kappa_N) as triplets instead")
    c.add_argument("--full-target", action="store_true", help="kappa into the full coinvariant target")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.mode == "suite":
        if args.list:
            print("\n".join(SUITES))
            return EXIT_OK
        if not args.name:
            print("error: a suite name is required", file=sys.stderr)
            return EXIT_INPUT
        return run_suite(args.name, args.config, args.output)
    try:
        return compute(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceError as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ContractError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
