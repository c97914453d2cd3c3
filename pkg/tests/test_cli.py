import json

import pytest

from prociso import cli
from prociso.algebra import PadicAlgebra
from prociso.cli import (
    EXIT_FAIL, EXIT_INPUT, EXIT_OK, EXIT_RESOURCE, REFERENCES, SUITE_DEFAULTS, group_from_dict, main,
    named_ring, parse_coeff, parse_permutation, run_suite, suite_tasks, resolve_config,
)
from prociso.linalg import ResourceError

FP = {"base": {"m": 3}, "rank": 1, "unit": [1], "mult": [[0, 0, 0, 1]]}
TWO_DIM = {"base": {"p": 3, "precision": 8}, "rank": 2, "bracket": [[0, 1, 1, 3], [1, 0, 1, -3]]}
ABELIAN = {"base": {"p": 3, "precision": 4}, "rank": 2, "bracket": []}


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ---- parsing helpers

def test_named_rings():
    assert named_ring("Z/4").modulus == 4
    assert named_ring("F_3").size() == 3
    assert named_ring("F_2[e]").rank == 2
    A = named_ring("Z_3^4")
    assert isinstance(A, PadicAlgebra) and A.modulus == 81
    M = named_ring("Mat_2(F_2)")
    assert M.rank == 4 and M.modulus == 2
    assert named_ring("Z").modulus == 0
    with pytest.raises(cli.InputError):
        named_ring("Q")


def test_permutation_parsing():
    assert parse_permutation("(1 2 3)") == (1, 2, 0)
    assert parse_permutation("(1 3)", 4) == (2, 1, 0, 3)
    assert parse_permutation("()", 2) == (0, 1)
    for bad in ["(1 1)", "1 2", "(0 1)"]:
        with pytest.raises(cli.InputError):
            parse_permutation(bad)


def test_coefficients():
    assert parse_coeff("Z") == 0 and parse_coeff(None) == 0
    assert parse_coeff("Zmod:9") == 9
    for bad in ["Zmod:1", "Q", "Zmod:x"]:
        with pytest.raises(cli.InputError):
            parse_coeff(bad)


def test_group_constructions():
    assert group_from_dict({"construction": "cyclic", "order": 5}).order == 5
    assert group_from_dict({"construction": "heisenberg", "p": 3}).order == 27
    G = group_from_dict({"construction": "congruence_quotient", "ring": "Z_3^3", "r": 1, "m": 1, "i": 2})
    assert G.order == 9
    assert group_from_dict({"construction": "level_group", "lie": TWO_DIM, "m": 1, "i": 2}).order == 81
    with pytest.raises(ValueError):
        group_from_dict({"construction": "free"})
    with pytest.raises(ValueError):
        group_from_dict({"construction": "cyclic", "order": 3, "extra": 1})
    with pytest.raises(ResourceError):
        group_from_dict({"construction": "cyclic", "order": 50}, cap=10)


# ---- compute

def test_hochschild_of_a_prime_field(tmp_path, capsys):
    path = write(tmp_path, "Fp.json", FP)
    code, out, _ = run(capsys, "compute", "hochschild", "--ring", path, "--degree", "3")
    assert code == EXIT_OK
    assert out.strip() == "H_0 = Z/3; H_1 = 0; H_2 = 0; H_3 = 0"


def test_bar_of_trivial_group(tmp_path, capsys):
    path = write(tmp_path, "trivial.json", {"table": [[0]]})
    code, out, _ = run(capsys, "compute", "bar", "--group", path, "--degree", "0")
    assert code == EXIT_OK and out.strip() == "H_0 = Z"


def test_bar_of_cyclic_group_with_coefficients(tmp_path, capsys):
    path = write(tmp_path, "c4.json", {"construction": "cyclic", "order": 4})
    code, out, _ = run(capsys, "compute", "bar", "--group", path, "--degree", "3")
    assert out.strip() == "H_0 = Z; H_1 = Z/4; H_2 = 0; H_3 = Z/4"
    code, out, _ = run(capsys, "compute", "bar", "--group", path, "--degree", "2",
                       "--coeff", "Zmod:2", "--format", "json")
    data = json.loads(out)
    assert code == EXIT_OK
    assert [data["homology"][k]["group"] for k in "012"] == ["Z/2"] * 3


def test_theta_single_cycle(capsys):
    f = [[[1, 2], [3, 4]], [[0, 1], [1, 0]], [[2, 0], [1, 1]]]

    def mul(a, b):
        return [[sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
    # the cycle (1 2 3) reads its orbit as f_1, f_3, f_2
    prod = mul(mul(f[0], f[2]), f[1])
    code, out, _ = run(capsys, "compute", "theta", "--perm", "(1 2 3)", "--matrices", json.dumps(f))
    assert code == EXIT_OK and int(out) == prod[0][0] + prod[1][1]
    code, out, _ = run(capsys, "compute", "theta", "--perm", "()", "--matrices", json.dumps(f))
    traces = [m[0][0] + m[1][1] for m in f]
    assert int(out) == traces[0] * traces[1] * traces[2]


def test_theta_rejects_mismatched_permutation(capsys):
    code, _, err = run(capsys, "compute", "theta", "--perm", "(1 2 3 4)", "--matrices", "[[[1]], [[2]]]")
    assert code == EXIT_INPUT and "--perm" in err


def test_homology_and_triplets(tmp_path, capsys):
    path = write(tmp_path, "cx.json", {"modulus": 0, "ranks": {"0": 1, "1": 1},
                                       "boundaries": {"1": [[0, 0, 2]]}})
    code, out, _ = run(capsys, "compute", "homology", "--complex", path)
    assert code == EXIT_OK and out.strip() == "H_0 = Z/2; H_1 = 0"
    code, out, _ = run(capsys, "compute", "homology", "--complex", path, "--matrix", "1")
    assert out == "0 0 2\n"


def test_triplets_are_sorted(tmp_path, capsys):
    path = write(tmp_path, "c3.json", {"construction": "cyclic", "order": 3})
    code, out, _ = run(capsys, "compute", "bar", "--group", path, "--matrix", "2")
    rows = [tuple(map(int, line.split())) for line in out.splitlines()]
    assert code == EXIT_OK and rows == sorted(rows) and all(v for _, _, v in rows)
    assert max(r for r, _, _ in rows) < 2 and max(c for _, c, _ in rows) < 4


def test_chevalley_and_ch_mult(tmp_path, capsys):
    ab = write(tmp_path, "ab.json", ABELIAN)
    code, out, _ = run(capsys, "compute", "chevalley", "--lie", ab, "--degree", "2")
    assert out.strip() == "H_0 = Z/81; H_1 = Z/81 + Z/81; H_2 = Z/81"
    code, out, _ = run(capsys, "compute", "ch-mult", "--lie", ab, "--x", "[1, 2]", "--y", "[4, 5]",
                       "--precision", "2")
    assert code == EXIT_OK and out.split() == ["5", "7"]
    code, _, err = run(capsys, "compute", "ch-mult", "--lie", ab, "--x", "[1]", "--y", "[0, 0]")
    assert code == EXIT_INPUT and "--x" in err


def test_level_group_orders(tmp_path, capsys):
    path = write(tmp_path, "two.json", TWO_DIM)
    code, out, _ = run(capsys, "compute", "level-group", "--lie", path, "--depth", "2", "--format", "json")
    data = json.loads(out)
    assert code == EXIT_OK and data["1"]["order"] == 9 and data["2"]["order"] == 81


def test_volodin_and_kappa(capsys):
    code, out, _ = run(capsys, "compute", "volodin", "--ring", "Z/4", "--rank", "1",
                       "--ideal", "[[2]]", "--degree", "1")
    assert code == EXIT_OK and out.strip() == "H_0 = Z; H_1 = Z/2"
    code, out, _ = run(capsys, "compute", "kappa", "--ring", "F_2", "--rank", "1", "--degree", "1",
                       "--format", "json")
    data = json.loads(out)
    assert data["chain_map"] and data["surjective"] == {"0": True, "1": True}
    code, out, _ = run(capsys, "compute", "kappa", "--ring", "F_3", "--rank", "1", "--degree", "1",
                       "--matrix", "1")
    assert out == "0 0 1\n"


def test_cyclic_over_levels(capsys):
    code, out, _ = run(capsys, "compute", "cyclic", "--ring", "Z_3^2", "--depth", "2", "--degree", "2")
    assert out.splitlines() == ["level 1: H_0 = Z/3; H_1 = 0; H_2 = Z/3",
                                "level 2: H_0 = Z/9; H_1 = 0; H_2 = Z/9"]


def test_malformed_inputs(tmp_path, capsys):
    bad = write(tmp_path, "bad.json", '{"base":\n {"m": 3')
    code, _, err = run(capsys, "compute", "hochschild", "--ring", bad)
    assert code == EXIT_INPUT and "bad.json:2:" in err
    extra = write(tmp_path, "extra.json", dict(FP, bogus=1))
    code, _, err = run(capsys, "compute", "hochschild", "--ring", extra)
    assert code == EXIT_INPUT and "bogus" in err
    code, _, err = run(capsys, "compute", "chevalley", "--lie", extra)
    assert code == EXIT_INPUT
    code, _, _ = run(capsys, "compute", "bar")
    assert code == EXIT_INPUT
    code, _, _ = run(capsys, "compute", "nosuch")
    assert code == EXIT_INPUT


def test_compute_cap(capsys):
    code, _, err = run(capsys, "compute", "hochschild", "--ring", "Mat_3(F_2[e])", "--degree", "4")
    assert code == EXIT_RESOURCE and "cap" in err


# ---- suites

def test_unknown_suite(tmp_path, capsys):
    assert run_suite("nosuch", output_path=str(tmp_path / "r.json")) == EXIT_INPUT
    assert not (tmp_path / "r.json").exists()
    code, _, _ = run(capsys, "suite", "nosuch")
    assert code == EXIT_INPUT


def test_unknown_config_key(tmp_path):
    cfg = write(tmp_path, "cfg.json", {"rings": ["Z/4"], "colour": "red"})
    assert run_suite("connes-bound", cfg, str(tmp_path / "r.json")) == EXIT_INPUT


def test_connes_bound_suite(tmp_path, capsys):
    out = tmp_path / "connes.json"
    assert run_suite("connes-bound", None, str(out)) == EXIT_OK
    report = json.loads(out.read_text())
    assert report["status"] == "pass"
    seen = {(r["inputs"]["ring"], r["inputs"]["n"]) for r in report["records"]}
    assert seen == {(R, n) for R in ["Z/4", "Z/9", "F_2[e]", "Mat_2(F_2)"] for n in range(5)}
    z4 = {r["inputs"]["n"]: r["observed"]["group"] for r in report["records"] if r["inputs"]["ring"] == "Z/4"}
    assert z4[4] == "Z/4"
    assert "connes-bound: pass (20/20" in capsys.readouterr().out


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run_suite("ch-exp-log", None, str(path)) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_workers_do_not_change_records(tmp_path):
    cfg = write(tmp_path, "cfg.json", {"workers": 2})
    one, two = tmp_path / "one.json", tmp_path / "two.json"
    assert run_suite("volodin", None, str(one)) == EXIT_OK
    assert run_suite("volodin", cfg, str(two)) == EXIT_OK
    assert json.loads(one.read_text())["records"] == json.loads(two.read_text())["records"]


def test_volodin_suite_contains_acyclicity_record(tmp_path):
    out = tmp_path / "v.json"
    assert run_suite("volodin", None, str(out)) == EXIT_OK
    recs = json.loads(out.read_text())["records"]
    acyclic = [r for r in recs if r["check"] == "volodin-acyclic"]
    assert acyclic and acyclic[0]["inputs"] == {"n": 1, "r": 3, "ring": "F_2"}
    assert acyclic[0]["observed"]["group"] == "0" and acyclic[0]["pass"]
    control = next(r for r in recs if r["check"] == "volodin-control")
    assert control["observed"]["torsion"] == [2, 2]


def test_runtime_is_optional(tmp_path):
    cfg = write(tmp_path, "cfg.json", {"record_runtime": True})
    out = tmp_path / "t.json"
    assert run_suite("eta", cfg, str(out)) == EXIT_OK
    assert all("runtime" in r for r in json.loads(out.read_text())["records"])


def test_resource_cap_names_the_check(tmp_path, capsys):
    cfg = write(tmp_path, "cfg.json", {"rings": ["Z/4", "Mat_2(F_2)"], "max_chain_rank": 2000})
    out = tmp_path / "cap.json"
    assert run_suite("connes-bound", cfg, str(out)) == EXIT_RESOURCE
    report = json.loads(out.read_text())
    assert report["status"] == "resource"
    failed = [r for r in report["records"] if r.get("error") == "resource"]
    assert [r["check"] for r in failed] == ["connes[Mat_2(F_2)]"]
    assert "CAP  connes[Mat_2(F_2)]" in capsys.readouterr().out


def test_pbw_cap(tmp_path):
    cfg = write(tmp_path, "cfg.json", {"i": 5, "pairs": 2, "max_pbw_degree": 1})
    assert run_suite("eta", cfg, str(tmp_path / "e.json")) == EXIT_RESOURCE


def test_failing_check_gives_exit_one(tmp_path):
    # the full coinvariant target is not a chain map in degree 3 over F_2
    cfg = write(tmp_path, "cfg.json", {"rings": ["F_2"], "ranks": [3], "target": "full",
                                       "theta_max_degree": 1, "kill_rank": 1, "kill_degree": 1,
                                       "tower_ring": "Z_2^2", "tower_rank": 1})
    out = tmp_path / "f.json"
    assert run_suite("lqt", cfg, str(out)) == EXIT_FAIL
    recs = json.loads(out.read_text())["records"]
    chain = next(r for r in recs if r["check"] == "kappa-chain-map")
    assert chain["observed"] == {"1": True, "2": True, "3": False} and not chain["pass"]


def test_every_suite_is_registered():
    for name in SUITE_DEFAULTS:
        assert suite_tasks(name, resolve_config(name, {}))


@pytest.mark.parametrize("name,config", [
    ("p-special", {"degree_cap": 2}),
    ("lazard-lambda", {"depth": 1}),
    ("towers", {}),
    ("primitives", {}),
    ("eta", {}),
])
def test_records_reference_the_registry(tmp_path, name, config):
    cfg = write(tmp_path, "cfg.json", config)
    out = tmp_path / "r.json"
    assert run_suite(name, cfg, str(out)) == EXIT_OK
    for rec in json.loads(out.read_text())["records"]:
        assert REFERENCES[rec["check"]] == rec["reference"]
        assert {"inputs", "bound", "observed", "pass"} <= set(rec)


def test_suite_list(capsys):
    code, out, _ = run(capsys, "suite", "--list")
    assert code == EXIT_OK and out.split() == list(SUITE_DEFAULTS)
