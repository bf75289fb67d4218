import json

import numpy as np
import pytest

from uniformity_lab.cli import SCHEMA_VERSION, RunConfig, UsageError, build_parser, config_from_args, load_function, main
from uniformity_lab.generators import randpm1
from uniformity_lab.linsys import count_pattern, three_ap
from uniformity_lab.unorms import u2_norm, u3_norm
from uniformity_lab.zn_core import GroupFn


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_load_function_specs():
    assert np.allclose(load_function("quadphase:13,2,1").values, GroupFn.quadratic_phase(13, 2, 1).values)
    assert np.array_equal(load_function("randpm1:17,4").values, randpm1(17, 4).values)
    assert sorted(np.flatnonzero(load_function("indicator:10,1,3").values)) == [1, 3]
    with pytest.raises(UsageError):
        load_function("quadphase:13,2")
    with pytest.raises(UsageError):
        load_function("nonexistent.json")


def test_load_function_json(tmp_path):
    p = tmp_path / "f.json"
    p.write_text(json.dumps({"modulus": 3, "values": [[1, 0], [0, 1], [-1, 0]]}))
    assert np.allclose(load_function(str(p)).values, [1, 1j, -1])
    bad = tmp_path / "bad.json"
    bad.write_text('{"modulus": 3,\n "values": [1, }')
    with pytest.raises(UsageError, match="line 2"):
        load_function(str(bad))


def test_norm_matches_library(capsys):
    code, out, _ = run(capsys, "norm", "--input", "randpm1:31,2", "--u2", "--u3")
    doc = json.loads(out)
    f = randpm1(31, 2)
    assert code == 0 and doc["schema_version"] == SCHEMA_VERSION
    assert doc["norms"]["u2"] == pytest.approx(u2_norm(f), abs=1e-12)
    assert doc["norms"]["u3"] == pytest.approx(u3_norm(f), abs=1e-12)


def test_count_matches_library(capsys):
    code, out, _ = run(capsys, "count", "--preset", "3ap", "--fn", "quadphase:13,1,0")
    doc = json.loads(out)
    ref = count_pattern(three_ap(), [GroupFn.quadratic_phase(13, 1)] * 3).value
    assert code == 0 and doc["abs"] == pytest.approx(abs(ref), abs=1e-12)
    assert "wall_time" not in doc


def test_verify_is_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["verify", "--lemma", "L6.5", "--trials", "4", "--seed", "9", "--out", str(a)]) == 0
    assert main(["--out", str(b), "verify", "--lemma", "L6.5", "--trials", "4", "--seed", "9"]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = json.loads(a.read_text())
    assert doc["lemma_id"] == "L6.5" and len(doc["instances"]) == 4 and doc["ok"]


def test_verify_negative_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "--lemma", "L6.5", "--trials", "3", "--negative")
    assert code == 1 and json.loads(out)["negative"] is True


def test_verify_csv_and_multiple(capsys):
    code, out, _ = run(capsys, "verify", "--lemma", "L6.5", "--lemma", "L9.8", "--trials", "2", "--format", "csv")
    assert code == 0 and out.splitlines()[0].startswith("lemma_id,")
    code, out, _ = run(capsys, "verify", "--lemma", "L6.5", "--lemma", "L8.17", "--trials", "2")
    assert [s["lemma_id"] for s in json.loads(out)["suites"]] == ["L6.5", "L8.17"]


def test_usage_errors_exit_2(capsys):
    code, _, err = run(capsys, "verify", "--lemma", "L99.9")
    assert code == 2 and "unknown lemma" in err
    code, _, err = run(capsys, "norm", "--input", "quadphase:x")
    assert code == 2 and "quadphase" in err
    code, _, err = run(capsys, "quad", "rank", "--n", "101")
    assert code == 2 and "--gens" in err
    assert run(capsys, "frobnicate")[0] == 2


def test_structure_commands(capsys):
    code, out, _ = run(capsys, "bohr", "build", "--n", "101", "--freqs", "7", "--rho", "0.5")
    assert code == 0 and len(json.loads(out)["bohr"]["members"]) == 17
    code, out, _ = run(capsys, "quad", "rank", "--n", "13", "--a", "1", "--gens", "1", "--lens", "13")
    assert code == 0
    code, _, _ = run(capsys, "bourgain", "--kind", "trivial", "--n", "31")
    assert code == 0
    code, out, _ = run(capsys, "decompose", "--input", "quadphase:31,3,2", "--delta", "0.2")
    assert code == 0 and json.loads(out)["decomposition"]["terms"][0]["a"] == 3


def test_probe_bound(capsys):
    code, out, _ = run(capsys, "probe", "--preset", "3ap", "--n", "13", "--bound", "0.6", "--limit", "3")
    assert code == 0
    code, _, _ = run(capsys, "probe", "--preset", "3ap", "--n", "13", "--bound", "0.01", "--limit", "3")
    assert code == 1


def test_run_config_round_trip():
    args = build_parser().parse_args(["verify", "--lemma", "L4.1", "--trials", "7", "--seed", "2", "--n", "64"])
    cfg = config_from_args(args)
    assert cfg.N == 64 and cfg.seed == 2 and cfg.budgets == {"trials": 7} and cfg.suites == ["L4.1"]
    assert RunConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg
