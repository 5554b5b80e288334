import importlib
import json
import shutil
import subprocess
import sys

import pytest

from linstrand.classify import Verdict
from linstrand.cli import main, parse_config, InputError
from linstrand.errors import NoCertificate
from linstrand.field import Field
from linstrand.harness import GenSpec, generate

from conftest import twisted_cubic_points

FP = Field.fp()
cl = importlib.import_module("linstrand.classify")
cli = importlib.import_module("linstrand.cli")


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg.to_json()))
    return str(path)


@pytest.fixture
def union_file(tmp_path, union_fixture):
    return _write(tmp_path, union_fixture)


def _json_out(capsys):
    out = capsys.readouterr().out
    assert out.count("\n") == 1  # --json prints exactly one document
    return json.loads(out)


# -- strand / classify ---------------------------------------------------------------------

def test_strand_twisted_cubic(tmp_path, capsys):
    path = _write(tmp_path, twisted_cubic_points(range(8)))
    assert main(["strand", path, "--json"]) == 0
    doc = _json_out(capsys)
    assert doc["strand"] == [3, 2, 0] and doc["dim_I2"] == 3
    assert doc["hilbert"][:3] == [4, 7, 8]
    assert main(["strand", path]) == 0
    assert "3 2 0" in capsys.readouterr().out


def test_classify_union_text_and_json(union_file, union_fixture, capsys):
    assert main(["classify", union_file]) == 0
    assert "verdict: OnUnion" in capsys.readouterr().out
    assert main(["classify", union_file, "--json"]) == 0
    doc = _json_out(capsys)
    assert doc["tag"] == "OnUnion"
    assert Verdict.from_json(FP, 4, doc).to_json() == doc


def test_field_override(tmp_path, capsys):
    cfg = twisted_cubic_points(range(8))
    path = _write(tmp_path, cfg)
    assert main(["strand", path, "--field", "fp:101", "--json"]) == 0
    assert _json_out(capsys)["field"] == {"type": "fp", "p": 101}


def test_stdin_input(monkeypatch, capsys):
    import io
    doc = twisted_cubic_points(range(8)).to_json()
    monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps(doc)))
    assert main(["strand", "-", "--json"]) == 0
    assert _json_out(capsys)["strand"] == [3, 2, 0]


# -- malformed input ----------------------------------------------------------------------------

@pytest.mark.parametrize("text,needle", [
    ('{"n": 2, "field": {"type": "fp", "p": 32003}, "points": []}', "points"),
    ('{"n": 2,\n "points": [[1, 0, 0]],,}', "line 2"),
    ('{"n": 0, "field": {"type": "rational"}, "points": [["1"]]}', "n:"),
    ('{"n": 2, "field": {"type": "fp", "p": 32003}, "points": [["1", "0"]]}', "points[0]"),
    ('{"n": 2, "field": {"type": "fp", "p": 32003}, "points": [["1", "x", "0"]]}', "points[0][1]"),
    ('{"n": 2, "field": {"type": "fp", "p": 32003}, "points": [["0", "0", "0"]]}', "points:"),
    ('{"n": 2, "field": {"type": "fp", "p": 12}, "points": [["1", "0", "0"]]}', "field:"),
    ('[1, 2]', "top level"),
])
def test_malformed_input_exit_64(tmp_path, capsys, text, needle):
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert main(["classify", str(path)]) == 64
    err = capsys.readouterr().err
    assert "malformed input" in err and needle in err


def test_missing_file_and_bad_flags(tmp_path, capsys):
    assert main(["strand", str(tmp_path / "absent.json")]) == 64
    with pytest.raises(SystemExit) as exc:
        main(["strand"])
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        main(["strand", "x.json", "--field", "fp:9"])
    assert exc.value.code == 64
    assert main(["strand", "x.json", "--cap-subsets", "0"]) == 64


def test_parse_config_rational_scalars():
    text = json.dumps({"n": 1, "field": {"type": "rational"}, "points": [["1/2", "3"], ["1", "0"]]})
    cfg = parse_config(text)
    assert cfg.s == 2
    with pytest.raises(InputError):
        parse_config(json.dumps({"n": 1, "field": {"type": "rational"}, "points": [["1/0", "3"]]}))


# -- gen / oracle ---------------------------------------------------------------------------------

def test_gen_writes_sidecar_and_is_deterministic(tmp_path, capsys):
    prefix = str(tmp_path / "rnc")
    args = ["gen", "--family", "rnc", "--n", "3", "--s", "8", "--seed", "4"]
    assert main(args + ["--out", prefix]) == 0
    capsys.readouterr()
    cfg_doc = json.loads((tmp_path / "rnc.json").read_text())
    truth = json.loads((tmp_path / "rnc.truth.json").read_text())
    assert truth["spec"]["family"] == "rnc" and "params" in truth["truth"]
    assert main(args + ["--json"]) == 0
    first = _json_out(capsys)
    assert main(args + ["--json"]) == 0
    assert _json_out(capsys) == first
    assert first["config"] == cfg_doc
    expected = generate(GenSpec("rnc", 3, 8, FP, 4))[0].to_json()
    assert cfg_doc == json.loads(json.dumps(expected))


def test_gen_rejects_bad_spec(capsys):
    assert main(["gen", "--family", "union", "--n", "3", "--s", "6", "--k", "1", "--r", "1",
                 "--s-a", "3", "--s-b", "3"]) == 64


def test_oracle(tmp_path, skew_lines, capsys):
    path = _write(tmp_path, skew_lines)
    assert main(["oracle", path, "--json"]) == 0
    doc = _json_out(capsys)
    assert doc["bipartition"]["k"] == 1 and doc["bipartition"]["r"] == 2
    assert doc["strand"] == list(cl.classify(skew_lines).strand.a)


# -- decompose ------------------------------------------------------------------------------------

def test_decompose_success(union_file, capsys):
    assert main(["decompose", union_file, "--j", "0", "--idxs", "1,2,3,4", "--json"]) == 0
    doc = _json_out(capsys)
    assert doc["j"] == 0 and doc["idxs"] == [1, 2, 3, 4]
    assert len(doc["Ls"]) + len(doc["hs"]) == 3


def test_decompose_dim_out_of_range(union_file, capsys):
    assert main(["decompose", union_file, "--j", "0", "--idxs", "1,2,4", "--json"]) == 2
    doc = _json_out(capsys)
    assert doc["error"] == "DimOutOfRange" and doc["m"] == 3


def test_decompose_input_errors(tmp_path, union_file, capsys):
    assert main(["decompose", union_file, "--j", "1", "--idxs", "0,2,3"]) == 64
    assert main(["decompose", union_file, "--j", "2", "--idxs", "0,1,3"]) == 64
    assert main(["decompose", union_file, "--j", "0", "--idxs", "1,a"]) == 64
    assert main(["decompose", union_file, "--j", "0", "--idxs", "1,2,3", "--alpha", "99"]) == 64
    tc = _write(tmp_path, twisted_cubic_points(range(8)), "tc.json")
    assert main(["decompose", tc, "--j", "0", "--idxs", "1,2,3"]) == 64
    assert "--normalize" in capsys.readouterr().err


def test_decompose_normalize(tmp_path, capsys):
    cfg = generate(GenSpec("union", 4, 9, FP, 2, k=2, r=2, s_a=4, s_b=5))[0]
    path = _write(tmp_path, cfg)
    assert main(["decompose", path, "--normalize", "--j", "4", "--idxs", "0,1,2", "--json"]) == 0
    doc = _json_out(capsys)
    assert len(doc["frame"]) == 5 and len(doc["Ls"]) + len(doc["hs"]) == 2


def _stall(*args, **kwargs):
    raise NoCertificate("forced")


def test_decompose_no_certificate(monkeypatch, union_file, capsys):
    split = importlib.import_module("linstrand.split")
    monkeypatch.setattr(split, "derive_certificate", _stall)
    assert main(["decompose", union_file, "--j", "0", "--idxs", "1,2,3,4", "--no-fallback"]) == 4
    assert main(["decompose", union_file, "--j", "0", "--idxs", "1,2,3,4"]) == 70


# -- classify exit codes ------------------------------------------------------------------------------

def _special_file(tmp_path):
    cfg = generate(GenSpec("special", 4, 7, FP, 3, i=1))[0]
    return _write(tmp_path, cfg, "special.json")


def test_classify_exit_codes(monkeypatch, tmp_path, capsys):
    path = _special_file(tmp_path)
    assert main(["classify", path]) == 0
    monkeypatch.setattr(cl, "step1", _stall)
    monkeypatch.setattr(cl, "step2", _stall)
    assert main(["classify", path]) == 4
    capsys.readouterr()
    assert main(["classify", path, "--no-fallback", "--json"]) == 3
    assert _json_out(capsys)["tag"] == "UnsplitOverBaseField"


def test_classify_internal_failure_exit_70(monkeypatch, tmp_path, capsys):
    path = _special_file(tmp_path)

    def broken(*args, **kwargs):
        raise AssertionError("boom")

    monkeypatch.setattr(cli, "classify", broken)
    assert main(["classify", path]) == 70
    assert "internal assertion failed" in capsys.readouterr().err


# -- selftest and the installed script ----------------------------------------------------------

def test_selftest_reduced(capsys):
    assert main(["selftest", "--trials", "3", "--json"]) == 0
    rows = _json_out(capsys)
    assert [r["criterion"] for r in rows] == list(range(1, 10))
    assert all(r["passed"] for r in rows)


@pytest.mark.skipif(shutil.which("linstrand") is None, reason="console script not installed")
def test_console_script(tmp_path):
    path = _write(tmp_path, twisted_cubic_points(range(8)))
    res = subprocess.run(["linstrand", "classify", path, "--json"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["tag"] == "OnRNC"
