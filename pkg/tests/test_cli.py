import io
import json

import pytest

from ebsc import lab
from ebsc.cli import DEMOS, run


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.parametrize("scenario", sorted(DEMOS))
def test_demo_passes_and_is_deterministic(scenario):
    code, text, _ = call(["demo", scenario])
    assert code == 0
    report = json.loads(text)
    assert report["scenario"] == f"demo {scenario}"
    assert report["checks"] and all(c["pass"] for c in report["checks"])
    assert report["wall_time_ms"] is None
    assert call(["demo", scenario])[1] == text


def test_non_decomposable_report():
    report = json.loads(call(["demo", "non-decomposable"])[1])
    assert report["choi_shape"] == [24, 24]
    outcomes = {v["name"]: v["outcome"] for v in report["verdicts"]}
    assert outcomes["A0A1:B0B1"] == "Separable"
    assert outcomes["A0:A1,B0,B1"] == "Entangled"


def test_timing_flag():
    report = json.loads(call(["demo", "replacer", "--timing"])[1])
    assert report["wall_time_ms"] > 0


def test_werner_sweep_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    code, text, _ = call(["werner", "sweep", "--d", "3", "--k", "2", "--beta", "0.0:1.0:0.05",
                          "--samples", "20", "--csv", str(path)])
    assert code == 0
    assert path.read_text() == text
    lines = text.splitlines()
    assert lines[0] == "d,k,beta,verdict,min_pt_eig,witness_projector_id"
    rows = {line.split(",")[2]: line.split(",")[3] for line in lines[1:]}
    assert rows["0.5"] == "Separable" and rows["0.55"] == "Entangled"


def test_werner_sweep_json():
    code, text, _ = call(["--json", "werner", "sweep", "--d", "3", "--k", "2", "--beta", "0.4:0.6:0.1",
                          "--samples", "5"])
    assert code == 0
    assert len(json.loads(text)["rows"]) == 3


def test_check_identity_fixture(tmp_path):
    lab.export_fixtures(tmp_path)
    code, text, _ = call(["check", "superchannel", "--file", str(tmp_path / "identity.json")])
    assert code == 0
    report = json.loads(text)
    assert report["verdicts"][0]["outcome"] == "Entangled"


def test_check_superchannel_cut(tmp_path):
    lab.export_fixtures(tmp_path)
    code, text, _ = call(["check", "superchannel", "--file", str(tmp_path / "non-decomposable.json"),
                          "--cut", "A0:A1,B0,B1"])
    assert code == 0
    assert json.loads(text)["verdicts"][0]["outcome"] == "Entangled"


def test_check_channel(tmp_path):
    from ebsc import channels as C

    path = tmp_path / "ch.json"
    path.write_text(json.dumps(C.dephasing_channel(2).to_dict()))
    code, text, _ = call(["check", "channel", "--file", str(path)])
    assert code == 0
    assert json.loads(text)["verdicts"][0]["outcome"] == "Separable"


def test_check_failing_superchannel_exit_1(tmp_path):
    from ebsc import tensor as T
    from ebsc.superchannels import Supermap

    bad = Supermap(("A0",), ("A1",), ("B0",), ("B1",),
                   T.kron(T.phi_plus("A0", "A1", 2), T.phi_plus("B0", "B1", 2)))
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad.to_dict()))
    code, text, _ = call(["check", "superchannel", "--file", str(path)])
    assert code == 1
    failed = [c["name"] for c in json.loads(text)["checks"] if not c["pass"]]
    assert failed == ["marginal_A0A1B0"]


@pytest.mark.parametrize("content,field", [
    ('{"dims": {"A0": 2}}', "supermap.choi"),
    ("not json", "invalid JSON"),
])
def test_malformed_file_exit_2(tmp_path, content, field):
    path = tmp_path / "s.json"
    path.write_text(content)
    code, _, err = call(["check", "superchannel", "--file", str(path)])
    assert code == 2
    assert field in err


def test_missing_file_exit_2():
    code, _, err = call(["check", "channel", "--file", "/nonexistent/x.json"])
    assert code == 2 and "not found" in err


@pytest.mark.parametrize("argv", [["demo", "bogus"], ["werner"], ["keb", "test", "--d", "3"], []])
def test_usage_errors(argv, capsys):
    assert run(argv) == 2


def test_keb_test_verdicts():
    code, text, _ = call(["keb", "test", "--d", "3", "--k", "2", "--beta", "0.6", "--samples", "10"])
    assert code == 0
    v = json.loads(text)["verdicts"][0]
    assert v["outcome"] == "Entangled"
    assert v["notes"]["witness_projector_id"] == "coord:0,1"


def test_keb_bad_params_exit_2():
    assert call(["keb", "test", "--d", "3", "--k", "3", "--beta", "0.1"])[0] == 2
    assert call(["keb", "test", "--d", "3", "--k", "2", "--beta", "9"])[0] == 2


def test_tol_override():
    code, text, _ = call(["--tol", "1e-6", "demo", "schmidt-iteration"])
    assert code == 0
    assert json.loads(text)["inputs"]["tol"] == 1e-6


def test_fixtures_command(tmp_path):
    code, text, _ = call(["fixtures", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "manifest.json").exists()
