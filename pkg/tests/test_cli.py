import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from loccusd import cli
from loccusd.instance import InstanceError, decode_complex, instance_from_vectors, load_instance, parse_instance
from loccusd.states import BELL_STATES

INSTANCES = Path(__file__).resolve().parents[1] / "instances"
FAST = ["--restarts", "8", "--trials", "3000", "--samples", "3000"]


def invoke(*argv, tmp_path=None):
    out = tmp_path / "report.json"
    code = cli.main([*argv, *FAST, "--out", str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


@pytest.mark.parametrize(
    "command, instance, expected",
    [
        ("check", "bell4.json", 2),
        ("check", "three_bell.json", 0),
        ("check", "product_basis.json", 0),
        ("povm", "bell4.json", 2),
        ("povm", "skewpair.json", 0),
        ("witness", "bell4.json", 0),
        ("witness", "three_bell.json", 3),
        ("simulate", "three_bell.json", 0),
        ("reciprocal", "product_basis.json", 0),
        ("reciprocal", "bell4.json", 2),
        ("reciprocal", "orthpair.json", 3),
    ],
)
def test_exit_codes(command, instance, expected, tmp_path):
    code, report = invoke(command, str(INSTANCES / instance), tmp_path=tmp_path)
    assert code == expected
    assert report["exit_code"] == expected
    assert report["command"] == command


def test_check_report_contents(tmp_path):
    _, report = invoke("check", str(INSTANCES / "three_bell.json"), tmp_path=tmp_path)
    states = report["results"]["states"]
    assert [s["locc"] for s in states] == [True, True, True]
    cert = decode_complex(states[2]["certificate"]["vector"])
    np.testing.assert_allclose(cert, [0, 1, 0, 0], atol=1e-12)
    assert report["instance"]["dims"] == [2, 2]
    assert report["config"]["seed"] == 0


def test_povm_report(tmp_path):
    _, report = invoke("povm", str(INSTANCES / "skewpair.json"), tmp_path=tmp_path)
    g = report["results"]["global_povm"]
    assert g["lambda"] == pytest.approx(1 + 1 / np.sqrt(2))
    assert g["verification"]["ok"]
    assert g["verification"]["probabilities"][0][0] == pytest.approx(1 - 1 / np.sqrt(2))


def test_witness_report(tmp_path):
    _, report = invoke("witness", str(INSTANCES / "bell4.json"), tmp_path=tmp_path)
    for w in report["results"]["witnesses"]:
        assert w["status"] == "witness"
        assert w["gamma"] == pytest.approx(0.5, abs=1e-9)
        assert w["validation"]["violations"] == 0
        assert w["validation"]["detected_value"] == pytest.approx(-1.0, abs=1e-8)


def test_witness_skips_product_targets(tmp_path):
    code, report = invoke("witness", str(INSTANCES / "product_basis.json"), tmp_path=tmp_path)
    assert code == 0
    assert all(w["status"].startswith("no witness") for w in report["results"]["witnesses"])


def test_simulate_report(tmp_path):
    _, report = invoke("simulate", str(INSTANCES / "three_bell.json"), tmp_path=tmp_path)
    res = report["results"]
    assert res["unambiguous"]
    assert all(s["conclusive_wrong"] == 0 and s["within_5_sigma"] for s in res["states"])
    assert sum(s["prepared"] for s in res["states"]) == 3000


def test_text_format(tmp_path, capsys):
    code = cli.main(["check", str(INSTANCES / "bell4.json"), "--format", "text"])
    out = capsys.readouterr().out
    assert code == 2
    assert "mu=1 unconstrained=true locc=false method=algebraic" in out


@pytest.mark.parametrize(
    "content, message",
    [
        ("{not json", "invalid JSON at line 1"),
        ('{"dims": [2, 2], "states": [{"type": "pure", "vector": [[1, 0]]}]}', "states[0].vector: expected 4 entries, got 1"),
        ('{"dims": "2x2", "states": []}', "dims"),
        ('{"dims": [2], "states": [{"type": "ket", "vector": []}]}', "states[0].type"),
        ('{"dims": [2], "states": [{"type": "pure", "vector": [[1, 0], [0, "a"]]}]}', "states[0].vector[1]"),
    ],
)
def test_input_errors(content, message, tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(content)
    assert cli.main(["check", str(path)]) == 1
    assert message in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert cli.main(["check", str(tmp_path / "none.json")]) == 1
    assert "cannot read" in capsys.readouterr().err


def test_usage_error_is_input_error():
    with pytest.raises(SystemExit) as info:
        cli.main(["check"])
    assert info.value.code == 1


def test_bad_search_option(capsys):
    assert cli.main(["check", str(INSTANCES / "bell4.json"), "--restarts", "0"]) == 1


def test_instance_round_trip(tmp_path):
    data = instance_from_vectors(BELL_STATES[:2], (2, 2), delta=[1], priors=[0.25, 0.75])
    path = tmp_path / "i.json"
    path.write_text(json.dumps(data))
    e, raw = load_instance(path)
    assert raw == data
    assert e.delta == (1,) and e.priors == (0.25, 0.75)
    np.testing.assert_allclose(e.rho(2).vector, BELL_STATES[1])


def test_mixed_instance():
    m = np.diag([0.5, 0.5, 0, 0])
    data = {
        "dims": [2, 2],
        "states": [
            {"type": "mixed", "matrix": [[[float(x), 0.0] for x in row] for row in m]},
            {"type": "pure", "vector": [[0, 0], [0, 0], [0, 0], [1, 0]]},
        ],
    }
    e = parse_instance(data)
    assert not e.states[0].is_pure
    with pytest.raises(InstanceError, match="priors"):
        parse_instance({**data, "priors": ["x"]})


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "loccusd", "check", str(INSTANCES / "product_basis.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["all_locc"] is True
