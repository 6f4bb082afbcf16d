import csv
import json
import subprocess
import sys

import pytest

from germflow.cli import main


def write(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.fixture
def sextic_file(tmp_path):
    return write(tmp_path, "sextic.json", {"id": "sextic", "vars": ["x"], "f": "x^2", "h": "1", "r": 1})


@pytest.fixture
def counter_file(tmp_path):
    return write(tmp_path, "counter.json", {"id": "counter", "vars": ["x"], "f": "x^2", "g": "-x^2", "r": 1})


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out


def test_check_pass_and_fail(sextic_file, counter_file, capsys):
    code, out = run(["check", sextic_file], capsys)
    assert code == 0
    doc = json.loads(out.out)
    assert doc["hypothesis"]["membership"] is True
    code, out = run(["check", counter_file], capsys)
    assert code == 2
    assert json.loads(out.out)["hypothesis"]["membership"] is False


def test_syntax_error_exit(tmp_path, capsys):
    bad = write(tmp_path, "bad.json", {"vars": ["x"], "f": "x^^2", "h": "1", "r": 1})
    code, out = run(["check", bad], capsys)
    assert code == 64
    assert "position 2" in out.err


@pytest.mark.parametrize(
    "payload",
    [
        {"vars": ["x"], "f": "x^2", "r": 1},
        {"vars": ["x"], "f": "x^2", "h": "1", "r": 0},
        {"vars": [], "f": "x^2", "h": "1", "r": 1},
        {"vars": ["x"], "f": "x^2 + 1", "h": "1", "r": 1},
    ],
)
def test_malformed_case_files(tmp_path, payload, capsys):
    code, _ = run(["check", write(tmp_path, "c.json", payload)], capsys)
    assert code == 64


def test_unreadable_and_bad_flags(tmp_path, sextic_file, capsys):
    assert run(["check", str(tmp_path / "missing.json")], capsys)[0] == 64
    (tmp_path / "junk.json").write_text("{not json")
    assert run(["check", str(tmp_path / "junk.json")], capsys)[0] == 64
    with pytest.raises(SystemExit) as info:
        main(["construct", sextic_file, "--grid", "abc"])
    assert info.value.code == 64
    assert run(["construct", sextic_file, "--radius", "-1"], capsys)[0] == 64


def test_construct_pass(sextic_file, capsys):
    code, out = run(["construct", sextic_file, "--grid", "21"], capsys)
    assert code == 0
    doc = json.loads(out.out)
    assert doc["verdict"] == "pass"
    assert doc["certificate"]["ok"] is True
    assert all(s["status"] == "completed" for s in doc["samples"])


def test_construct_counterexample(counter_file, capsys):
    code, out = run(["construct", counter_file], capsys)
    assert code == 2
    code, out = run(["construct", counter_file, "--force", "--grid", "21"], capsys)
    assert code == 3
    doc = json.loads(out.out)
    assert doc["certificate"]["ok"] is False
    assert any(s["status"] == "gap_violation" for s in doc["samples"])


def test_numeric_failure_exit(sextic_file, monkeypatch, capsys):
    monkeypatch.setenv("GERMFLOW_MAX_STEPS", "2")
    code, out = run(["construct", sextic_file, "--grid", "21"], capsys)
    assert code == 4
    assert json.loads(out.out)["verdict"] == "numeric_fail"


def test_verify_pass(tmp_path, capsys):
    case = write(tmp_path, "x2y.json", {"vars": ["x", "y"], "f": "x^2 y", "h": "1", "r": 1})
    code, out = run(["verify", case, "--grid", "21"], capsys)
    assert code == 0, out.out[-2000:]


def test_report_is_deterministic(sextic_file, tmp_path, capsys):
    docs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        assert main(["construct", sextic_file, "--grid", "21", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        doc.pop("generated_at")
        docs.append(doc)
    assert docs[0] == docs[1]


def test_loja_command(tmp_path, capsys):
    poly = write(tmp_path, "p.json", {"vars": ["x", "y"], "f": "x^2 + y^2"})
    code, out = run(["loja", poly], capsys)
    assert code == 0
    assert 0.45 <= json.loads(out.out)["loja"]["eta_hat"] <= 0.55


def test_bounds_writes_clouds(sextic_file, tmp_path, capsys):
    out = tmp_path / "bounds.json"
    code = main(["bounds", sextic_file, "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["point_clouds"]) == 3
    with open(tmp_path / doc["point_clouds"][0], newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["dist", "magnitude"] and len(rows) > 10


def test_bounds_alpha_max_too_large(sextic_file, capsys):
    assert run(["bounds", sextic_file, "--alpha-max", "3"], capsys)[0] == 64


def test_lemtech_command(tmp_path, capsys):
    xi = write(tmp_path, "xi.json", {"vars": ["x"], "xi": "x^2"})
    code, out = run(["lemtech", "--order", "2", xi], capsys)
    assert code == 0
    (entry,) = json.loads(out.out)["expansions"]
    assert entry["numerator"] == "6*x^2" and entry["denominator_power"] == 3
    assert entry["matches_quotient_rule"] is True


def test_lemtech_verification_failure(tmp_path, capsys):
    xi = write(tmp_path, "xi.json", {"vars": ["x", "y"], "xi": "y^2", "eta": "x"})
    code, _ = run(["lemtech", xi], capsys)
    assert code == 5


def test_console_entry_point(sextic_file):
    proc = subprocess.run([sys.executable, "-m", "germflow", "check", sextic_file],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["germflow_version"]
