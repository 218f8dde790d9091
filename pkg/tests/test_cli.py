import hashlib
import json
import subprocess
import sys

import pytest

from seteg import cli
from seteg.errors import BoundViolated


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def data_lines(csv_text):
    return [ln for ln in csv_text.splitlines() if not ln.startswith("#")]


def test_curves_single_point(capsys):
    code, out, _ = run(["curves", "--figure", "fig3", "--t", "0.5"], capsys)
    assert code == 0
    lines = data_lines(out)
    assert lines[0] == "T,curve,value"
    rows = {ln.split(",")[1]: ln.split(",")[2] for ln in lines[1:]}
    assert rows["a_capacity"] == "1"
    assert rows["c_ps_f0.994"] == "0.012"
    assert float(rows["b_ed_max"]) == pytest.approx(0.117114740033, abs=1e-12)


def test_curves_hash_covers_data(capsys):
    _, out, _ = run(["curves", "--figure", "fig6", "--t-points", "5"], capsys)
    header = [ln for ln in out.splitlines() if ln.startswith("# content_sha256")][0]
    body = "\n".join(data_lines(out)) + "\n"
    assert header.split()[-1] == hashlib.sha256(body.encode()).hexdigest()
    assert '"t_points": 5' in out


def test_curves_jobs_identical(tmp_path):
    paths = []
    for jobs in ("1", "3"):
        p = tmp_path / f"j{jobs}.csv"
        assert cli.main(["curves", "--figure", "fig6", "--t-points", "12", "--jobs", jobs, "--out", str(p)]) == 0
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]


def test_optimize_json(capsys):
    code, out, _ = run(["optimize", "--yield", "ed", "--transmittance", "0.5"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["value"] == pytest.approx(0.117114740033202, abs=1e-12)
    assert doc["result"]["u_star"] == pytest.approx(0.6909077, abs=1e-6)
    assert doc["params"]["channel"]["kind"] == "pointToPoint"
    body = {k: v for k, v in doc.items() if k != "content_sha256"}
    assert doc["content_sha256"] == hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


def test_optimize_three_party(capsys):
    code, out, _ = run(["optimize", "--yield", "linear:1", "--ta", "0.5", "--tb", "0.5"], capsys)
    assert code == 0
    assert json.loads(out)["result"]["gamma"] == 2.0


def test_simulate_p2p(capsys):
    argv = ["simulate", "--protocol", "p2p", "--alpha", "1.2", "--theta", "0.6", "--transmittance", "0.5", "--dim", "64"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    an = json.loads(out)["result"]["analytic"]
    assert abs(an["delta_success_probability"]) <= 1e-8
    assert abs(an["delta_fidelity"]) <= 1e-8


def test_simulate_three_party_matched_beta(capsys):
    argv = ["simulate", "--protocol", "three-party", "--alpha", "1.0", "--theta", "1.5", "--ta", "0.6", "--tb", "0.3"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["params"]["beta"] == pytest.approx(1.0 * (0.6 / 0.3) ** 0.5)
    assert abs(doc["result"]["analytic"]["delta_success_probability"]) <= 1e-8


def test_verify_bound(capsys):
    argv = ["verify-bound", "--yield", "linear", "--overlap", "0.5", "--dephase", "0.5", "--restarts", "8", "--iterations", "300"]
    code, out, _ = run(argv, capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["seed"] == 0
    assert doc["result"]["best_yield"] <= doc["result"]["bound_value"] + 1e-9


def test_verify_bound_violation_exit_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise BoundViolated("planted")

    monkeypatch.setattr(cli, "search", boom)
    code, _, err = run(["verify-bound", "--yield", "ed", "--overlap", "0.5", "--dephase", "0.5"], capsys)
    assert code == 3
    assert "bound violated" in err


def test_check_yield(capsys):
    code, out, _ = run(["check-yield", "--yield", "sqrt", "--grid", "16", "--segments", "200"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert res["passed"] is False
    assert res["key_inequality_ok"] is False
    code, out, _ = run(["check-yield", "--yield", "power:2", "--grid", "16", "--segments", "200"], capsys)
    assert json.loads(out)["result"]["passed"] is True


@pytest.mark.parametrize(
    "argv,flag",
    [
        (["optimize", "--yield", "ed", "--transmittance", "1.5"], "--transmittance"),
        (["optimize", "--yield", "power:0.5", "--transmittance", "0.5"], "--yield"),
        (["optimize", "--yield", "ed"], "--transmittance"),
        (["optimize", "--yield", "ed", "--transmittance", "0.5", "--ta", "0.5"], "--ta"),
        (["curves", "--figure", "fig4"], "--figure"),
        (["curves", "--figure", "fig3", "--bogus"], "--bogus"),
        (["simulate", "--protocol", "p2p", "--alpha", "1", "--theta", "1", "--ta", "0.5", "--tb", "0.5"], "--ta"),
        (["verify-bound", "--yield", "ed", "--overlap", "0", "--dephase", "0.5"], "--overlap"),
        (["check-yield", "--yield", "ed", "--grid", "3"], "--grid"),
    ],
)
def test_usage_errors(argv, flag, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert flag in err


def test_numerical_failure_exit_code(capsys):
    argv = ["simulate", "--protocol", "p2p", "--alpha", "4", "--theta", "1", "--transmittance", "0.5", "--dim", "10"]
    code, _, err = run(argv, capsys)
    assert code == 3
    assert "TruncationTooSmall" in err


def test_repeated_runs_byte_identical(tmp_path):
    commands = [
        ["optimize", "--yield", "power:2", "--transmittance", "0.3"],
        ["verify-bound", "--yield", "ed", "--overlap", "0.3", "--dephase", "0.7", "--restarts", "4", "--iterations", "100", "--seed", "5"],
        ["check-yield", "--yield", "ed", "--grid", "16", "--segments", "200", "--seed", "2"],
    ]
    for i, argv in enumerate(commands):
        blobs = []
        for rep in range(2):
            p = tmp_path / f"{i}_{rep}.out"
            assert cli.main(argv + ["--out", str(p)]) == 0
            blobs.append(p.read_bytes())
        assert blobs[0] == blobs[1]


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "seteg.cli", "curves", "--figure", "fig3", "--t", "0.25"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert "0.25,a_capacity,0.415037499279" in proc.stdout
