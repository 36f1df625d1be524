"""Acceptance gate for the reference adapter.

Everything here exercises the benchmarking engine strictly through its
external interfaces: the `stresscast` command line, report JSON files,
and the stdio wire protocol. One verdict line per criterion is printed
outside pytest's capture.
"""

import json
import subprocess
import sys

import pytest

ENGINE = [sys.executable, "-m", "stresscast.cli"]

WRONG_ID_ADAPTER = """
import json, sys

json.loads(sys.stdin.readline())
print(json.dumps({"type": "ready", "name": "wrong-id"}), flush=True)
msg = json.loads(sys.stdin.readline())
print(json.dumps({"type": "prediction", "id": msg["id"] + 1, "outputs": []}), flush=True)
sys.stdin.readline()
"""

TRUNCATED_LINE_ADAPTER = """
import json, sys

json.loads(sys.stdin.readline())
print('{"type": "ready", "na', flush=True)
sys.stdin.readline()
"""

EARLY_EXIT_ADAPTER = """
import json, sys

json.loads(sys.stdin.readline())
print(json.dumps({"type": "ready", "name": "quitter"}), flush=True)
sys.stdin.readline()
raise SystemExit(7)
"""


def _verdict(capsys, name, ok, detail=""):
    with capsys.disabled():
        line = f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  ({detail})"
        print(line, flush=True)
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("adapter_acceptance")
    data = root / "synthetic.csv"
    result = subprocess.run(
        ENGINE + ["synth", "--out", str(data), "--rows", "400", "--seed", "3"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stderr
    return root, data


def _run_engine(root, data, name, adapter_cmd=None, extra_model=None):
    report = root / f"{name}.json"
    config = {
        "dataset": {"path": str(data), "name": "synthetic"},
        "window": {"t": 12, "horizon": 4},
        "sampling": {"train_windows": 16, "val_windows": 16, "test_windows": 16},
        "model": {"kind": "Persistence"},
        "severity_step": 0.05,
        "seed": 3,
        "output": {"report": str(report)},
    }
    if extra_model:
        config["model"] = extra_model
    config_path = root / f"{name}_config.json"
    config_path.write_text(json.dumps(config))
    cmd = ENGINE + ["run", "--config", str(config_path)]
    if adapter_cmd:
        cmd += ["--adapter-cmd", adapter_cmd]
    result = subprocess.run(cmd, capture_output=True, text=True)
    return result, report


def test_persistence_parity_with_builtin(workspace, capsys):
    root, data = workspace
    builtin_result, builtin_report = _run_engine(root, data, "builtin")
    assert builtin_result.returncode == 0, builtin_result.stderr
    adapter_result, adapter_report = _run_engine(
        root, data, "external", adapter_cmd=f"{sys.executable} -m forecast_adapter"
    )
    assert adapter_result.returncode == 0, adapter_result.stderr

    builtin = json.loads(builtin_report.read_text())
    external = json.loads(adapter_report.read_text())
    worst = abs(builtin["overall_robustness"] - external["overall_robustness"])
    pairs = zip(builtin["scenarios"], external["scenarios"])
    for ours, theirs in pairs:
        assert ours["kind"] == theirs["kind"]
        assert ours["applicable"] == theirs["applicable"]
        if ours["applicable"]:
            worst = max(worst, abs(ours["robustness"] - theirs["robustness"]))
    _verdict(
        capsys,
        "adapter parity",
        worst <= 1e-9,
        f"R and all R_d agree within {worst:.2e} (tolerance 1e-9)",
    )


_FIXTURES = {
    "wrong id": (WRONG_ID_ADAPTER, "ProtocolViolation"),
    "truncated line": (TRUNCATED_LINE_ADAPTER, "ProtocolViolation"),
    "early exit": (EARLY_EXIT_ADAPTER, "AdapterCrashed"),
}


@pytest.mark.parametrize("label", list(_FIXTURES))
def test_protocol_violation_fixtures_produce_designated_errors(workspace, capsys, tmp_path, label):
    script, expected_error = _FIXTURES[label]
    root, data = workspace
    fixture = tmp_path / "broken_adapter.py"
    fixture.write_text(script)
    result, _ = _run_engine(
        root, data, f"broken_{label.replace(' ', '_')}", adapter_cmd=f"{sys.executable} {fixture}"
    )
    ok = result.returncode == 3 and expected_error in result.stderr
    _verdict(
        capsys,
        f"protocol violation ({label})",
        ok,
        f"exit {result.returncode}, {expected_error} reported",
    )
