import json
import math

import pytest
from typer.testing import CliRunner

from ptnorm.app import commands
from ptnorm.app.errors import BlowUp
from ptnorm.app.schemas import ResultRecord
from ptnorm.app.store.result_store import read_csv
from ptnorm.app.tools import pseudonorm_tools
from ptnorm.cli import app, build_config

runner = CliRunner()


def _invoke(*args):
    return runner.invoke(app, list(args))


def _flat(text):
    return " ".join(text.split())


def _only_record(out_dir, command):
    hits = sorted(out_dir.glob(f"{command}-*.json"))
    assert len(hits) == 1
    text = hits[0].read_text(encoding="utf-8")
    return ResultRecord.model_validate_json(text), text


# -------------------------
# norm
# -------------------------
def test_norm_oscillator_ground_state(out_dir):
    result = _invoke("norm", "--model", "oscillator", "--alpha", "0.3", "--c", "1", "--q=+1", "--n", "0", "--out", str(out_dir))
    assert result.exit_code == 0, result.output
    record, _ = _only_record(out_dir, "norm")
    res = record.results
    expected = math.cos(0.2 * math.pi) * math.gamma(0.7)
    assert res["pseudo_norm_analytic"] == pytest.approx(expected, rel=1e-12)
    assert res["norm_mag_analytic"] == pytest.approx(expected ** -0.5, rel=1e-12)
    assert res["rel_deviation"] <= 1e-8
    assert res["sign"] == 1
    assert record.errors["pseudo_norm"] <= 1e-10


def test_norm_linear_oscillator(out_dir):
    result = _invoke("norm", "--model", "oscillator", "--alpha", "0.5", "--c", "1e-9", "--q=+1", "--n", "0", "--out", str(out_dir))
    assert result.exit_code == 0, result.output
    record, _ = _only_record(out_dir, "norm")
    assert record.results["norm_mag_numeric"] == pytest.approx(math.pi ** -0.25, rel=1e-8)


@pytest.mark.parametrize(
    "args, message",
    [
        (["norm", "--model", "scarf", "--A", "1.0", "--B", "1.8", "--q=-1", "--n", "0"], "A > B - 1/2 > 0"),
        (["norm", "--model", "scarf", "--A", "2.5", "--B", "2.0", "--q=+1", "--n", "0"], "A - B + 1/2 to be non-integer"),
        (["norm", "--model", "scarf", "--A", "2.4", "--B", "1.4", "--q=-1", "--n", "0"], "B - 1/2 + 2k < A < B + 1/2 + 2k"),
        (["norm", "--model", "oscillator", "--alpha=-0.2", "--c", "1", "--q=+1", "--n", "0"], "alpha > 0"),
        (["norm", "--model", "oscillator", "--alpha", "2", "--c", "1", "--q=+1", "--n", "0"], "non-integer alpha"),
        (["norm", "--model", "oscillator", "--alpha", "0.3", "--c", "0", "--q=+1", "--n", "0"], "c > 0"),
        (["norm", "--model", "oscillator", "--alpha", "1.3", "--c", "1", "--q=+1", "--n", "0"], "0 < alpha < 1"),
        (["norm", "--model", "gpt", "--A", "2.0", "--B", "2.4", "--gamma", "0.2", "--q=+1", "--n", "0"], "B > A + 1/2 > 0"),
        (["norm", "--model", "gpt", "--A", "2.0", "--B", "3.1", "--gamma", "0.9", "--q=+1", "--n", "0"], "gamma in [-pi/4, 0) or (0, pi/4)"),
        (["norm", "--model", "gpt", "--A", "2.0", "--B", "3.5", "--gamma", "0.2", "--q=+1", "--n", "0"], "B - A - 1/2 to be non-integer"),
        (["gram", "--model", "gpt", "--A", "2.0", "--B", "3.6", "--gamma", "0.2", "--labels", "+1:0"], "A + 1/2 < B < A + 3/2"),
        (["norm", "--model", "scarf", "--A", "2.2", "--B", "1.9", "--q=-1", "--n", "3"], "admits n <= 1"),
    ],
)
def test_validation_failures_exit_2(args, message, out_dir):
    result = _invoke(*args, "--out", str(out_dir))
    assert result.exit_code == 2
    assert message in _flat(result.output)
    assert not list(out_dir.glob("*.json"))


def test_numeric_only_bypasses_window(out_dir):
    result = _invoke(
        "norm", "--model", "oscillator", "--alpha", "1.3", "--c", "1", "--q=+1", "--n", "0",
        "--numeric-only", "--out", str(out_dir),
    )
    assert result.exit_code == 0, result.output
    record, _ = _only_record(out_dir, "norm")
    assert record.results["pseudo_norm_analytic"] is None
    assert record.results["norm_mag_numeric"] > 0


def test_config_file_is_overridden_by_flags(tmp_path, out_dir):
    cfg = tmp_path / "run.env"
    cfg.write_text("model=oscillator\nalpha=0.3\nc=1\nq=+1\nn=0\ntol=1e-8\n", encoding="utf-8")
    result = _invoke("norm", "--config", str(cfg), "--tol", "1e-10", "--out", str(out_dir))
    assert result.exit_code == 0, result.output
    record, _ = _only_record(out_dir, "norm")
    assert record.inputs.tol == 1e-10
    assert record.inputs.model.alpha == 0.3


def test_flag_state_replaces_config_labels(tmp_path, out_dir):
    cfg = tmp_path / "run.env"
    cfg.write_text("model=oscillator\nalpha=0.3\nc=1\nlabels=+1:0\n", encoding="utf-8")
    result = _invoke("norm", "--config", str(cfg), "--q=-1", "--n", "1", "--out", str(out_dir))
    assert result.exit_code == 0, result.output
    record, _ = _only_record(out_dir, "norm")
    assert [str(lb) for lb in record.inputs.labels] == ["-1:1"]
    assert record.results["label"] == "-1:1"


def test_unknown_log_level_exit_2(out_dir):
    result = _invoke("--log-level", "LOUD", "norm", "--model", "oscillator", "--alpha", "0.3", "--c", "1", "--q=+1", "--n", "0", "--out", str(out_dir))
    assert result.exit_code == 2
    assert "Unknown level" in _flat(result.output)
    assert not list(out_dir.glob("*.json"))


def test_norm_runs_one_quadrature(monkeypatch, out_dir):
    calls = []

    def counted(*args, **kwargs):
        calls.append(args)
        return original(*args, **kwargs)

    original = pseudonorm_tools.pseudo_inner
    monkeypatch.setattr(pseudonorm_tools, "pseudo_inner", counted)
    monkeypatch.setattr(commands, "pseudo_inner", counted)
    result = _invoke("norm", "--model", "oscillator", "--alpha", "0.3", "--c", "1", "--q=+1", "--n", "0", "--out", str(out_dir))
    assert result.exit_code == 0, result.output
    assert len(calls) == 1


def test_missing_config_file(out_dir, tmp_path):
    result = _invoke("norm", "--config", str(tmp_path / "nope.env"), "--out", str(out_dir))
    assert result.exit_code == 2
    assert "config file not found" in _flat(result.output)


def test_record_json_round_trips(out_dir):
    result = _invoke("norm", "--model", "scarf", "--A", "2.2", "--B", "1.9", "--q=+1", "--n", "0", "--out", str(out_dir))
    assert result.exit_code == 0, result.output
    record, text = _only_record(out_dir, "norm")
    again = ResultRecord.model_validate_json(record.model_dump_json())
    assert again == record
    assert json.loads(again.model_dump_json()) == json.loads(text)
    expected = build_config(
        "norm", {"model": "scarf", "A": 2.2, "B": 1.9, "q": "+1", "n": 0, "out": str(out_dir)}
    )
    assert record.inputs == expected


# -------------------------
# gram
# -------------------------
def test_gram_oscillator(out_dir):
    result = _invoke(
        "gram", "--model", "oscillator", "--alpha", "0.3", "--c", "1",
        "--labels", "+1:2,-1:0,+1:0,-1:2,+1:1,-1:1", "--jobs", "2", "--out", str(out_dir),
    )
    assert result.exit_code == 0, result.output
    record, _ = _only_record(out_dir, "gram")
    assert record.results["labels"] == ["+1:0", "-1:0", "+1:1", "-1:1", "+1:2", "-1:2"]
    assert record.results["diagonal"] == pytest.approx([1, -1, 1, -1, 1, -1], abs=1e-8)
    assert record.results["max_off_diagonal"] <= 1e-9


def test_gram_single_state(out_dir):
    result = _invoke("gram", "--model", "scarf", "--A", "2.2", "--B", "1.9", "--labels", "+1:0", "--out", str(out_dir))
    assert result.exit_code == 0, result.output
    record, _ = _only_record(out_dir, "gram")
    assert record.results["diagonal"] == pytest.approx([1.0], abs=1e-8)
    assert record.results["max_off_diagonal"] == 0.0


def test_gram_csv_output_is_deterministic(tmp_path):
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        args = ["gram", "--model", "oscillator", "--alpha", "0.3", "--c", "1", "--labels", "+1:0,-1:0", "--format", "csv", "--out", str(out)]
        assert _invoke(*args).exit_code == 0
        outputs.append((out / "gram-oscillator.csv").read_bytes())
        assert len(list(out.glob("gram-*.csv"))) == 2
    assert outputs[0] == outputs[1]


def test_gram_gpt_near_window_edge(out_dir):
    result = _invoke(
        "gram", "--model", "gpt", "--A", "1.2", "--B", "2.6", "--gamma", "0.2",
        "--labels", "+1:0,+1:1,-1:0,-1:1", "--out", str(out_dir),
    )
    assert result.exit_code == 0, result.output
    record, _ = _only_record(out_dir, "gram")
    assert record.results["labels"] == ["+1:0", "-1:0", "+1:1", "-1:1"]
    assert record.results["diagonal"] == pytest.approx([1, -1, 1, -1], abs=1e-7)
    assert record.results["max_off_diagonal"] <= 1e-9


# -------------------------
# evolve
# -------------------------
EVOLVE_GRID = ["--grid-half-width", "8", "--points", "513", "--dt", "0.001953125", "--steps", "64",
               "--snapshot-every", "32", "--residual-time", "0.03125"]


def test_evolve_eigenstate(out_dir):
    result = _invoke("evolve", "--model", "scarf", "--A", "4.5", "--B", "4.6", "--q=+1", "--n", "0", *EVOLVE_GRID, "--out", str(out_dir))
    assert result.exit_code == 0, result.output
    record, _ = _only_record(out_dir, "evolve")
    res = record.results
    assert res["pseudo_norm_initial"][0] == pytest.approx(1.0, abs=1e-6)
    assert res["pseudo_norm_drift"] <= 1e-6
    assert len(res["residual_levels"]) == 3
    assert res["energy_from_phase"] == pytest.approx(res["energy"], rel=1e-2)
    snapshots = sorted(out_dir.glob("evolve-scarf-t*.csv"))
    assert len(snapshots) == 3
    assert len(read_csv(snapshots[0])) == 513


def test_evolve_superposition_writes_overlap_series(out_dir):
    result = _invoke(
        "evolve", "--model", "oscillator", "--alpha", "0.3", "--c", "1",
        "--labels", "+1:0,-1:0", "--coeffs", "0.6,0.8j", *EVOLVE_GRID, "--out", str(out_dir),
    )
    assert result.exit_code == 0, result.output
    record, _ = _only_record(out_dir, "evolve")
    assert max(record.results["component_overlap_drift"]) <= 1e-9
    rows = read_csv(out_dir / "evolve-oscillator-overlap.csv")
    assert len(rows) == 65
    assert float(rows[0]["re_s_0"]) == pytest.approx(0.6, abs=1e-6)


@pytest.mark.parametrize("dt", ["0", "-0.01"])
def test_evolve_rejects_non_positive_dt(dt, out_dir):
    result = _invoke("evolve", "--model", "scarf", "--A", "4.5", "--B", "4.6", "--q=+1", "--n", "0", f"--dt={dt}", "--out", str(out_dir))
    assert result.exit_code == 2


def test_blow_up_maps_to_exit_4(monkeypatch, out_dir):
    def explode(config):
        raise BlowUp(step=7, growth=2e6)

    monkeypatch.setitem(commands.COMMANDS, "evolve", explode)
    result = _invoke("evolve", "--model", "scarf", "--A", "4.5", "--B", "4.6", "--q=+1", "--n", "0", "--out", str(out_dir))
    assert result.exit_code == 4
    assert "step 7" in _flat(result.output)


# -------------------------
# check
# -------------------------
def test_check_oscillator_shift_and_phase(out_dir):
    result = _invoke(
        "check", "--model", "oscillator", "--alpha", "0.3", "--c", "0.5", "--c2", "1.5", "--q=+1", "--n", "0",
        "--out", str(out_dir),
    )
    assert result.exit_code == 0, result.output
    record, _ = _only_record(out_dir, "check")
    res = record.results
    assert res["shift_deviation"] <= 1e-9
    assert res["pt_phase_fitted"] == pytest.approx(0.2 * math.pi, abs=1e-8)
    assert res["modulus_deviation"] <= 1e-12


def test_check_scarf_phase_is_zero(out_dir):
    result = _invoke("check", "--model", "scarf", "--A", "2.2", "--B", "1.9", "--q=+1", "--n", "1", "--out", str(out_dir))
    assert result.exit_code == 0, result.output
    record, _ = _only_record(out_dir, "check")
    assert abs(math.remainder(record.results["pt_phase_fitted"], 2 * math.pi)) <= 1e-8
    assert "shift_deviation" not in record.results


def test_check_shift_needs_oscillator(out_dir):
    result = _invoke("check", "--model", "scarf", "--A", "2.2", "--B", "1.9", "--q=+1", "--n", "0", "--c2", "1.0", "--out", str(out_dir))
    assert result.exit_code == 2
