import json

import pytest

from forcebias.bias_model import BiasParameters, reproduce
from forcebias.cli import main
from forcebias.fitting import ReproductionTrial
from forcebias.io import blob_hash, traces_from_csv, trials_to_csv


def write_trials(path, params, stimuli=range(1, 11), reps=5):
    trials = [ReproductionTrial(float(r), reproduce(params, float(r))) for r in stimuli for _ in range(reps)]
    path.write_text(trials_to_csv(trials))
    return path


def test_fit_noiseless_file(tmp_path, capsys):
    src = write_trials(tmp_path / "t.csv", BiasParameters(1.0, -0.5))
    assert main(["fit", str(src), "--out-dir", str(tmp_path / "out")]) == 0
    fit = json.loads((tmp_path / "out" / "fit.json").read_text())["fit"]
    assert fit["gamma"] == pytest.approx(1.0, abs=1e-9)
    assert fit["converged"]


def test_fit_empty_file_is_io_error(tmp_path):
    src = tmp_path / "empty.csv"
    src.write_text("")
    assert main(["fit", str(src)]) == 1


def test_fit_missing_file_is_io_error(tmp_path):
    assert main(["fit", str(tmp_path / "nope.csv")]) == 1


def test_fit_flat_data_is_degenerate(tmp_path):
    src = tmp_path / "flat.csv"
    src.write_text(trials_to_csv([ReproductionTrial(float(r), float(r)) for r in range(1, 11)]))
    assert main(["fit", str(src), "--out-dir", str(tmp_path)]) == 2


def test_fit_single_level_is_degenerate(tmp_path):
    src = write_trials(tmp_path / "one.csv", BiasParameters(1.0, -0.5), stimuli=[2.0])
    assert main(["fit", str(src), "--out-dir", str(tmp_path)]) == 2


def test_simulate_writes_traces(tmp_path):
    assert main(["simulate", "--alpha", "1", "--beta", "-0.5", "--r0", "4", "0.25",
                 "--phases", "3", "--out-dir", str(tmp_path)]) == 0
    traces = traces_from_csv((tmp_path / "traces.csv").read_text())
    assert traces[0].robot == (4.0, 2.0, 2.0**0.5)
    assert len(traces) == 2


def test_simulate_rejects_positive_beta(tmp_path):
    assert main(["simulate", "--alpha", "1", "--beta", "0.5", "--r0", "4", "--out-dir", str(tmp_path)]) == 1


def test_stability_one_level_below_is_degenerate(tmp_path):
    # gamma = 2 leaves only r/gamma = 0.5 below 1
    src = write_trials(tmp_path / "t.csv", BiasParameters.from_equilibrium(2.0, -0.6))
    assert main(["stability", str(src), "--out-dir", str(tmp_path)]) == 2


def test_stability_noiseless_has_no_region(tmp_path):
    src = write_trials(tmp_path / "t.csv", BiasParameters.from_equilibrium(3.5, -0.6))
    assert main(["stability", str(src), "--out-dir", str(tmp_path)]) == 0
    out = json.loads((tmp_path / "stability.json").read_text())
    assert out["unstable_region"] is None
    assert all(t["significant"] for t in out["level_tests"])


def test_experiment_noise_free_has_no_region(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "experiment", "n_agents": 4, "noise_sigma": 0.0}))
    assert main(["experiment", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["unstable_region"] is None


def test_experiment_noisy_region_contains_one(tmp_path):
    assert main(["experiment", "--seed", "1", "--out-dir", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    region = report["unstable_region"]
    assert region["lower"] < 1 < region["upper"]
    for name, digest in report["outputs"].items():
        assert blob_hash((tmp_path / name).read_bytes()) == digest


def test_experiment_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["experiment", "--seed", "5", "--out-dir", str(d)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_experiment_bad_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_agents": "many"}))
    assert main(["experiment", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 1


def test_servo_default(tmp_path):
    assert main(["servo", "--out-dir", str(tmp_path)]) == 0
    m = json.loads((tmp_path / "servo_metrics.json").read_text())["metrics"]
    assert m["force_step"]["steady_error"] < 0.01
    assert m["disturbance"]["residual_at_5_over_g"] < 0.01


@pytest.mark.parametrize("bad", [{"controller": {"dt": 0.002}}, {"seconds": 0}])
def test_servo_invalid_config(tmp_path, bad):
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps(bad))
    assert main(["servo", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 1


def test_servo_divergence_exit_code(tmp_path):
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps({"controller": {"C_f": 1e5}, "seconds": 0.5, "steady_window": 0.1}))
    assert main(["servo", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 3


def test_report_renders(tmp_path, capsys):
    assert main(["experiment", "--seed", "1", "--out-dir", str(tmp_path)]) == 0
    capsys.readouterr()
    assert main(["report", str(tmp_path / "report.json")]) == 0
    text = capsys.readouterr().out
    assert "unstable region" in text and "| x |" in text


def test_report_bad_json(tmp_path):
    p = tmp_path / "r.json"
    p.write_text("{")
    assert main(["report", str(p)]) == 1
