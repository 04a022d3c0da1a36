import json
import subprocess
import sys

import numpy as np
import pytest

from chaos_sensor import cli
from chaos_sensor.datasets import load_dataset
from chaos_sensor.hr import HRParameters, spike_intervals
from chaos_sensor.perceptron import load_model


def run(*argv):
    return cli.main([str(a) for a in argv])


def result_of(err):
    line = next(ln for ln in err.splitlines() if ln.startswith("result: "))
    return json.loads(line[len("result: "):])


@pytest.fixture(scope="module")
def tiny_base(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "base.csv"
    assert run("dataset", "--n-r", 4, "--nl", 12, "--s", 2, "--count", 20, "--out", path) == 0
    return path


def test_simulate(tmp_path, capsys):
    out = tmp_path / "isi.csv"
    assert run("simulate", "--r", 0.0082, "--n-intervals", 25, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "index,interval" and len(lines) == 26
    expected = spike_intervals(HRParameters(r=0.0082, target_intervals=25))
    np.testing.assert_array_equal([float(ln.split(",")[1]) for ln in lines[1:]], expected)
    err = capsys.readouterr().err
    assert json.loads(err.splitlines()[0][len("config: "):])["r"] == 0.0082


def test_simulate_zero_intervals(tmp_path):
    out = tmp_path / "isi.csv"
    assert run("simulate", "--n-intervals", 0, "--out", out) == 0
    assert out.read_text() == "index,interval\n"


@pytest.mark.parametrize("argv", [
    ["simulate", "--r", "-1", "--out", "x.csv"],
    ["simulate", "--r", "0", "--out", "x.csv"],
    ["bifurcate", "--r-min", "0.01", "--r-max", "0.005", "--out", "x.csv"],
    ["train", "--input", "x.csv", "--out", "m.txt"],
    ["nosuchcommand"],
])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as info:
        cli.main(argv)
    assert info.value.code == 2
    assert not (tmp_path / "x.csv").exists()


def test_runtime_error_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,dataset\n")
    assert run("train", "--seed", 0, "--input", bad, "--out", tmp_path / "m.txt") == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert err[-1].startswith("error: train:")
    assert not (tmp_path / "m.txt").exists()


def test_failed_run_keeps_previous_output(tmp_path):
    out = tmp_path / "isi.csv"
    out.write_text("keep\n")
    assert run("simulate", "--i-ex", 0, "--n-intervals", 5, "--out", out, "--t-transient", 1e7) == 1
    assert out.read_text() == "keep\n"


def test_bifurcate(tmp_path):
    out = tmp_path / "bif.csv"
    assert run("bifurcate", "--r-min", 0.006, "--r-max", 0.008, "--n-r", 3, "--per-r", 5, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "r,interval" and len(lines) == 16
    assert {ln.split(",")[0] for ln in lines[1:]} == {"0.006", "0.007", "0.008"}


def test_dataset_and_stats(tiny_base):
    ds = load_dataset(tiny_base)
    assert len(ds) == 80 and ds.nl == 12


def test_dataset_is_deterministic(tmp_path, tiny_base):
    again = tmp_path / "again.csv"
    run("dataset", "--n-r", 4, "--nl", 12, "--s", 2, "--count", 20, "--out", again)
    assert again.read_bytes() == tiny_base.read_bytes()


def test_entropy(tmp_path, capsys):
    path = tmp_path / "s.csv"
    path.write_text("index,interval\n" + "\n".join(f"{i},{v}" for i, v in enumerate(range(1, 11))) + "\n")
    assert run("entropy", "--input", path, "--r1", 0.2, "--r1-absolute") == 0
    assert capsys.readouterr().out.strip() == "0"
    assert run("entropy", "--input", path, "--column", "interval", "--r1", 0.5, "--r1-absolute") == 0
    assert run("entropy", "--input", path, "--column", "nope") == 1


def test_train_predict_cv_cross(tmp_path, tiny_base, capsys):
    model = tmp_path / "m.txt"
    common = ["--seed", 3, "--nh", 2, "--epochs", 5, "--normalize"]
    assert run("train", "--input", tiny_base, "--out", model, *common) == 0
    mean = result_of(capsys.readouterr().err)["mean_subtracted"]
    assert load_model(model).nl == 12

    pred = tmp_path / "p.csv"
    assert run("predict", "--model", model, "--input", tiny_base, "--mean", mean, "--out", pred) == 0
    assert len(pred.read_text().splitlines()) == 81

    cv, trace = tmp_path / "cv.csv", tmp_path / "trace.csv"
    assert run("cv", "--input", tiny_base, "--k", 4, "--out", cv, "--trace", trace, *common) == 0
    assert cv.read_text().splitlines()[-1].startswith("mean,")
    assert trace.read_text().splitlines()[0] == "index,sfu,spe,spe_avg20"
    first = cv.read_bytes()
    run("cv", "--input", tiny_base, "--k", 4, "--out", cv, *common)
    assert cv.read_bytes() == first

    cross = tmp_path / "x.csv"
    assert run("cross", "--train", tiny_base, "--test", tiny_base, "--out", cross, *common) == 0
    assert cross.read_text().splitlines()[0] == "r2,rmse,mape_percent"


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# simulation\nr = 0.0076\nn_intervals = 4\n")
    out = tmp_path / "o.csv"
    assert run("--config", cfg, "simulate", "--out", out) == 0
    config = json.loads(capsys.readouterr().err.splitlines()[0][len("config: "):])
    assert config["r"] == 0.0076 and config["n_intervals"] == 4
    assert run("--config", cfg, "simulate", "--n-intervals", 2, "--out", out) == 0
    assert len(out.read_text().splitlines()) == 3
    cfg.write_text("bogus_key = 1\n")
    with pytest.raises(SystemExit) as info:
        run("--config", cfg, "simulate", "--out", out)
    assert info.value.code == 2


def test_peaks(tmp_path):
    fs = 50_000.0
    t = np.arange(int(0.05 * fs)) / fs
    times = [0.005, 0.012, 0.02, 0.031, 0.04]
    v = sum(np.exp(-0.5 * ((t - p) / 3e-4) ** 2) for p in times)
    wav = tmp_path / "w.csv"
    wav.write_text("t,v\n" + "\n".join(f"{a!r},{b!r}" for a, b in zip(t.tolist(), v.tolist())) + "\n")
    out = tmp_path / "p.csv"
    assert run("peaks", "--input", wav, "--out", out) == 0
    got = [float(x) for x in out.read_text().splitlines()[1:]]
    np.testing.assert_allclose(got, np.diff(times), atol=2 / fs)


def test_experimental_dataset(tmp_path):
    rng = np.random.default_rng(0)
    rest, stim = tmp_path / "rest.csv", tmp_path / "stim.csv"
    rest.write_text("interval\n" + "\n".join(map(str, rng.uniform(0.1, 0.3, 30))) + "\n")
    stim.write_text("interval\n" + "\n".join(map(str, rng.uniform(0.1, 0.3, 5))) + "\n")
    out = tmp_path / "exp.csv"
    with pytest.warns(UserWarning):
        assert run("dataset", "--nl", 10, "--rest", rest, "--stim", stim, "--out", out) == 0
    ds = load_dataset(out)
    assert len(ds) == 21 and set(ds.tags) == {"rest"}


def test_module_entry_point(tmp_path):
    out = tmp_path / "isi.csv"
    proc = subprocess.run([sys.executable, "-m", "chaos_sensor", "simulate", "--n-intervals", "3",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert len(out.read_text().splitlines()) == 4
