import json

import numpy as np
import pytest

from ionkernel import cli
from ionkernel import datasets as ds
from ionkernel import experiment as ex
from ionkernel import kernels as kn
from ionkernel import svm
from ionkernel.hamiltonian import IsingParams


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def error_line(err):
    line = [ln for ln in err.splitlines() if ln.startswith("error: ")][-1]
    return json.loads(line[len("error: "):])


def test_generate_is_deterministic(tmp_path, capsys):
    for sub in ("a", "b"):
        code, _, _ = run(capsys, "generate", "--task", "moons", "--n", 998, "--noise", 0.3,
                         "--seed", 7, "--output-dir", tmp_path / sub)
        assert code == 0
    a = (tmp_path / "a" / "moons_n998_seed7.csv").read_bytes()
    assert a == (tmp_path / "b" / "moons_n998_seed7.csv").read_bytes()
    d = ds.load_csv(tmp_path / "a" / "moons_n998_seed7.csv")
    ref = ds.make_moons(998, 0.3, seed=7)
    np.testing.assert_array_equal(d.X, ref.X)


def test_generate_odd_count_is_a_usage_error(tmp_path, capsys):
    code, _, err = run(capsys, "generate", "--task", "moons", "--n", 999, "--output-dir", tmp_path)
    assert code == 2
    assert error_line(err)["error"] == "usage"


def test_generate_split(tmp_path, capsys):
    code, out, _ = run(capsys, "generate", "--task", "circles", "--split", "--output-dir", tmp_path)
    assert code == 0
    files = json.loads(out)["files"]
    assert len(files) == 4
    train = ds.load_csv(tmp_path / "circles_n1000_seed0_train.csv")
    assert len(train) == 333 and train.X.min() >= -1 and train.X.max() <= 1


def test_kernel_single_qubit_is_all_ones(tmp_path, capsys):
    d = ds.Dataset(np.random.default_rng(0).uniform(-1, 1, (6, 1)), np.array([1, -1] * 3), "external")
    path = ds.save_csv(d, tmp_path / "one.csv")
    code, _, _ = run(capsys, "kernel", "--input", path, "--output-dir", tmp_path, "N=1", "h=3.3", "dt=7")
    assert code == 0
    K = kn.load_kernel(tmp_path / "one_gram.csv")
    np.testing.assert_allclose(K.values, 1.0, atol=1e-12)


def test_kernel_matches_library_call(tmp_path, capsys):
    d = ds.make_circles(20, seed=1)
    path = ds.save_csv(d, tmp_path / "c.csv")
    run(capsys, "kernel", "--input", path, "--output-dir", tmp_path, "N=3", "h=0.7", "dt=2.5")
    K = kn.load_kernel(tmp_path / "c_gram.csv")
    np.testing.assert_array_equal(K.values, kn.quantum_gram(IsingParams(3, 0.7, 2.5), d.X).values)


def test_train_writes_model(tmp_path, capsys, monkeypatch):
    d = ds.make_moons(40, seed=2)
    path = ds.save_csv(d, tmp_path / "m.csv")
    monkeypatch.setenv(cli.ENV_OUTPUT_DIR, str(tmp_path / "env"))
    code, out, _ = run(capsys, "train", "--input", path, "--scale", "kernel=rbf", "gamma=2", "C=10")
    assert code == 0
    model = svm.SvmModel.load(tmp_path / "env" / "m_model.json")
    X = ds.scale_features(d).X
    direct = svm.train(kn.rbf_gram(2.0, X).values, d.y, C=10.0)
    np.testing.assert_array_equal(model.dual_coefs, direct.dual_coefs)
    assert json.loads(out)["train_accuracy"] > 0.8


def test_grid_binds_run_grid(tmp_path, capsys):
    args = ["n_points=120", "n_train=40", "n_val=40", "n_test=40", "axis1_points=2",
            "axis2_points=2", "N=2"]
    cfg_path = tmp_path / "run.ini"
    ex.dump_config(ex.load_config(None, args), cfg_path)
    code, out, _ = run(capsys, "grid", "--config", cfg_path, "--output-dir", tmp_path, "--mesh-points", 5)
    assert code == 0
    info = json.loads(out)
    direct = ex.run_grid(ex.load_config(cfg_path))
    assert info["A_val"] == direct.val_accuracy and info["A_test"] == direct.test_accuracy
    assert len(info["files"]) == 3


def test_reproduce_writes_report(tmp_path, capsys, monkeypatch):
    calls = {}

    def fake(table, scale, points, out_dir, workers, base):
        calls.update(table=table, scale=scale, points=points)
        return {"passed": True}

    monkeypatch.setattr(cli.bm, "reproduce_table", fake)
    code, out, _ = run(capsys, "reproduce", "II", "--reduced", "--output-dir", tmp_path)
    assert code == 0 and calls == {"table": "II", "scale": "reduced", "points": 20}
    assert json.loads(out)["files"][0].endswith("tableII_reduced_report.json")


def test_info_lists_keys(capsys):
    code, out, _ = run(capsys, "info")
    assert code == 0
    for key in ex.ExperimentConfig().to_dict():
        assert f"  {key} = " in out


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["info", "--bogus"],
    ["info", "nosuchkey=1"],
    ["info", "N=abc"],
    ["kernel", "--input", "/nonexistent.csv"],
    ["grid", "--config", "/nonexistent.ini"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert error_line(err)["error"] == "usage"
