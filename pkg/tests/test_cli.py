import json
from pathlib import Path

import pytest

from pmsm_hybrid import cli
from pmsm_hybrid import config as cfgmod
from pmsm_hybrid.errors import ConfigurationError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if code == 0 else json.loads(err.strip().splitlines()[-1]))


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert cli.main(["generate", "--n-designs", "12", "--seed", "4", "--out", str(root)]) == 0
    ds = next(root.glob("generate-*/dataset.bin"))
    assert cli.main(["train", "hybrid", "--dataset", str(ds), "--max-epochs", "3", "--patience", "2",
                     "--seed", "4", "--out", str(root), "--no-plots"]) == 0
    ckpt = next(root.glob("train-hybrid-*/hybrid.ckpt"))
    return root, ds, ckpt


def test_generate_writes_config_and_dataset(workspace):
    root, ds, _ = workspace
    cfg = json.loads((ds.parent / "config.json").read_text())
    assert cfg["seed"] == 4 and cfg["dataset"]["n_designs"] == 12
    assert ds.parent.name.startswith("generate-") and ds.parent.name.endswith("-seed4")


def test_evaluate_kpi_effmap(workspace, capsys, tmp_path):
    _, ds, ckpt = workspace
    code, res = run(capsys, "evaluate", "--dataset", str(ds), "--checkpoint", str(ckpt), "--out", str(tmp_path))
    assert code == 0 and Path(res["metrics"]).exists()
    code, res = run(capsys, "kpi", "--dataset", str(ds), "--checkpoint", str(ckpt), "--out", str(tmp_path))
    assert code == 0 and set(res) >= {"classical", "hybrid"}
    run_dir = Path(res["run_dir"])
    assert (run_dir / "curves.svg").exists() and (run_dir / "limit_curve_hybrid.csv").exists()
    code, res = run(capsys, "effmap", "--dataset", str(ds), "--checkpoint", str(ckpt), "--out", str(tmp_path))
    assert code == 0 and res["max_difference"] >= 0.0
    assert (Path(res["run_dir"]) / "effmap_difference.svg").exists()


def test_kpi_midrange_without_dataset_matches_fixture(capsys, tmp_path):
    code, res = run(capsys, "kpi", "--design", "midrange", "--out", str(tmp_path), "--no-plots")
    golden = json.loads((Path(__file__).parent / "fixtures" / "midrange_kpis.json").read_text())["kpis"]
    assert code == 0
    assert [res["classical"][f"z{k}"] for k in range(1, 8)] == golden


def test_commands_are_idempotent(workspace, capsys, tmp_path):
    _, ds, ckpt = workspace
    dirs = []
    for _ in range(2):
        code, res = run(capsys, "kpi", "--dataset", str(ds), "--checkpoint", str(ckpt), "--design", "2",
                        "--out", str(tmp_path), "--no-plots")
        assert code == 0
        dirs.append(Path(res["run_dir"]))
    assert dirs[0] != dirs[1]
    for f in dirs[0].iterdir():
        assert f.read_bytes() == (dirs[1] / f.name).read_bytes()


def test_compare_small(workspace, capsys, tmp_path):
    _, ds, _ = workspace
    code, res = run(capsys, "compare", "--dataset", str(ds), "--fractions", "0.5", "1.0", "--max-epochs", "2",
                    "--patience", "1", "--out", str(tmp_path))
    assert code == 0
    assert (Path(res["run_dir"]) / "comparison.svg").exists()


def test_exit_codes(workspace, capsys, tmp_path):
    _, ds, _ = workspace
    code, err = run(capsys, "generate", "--config", str(tmp_path / "nope.toml"))
    assert code == 3 and err["error"] == "FileNotFoundError"
    bad = tmp_path / "bad.toml"
    bad.write_text("[network]\npreset = 'gigantic'\n")
    assert run(capsys, "generate", "--config", str(bad), "--out", str(tmp_path))[0] == 2
    bad.write_text("[train]\nwarp = 1\n")
    assert run(capsys, "generate", "--config", str(bad), "--out", str(tmp_path))[0] == 2
    corrupt = tmp_path / "corrupt.bin"
    corrupt.write_bytes(ds.read_bytes()[:-3])
    code, err = run(capsys, "evaluate", "--dataset", str(corrupt), "--checkpoint", str(corrupt),
                    "--out", str(tmp_path))
    assert code == 4 and err["error"] == "TruncatedFileError"
    assert run(capsys, "train", "direct", "--out", str(tmp_path))[0] == 2
    code, err = run(capsys, "kpi", "--dataset", str(ds), "--design", "999", "--out", str(tmp_path))
    assert code == 2


def test_help_lists_flags(capsys):
    for cmd in ("generate", "train", "evaluate", "kpi", "effmap", "compare"):
        with pytest.raises(SystemExit):
            cli.main([cmd, "--help"])
        text = capsys.readouterr().out
        for flag in ("--config", "--seed", "--out", "--preset"):
            assert flag in text


def test_precedence_flag_over_file_over_default(tmp_path):
    f = tmp_path / "c.toml"
    f.write_text("seed = 7\n[train]\npatience = 5\nbatch_size = 16\n")
    cfg = cfgmod.resolve(cfgmod.load_file(f), {"train": {"patience": 9}})
    assert cfg["seed"] == 7 and cfg["train"]["patience"] == 9 and cfg["train"]["batch_size"] == 16
    assert cfg["train"]["max_epochs"] == cfgmod.DEFAULTS["train"]["max_epochs"]
    assert cfgmod.machine_model(cfg).i_sat == cfg["system"]["max_current"]
    with pytest.raises(ConfigurationError):
        cfgmod.resolve({"compare": {"fractions": [0.0]}})


def test_out_root_resolution(monkeypatch, tmp_path):
    cfg = cfgmod.resolve()
    monkeypatch.setenv(cfgmod.OUT_ENV, str(tmp_path))
    assert cfgmod.out_root(cfg, None) == tmp_path
    assert cfgmod.out_root(cfg, "x") == Path("x")
    monkeypatch.delenv(cfgmod.OUT_ENV)
    assert cfgmod.out_root(cfg, None) == Path("runs")
