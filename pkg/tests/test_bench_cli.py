import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from onesided.bench import RunConfig, alpha_grid, cell_seed, emit_plotdata, load_config, run_experiment
from onesided.cli import main
from onesided.data_io import ResultRow, read_results, write_results
from onesided.exceptions import ConfigError


def config(tmp_path, **over):
    cfg = {
        "stream": {"kind": "synthetic", "d": 2, "T": 10, "noise_phi": 0.1},
        "methods": ["greedy"],
        "seeds": [0],
        "cutoffs": [0.5],
    }
    cfg.update(over)
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(cfg))
    return p


def test_alpha_grid_default():
    g = alpha_grid(-6, 6)
    assert len(g) == 13 and g[0] == 2**-6 and g[-1] == 64


def test_greedy_single_run_has_ten_rows(tmp_path):
    out = run_experiment(load_config(config(tmp_path)), tmp_path / "o")
    rows = read_results(out["results"])
    assert out["exit_code"] == 0
    assert len(rows) == 10 and {r.run_id for r in rows} == {"greedy|alpha=|cut=0.5|seed=0"}
    assert [r.round for r in rows] == list(range(1, 11))
    assert np.allclose(np.cumsum([r.r_t for r in rows]), [r.R_t for r in rows], atol=1e-5)


def test_two_seeds(tmp_path):
    out = run_experiment(load_config(config(tmp_path, seeds=[0, 1])), tmp_path / "o")
    assert len({r.run_id for r in read_results(out["results"])}) == 2
    lines = open(out["summary"]).read().splitlines()
    assert lines[1].split(",")[-1] == "2"


def test_grid_completeness(tmp_path):
    cfg = load_config(config(tmp_path, methods=["greedy", "margin", "adaptive", "passive"], seeds=[1, 2],
                             cutoffs=[0.5, 0.7], alpha_exponents=[-1, 1]))
    out = run_experiment(cfg, tmp_path / "o")
    ids = {r.run_id for r in read_results(out["results"])}
    # greedy and passive have singleton grids; margin and adaptive use 3 alphas
    assert len(ids) == (1 + 3 + 3 + 1) * 2 * 2


def test_adaptive_theory_mode_is_singleton(tmp_path):
    cfg = load_config(config(tmp_path, methods=["adaptive"], learner={"adaptive_rho": "theory"}))
    assert cfg.alphas_for("adaptive") == [None]
    cfg.learner["adaptive_rho"] = 0.25
    assert cfg.alphas_for("adaptive") == [0.25]


def test_reproducible_and_isolated(tmp_path):
    p = config(tmp_path, methods=["eps_greedy", "greedy"], seeds=[0, 1], alpha_exponents=[0, 1])
    a = run_experiment(load_config(p), tmp_path / "a")
    b = run_experiment(load_config(p), tmp_path / "b", jobs=2)
    assert open(a["results"], "rb").read() == open(b["results"], "rb").read()
    c = run_experiment(load_config(p), tmp_path / "c", methods=["eps_greedy"])
    eps = [line for line in open(a["results"]) if line.startswith("eps_greedy")]
    assert eps == open(c["results"]).readlines()[1:]


def test_cell_seed_depends_on_every_coordinate():
    base = cell_seed(0, "margin", 0.5, 0.5)
    assert base == cell_seed(0, "margin", 0.5, 0.5)
    assert len({base, cell_seed(1, "margin", 0.5, 0.5), cell_seed(0, "noise", 0.5, 0.5),
                cell_seed(0, "margin", 1.0, 0.5), cell_seed(0, "margin", 0.5, 0.7)}) == 5


def test_config_errors_listed_together(tmp_path):
    cfg = RunConfig(stream={"kind": "synthetic", "d": 0, "T": 5}, methods=["nope"], seeds=[1, 1],
                    cutoffs=[1.2], alpha_exponents=(3, 1))
    with pytest.raises(ConfigError) as err:
        cfg.validate()
    assert len(err.value.problems) == 5
    with pytest.raises(ConfigError):
        RunConfig(stream={"kind": "synthetic", "d": 2, "T": 5}, methods=[]).validate()


def test_unknown_config_key(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("stream: {kind: synthetic, d: 2, T: 5}\nmethods: [greedy]\ncolour: red\n")
    with pytest.raises(ConfigError, match="colour"):
        load_config(p)


def test_csv_stream_config(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 2))
    y = X @ [1.0, -0.5] + 0.1 * rng.normal(size=200)
    csv = tmp_path / "d.csv"
    csv.write_text("a,b,y\n" + "".join(f"{u:.5f},{v:.5f},{w:.5f}\n" for (u, v), w in zip(X, y)))
    p = config(tmp_path, stream={"kind": "csv", "path": "d.csv", "schema": {"label": "y"}}, methods=["greedy"])
    out = run_experiment(load_config(p), tmp_path / "o")
    rows = read_results(out["results"])
    assert len(rows) == 190  # 5% warm start


def test_emit_plotdata(tmp_path):
    rows = [ResultRow("greedy|alpha=|cut=0.5|seed=0", "greedy", 0, t, 0.0, R, 1, 1)
            for t, R in [(1, 2.0), (2, 3.0), (3, 3.0), (4, 3.0)]]
    res, out = tmp_path / "r.csv", tmp_path / "p.csv"
    write_results(rows, res)
    emit_plotdata(res, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "method,round,avg_loss_rate,stderr"
    rates = [float(line.split(",")[2]) for line in lines[1:]]
    assert rates == pytest.approx([2.0, 1.5, 1.0, 0.75])
    # R constant after t = 2: strictly decreasing
    assert all(a > b for a, b in zip(rates[1:], rates[2:]))
    write_results([], res)
    emit_plotdata(res, out)
    assert out.read_text() == "method,round,avg_loss_rate,stderr\n"


def test_plotdata_averages_seeds(tmp_path):
    rows = [ResultRow(f"greedy|alpha=|cut=0.5|seed={s}", "greedy", s, 1, R, R, 1, 1) for s, R in [(0, 1.0), (1, 3.0)]]
    res, out = tmp_path / "r.csv", tmp_path / "p.csv"
    write_results(rows, res)
    emit_plotdata(res, out)
    assert out.read_text().splitlines()[1] == "greedy,1,2,1"


def test_cli_run_summarize_plotdata(tmp_path, monkeypatch):
    monkeypatch.setenv("ONESIDED_LOG", "debug")
    p = config(tmp_path, methods=["greedy", "margin"], alpha_exponents=[0, 0])
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o"), "--seeds", "3,4"]) == 0
    res = tmp_path / "o" / "results.csv"
    assert {r.seed for r in read_results(res)} == {3, 4}
    assert main(["summarize", "--results", str(res), "--out", str(tmp_path / "s.csv")]) == 0
    assert (tmp_path / "s.csv").read_text() == (tmp_path / "o" / "summary.csv").read_text()
    assert main(["plotdata", "--results", str(res), "--out", str(tmp_path / "p.csv")]) == 0
    assert (tmp_path / "p.csv").read_text() == (tmp_path / "o" / "plotdata.csv").read_text()


def test_cli_config_error_writes_log(tmp_path):
    p = config(tmp_path, methods=["greedy", "bogus"], seeds=[2, 2])
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    errors = json.loads((tmp_path / "o" / "errors.json").read_text())
    assert len(errors) == 2 and all(e["error"] == "ConfigError" for e in errors)
    assert not (tmp_path / "o" / "results.csv").exists()


def test_cli_bad_results_file(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n")
    assert main(["summarize", "--results", str(bad), "--out", str(tmp_path / "s.csv")]) == 1
    assert "header" in capsys.readouterr().err


def test_cell_failure_reported(tmp_path):
    # passive needs K + S items; a 3-round stream with large K fails that cell only
    p = config(tmp_path, stream={"kind": "synthetic", "d": 2, "T": 3}, methods=["greedy", "passive"],
               learner={"passive": {"K": 5, "S": 5}})
    out = run_experiment(load_config(p), tmp_path / "o")
    assert out["exit_code"] == 1
    errors = json.loads((tmp_path / "o" / "errors.json").read_text())
    assert errors[0]["error"] == "StreamTooShort"
    assert {r.method for r in read_results(out["results"])} == {"greedy"}


def test_module_entry_point(tmp_path):
    p = config(tmp_path)
    proc = subprocess.run([sys.executable, "-m", "onesided", "run", "--config", str(p), "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
