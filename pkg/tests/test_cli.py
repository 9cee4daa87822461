import json
import shutil
from pathlib import Path

import pytest

from deltaconsensus.cli import main
from deltaconsensus.config import ConfigError, load_config, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RING5 = {"n": 5, "edges": [[0, 1], [1, 2], [2, 3], [3, 4], [4, 0]], "undirected": True}
X0 = [0.2, 0.8, 0.4, -1.0, -2.0]


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _small(**kw):
    cfg = {"graph": RING5, "scenario": {"kind": "receive", "faulty": [0, 1]}, "probs": [0.3, 0.3, 0.2, 0.2],
           "h": 0.01, "delta_t": 0.1, "x0": X0, "horizon": 50, "n_runs": 200, "seed": 11}
    cfg.update(kw)
    return cfg


def test_reference_config(tmp_path):
    assert main(["run", "--config", str(CONFIGS / "reference.json"), "--out", str(tmp_path)]) == 0
    for name in ("trajectory.csv", "bounds.json", "montecarlo.json", "gaps.csv", "summary.txt"):
        assert (tmp_path / name).exists()
    bounds = json.loads((tmp_path / "bounds.json").read_text())
    (t4,) = bounds["reports"]
    assert t4["theorem"] == "T4-sampled"
    assert round(t4["bound_e"], 4) == 0.0716 and round(t4["bound_state"], 4) == 2.0918
    assert t4["sound"] and "config_digest" in bounds and bounds["seed"] == 20170601
    mc = json.loads((tmp_path / "montecarlo.json").read_text())
    assert mc["config_digest"] == bounds["config_digest"]
    assert mc["stats"]["predicted"] == pytest.approx(t4["consensus_value"], abs=1e-12)


def test_identical_graphs(tmp_path):
    cfg = {"graphs": [RING5] * 4, "base_index": 3, "probs": [0.3, 0.3, 0.2, 0.2], "h": 0.1, "k_bar": 1,
           "x0": X0, "horizon": 400, "n_runs": 20, "seed": 1}
    assert main(["run", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 0
    bounds = json.loads((tmp_path / "o" / "bounds.json").read_text())
    assert bounds["reports"][0]["bound_e"] == 0.0
    last = (tmp_path / "o" / "trajectory.csv").read_text().strip().splitlines()[-1].split(",")
    assert all(abs(float(v) - sum(X0) / 5) < 1e-12 for v in last[1:-1])


def test_sampling_period_boundary_rejected(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["run", "--config", _write(tmp_path, _small(h=0.5, delta_t=None, k_bar=1)), "--out", str(out)]) == 1
    summary = (out / "summary.txt").read_text()
    assert "sampling-period" in summary
    assert not (out / "trajectory.csv").exists()


def test_deterministic_reports(tmp_path):
    cfg = _write(tmp_path, _small())
    for d in ("a", "b"):
        assert main(["run", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for name in ("bounds.json", "montecarlo.json", "trajectory.csv", "gaps.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_changes_monte_carlo(tmp_path):
    main(["run", "--config", _write(tmp_path, _small(seed=1), "a.json"), "--out", str(tmp_path / "a")])
    main(["run", "--config", _write(tmp_path, _small(seed=2), "b.json"), "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "montecarlo.json").read_text() != (tmp_path / "b" / "montecarlo.json").read_text()


def test_only_selects_analysis(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", _write(tmp_path, _small()), "--out", str(out), "--only", "bounds"]) == 0
    assert (out / "bounds.json").exists() and not (out / "montecarlo.json").exists()


def test_csv_header(tmp_path):
    out = tmp_path / "o"
    main(["run", "--config", _write(tmp_path, _small(horizon=3)), "--out", str(out), "--only", "simulate"])
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,x_0,x_1,x_2,x_3,x_4,graph_index"
    assert len(lines) == 1 + 3 * 10 + 1


def test_graph_file_reference(tmp_path):
    shutil.copy(CONFIGS / "ring5.json", tmp_path / "g.json")
    cfg = load_config(_write(tmp_path, _small(graph="g.json")))
    assert cfg.ensemble.n == 5 and cfg.scheme.k_bar == 10


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("DELTACONSENSUS_OUT", str(tmp_path / "env"))
    assert main(["run", "--config", _write(tmp_path, _small()), "--only", "bounds"]) == 0
    assert (tmp_path / "env" / "bounds.json").exists()


@pytest.mark.parametrize("change", [
    {"probs": [0.5, 0.5, 0.5, 0.5]},
    {"x0": [1.0, 2.0]},
    {"graph": "missing.json"},
    {"analyses": ["plot"]},
    {"epsilons": [-1.0]},
    {"delta_t": 0.015},
])
def test_config_errors_exit_2(tmp_path, change):
    assert main(["run", "--config", _write(tmp_path, _small(**change)), "--out", str(tmp_path / "o")]) == 2


def test_unparseable_config(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["run", "--config", str(path)]) == 2
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2


def test_fault_list_layout():
    cfg = parse_config({"graph": RING5, "faults": [{"receive": [0]}, {"receive": [1]}, {"receive": [0, 1]}, {}],
                        "base_index": 3, "probs": [0.3, 0.3, 0.2, 0.2], "h": 0.1, "x0": X0})
    ref = parse_config(_small(h=0.1, delta_t=None, k_bar=1))
    assert all(a == b for a, b in zip(cfg.ensemble.graphs, ref.ensemble.graphs))


def test_digest_is_canonical():
    a = parse_config(_small())
    b = parse_config(dict(reversed(list(_small().items()))))
    assert a.digest == b.digest
    with pytest.raises(ConfigError):
        parse_config([1, 2])
