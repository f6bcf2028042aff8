import json
import os

import pytest

from qemlab.cli import main
from qemlab.experiments import run_experiment


def small_cfg(**over):
    cfg = {
        "scenario": "bias-vs-m",
        "seed": 0,
        "graph": "path-4",
        "vqe": {"layers": 3, "iters": 50, "seed": 5},
        "noise": {"kind": "stochastic_pauli", "p1_values": [2e-4]},
        "subspace": {"kind": "power", "m_values": [1, 2, 3]},
    }
    cfg.update(over)
    return cfg


class TestRunScenarios:
    def test_bias_vs_m_writes_csv_and_manifest(self, tmp_path):
        cfg = small_cfg()
        written = run_experiment(cfg, str(tmp_path))
        names = {os.path.basename(p) for p in written}
        assert {"bias_vs_m.csv", "reference.csv", "manifest.json"} <= names
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["scenario"] == "bias-vs-m"
        assert len(manifest["config_hash"]) == 16
        lines = (tmp_path / "bias_vs_m.csv").read_text().splitlines()
        assert lines[0].startswith("kind,p1,m")
        # M=1 has no window-compatible eigenvalue and is recorded, not dropped
        assert any("SelectionFailureError" in ln for ln in lines)

    def test_byte_identical_reruns(self, tmp_path):
        cfg = small_cfg()
        run_experiment(cfg, str(tmp_path / "a"))
        run_experiment(cfg, str(tmp_path / "b"))
        for name in ("bias_vs_m.csv", "reference.csv", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == \
                   (tmp_path / "b" / name).read_bytes()

    def test_queries_scenario(self, tmp_path):
        cfg = {
            "scenario": "queries", "seed": 0, "graph": "path-4",
            "kinds": ["power", "fault"], "m_values": [2, 3],
        }
        run_experiment(cfg, str(tmp_path))
        rows = (tmp_path / "queries.csv").read_text().splitlines()[1:]
        assert len(rows) == 8
        got = {tuple(r.split(",")[:3]): int(r.split(",")[3]) for r in rows}
        assert got[("fault", "2", "0")] == got[("fault", "2", "1")]

    def test_shots_scenario_small(self, tmp_path):
        cfg = small_cfg(scenario="stddev-vs-shots")
        cfg["subspace"] = {"kind": "power", "m_values": [2]}
        cfg["shots"] = {"ns_values": [1e6, 1e8], "n_samples": 40}
        cfg["noise"] = {"kind": "stochastic_pauli", "p1": 2e-4}
        run_experiment(cfg, str(tmp_path))
        rows = (tmp_path / "shots.csv").read_text().splitlines()
        assert len(rows) == 3
        std6 = float(rows[1].split(",")[4])
        std8 = float(rows[2].split(",")[4])
        assert std8 < std6

    def test_trace_distance_scenario_small(self, tmp_path):
        cfg = {
            "scenario": "trace-distance", "seed": 0, "graph": "path-4",
            "depths": [5, 50], "error_budgets": [1.0], "n_seeds": 3,
        }
        run_experiment(cfg, str(tmp_path))
        rows = (tmp_path / "trace_distance.csv").read_text().splitlines()[1:]
        d5 = float(rows[0].split(",")[3])
        d50 = float(rows[1].split(",")[3])
        assert d50 < d5

    def test_unknown_scenario(self, tmp_path):
        with pytest.raises(Exception):
            run_experiment({"scenario": "nope"}, str(tmp_path))

    def test_matrix_and_ledger_dump(self, tmp_path):
        cfg = small_cfg(dump_matrices=True)
        cfg["subspace"] = {"kind": "power", "m_values": [2]}
        run_experiment(cfg, str(tmp_path))
        mat_lines = (tmp_path / "matrices.csv").read_text().splitlines()
        assert mat_lines[0] == "p1,m,which,i,j,re,im,var"
        assert len(mat_lines) == 1 + 2 * 4  # S and H, 2x2 each
        ledger_lines = (tmp_path / "ledger.csv").read_text().splitlines()
        assert ledger_lines[0] == "p1,m,state_id,axes,value,var,shots"
        assert len(ledger_lines) > 5

    def test_histogram_scenario_small(self, tmp_path):
        cfg = small_cfg(scenario="histogram")
        cfg["subspace"] = {"kind": "power", "m_values": [2]}
        cfg["shots"] = {"ns": 1e8, "n_samples": 25}
        cfg["noise"] = {"kind": "stochastic_pauli", "p1": 2e-4}
        run_experiment(cfg, str(tmp_path))
        rows = (tmp_path / "histogram.csv").read_text().splitlines()[1:]
        assert len(rows) == 25

    def test_cost_metric_scenario_small(self, tmp_path):
        cfg = {
            "scenario": "cost-metric", "seed": 0, "graph": "path-4",
            "partition": "half-2-2",
            "vqe": {"layers": 3, "iters": 50, "seed": 5},
            "power_m": [2, 3], "dc_m": [2, 3],
        }
        run_experiment(cfg, str(tmp_path))
        rows = (tmp_path / "cost_metric.csv").read_text().splitlines()[1:]
        kinds = {r.split(",")[0] for r in rows}
        assert kinds == {"power", "dc"}
        for r in rows:
            assert float(r.split(",")[5]) > 0  # metric column

    def test_esd_vs_dsp_scenario_small(self, tmp_path):
        cfg = {
            "scenario": "esd-vs-dsp", "seed": 0, "graph": "path-3",
            "vqe": {"layers": 2, "iters": 40, "seed": 5},
            "noise": {"p1_values": [1e-3]},
            "noise_kinds": ["stochastic_pauli"],
        }
        run_experiment(cfg, str(tmp_path))
        rows = (tmp_path / "esd_vs_dsp.csv").read_text().splitlines()[1:]
        assert len(rows) == 1
        _, _, d_esd, d_dsp, pur, p0 = rows[0].split(",")
        assert float(d_dsp) <= float(d_esd)
        assert float(p0) >= float(pur)


class TestCliEntry:
    def test_vqe_then_run_with_params_file(self, tmp_path):
        params_path = str(tmp_path / "params.json")
        rc = main(["vqe", "--graph", "path-4", "--layers", "3", "--iters", "40",
                   "--seed", "5", "--out", params_path])
        assert rc == 0
        params = json.load(open(params_path))
        assert len(params) == 2 * 4 * 4

        cfg = small_cfg()
        cfg["vqe"]["params_file"] = params_path
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        rc = main(["run", "--config", str(cfg_path), "--out-dir",
                   str(tmp_path / "out")])
        assert rc == 0
        assert (tmp_path / "out" / "bias_vs_m.csv").exists()

    def test_config_error_exit_code(self, tmp_path):
        cfg_path = tmp_path / "bad.json"
        cfg_path.write_text(json.dumps({"scenario": "definitely-not-real"}))
        rc = main(["run", "--config", str(cfg_path), "--out-dir", str(tmp_path)])
        assert rc == 1

    def test_runtime_error_exit_code(self, tmp_path):
        cfg = small_cfg()
        cfg["vqe"]["params_file"] = str(tmp_path / "missing.json")
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        rc = main(["run", "--config", str(cfg_path), "--out-dir", str(tmp_path)])
        assert rc == 2

    def test_queries_command(self, tmp_path, capsys):
        rc = main(["queries", "--graph", "path-4", "--kinds", "fault",
                   "--m-min", "2", "--m-max", "2", "--out-dir", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "fault" in out and "Q=32" in out

    def test_oracle_command(self, capsys):
        rc = main(["oracle", "--graph", "path-4", "--layers", "2",
                   "--obs", "ZZII", "--p1", "0.001"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "Tr[sym-product P]" in out

    def test_sweep_command(self, tmp_path):
        cfg = small_cfg()
        cfg["grid"] = {"noise.p1_values": [[1e-4], [2e-4]]}
        cfg_path = tmp_path / "sweep.json"
        cfg_path.write_text(json.dumps(cfg))
        rc = main(["sweep", "--config", str(cfg_path), "--out-dir",
                   str(tmp_path / "grid"), "--threads", "2"])
        assert rc == 0
        assert (tmp_path / "grid" / "point-000" / "bias_vs_m.csv").exists()
        assert (tmp_path / "grid" / "point-001" / "bias_vs_m.csv").exists()
