import json
import math
import os

import numpy as np
import pytest

from zrp import cli, io
from zrp.core import dirac_config, simulate_fast
from zrp.experiments import ExperimentConfig, run_experiment
from zrp.rates import preset


def make_cfg(tmp_path, kind, **doc):
    doc.setdefault("seed", 99)
    doc.setdefault("rate", "rate-one")
    return ExperimentConfig.from_dict({**doc, "experiment": kind},
                                      out_dir=str(tmp_path / kind))


class TestConfigValidation:
    def test_requires_seed(self, tmp_path):
        with pytest.raises(ValueError, match="seed"):
            ExperimentConfig.from_dict({"experiment": "predict", "rho": 1.0})

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"experiment": "warp", "seed": 1})

    def test_rejects_kind_mismatch(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"experiment": "exact", "seed": 1},
                                       kind="predict")

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"experiment": "exact", "seed": 1, "n": [0]})

    def test_seed_override(self):
        cfg = ExperimentConfig.from_dict({"experiment": "predict", "seed": 1,
                                          "rho": 1.0}, seed=7)
        assert cfg.seed == 7


class TestPredict:
    def test_report_values(self, tmp_path):
        cfg = make_cfg(tmp_path, "predict", rho=1.0, profile=[0.5, 0.5])
        result = run_experiment(cfg)
        doc = json.load(open(result["json"]))
        assert doc["prediction"] == pytest.approx(0.75, abs=1e-9)
        assert doc["gamma"] == pytest.approx(1.5, abs=1e-9)
        assert doc["rho_seq"] == pytest.approx([1.0, 1.0, 0.0], abs=1e-9)

    def test_point_profile_equals_gamma(self, tmp_path):
        cfg = make_cfg(tmp_path, "predict", rho=2.0, profile=[2.0])
        assert run_experiment(cfg)["prediction"] == pytest.approx(4.0, abs=1e-8)

    def test_liquid_profile_zero(self, tmp_path):
        cfg = make_cfg(tmp_path, "predict", rho=1.0, profile=[])
        assert run_experiment(cfg)["prediction"] == 0.0

    def test_dissolution_curve_on_request(self, tmp_path):
        cfg = make_cfg(tmp_path, "predict", rho=1.0, profile=[1.0],
                       grid=[0.0, 1.5, 2.5])
        result = run_experiment(cfg)
        header, rows = io.read_csv(result["csv"])
        assert header == ["t", "f"]
        assert float(rows[0][1]) == 0.0
        assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-8)  # full dissolution
        assert float(rows[2][1]) == pytest.approx(1.5, abs=1e-8)  # liquid slope 1/2


class TestExact:
    def test_two_state_tv_table(self, tmp_path):
        cfg = make_cfg(tmp_path, "exact", n=[2], m=1,
                       grid={"start": 0.0, "stop": 2.0, "num": 9}, eps=[0.25])
        result = run_experiment(cfg)
        header, rows = io.read_csv(result["csv"])
        assert header == ["t", "tv"]
        for row in rows:
            t, tv = float(row[0]), float(row[1])
            assert tv == pytest.approx(math.exp(-t) / 2, abs=1e-10)
        assert result["tmix"]["0.25"] == pytest.approx(math.log(2), abs=1e-8)

    def test_oracle_dump(self, tmp_path):
        cfg = make_cfg(tmp_path, "exact", n=[2], m=1, grid=[0.0, 1.0],
                       dump_oracle=True)
        result = run_experiment(cfg)
        header, rows = io.read_csv(result["oracle_states"])
        assert header == ["state", "pi"]
        assert len(rows) == 2
        header, rows = io.read_csv(result["oracle_generator"])
        assert header == ["row", "col", "rate"]


class TestCoalescence:
    def test_survival_column_starts_at_one(self, tmp_path):
        cfg = make_cfg(tmp_path, "coalescence", occupancies=[0, 0, 0], i=0, j=1,
                       grid=[0.0, 0.5, 1.0], replicas=100, horizon=4.0)
        result = run_experiment(cfg)
        header, rows = io.read_csv(result["csv"])
        assert header == ["t", "survival", "ci_low", "ci_high", "censored_fraction"]
        assert float(rows[0][1]) == 1.0
        surv = [float(r[1]) for r in rows]
        assert all(b <= a for a, b in zip(surv, surv[1:]))


class TestEquilibrium:
    def test_empty_system_distances_zero(self, tmp_path):
        cfg = make_cfg(tmp_path, "equilibrium", n=20, m=0, samples=3)
        result = run_experiment(cfg)
        _, rows = io.read_csv(result["csv"])
        assert all(float(r[1]) == 0.0 for r in rows)

    def test_meta_carries_summary(self, tmp_path):
        cfg = make_cfg(tmp_path, "equilibrium", n=100, m=100, samples=4)
        result = run_experiment(cfg)
        meta = json.load(open(result["meta"]))
        assert meta["samples"] == 4
        assert 0 <= meta["mean_distance"] <= 1


class TestHydro:
    def test_outputs_and_errors_shrink(self, tmp_path):
        cfg = make_cfg(tmp_path, "hydro", n=[64, 256], rho=1.0, profile=[1.0],
                       grid={"start": 0.0, "stop": 1.8, "num": 7}, replicas=3)
        result = run_experiment(cfg)
        meta = json.load(open(result["meta"]))
        assert meta["gamma"] == pytest.approx(1.5, abs=1e-8)
        med = result["median_sup_error"]
        assert med["256"] < med["64"]
        header, rows = io.read_csv(result["csv"])
        assert header[:3] == ["n", "replica", "t_over_n"]
        assert {int(r[0]) for r in rows} == {64, 256}

    def test_liquid_profile_error_is_max_over_n(self, tmp_path):
        cfg = make_cfg(tmp_path, "hydro", n=[128], rho=0.5, profile=[],
                       grid=[0.0, 0.5, 1.0], replicas=2)
        result = run_experiment(cfg)
        _, rows = io.read_csv(result["csv"])
        for row in rows:
            assert float(row[3]) == pytest.approx(float(row[-1]))  # sim == sup_error
        assert result["median_sup_error"]["128"] < 0.2

    def test_workers_do_not_change_output(self, tmp_path):
        doc = dict(n=[32], rho=1.0, profile=[1.0], grid=[0.0, 0.5, 1.0],
                   replicas=4, seed=5)
        a = ExperimentConfig.from_dict({**doc, "experiment": "hydro"},
                                       out_dir=str(tmp_path / "serial"))
        b = ExperimentConfig.from_dict({**doc, "experiment": "hydro", "workers": 2},
                                       out_dir=str(tmp_path / "pooled"))
        ra = run_experiment(a)
        rb = run_experiment(b)
        assert open(ra["csv"], "rb").read() == open(rb["csv"], "rb").read()


class TestCutoff:
    def test_curve_and_exact_column(self, tmp_path):
        cfg = make_cfg(tmp_path, "cutoff", n=[3], m=3,
                       grid={"start": 0.0, "stop": 3.0, "num": 7},
                       replicas=150, exact_max_states=100)
        result = run_experiment(cfg)
        header, rows = io.read_csv(result["csv"])
        assert header == ["n", "t_over_n", "tv_lb", "lb_ci_low", "lb_ci_high", "tv_exact"]
        lb = [float(r[2]) for r in rows]
        exact = [float(r[5]) for r in rows]
        # lower bound below exact TV, up to Monte Carlo slack
        assert all(l <= e + 0.15 for l, e in zip(lb, exact))
        meta = json.load(open(result["meta"]))
        assert meta["statistic"] == "max_occupancy"

    def test_sampled_reference(self, tmp_path):
        cfg = make_cfg(tmp_path, "cutoff", n=[4], m=4, grid=[0.0, 2.0],
                       replicas=120, reference="sampled", reference_samples=400)
        result = run_experiment(cfg)
        _, rows = io.read_csv(result["csv"])
        assert float(rows[0][2]) > 0.5  # dirac start far from equilibrium


class TestDeterminism:
    def test_bit_identical_reruns(self, tmp_path):
        for kind, doc in [
            ("exact", dict(n=[2], m=1, grid=[0.0, 1.0])),
            ("coalescence", dict(occupancies=[0, 0], i=0, j=1, grid=[0.0, 1.0],
                                 replicas=50, horizon=2.0)),
            ("cutoff", dict(n=[3], m=3, grid=[0.0, 1.0], replicas=120)),
        ]:
            a = ExperimentConfig.from_dict({**doc, "experiment": kind, "seed": 3},
                                           out_dir=str(tmp_path / f"{kind}_a"))
            b = ExperimentConfig.from_dict({**doc, "experiment": kind, "seed": 3},
                                           out_dir=str(tmp_path / f"{kind}_b"))
            pa = run_experiment(a)["csv"]
            pb = run_experiment(b)["csv"]
            assert open(pa, "rb").read() == open(pb, "rb").read()


class TestCli:
    def test_main_runs_predict(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"rate": "rate-one", "rho": 1.0,
                                        "profile": [1.0], "seed": 3}))
        code = cli.main(["predict", "--config", str(cfg_path),
                         "--out", str(tmp_path / "out")])
        assert code == 0
        out = capsys.readouterr().out
        assert "predict.json" in out
        assert (tmp_path / "out" / "predict.json").exists()

    def test_seed_override_changes_output(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"occupancies": [0, 0], "i": 0, "j": 1,
                                        "grid": [0.0, 0.5], "replicas": 40,
                                        "horizon": 1.0, "seed": 1}))
        cli.main(["coalescence", "--config", str(cfg_path),
                  "--out", str(tmp_path / "a")])
        cli.main(["coalescence", "--config", str(cfg_path), "--seed", "2",
                  "--out", str(tmp_path / "b")])
        assert (open(tmp_path / "a" / "coalescence.csv", "rb").read()
                != open(tmp_path / "b" / "coalescence.csv", "rb").read())

    def test_meta_echoes_config(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"n": [2], "m": 1, "grid": [0.0, 1.0],
                                        "seed": 11}))
        cli.main(["exact", "--config", str(cfg_path), "--out", str(tmp_path / "o")])
        meta = json.load(open(tmp_path / "o" / "exact_tv.meta.json"))
        assert meta["seed"] == 11
        assert meta["config"]["grid"] == [0.0, 1.0]
        assert meta["rate"]["head"] == [1.0]


class TestTrajectoryExport:
    def test_columns_and_meta(self, tmp_path, rate_one):
        traj = simulate_fast(rate_one, dirac_config(4, 4), 2.0, 5,
                             grid=np.linspace(0, 2, 5), top_k=2)
        path = str(tmp_path / "traj.csv")
        io.write_trajectory_csv(traj, path, meta={"rate": {"head": [1.0]}})
        header, rows = io.read_csv(path)
        assert header == ["t", "max_occ", "zeta", "solid_mass", "top1", "top2"]
        assert len(rows) == 5
        meta = json.load(open(io.meta_path(path)))
        assert meta["n"] == 4 and meta["m"] == 4

    def test_rfc4180_line_endings(self, tmp_path):
        path = str(tmp_path / "x.csv")
        io.write_csv(path, ["a", "b"], [[1, 2.5]])
        raw = open(path, "rb").read()
        assert raw == b"a,b\r\n1,2.5\r\n"
