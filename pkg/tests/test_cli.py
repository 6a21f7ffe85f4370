import json
import math
import os

import numpy as np
import pytest

from linksched.cli import (
    PRESET_NAMES,
    _aggregate_rows,
    derive_seed,
    expand_preset,
    main,
    run_experiment,
    summarize,
)


class TestExpandPreset:
    def test_fig4a_default_three_cells(self):
        cells = expand_preset("fig4a")
        assert len(cells) == 3
        assert {c.policy for c in cells} == {"mw_ucb", "restart_ucb",
                                             "idealized_mw"}
        for c in cells:
            assert c.config.arrivals.lam == 0.11
            assert c.config.horizon == 1_000_000

    def test_fig4b_lambda(self):
        cells = expand_preset("fig4b")
        assert all(c.config.arrivals.lam == 0.12 for c in cells)

    def test_fig5_time_varying(self):
        from linksched import TimeVaryingDelta
        for name in ("fig5a", "fig5b"):
            cells = expand_preset(name)
            assert all(isinstance(c.config.delta, TimeVaryingDelta)
                       for c in cells)

    def test_sweep_default_forty_cells(self):
        cells = expand_preset("sweep_logqt")
        assert len(cells) == 40
        lams = sorted({c.config.arrivals.lam for c in cells})
        assert lams[0] == 0.03 and lams[-1] == 0.22 and len(lams) == 20
        assert all(c.config.horizon == 1_500_000 for c in cells)
        assert {c.policy for c in cells} == {"mw_ucb", "idealized_mw"}

    def test_adaptive_presets(self):
        from linksched import AdaptivePoisson
        for name in ("adaptive_uniform", "adaptive_varying"):
            cells = expand_preset(name)
            assert all(isinstance(c.config.arrivals, AdaptivePoisson)
                       for c in cells)

    def test_custom_single_cell(self):
        cells = expand_preset("custom", {"horizon": 1000})
        assert len(cells) == 1
        assert cells[0].config.horizon == 1000

    def test_replicates_and_overrides(self):
        cells = expand_preset("fig4a", {"seeds": 2, "horizon": 5000,
                                        "policies": ["mw_ucb"]})
        assert len(cells) == 2
        assert all(c.config.horizon == 5000 for c in cells)

    def test_expansion_deterministic(self):
        a = expand_preset("fig4a", {"seeds": 3})
        b = expand_preset("fig4a", {"seeds": 3})
        assert [c.cell_id for c in a] == [c.cell_id for c in b]
        assert [c.config.seed for c in a] == [c.config.seed for c in b]

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            expand_preset("fig99")

    def test_distinct_seeds_across_replicates(self):
        cells = expand_preset("fig4a", {"seeds": 5, "policies": ["mw_ucb"]})
        seeds = [c.config.seed for c in cells]
        assert len(set(seeds)) == 5

    def test_malformed_overrides(self):
        with pytest.raises(ValueError):
            expand_preset("fig4a", {"seeds": 0})
        with pytest.raises(ValueError):
            expand_preset("fig4a", {"policies": ["thompson"]})
        with pytest.raises(ValueError):
            expand_preset("custom", {"arrivals": {"kind": "fixed"}})


class TestSeedPairing:
    def test_policies_share_environment_seed(self):
        cells = expand_preset("fig4a", {"seeds": 2})
        by_rep = {}
        for c in cells:
            by_rep.setdefault(c.replicate, set()).add(c.config.seed)
        for rep, seeds in by_rep.items():
            assert len(seeds) == 1  # paired across policies

    def test_seed_depends_on_load_and_replicate(self):
        s1 = derive_seed(1, "fig4a", "0.11", 0)
        assert s1 == derive_seed(1, "fig4a", "0.11", 0)
        assert s1 != derive_seed(1, "fig4a", "0.11", 1)
        assert s1 != derive_seed(1, "fig4a", "0.12", 0)
        assert s1 != derive_seed(2, "fig4a", "0.11", 0)


class TestRunExperiment:
    def test_empty_preset_list(self, tmp_path):
        manifest = run_experiment([], out_dir=str(tmp_path))
        assert manifest.cells == []
        assert os.path.exists(manifest.manifest_path)

    def test_fig4a_small_horizon_files(self, tmp_path):
        manifest = run_experiment(["fig4a"], out_dir=str(tmp_path),
                                  overrides={"horizon": 3000})
        assert len(manifest.cells) == 3
        for cell in manifest.cells:
            assert os.path.exists(os.path.join(str(tmp_path), cell["csv"]))
        assert os.path.exists(os.path.join(str(tmp_path),
                                           manifest.summary_csv))
        assert os.path.exists(os.path.join(str(tmp_path),
                                           manifest.aggregate_csv))

    def test_byte_identical_reruns(self, tmp_path):
        kw = dict(overrides={"horizon": 2000, "seeds": 2,
                             "policies": ["mw_ucb"]}, base_seed=9)
        m1 = run_experiment(["fig4a"], out_dir=str(tmp_path / "a"), **kw)
        m2 = run_experiment(["fig4a"], out_dir=str(tmp_path / "b"), **kw)
        for c1, c2 in zip(m1.cells, m2.cells):
            p1 = open(os.path.join(str(tmp_path / "a"), c1["csv"]), "rb").read()
            p2 = open(os.path.join(str(tmp_path / "b"), c2["csv"]), "rb").read()
            assert p1 == p2

    def test_parallel_matches_serial(self, tmp_path):
        kw = dict(overrides={"horizon": 1500, "seeds": 2,
                             "policies": ["mw_ucb", "idealized_mw"]})
        serial = run_experiment(["fig4a"], out_dir=str(tmp_path / "s"),
                                parallelism=1, **kw)
        parallel = run_experiment(["fig4a"], out_dir=str(tmp_path / "p"),
                                  parallelism=3, **kw)
        for c1, c2 in zip(serial.cells, parallel.cells):
            b1 = open(os.path.join(str(tmp_path / "s"), c1["csv"]), "rb").read()
            b2 = open(os.path.join(str(tmp_path / "p"), c2["csv"]), "rb").read()
            assert b1 == b2

    def test_cell_failure_reported_with_id(self, tmp_path, monkeypatch):
        import linksched.cli as cli

        def boom(config_dict, cell_meta, csv_path, backend):
            raise RuntimeError("synthetic cell crash")

        monkeypatch.setattr(cli, "_run_cell", boom)
        with pytest.raises(RuntimeError) as err:
            run_experiment(["custom"], out_dir=str(tmp_path),
                           overrides={"horizon": 100})
        assert "custom-mw_ucb-0.11-r0" in str(err.value)

    def test_config_hash_in_header(self, tmp_path):
        manifest = run_experiment(["custom"], out_dir=str(tmp_path),
                                  overrides={"horizon": 500})
        cell = manifest.cells[0]
        first = open(os.path.join(str(tmp_path), cell["csv"])).readline()
        assert first.startswith("#")
        assert f"config_hash={cell['config_hash']}" in first

    def test_regret_columns(self, tmp_path):
        manifest = run_experiment(
            ["custom"], out_dir=str(tmp_path),
            overrides={"horizon": 600, "log_regret": True,
                       "policy": {"kind": "mw_ucb", "tau": 200}})
        path = os.path.join(str(tmp_path), manifest.cells[0]["csv"])
        lines = [l for l in open(path) if not l.startswith("#")]
        assert lines[0].strip() == "t,total_backlog,frame,regret,gamma"
        frames = [l for l in lines[1:] if l.split(",")[2] != ""]
        assert len(frames) == 3  # 600 slots / tau=200

    def test_regret_rows_present_with_coarse_stride(self, tmp_path):
        # frame boundaries rarely align with the stride; every frame's regret
        # must still land on a series row
        manifest = run_experiment(
            ["custom"], out_dir=str(tmp_path),
            overrides={"horizon": 2000, "stride": 700, "log_regret": True,
                       "policy": {"kind": "mw_ucb", "tau": 600}})
        path = os.path.join(str(tmp_path), manifest.cells[0]["csv"])
        lines = [l for l in open(path) if not l.startswith("#")]
        rows = [l.strip().split(",") for l in lines[1:]]
        ts = [int(r[0]) for r in rows]
        assert ts == sorted(set(ts))
        frame_rows = {int(r[0]): int(r[2]) for r in rows if r[2] != ""}
        assert frame_rows == {600: 0, 1200: 1, 1800: 2, 2000: 3}


class TestSummarize:
    def test_recompute_from_csvs(self, tmp_path):
        manifest = run_experiment(["fig4a"], out_dir=str(tmp_path),
                                  overrides={"horizon": 2000, "seeds": 2})
        agg = summarize(manifest.manifest_path)
        assert len(agg) == 3  # one row per policy at lam=0.11
        for row in agg:
            assert row["n_seeds"] == 2
            assert row["q_t_over_t_mean"] >= 0

    def test_zero_load_log_sentinel(self, tmp_path):
        manifest = run_experiment(
            ["custom"], out_dir=str(tmp_path),
            overrides={"horizon": 400,
                       "arrivals": {"kind": "fixed", "lambda": 0.0}})
        agg = summarize(manifest.manifest_path)
        assert agg[0]["q_t_over_t_mean"] == 0.0
        assert agg[0]["log_q_t_over_t"] == float("-inf")

    def test_single_seed_zero_std(self, tmp_path):
        manifest = run_experiment(["custom"], out_dir=str(tmp_path),
                                  overrides={"horizon": 400})
        agg = summarize(manifest.manifest_path)
        assert agg[0]["q_t_std"] == 0.0

    def test_mean_ratio_arithmetic(self):
        rows = [
            {"preset": "x", "policy": "p", "lam": "0.1", "q_t": 10.0,
             "q_t_over_t": 0.1},
            {"preset": "x", "policy": "p", "lam": "0.1", "q_t": 20.0,
             "q_t_over_t": 0.2},
        ]
        agg = _aggregate_rows(rows)
        assert agg[0]["q_t_over_t_mean"] == pytest.approx(0.15)
        assert agg[0]["log_q_t_over_t"] == pytest.approx(math.log(0.15))


class TestMainCli:
    def test_run_and_summarize(self, tmp_path, capsys):
        rc = main(["run", "custom", "--horizon", "500", "--out",
                   str(tmp_path), "--seeds", "2"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "wrote 2 cell(s)" in out
        rc = main(["summarize", str(tmp_path / "manifest.json")])
        assert rc == 0

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text(
            'horizon = 400\nseeds = 1\ngrid = [2, 2]\n'
            '[arrivals]\nkind = "fixed"\nlambda = 0.05\n'
            '[delta]\nkind = "time_varying"\n'
            '[policy]\nkind = "mw_ucb"\ntau = 100\n')
        rc = main(["run", "custom", "--config", str(cfg), "--out",
                   str(tmp_path / "out")])
        assert rc == 0
        manifest = json.load(open(tmp_path / "out" / "manifest.json"))
        assert len(manifest["cells"]) == 1

    def test_cli_defaults_to_five_seeds(self, tmp_path):
        rc = main(["run", "custom", "--horizon", "200", "--out",
                   str(tmp_path)])
        assert rc == 0
        manifest = json.load(open(tmp_path / "manifest.json"))
        assert len(manifest["cells"]) == 5

    def test_out_dir_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LINKSCHED_OUT", str(tmp_path / "from-env"))
        manifest = run_experiment(["custom"], overrides={"horizon": 200})
        assert manifest.out_dir == str(tmp_path / "from-env")
        assert os.path.exists(manifest.manifest_path)

    def test_preset_names_stable(self):
        assert PRESET_NAMES == ("fig4a", "fig4b", "fig5a", "fig5b",
                                "sweep_logqt", "adaptive_uniform",
                                "adaptive_varying", "custom")
