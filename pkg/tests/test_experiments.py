import json
import re

import pytest

from occlab.experiments import ConfigError, emit_plot, load_config, run_experiment, validate_config


def small_clt(**over):
    cfg = {
        "kind": "clt-rate",
        "N_grid": [8, 16, 32],
        "seed": 3,
        "replicates": 200,
        "observables": [{"type": "W"}, {"type": "Y", "phi": [0, 1], "label": "Yx"}],
    }
    cfg.update(over)
    return cfg


class TestConfig:
    def test_valid(self):
        cfg = validate_config(small_clt())
        assert cfg.kind == "clt-rate" and cfg.law.p_up == 0.75 and cfg.lam == 1.0

    @pytest.mark.parametrize(
        "patch,field",
        [
            ({"N_grid": []}, "N_grid"),
            ({"N_grid": [8, 8, 16]}, "N_grid"),
            ({"N_grid": [8, 4, 16]}, "N_grid"),
            ({"replicates": 50}, "replicates"),
            ({"kind": "bogus"}, "kind"),
            ({"lambda": -1}, "lambda"),
            ({"p": 1.0}, "p"),
            ({"observables": [{"type": "Q"}]}, "observables[0].type"),
            ({"observables": [{"type": "Y", "phi": [3, 0]}]}, "observables[0].phi"),
            ({"extra": 1}, "<root>"),
            ({"criteria": {"slope_max": "x"}}, "criteria.slope_max"),
        ],
    )
    def test_errors_name_field(self, patch, field):
        with pytest.raises(ConfigError) as exc:
            validate_config(small_clt(**patch))
        assert str(exc.value).startswith(field)

    def test_missing_seed(self):
        raw = small_clt()
        del raw["seed"]
        with pytest.raises(ConfigError, match="^seed"):
            validate_config(raw)

    def test_file_errors(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(p)
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")

    def test_symmetric_requires_y(self):
        with pytest.raises(ConfigError, match="^observables"):
            validate_config({"kind": "symmetric-regimes", "N_grid": [4], "seed": 0, "observables": [{"type": "W"}]})


class TestRun:
    def test_byte_identical(self, tmp_path):
        cfg = validate_config(small_clt())
        a = run_experiment(cfg)
        b = run_experiment(cfg, threads=1)
        a.write(tmp_path / "a")
        b.write(tmp_path / "b")
        for name in ("distances.csv", "summary.json", "dW_W_A_0.svg", "dW_Yx.svg"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_csv_dialect_and_summary(self, tmp_path):
        cfg = validate_config(small_clt())
        bundle = run_experiment(cfg)
        bundle.write(tmp_path)
        raw = (tmp_path / "distances.csv").read_bytes()
        assert b"\r" not in raw
        lines = raw.decode().splitlines()
        assert lines[0] == "observable,N,mean,variance,d_W,d_K,se_proxy,m,seed"
        assert len(lines) == 1 + 2 * 3
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["config"] == small_clt()
        assert set(summary["fits"]) == {"W_A_0", "Yx"}
        assert all("pass" in c for c in summary["criteria"])
        assert summary["provenance"]["draws"] == "fieldsim.run_batch"

    def test_one_svg_per_observable(self):
        bundle = run_experiment(validate_config(small_clt()))
        assert sorted(bundle.plots) == ["dW_W_A_0", "dW_Yx"]

    def test_variance_sweep_mc(self):
        cfg = validate_config(
            {"kind": "variance-sweep", "N_grid": [16, 32], "seed": 1, "replicates": 3000,
             "observables": [{"type": "W", "sites": [0, 1]}, {"type": "D"}, {"type": "Y", "phi": [0, 0, 1]}]}
        )
        bundle = run_experiment(cfg)
        assert bundle.passed and bundle.complete
        assert len(bundle.tables["variance"][1]) == 6

    def test_failure_flag(self):
        cfg = validate_config(small_clt(criteria={"slope_max": -10.0}))
        assert not run_experiment(cfg).passed

    def test_symmetric_regimes(self):
        cfg = validate_config(
            {"kind": "symmetric-regimes", "N_grid": [1024, 4096], "seed": 0,
             "observables": [{"type": "Y", "phi": [0, 1]}, {"type": "Y", "phi": [-1, 8, -6, 1]}],
             "criteria": {"ratio_band": [0.8, 1.2]}}
        )
        bundle = run_experiment(cfg)
        assert bundle.passed
        regimes = {r["rank"] for r in bundle.summary["regimes"].values()}
        assert regimes == {1, 3}

    def test_kernel_checks(self):
        bundle = run_experiment(validate_config({"kind": "kernel-checks", "N_grid": [10, 100, 1000, 10000], "seed": 0}))
        assert bundle.passed
        assert "lclt_gap" in bundle.plots

    def test_clt_rate_w_pipeline(self):
        cfg = validate_config(
            {"kind": "clt-rate", "N_grid": [64, 128, 256, 512, 1024], "seed": 2024, "replicates": 5000,
             "observables": [{"type": "W"}]}
        )
        bundle = run_experiment(cfg)
        assert bundle.summary["fits"]["W_A_0"]["slope"] < 0
        assert bundle.passed


class TestPlot:
    def test_two_points(self):
        svg = emit_plot([(1, 2), (3, 4)])
        polys = re.findall(r"<polyline[^>]*points=\"([^\"]*)\"", svg)
        assert len(polys) == 1 and len(polys[0].split()) == 2
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")

    def test_loglog_nonpositive(self):
        with pytest.raises(ValueError):
            emit_plot([(1, 2), (3, 0)], loglog=True)
        with pytest.raises(ValueError):
            emit_plot([(0, 2), (3, 1)], loglog=True)

    def test_degenerate(self):
        with pytest.raises(ValueError):
            emit_plot([(1, 2)])
        with pytest.raises(ValueError):
            emit_plot([(2, 2), (2, 3)])

    def test_fit_line(self):
        svg = emit_plot([(64, 0.1), (128, 0.07), (256, 0.05)], loglog=True, fit=(-0.5, 0.0))
        assert svg.count('class="fit"') == 1

    def test_deterministic(self):
        pts = [(1, 0.5), (2, 0.25), (4, 0.3)]
        assert emit_plot(pts, title="a<b") == emit_plot(pts, title="a<b")
        assert "a&lt;b" in emit_plot(pts, title="a<b")
