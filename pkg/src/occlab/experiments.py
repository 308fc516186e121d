"""Declarative experiments: JSON config in, CSV tables + JSON summary + SVG out.

Four kinds are supported:

``variance-sweep``
    exact variance, leading-order ratio and (if ``replicates`` is set) the
    Monte-Carlo variance with a z-score, per observable and N.
``clt-rate``
    Wasserstein/Kolmogorov distances of the standardized observable to N(0,1)
    along the N grid and a log-log slope fit.
``symmetric-regimes``
    exact variance of path-sampled observables under the symmetric walk,
    normalized by the growth law predicted by their Charlier rank.
``kernel-checks``
    normalization, l2 identity and local-CLT gap of the particle kernel.

Every output is a deterministic function of the config (the thread count
never changes a byte).
"""
from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .charlier import charlier_coefficients, expectation_poly
from .fieldsim import Job, run_batch, summarize
from .kernels import StepLaw, kernel_row, lclt_gap, lp_norm, ssrw_kernel
from .stats import distance_estimate, fit_rate, standardize
from .variance import (
    growth,
    report_D,
    report_W,
    report_Y,
    symmetric_regime,
    var_DN,
    var_WN,
    var_Y,
)

KINDS = ("variance-sweep", "clt-rate", "symmetric-regimes", "kernel-checks")
DEFAULT_OUTPUT = "output"


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


@dataclass(frozen=True)
class ObservableSpec:
    type: str
    sites: tuple[int, ...] = (0,)
    phi: tuple[float, ...] = (0.0, 1.0)
    label: str = ""

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.type == "Y":
            return "Y_phi_" + "_".join(f"{c:g}" for c in self.phi)
        return f"{self.type}_A_" + "_".join(str(s) for s in self.sites)


@dataclass
class ExperimentConfig:
    kind: str
    N_grid: list[int]
    seed: int
    lam: float = 1.0
    p: float = 0.75
    replicates: int | None = None
    observables: list[ObservableSpec] = field(default_factory=list)
    criteria: dict = field(default_factory=dict)
    output_dir: str | None = None
    name: str = ""
    plots: bool = True
    empirical_standardization: bool = False
    raw: dict = field(default_factory=dict)

    @property
    def law(self) -> StepLaw:
        return StepLaw(self.p)


@dataclass
class OutputBundle:
    tables: dict[str, tuple[list[str], list[list]]]
    summary: dict
    plots: dict[str, str]
    passed: bool
    complete: bool = True

    def csv_text(self, name: str) -> str:
        header, rows = self.tables[name]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def write(self, directory) -> list[Path]:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name in self.tables:
            path = out / f"{name}.csv"
            path.write_bytes(self.csv_text(name).encode())
            written.append(path)
        for name, svg in self.plots.items():
            path = out / f"{name}.svg"
            path.write_bytes(svg.encode())
            written.append(path)
        path = out / "summary.json"
        path.write_bytes(dump_json(self.summary).encode())
        written.append(path)
        return written


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# ---------------------------------------------------------------- config

def load_schema() -> dict:
    text = resources.files("occlab").joinpath("schemas/experiment.schema.json").read_text()
    return json.loads(text)


def _field_path(err: jsonschema.ValidationError) -> str:
    parts = ""
    for p in err.absolute_path:
        parts += f"[{p}]" if isinstance(p, int) else (f".{p}" if parts else str(p))
    if err.validator == "required":
        missing = err.message.split("'")[1]
        return f"{parts}.{missing}" if parts else missing
    return parts or "<root>"


def validate_config(raw: dict) -> ExperimentConfig:
    """Schema plus semantic checks; raises ConfigError naming the field."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>: config must be a JSON object")
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{_field_path(e)}: {e.message}")
    grid = list(raw["N_grid"])
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("N_grid: must be strictly increasing")
    kind = raw["kind"]
    obs = [
        ObservableSpec(
            o["type"],
            tuple(sorted(o.get("sites", [0]))),
            tuple(float(c) for c in o.get("phi", [0.0, 1.0])),
            o.get("label", ""),
        )
        for o in raw.get("observables", [])
    ]
    if kind != "kernel-checks" and not obs:
        raise ConfigError(f"observables: required for kind {kind!r}")
    if kind == "symmetric-regimes":
        if any(o.type != "Y" for o in obs):
            raise ConfigError("observables: symmetric-regimes only accepts type 'Y'")
        if raw.get("p", 0.5) != 0.5:
            raise ConfigError("p: symmetric-regimes requires p = 0.5")
    if kind == "clt-rate":
        if raw.get("replicates", 0) < 100:
            raise ConfigError("replicates: clt-rate needs at least 100 replicates")
        if len(grid) < 3:
            raise ConfigError("N_grid: clt-rate needs at least 3 grid points for a slope fit")
    for i, o in enumerate(obs):
        if o.type == "Y" and all(c == 0.0 for c in o.phi[1:]):
            raise ConfigError(f"observables[{i}].phi: observable must be non-constant")
    names = [o.name for o in obs]
    if len(set(names)) != len(names):
        raise ConfigError("observables: labels must be unique")
    default_p = 0.5 if kind == "symmetric-regimes" else 0.75
    return ExperimentConfig(
        kind=kind,
        N_grid=grid,
        seed=int(raw["seed"]),
        lam=float(raw.get("lambda", 1.0)),
        p=float(raw.get("p", default_p)),
        replicates=raw.get("replicates"),
        observables=obs,
        criteria=dict(raw.get("criteria", {})),
        output_dir=raw.get("output_dir"),
        name=raw.get("name", kind),
        plots=bool(raw.get("plots", True)),
        empirical_standardization=bool(raw.get("empirical_standardization", False)),
        raw=copy.deepcopy(raw),
    )


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"<file>: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<file>: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return validate_config(raw)


def resolve_output_dir(config: ExperimentConfig, override: str | None = None) -> Path:
    return Path(override or config.output_dir or os.environ.get("OUTPUT_DIR") or DEFAULT_OUTPUT)


# ---------------------------------------------------------------- exact moments

def _exact_mean_var(o: ObservableSpec, N: int, lam: float, law: StepLaw) -> tuple[float, float]:
    if o.type == "W":
        return N * lam * len(o.sites), var_WN(N, o.sites, lam)
    if o.type == "D":
        v = var_DN(N, o.sites, lam)
        return v, v
    return N * expectation_poly(o.phi, lam), var_Y(N, o.phi, lam, law)


def _report(o: ObservableSpec, N: int, lam: float, law: StepLaw):
    if o.type == "W":
        return report_W(N, o.sites, lam)
    if o.type == "D":
        return report_D(N, o.sites, lam)
    return report_Y(N, o.phi, lam, law)


def _job(o: ObservableSpec, N: int, cfg: ExperimentConfig) -> Job:
    return Job(o.type, N, cfg.lam, cfg.p, tuple(o.phi), tuple(o.sites))


# ---------------------------------------------------------------- runners

def _variance_sweep(cfg: ExperimentConfig, threads):
    max_z = cfg.criteria.get("max_z", 4.0)
    band = cfg.criteria.get("ratio_band")
    header = ["observable", "N", "exact", "leading_constant", "regime", "ratio"]
    mc = cfg.replicates is not None
    if mc:
        header += ["mc_variance", "mc_variance_se", "z", "seed"]
    rows, checks, series = [], [], {}
    for o in cfg.observables:
        for N in cfg.N_grid:
            rep = _report(o, N, cfg.lam, cfg.law)
            row = [o.name, N, rep.exact, rep.leading_constant, rep.regime, rep.ratio]
            series.setdefault(o.name, []).append((N, rep.ratio))
            if band is not None:
                checks.append(_check(f"{o.name} N={N} ratio in band", band[0] <= rep.ratio <= band[1]))
            if mc:
                s = run_batch(_job(o, N, cfg), cfg.replicates, cfg.seed, threads).summary()
                z = (s["variance"] - rep.exact) / s["variance_se"] if s["variance_se"] > 0 else 0.0
                row += [s["variance"], s["variance_se"], z, cfg.seed]
                checks.append(_check(f"{o.name} N={N} |z| <= {max_z:g}", abs(z) <= max_z, z=z))
            rows.append(row)
    plots = {f"ratio_{k}": emit_plot(v, loglog=False, title=f"{k}: exact / leading") for k, v in series.items()
             if len(v) >= 2}
    prov = {"exact": "variance.report_W/report_D/report_Y"}
    if mc:
        prov["mc"] = "fieldsim.run_batch"
    return {"variance": (header, rows)}, checks, plots, prov, {}


def _clt_rate(cfg: ExperimentConfig, threads):
    slope_max = cfg.criteria.get("slope_max", 0.0)
    slope_min = cfg.criteria.get("slope_min")
    monotone = cfg.criteria.get("monotone", False)
    drop_se = cfg.criteria.get("drop_se")
    header = ["observable", "N", "mean", "variance", "d_W", "d_K", "se_proxy", "m", "seed"]
    rows, checks, plots, fits = [], [], {}, {}
    for o in cfg.observables:
        ests = []
        for N in cfg.N_grid:
            vals = run_batch(_job(o, N, cfg), cfg.replicates, cfg.seed, threads).values
            if cfg.empirical_standardization:
                s = summarize(vals)
                mean, var = s["mean"], s["variance"]
            else:
                mean, var = _exact_mean_var(o, N, cfg.lam, cfg.law)
            est = distance_estimate(standardize(vals, mean, var))
            ests.append(est)
            rows.append([o.name, N, mean, var, est.d_W, est.d_K, est.se_proxy, est.m, cfg.seed])
        fit = fit_rate([(N, e.d_W) for N, e in zip(cfg.N_grid, ests)])
        fits[o.name] = fit.to_json()
        checks.append(_check(f"{o.name} slope <= {slope_max:g}", fit.slope <= slope_max, slope=fit.slope))
        if slope_min is not None:
            checks.append(_check(f"{o.name} slope >= {slope_min:g}", fit.slope >= slope_min, slope=fit.slope))
        if monotone:
            ok = all(b.d_W < a.d_W for a, b in zip(ests, ests[1:]))
            checks.append(_check(f"{o.name} d_W strictly decreasing", ok))
        if drop_se is not None:
            first, last = ests[0], ests[-1]
            se = math.hypot(first.se_proxy, last.se_proxy)
            checks.append(
                _check(
                    f"{o.name} d_W drop exceeds {drop_se:g} combined se",
                    last.d_W < first.d_W - drop_se * se,
                    drop=first.d_W - last.d_W,
                    se=se,
                )
            )
        plots[f"dW_{o.name}"] = emit_plot(
            [(N, e.d_W) for N, e in zip(cfg.N_grid, ests)],
            loglog=True,
            fit=(fit.slope, fit.intercept),
            title=f"{o.name}: Wasserstein distance",
        )
    prov = {"draws": "fieldsim.run_batch", "distances": "stats.distance_estimate", "fit": "stats.fit_rate"}
    return {"distances": (header, rows)}, checks, plots, prov, {"fits": fits}


def _symmetric_regimes(cfg: ExperimentConfig, threads):
    band = cfg.criteria.get("ratio_band")
    law = StepLaw(0.5)
    header = ["observable", "N", "rank", "regime", "exact", "constant", "ratio", "constant_is_sharp"]
    rows, checks, plots, regimes = [], [], {}, {}
    for o in cfg.observables:
        reg = symmetric_regime(o.phi, cfg.lam)
        regimes[o.name] = reg.to_json()
        series = []
        for N in cfg.N_grid:
            exact = var_Y(N, o.phi, cfg.lam, law)
            ratio = exact / (reg.constant * growth(reg.regime, N))
            series.append((N, ratio))
            rows.append([o.name, N, reg.rank, reg.regime, exact, reg.constant, ratio, reg.constant_is_sharp])
            if band is not None and reg.constant_is_sharp:
                checks.append(_check(f"{o.name} N={N} ratio in band", band[0] <= ratio <= band[1], ratio=ratio))
        if len(series) >= 2:
            plots[f"ratio_{o.name}"] = emit_plot(series, loglog=False, title=f"{o.name}: exact / predicted")
    prov = {"exact": "variance.var_Y", "regime": "variance.symmetric_regime"}
    return {"regimes": (header, rows)}, checks, plots, prov, {"regimes": regimes}


def _kernel_checks(cfg: ExperimentConfig, threads):
    tol = cfg.criteria.get("normalization_tol", 1e-12)
    header = ["n", "normalization_error", "l2_identity_error", "lclt_gap", "sqrt_n_gap"]
    rows, checks, series = [], [], []
    for n in cfg.N_grid:
        norm_err = abs(math.fsum(kernel_row(n).probs) - 1.0)
        l2_err = abs(lp_norm(n, 2) - ssrw_kernel(2 * n, 0))
        gap = lclt_gap(n)
        rows.append([n, norm_err, l2_err, gap, math.sqrt(n) * gap])
        series.append((n, gap))
        checks.append(_check(f"n={n} normalization", norm_err <= tol, error=norm_err))
        checks.append(_check(f"n={n} l2 identity", l2_err <= tol, error=l2_err))
    plots = {}
    if len(series) >= 2 and all(g > 0 for _, g in series):
        lf = fit_rate(series) if len(series) >= 3 else None
        plots["lclt_gap"] = emit_plot(
            series, loglog=True, fit=(lf.slope, lf.intercept) if lf else None, title="local CLT gap"
        )
    prov = {"kernel": "kernels.kernel_row/lp_norm/lclt_gap"}
    return {"kernels": (header, rows)}, checks, plots, prov, {}


_RUNNERS = {
    "variance-sweep": _variance_sweep,
    "clt-rate": _clt_rate,
    "symmetric-regimes": _symmetric_regimes,
    "kernel-checks": _kernel_checks,
}


def _check(name: str, ok: bool, **values) -> dict:
    return {"name": name, "pass": bool(ok), **{k: float(v) for k, v in values.items()}}


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> OutputBundle:
    """Run one experiment; per-job failures are recorded and mark the bundle incomplete."""
    try:
        tables, checks, plots, prov, extra = _RUNNERS[config.kind](config, threads)
        complete, error = True, None
    except (MemoryError, ValueError, ArithmeticError) as exc:
        tables, checks, plots, prov, extra = {}, [], {}, {}, {}
        complete, error = False, f"{type(exc).__name__}: {exc}"
    if not config.plots:
        plots = {}
    passed = complete and all(c["pass"] for c in checks)
    summary = {
        "config": config.raw,
        "kind": config.kind,
        "seed": config.seed,
        "provenance": prov,
        "criteria": checks,
        "passed": passed,
        "complete": complete,
        **extra,
    }
    if error is not None:
        summary["error"] = error
    return OutputBundle(tables, summary, plots, passed, complete)


# ---------------------------------------------------------------- plots

_W, _H, _PAD = 480, 360, 56


def emit_plot(series, loglog: bool = False, fit: tuple[float, float] | None = None,
              title: str = "", xlabel: str = "N", ylabel: str = "") -> str:
    """Standalone SVG line plot; ``fit`` = (slope, intercept) of ln y on ln x."""
    pts = [(float(x), float(y)) for x, y in series]
    if len(pts) < 2:
        raise ValueError("a plot needs at least 2 points")
    if not all(math.isfinite(x) and math.isfinite(y) for x, y in pts):
        raise ValueError("plot values must be finite")
    if loglog:
        if any(x <= 0 or y <= 0 for x, y in pts):
            raise ValueError("log-log plot needs positive values")
        tx = [math.log10(x) for x, _ in pts]
        ty = [math.log10(y) for _, y in pts]
    else:
        tx = [x for x, _ in pts]
        ty = [y for _, y in pts]
    x0, x1 = min(tx), max(tx)
    if x1 == x0:
        raise ValueError("degenerate x range")
    y0, y1 = min(ty), max(ty)
    if y1 == y0:
        pad = abs(y0) * 0.1 or 1.0
        y0, y1 = y0 - pad, y1 + pad

    def sx(v):
        return _PAD + (v - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def sy(v):
        return _H - _PAD - (v - y0) / (y1 - y0) * (_H - 2 * _PAD)

    def fmt(v):
        return f"{v:.2f}"

    def label(v):
        return f"{10 ** v:.3g}" if loglog else f"{v:.3g}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line class="axis" x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line class="axis" x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text x="{_PAD}" y="{_H - _PAD + 16}" font-size="11">{label(x0)}</text>',
        f'<text x="{_W - _PAD}" y="{_H - _PAD + 16}" font-size="11" text-anchor="end">{label(x1)}</text>',
        f'<text x="{_PAD - 4}" y="{_H - _PAD}" font-size="11" text-anchor="end">{label(y0)}</text>',
        f'<text x="{_PAD - 4}" y="{_PAD + 4}" font-size="11" text-anchor="end">{label(y1)}</text>',
        f'<text x="{_W / 2}" y="{_H - 12}" font-size="12" text-anchor="middle">{_esc(xlabel)}</text>',
        f'<text x="{_W / 2}" y="{_PAD / 2}" font-size="13" text-anchor="middle">{_esc(title)}</text>',
    ]
    if ylabel:
        out.append(f'<text x="12" y="{_H / 2}" font-size="12">{_esc(ylabel)}</text>')
    verts = " ".join(f"{fmt(sx(a))},{fmt(sy(b))}" for a, b in zip(tx, ty))
    out.append(f'<polyline class="series" fill="none" stroke="steelblue" stroke-width="2" points="{verts}"/>')
    for a, b in zip(tx, ty):
        out.append(f'<circle cx="{fmt(sx(a))}" cy="{fmt(sy(b))}" r="3" fill="steelblue"/>')
    if fit is not None and loglog:
        slope, intercept = fit
        ya = (intercept + slope * math.log(10 ** x0)) / math.log(10)
        yb = (intercept + slope * math.log(10 ** x1)) / math.log(10)
        out.append(
            f'<line class="fit" x1="{fmt(sx(x0))}" y1="{fmt(sy(ya))}" x2="{fmt(sx(x1))}" y2="{fmt(sy(yb))}" '
            'stroke="firebrick" stroke-dasharray="5,4"/>'
        )
        out.append(f'<text x="{_W - _PAD}" y="{_PAD}" font-size="11" text-anchor="end">slope {slope:.3f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
