"""
Canned experiment scenarios: each orchestrates one pipeline, writes CSV
artifacts (canonical), optional rendered images, and a manifest with
content digests.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .config import ExperimentConfig  # noqa: E402
from .dispersion import (branch_point_track, spreading_speed,  # noqa: E402
                         weighted_essential_curve)
from .linop import aggregate_spectrum, hopf_locate, k_scan  # noqa: E402
from .model import trivial_front  # noqa: E402
from .reduction import ls_report, report_lines  # noqa: E402
from .sim import adiabatic_continuation, classify_pattern, relax, seed  # noqa: E402
from .sim import Stepper  # noqa: E402

__all__ = ["RunManifest", "ScenarioError", "run_scenario", "emit_plot",
           "SCENARIOS"]


class ScenarioError(RuntimeError):
    """A scenario pipeline failed; the cause is chained."""


@dataclass
class RunManifest:
    scenario: str
    config_hash: str
    rng_seed: int
    files: dict = field(default_factory=dict)  # name -> sha256
    timings: dict = field(default_factory=dict)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        with open(path, "w") as fh:
            json.dump(self.__dict__, fh, indent=2, sort_keys=True)
        return path


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow([repr(float(v)) if isinstance(v, float) else v
                         for v in row])


def emit_plot(data: dict, kind: str, path) -> Path:
    """Deterministic image render plus a CSV twin of the numbers shown."""
    path = Path(path)
    if kind == "heatmap":
        values = np.asarray(data["values"])
        if values.size == 0:
            raise ValueError("empty data")
        fig, ax = plt.subplots(figsize=(8, 3))
        im = ax.imshow(values.T, origin="lower", aspect="auto",
                       cmap="RdBu_r",
                       extent=data.get("extent"))
        ax.set_xlabel(data.get("xlabel", "x"))
        ax.set_ylabel(data.get("ylabel", "y"))
        fig.colorbar(im, ax=ax)
        rows = values.tolist()
        header = [f"y{j}" for j in range(values.shape[1])]
    elif kind == "curves":
        x = np.asarray(data["x"])
        curves = data["curves"]  # label -> array
        if x.size == 0 or not curves:
            raise ValueError("empty data")
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, ys in curves.items():
            ax.plot(x, np.asarray(ys), label=label)
        ax.set_xlabel(data.get("xlabel", "x"))
        ax.set_ylabel(data.get("ylabel", "value"))
        ax.legend()
        ax.grid(True, alpha=0.3)
        header = [data.get("xlabel", "x")] + list(curves)
        rows = [[float(xv)] + [float(np.asarray(c)[i])
                               for c in curves.values()]
                for i, xv in enumerate(x)]
    elif kind == "scatter":
        x, y = np.asarray(data["x"]), np.asarray(data["y"])
        if x.size == 0:
            raise ValueError("empty data")
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(x, y, ".", ms=4)
        ax.set_xlabel(data.get("xlabel", "Re"))
        ax.set_ylabel(data.get("ylabel", "Im"))
        ax.grid(True, alpha=0.3)
        header = [data.get("xlabel", "Re"), data.get("ylabel", "Im")]
        rows = np.column_stack([x, y]).tolist()
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    _write_csv(path.with_suffix(".csv"), header, rows)
    return path


def _scenario_speeds(cfg, out, workers):
    k = cfg.model["k"]
    rows = []
    for ell in (0, 1):
        c, root = spreading_speed(ell, k)
        rows.append((ell, c, root.lam.imag))
    _write_csv(out / "speeds.csv", ["ell", "c_star", "omega_bp"], rows)


def _scenario_hopf(cfg, out, workers):
    grid = cfg.make_grid()
    model = cfg.model_spec()
    eta = cfg.numerics["eta"]
    rows = []
    for ell, bracket in ((1, (1.30, 1.40)), (0, (1.55, 1.65))):
        h = hopf_locate(model, grid, bracket, eta=eta, ell=ell)
        rows.append((ell, h.c_star, h.omega_star, h.mu_prime,
                     int(h.hypothesis_ok)))
    _write_csv(out / "hopf.csv",
               ["ell", "c_star", "omega_star", "mu_prime", "hypothesis_ok"],
               rows)


def _scenario_ls_report(cfg, out, workers):
    grid = cfg.make_grid()
    model = cfg.model_spec()
    hopf = hopf_locate(model, grid, (1.30, 1.40), eta=cfg.numerics["eta"])
    rep = ls_report(hopf, model)
    (out / "ls_report.txt").write_text("\n".join(report_lines(rep)) + "\n")


def _scenario_fig1(cfg, out, workers):
    grid = cfg.make_grid()
    c = cfg.scenario["c"]
    model = cfg.model_spec(c=c)
    hopf = hopf_locate(model, grid, (1.30, 1.40), eta=cfg.numerics["eta"])
    stepper = Stepper(grid, model, cfg.numerics["dt"])
    rows = []
    for kind in ("oblique+", "checkerboard"):
        state = seed(kind, cfg.scenario["amplitude"], hopf)
        res = relax(state, stepper, hopf, tol=cfg.numerics["tol"],
                    t_max=cfg.numerics["t_max"],
                    window=cfg.numerics["window"])
        cls = classify_pattern(res)
        rows.append((kind, res.amplitude, cls, res.period, res.converged))
        tag = kind.replace("+", "plus").replace("-", "minus")
        emit_plot({"values": res.state.field.values,
                   "extent": (-grid.half_width_M, grid.half_width_M,
                              0.0, 2 * np.pi),
                   "xlabel": "x", "ylabel": "y"},
                  "heatmap", out / f"pattern_{tag}.png")
    _write_csv(out / "patterns.csv",
               ["seed", "amplitude", "class", "period", "converged"], rows)


def _scenario_fig3(cfg, out, workers):
    grid = cfg.make_grid()
    c = cfg.scenario["c"]
    model = cfg.model_spec(c=c)
    eta = cfg.numerics["eta"]
    front = trivial_front(grid)
    spec = aggregate_spectrum(range(0, 3), c, eta, 100, model, front, grid,
                              per_block=40)
    spec.write_csv(out / "spectrum.csv")
    # weighted essential curves for context
    ms = np.linspace(-3.0, 3.0, 301)
    rows = []
    for ell in (0, 1, 2):
        lam = weighted_essential_curve(ms, model.k, ell, c, eta)
        rows.extend((ell, m, L.real, L.imag) for m, L in zip(ms, lam))
    _write_csv(out / "essential_weighted.csv",
               ["ell", "m", "Re_lambda", "Im_lambda"], rows)
    emit_plot({"x": [p.lam.real for p in spec.pairs],
               "y": [p.lam.imag for p in spec.pairs],
               "xlabel": "Re lambda", "ylabel": "Im lambda"},
              "scatter", out / "spectrum_plot.png")


def _scenario_fig4(cfg, out, workers):
    k = cfg.model["k"]
    cs = np.linspace(cfg.scenario["c_from"], cfg.scenario["c_to"], 61)
    rows = []
    curves = {}
    for ell in (0, 1):
        curve, c_cross = branch_point_track(ell, k, cs)
        curves[f"ell={ell}"] = curve.lam.real
        rows.extend((ell, c, L.real, L.imag)
                    for c, L in zip(curve.parameter, curve.lam))
        rows.append((ell, c_cross, 0.0, float("nan")))
    _write_csv(out / "branch_points.csv",
               ["ell", "c", "Re_lambda", "Im_lambda"], rows)
    emit_plot({"x": cs, "curves": curves, "xlabel": "c",
               "ylabel": "Re lambda_bp"}, "curves", out / "branch_points_plot.png")


def _scenario_fig5(cfg, out, workers):
    grid = cfg.make_grid()
    model = cfg.model_spec()
    hopf = hopf_locate(model, grid, (1.30, 1.40), eta=cfg.numerics["eta"])
    state = seed(cfg.scenario["seed"], cfg.scenario["amplitude"], hopf,
                 rng=np.random.default_rng(cfg.scenario["rng_seed"]))
    branch = adiabatic_continuation(
        state, cfg.scenario["c_from"], cfg.scenario["c_to"],
        cfg.scenario["dc"], model, hopf, dt=cfg.numerics["dt"],
        tol=cfg.numerics["tol"], t_max_per_c=cfg.numerics["t_max"],
        window=cfg.numerics["window"])
    branch.write_csv(out / "branch.csv")
    cs = [s[0] for s in branch.samples]
    amps = [s[1] for s in branch.samples]
    emit_plot({"x": cs, "curves": {"amplitude": amps}, "xlabel": "c",
               "ylabel": "||u - u*||"}, "curves", out / "branch_plot.png")


def _scenario_fig6(cfg, out, workers):
    c = cfg.scenario["c"]
    model = cfg.model_spec(c=c)
    ks = np.linspace(0.1, 0.9, 17)
    grid_n = cfg.grid
    if workers > 1:
        def one(k):
            return k_scan(np.array([k]), c, model, grid_n["m"],
                          grid_n["n_x"], grid_n["n_y"],
                          eta=cfg.numerics["eta"])[0]

        with ThreadPoolExecutor(max_workers=workers) as pool:
            lams = list(pool.map(one, ks))
        lams = np.array(lams)
    else:
        lams = k_scan(ks, c, model, grid_n["m"], grid_n["n_x"],
                      grid_n["n_y"], eta=cfg.numerics["eta"])
    _write_csv(out / "kscan.csv", ["k", "Re_lambda", "Im_lambda"],
               [(k, L.real, L.imag) for k, L in zip(ks, lams)])
    emit_plot({"x": ks, "curves": {"Re lambda": lams.real}, "xlabel": "k",
               "ylabel": "Re lambda"}, "curves", out / "kscan_plot.png")


SCENARIOS = {
    "speeds": _scenario_speeds,
    "hopf": _scenario_hopf,
    "ls-report": _scenario_ls_report,
    "fig1-patterns": _scenario_fig1,
    "fig3-spectrum": _scenario_fig3,
    "fig4-branches": _scenario_fig4,
    "fig5-diagram": _scenario_fig5,
    "fig6-kscan": _scenario_fig6,
}


def run_scenario(name: str, cfg: ExperimentConfig, out_dir,
                 workers: int = 1) -> RunManifest:
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; "
                         f"choose from {sorted(SCENARIOS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo = cfg.echo()
    (out / "config_echo.ini").write_text(echo)
    manifest = RunManifest(
        scenario=name,
        config_hash=hashlib.sha256(echo.encode()).hexdigest(),
        rng_seed=int(cfg.scenario["rng_seed"]))
    t0 = time.perf_counter()
    try:
        SCENARIOS[name](cfg, out, workers)
    except Exception as exc:
        raise ScenarioError(f"scenario '{name}': {exc}") from exc
    manifest.timings[name] = time.perf_counter() - t0
    for f in sorted(out.iterdir()):
        if f.is_file() and f.name != "manifest.json":
            manifest.files[f.name] = _sha256(f)
    manifest.write(out)
    return manifest
