"""Experiment drivers behind the command line.

Each driver takes a resolved config and returns ``{file name: text}`` in a
fixed order. Sweep points may be evaluated by a process pool; results are
collected in submission order, so outputs do not depend on ``workers``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .analysis import ScalingSeries, detect_threshold, divergence_time, optimal_time_step
from .artifacts import SERIES_HEADER, SPECTRUM_HEADER, csv_text, json_text, svg_chart
from .config import config_hash
from .errors import ConfigError
from .exact import MAX_SPECTRUM, brute_force_ground, check_spectrum_size, min_parity_gap, spectrum_at
from .lattice import CouplingMap, SiteGraph, assign_couplings, build_lattice
from .model import build_trotter_plan
from .noise import NoiseModel, default_sherbrooke_model, run_noisy_anneal, scaled
from .observables import defect_density_state, residual_energy
from .statevec import check_size, run_reference_anneal, run_trotter_anneal


def make_graph(cfg: dict) -> SiteGraph:
    lat = cfg["lattice"]
    try:
        return build_lattice(
            lat["geometry"], lat.get("n"), rows=lat.get("rows"), cols=lat.get("cols"), device=lat.get("device")
        )
    except ValueError as exc:
        raise ConfigError(f"lattice: {exc}") from None


def make_instances(cfg: dict, graph: SiteGraph) -> list[tuple[str, CouplingMap]]:
    cp = cfg["couplings"]
    if cp["kind"] == "uniform":
        return [("uniform", assign_couplings(graph, "uniform", J=cp.get("J", 1.0)))]
    return [(f"seed{s}", assign_couplings(graph, "disordered", seed=s)) for s in cp["seeds"]]


def make_noise(cfg: dict) -> tuple[NoiseModel, dict]:
    block = cfg["noise"]
    base = default_sherbrooke_model()
    if block["model"]:
        base = NoiseModel.from_json({**base.to_json(), **block["model"]})
    return base, block


def _pool_map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


# -- point evaluators (module level so they pickle) ---------------------------


def _clean_ndef(args) -> float:
    graph, couplings, dt, n = args
    return defect_density_state(run_trotter_anneal(build_trotter_plan(graph, couplings, dt=dt, n_steps=n)), graph)


def _reference_ndef(args) -> float:
    graph, couplings, t_f, fine_dt = args
    return defect_density_state(run_reference_anneal(graph, couplings, t_f=t_f, fine_dt=fine_dt), graph)


def _clean_eres(args) -> float:
    graph, couplings, dt, n, e0 = args
    state = run_trotter_anneal(build_trotter_plan(graph, couplings, dt=dt, n_steps=n))
    return residual_energy(state, couplings, e0)[0]


class Emitter:
    """Collects artifacts with shared provenance metadata."""

    def __init__(self, cfg: dict, fmt: str = "csv"):
        recorded = {k: v for k, v in cfg.items() if k != "output"}
        self.meta = {
            "config": recorded,
            "config_hash": config_hash(recorded),
            "seed": cfg["seed"],
            "version": __version__,
        }
        self.fmt = fmt
        self.files: dict[str, str] = {}

    def table(self, stem: str, header: Sequence[str], rows: list[Sequence]) -> None:
        if self.fmt == "json":
            doc = {"columns": list(header), "rows": [list(r) for r in rows]}
            self.files[f"{stem}.json"] = json_text(doc, self.meta)
        else:
            self.files[f"{stem}.csv"] = csv_text(header, rows, self.meta)

    def json(self, name: str, doc: dict) -> None:
        self.files[name] = json_text(doc, self.meta)

    def svg(self, name: str, text: str) -> None:
        self.files[name] = text


def _series_rows(dt, steps, means, ses, observable="n_def"):
    return [(float(n * dt), int(n), float(dt), observable, float(m), float(s)) for n, m, s in zip(steps, means, ses)]


def _tag(x: float) -> str:
    return repr(float(x)).replace(".", "p")


def _noisy_series(graph, couplings, dt, steps, model, block, n_traj, shots, seed, tag, workers):
    means, ses = [], []
    for n in steps:
        plan = build_trotter_plan(graph, couplings, dt=dt, n_steps=n)
        r = run_noisy_anneal(
            plan, model, n_traj, shots, [seed, tag, n],
            mitigate_readout=block["mitigate_readout"], native_2q=block["native_2q"], workers=workers,
        )
        means.append(r.mean("n_def"))
        ses.append(r.std_err("n_def"))
    return means, ses


def kz_bench(cfg: dict, fmt: str = "csv", workers: int = 1) -> dict[str, str]:
    graph = make_graph(cfg)
    check_size(graph.n_sites)
    (_, couplings), *_ = make_instances(cfg, graph)
    dt, steps = cfg["dt"], cfg["n_steps"]
    if "noise" in cfg:
        base, block = make_noise(cfg)
        model = scaled(base, block["eta"][0])
        means, ses = _noisy_series(
            graph, couplings, dt, steps, model, block, cfg["trajectories"], cfg["shots"], cfg["seed"], 0, workers
        )
    else:
        means = _pool_map(_clean_ndef, [(graph, couplings, dt, n) for n in steps], workers)
        ses = [0.0] * len(steps)
    out = Emitter(cfg, fmt)
    out.table("kz_series", SERIES_HEADER, _series_rows(dt, steps, means, ses))
    an = cfg["analysis"]
    series = ScalingSeries.from_arrays(
        [n * dt for n in steps], means, ses, steps, dt=dt, n_sites=graph.n_sites, label="kz_bench"
    )
    if len(series) >= an["calib_points"] + 1:
        report = detect_threshold(
            series, an["reference_exponent"], an["delta"], an["calib_points"], tuple(an["kz_window"])
        )
        out.json("kz_report.json", report.to_json())
    out.svg("kz_series.svg", svg_chart([("n_def", series.t_f, series.n_def)], title="defect density"))
    return out.files


def noise_sweep(cfg: dict, fmt: str = "csv", workers: int = 1) -> dict[str, str]:
    graph = make_graph(cfg)
    check_size(graph.n_sites)
    (_, couplings), *_ = make_instances(cfg, graph)
    base, block = make_noise(cfg)
    dt, steps = cfg["dt"], cfg["n_steps"]
    out = Emitter(cfg, fmt)
    clean = _pool_map(_clean_ndef, [(graph, couplings, dt, n) for n in steps], workers)
    out.table("noise_clean", SERIES_HEADER, _series_rows(dt, steps, clean, [0.0] * len(steps)))
    clean_s = ScalingSeries.from_arrays([n * dt for n in steps], clean, None, steps, dt=dt)
    curves = [("noise-free", clean_s.t_f, clean_s.n_def)]
    summary = {"divergence_delta": block["divergence_delta"], "curves": []}
    for k, eta in enumerate(block["eta"]):
        model = scaled(base, eta)
        means, ses = _noisy_series(
            graph, couplings, dt, steps, model, block, cfg["trajectories"], cfg["shots"], cfg["seed"], k + 1, workers
        )
        out.table(f"noise_eta_{_tag(eta)}", SERIES_HEADER, _series_rows(dt, steps, means, ses))
        s = ScalingSeries.from_arrays([n * dt for n in steps], means, ses, steps, dt=dt)
        t_star = divergence_time(s, clean_s, block["divergence_delta"])
        summary["curves"].append(
            {
                "eta": eta,
                "t_f_star": t_star if math.isfinite(t_star) else None,
                "min_def_steps": int(steps[int(np.argmin(means))]),
                "noise_model": model.to_json(),
            }
        )
        curves.append((f"eta={eta:g}", s.t_f, s.n_def))
    by_eta = sorted(summary["curves"], key=lambda c: c["eta"])
    stars = [c["t_f_star"] if c["t_f_star"] is not None else math.inf for c in by_eta]
    summary["t_f_star_decreasing_in_eta"] = all(a > b for a, b in zip(stars, stars[1:]))
    out.json("noise_summary.json", summary)
    out.svg("noise_sweep.svg", svg_chart(curves, title="noisy defect density"))
    return out.files


def trotter_convergence(cfg: dict, fmt: str = "csv", workers: int = 1) -> dict[str, str]:
    graph = make_graph(cfg)
    check_size(graph.n_sites)
    (_, couplings), *_ = make_instances(cfg, graph)
    t_grid = [float(t) for t in cfg["t_f"]]
    fine_dt = cfg["reference"]["fine_dt"]
    out = Emitter(cfg, fmt)
    ref = _pool_map(_reference_ndef, [(graph, couplings, t, fine_dt) for t in t_grid], workers)
    out.table(
        "trotter_reference", SERIES_HEADER,
        [(t, int(round(t / fine_dt)), fine_dt, "n_def", r, 0.0) for t, r in zip(t_grid, ref)],
    )
    summary = {"fine_dt": fine_dt, "max_abs_deviation": []}
    curves = [("reference", t_grid, ref)]
    for dt in cfg["dt_grid"]:
        steps = []
        for t in t_grid:
            n = int(round(t / dt))
            if abs(n * dt - t) > 1e-9 * max(1.0, t):
                raise ConfigError(f"t_f={t} is not a multiple of dt={dt}")
            steps.append(n)
        vals = _pool_map(_clean_ndef, [(graph, couplings, dt, n) for n in steps], workers)
        out.table(f"trotter_dt_{_tag(dt)}", SERIES_HEADER, _series_rows(dt, steps, vals, [0.0] * len(steps)))
        dev = float(np.max(np.abs(np.asarray(vals) - np.asarray(ref))))
        summary["max_abs_deviation"].append({"dt": dt, "value": dev})
        curves.append((f"dt={dt:g}", t_grid, vals))
    devs = [d["value"] for d in sorted(summary["max_abs_deviation"], key=lambda d: -d["dt"])]
    summary["monotone_in_dt"] = all(b < a for a, b in zip(devs, devs[1:]))
    out.json("trotter_summary.json", summary)
    out.svg("trotter_convergence.svg", svg_chart(curves, title="Trotter convergence"))
    return out.files


def anneal_opt(cfg: dict, fmt: str = "csv", workers: int = 1) -> dict[str, str]:
    graph = make_graph(cfg)
    check_size(graph.n_sites)
    out = Emitter(cfg, fmt)
    steps = cfg["n_steps"]
    noise = make_noise(cfg) if "noise" in cfg else None
    summary = {"instances": []}
    for k, (label, couplings) in enumerate(make_instances(cfg, graph)):
        e0, _ = brute_force_ground(couplings, graph)
        entry = {"instance": label, "e0": e0}
        if graph.n_sites <= MAX_SPECTRUM:
            gap, s_star = min_parity_gap(graph, couplings)
            entry.update(min_gap=gap, s_star=s_star)
        results, rows, curves = {}, [], []
        for j, dt in enumerate(cfg["dt_grid"]):
            if noise is None:
                vals = _pool_map(_clean_eres, [(graph, couplings, dt, n, e0) for n in steps], workers)
                ses = [0.0] * len(steps)
            else:
                base, block = noise
                model = scaled(base, block["eta"][0])
                vals, ses = [], []
                for n in steps:
                    r = run_noisy_anneal(
                        build_trotter_plan(graph, couplings, dt=dt, n_steps=n), model, cfg["trajectories"],
                        cfg["shots"], [cfg["seed"], k, j, n], mitigate_readout=block["mitigate_readout"],
                        native_2q=block["native_2q"], workers=workers,
                    )
                    vals.append(r.mean("energy") - e0)
                    ses.append(r.std_err("energy"))
            results[dt] = list(zip(steps, vals, ses))
            rows += _series_rows(dt, steps, vals, ses, "e_res")
            curves.append((f"dt={dt:g}", [n for n in steps], vals))
        dt_star, minima = optimal_time_step(results)
        entry["dt_star"] = dt_star
        entry["minima"] = [{"dt": d, "e_res": m, "n_steps": n} for d, (m, n) in minima.items()]
        summary["instances"].append(entry)
        out.table(f"anneal_{label}", SERIES_HEADER, rows)
        out.svg(f"anneal_{label}.svg", svg_chart(curves, title=f"residual energy {label}", xlabel="n_steps", ylabel="E_res"))
    out.json("anneal_summary.json", summary)
    return out.files


def spectrum_scan(cfg: dict, fmt: str = "csv", workers: int = 1) -> dict[str, str]:
    graph = make_graph(cfg)
    check_spectrum_size(graph.n_sites)
    out = Emitter(cfg, fmt)
    sp = cfg["spectrum"]
    grid = np.linspace(0.0, 1.0, sp["s_points"])
    summary = {"instances": []}
    for label, couplings in make_instances(cfg, graph):
        rows = []
        for s in grid:
            sl = spectrum_at(graph, couplings, float(s), sp["levels"], relative=True)
            rows += [(float(s), i, e, p) for i, (e, p) in enumerate(zip(sl.eigenvalues, sl.parities))]
        gap, s_star = min_parity_gap(graph, couplings)
        summary["instances"].append({"instance": label, "min_gap": gap, "s_star": s_star})
        out.table(f"spectrum_{label}", SPECTRUM_HEADER, rows)
    out.json("spectrum_summary.json", summary)
    return out.files


DRIVERS = {
    "kz_bench": kz_bench,
    "noise_sweep": noise_sweep,
    "trotter_convergence": trotter_convergence,
    "anneal_opt": anneal_opt,
    "spectrum_scan": spectrum_scan,
}
