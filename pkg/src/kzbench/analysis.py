"""Scaling fits, the threshold-depth metric and optimal-time-step extraction.

Regimes of the defect density ``n`` versus anneal time ``t``:

* Kibble-Zurek window: ``n = c t**k`` (``k = -1/2`` for the 1D Ising chain);
* Landau-Zener drop-off: ``n ~ p(t) = exp(-b t / N**2)``;
* adiabatic tail: ``n = p(t) + (1 - 2 p(t)) / (a t**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares

from .observables import DefectSeriesPoint


@dataclass(frozen=True)
class ScalingSeries:
    points: tuple[DefectSeriesPoint, ...]
    dt: float
    n_sites: int
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        t = [p.t_f for p in self.points]
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("series t_f values must be strictly increasing")

    @classmethod
    def from_arrays(cls, t_f, n_def, std_err=None, n_steps=None, *, dt=float("nan"), n_sites=0, label=""):
        t_f = np.asarray(t_f, dtype=float)
        std_err = np.zeros_like(t_f) if std_err is None else np.asarray(std_err, dtype=float)
        if n_steps is None:
            n_steps = np.rint(t_f / dt).astype(int) if np.isfinite(dt) else np.arange(1, t_f.size + 1)
        pts = tuple(
            DefectSeriesPoint(float(t), int(m), float(n), float(s))
            for t, m, n, s in zip(t_f, n_steps, n_def, std_err)
        )
        return cls(pts, dt, n_sites, label)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def t_f(self) -> np.ndarray:
        return np.array([p.t_f for p in self.points])

    @property
    def n_def(self) -> np.ndarray:
        return np.array([p.n_def for p in self.points])

    @property
    def std_err(self) -> np.ndarray:
        return np.array([p.std_err for p in self.points])

    @property
    def n_steps(self) -> np.ndarray:
        return np.array([p.n_steps for p in self.points])

    def window_indices(self, window: tuple[float, float] | None) -> np.ndarray:
        """Indices with ``lo <= t_f <= hi`` (tolerant to rounding of ``t_f``)."""
        if window is None:
            return np.arange(len(self))
        lo, hi = window
        t = self.t_f
        return np.flatnonzero((t >= lo - 1e-9) & (t <= hi + 1e-9))


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    stderr: float
    prefactor: float
    window: tuple[float, float]
    residuals: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {
            "exponent": self.exponent,
            "stderr": self.stderr,
            "prefactor": self.prefactor,
            "window": list(self.window),
        }


def _wls(x: np.ndarray, y: np.ndarray, w: np.ndarray | None):
    """Weighted line fit; returns (slope, intercept, slope stderr, residuals)."""
    X = np.column_stack([x, np.ones_like(x)])
    W = np.ones_like(x) if w is None else w
    A = X.T @ (X * W[:, None])
    coef = np.linalg.solve(A, X.T @ (W * y))
    res = y - X @ coef
    dof = x.size - 2
    s2 = float(W @ res**2) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.inv(A)
    return float(coef[0]), float(coef[1]), math.sqrt(max(cov[0, 0], 0.0)), res


def fit_power_law(
    series: ScalingSeries,
    window: tuple[float, float] | None = (2.0, 10.0),
    *,
    weighted: bool = True,
) -> PowerLawFit:
    """Least squares of ``log n`` on ``log t`` inside ``window``.

    Weights ``(n / std_err)**2`` are used when every point in the window has a
    positive standard error and ``weighted`` is set.
    """
    idx = series.window_indices(window)
    if idx.size < 3:
        raise ValueError(f"power-law fit needs at least 3 points in window {window}, got {idx.size}")
    t, n, se = series.t_f[idx], series.n_def[idx], series.std_err[idx]
    if np.any(n <= 0):
        raise ValueError("power-law fit needs positive defect densities")
    w = (n / se) ** 2 if weighted and np.all(se > 0) else None
    slope, icpt, err, res = _wls(np.log(t), np.log(n), w)
    win = (float(t[0]), float(t[-1])) if window is None else (float(window[0]), float(window[1]))
    return PowerLawFit(slope, err, math.exp(icpt), win, res)


@dataclass(frozen=True)
class LZFit:
    b: float
    log_prefactor: float
    residuals: np.ndarray = field(repr=False)


def fit_lz_regime(series: ScalingSeries, window: tuple[float, float] | None, n_sites: int | None = None) -> LZFit:
    """Fit ``log n = log c - b t / N**2`` inside ``window``."""
    n_sites = n_sites or series.n_sites
    idx = series.window_indices(window)
    if idx.size < 2 or n_sites < 1:
        raise ValueError("degenerate window for the Landau-Zener fit")
    t, n = series.t_f[idx], series.n_def[idx]
    if np.any(n <= 0):
        raise ValueError("Landau-Zener fit needs positive defect densities")
    if np.ptp(t) == 0:
        raise ValueError("degenerate window for the Landau-Zener fit")
    slope, icpt, _, res = _wls(t / n_sites**2, np.log(n), None)
    return LZFit(-slope, icpt, res)


def adiabatic_model(t, a: float, b: float, n_sites: int) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    p = np.exp(-b * t / n_sites**2)
    return p + (1.0 - 2.0 * p) / (a * t**2)


@dataclass(frozen=True)
class AdiabaticFit:
    a: float
    b: float
    residuals: np.ndarray = field(repr=False)


def fit_adiabatic_regime(
    series: ScalingSeries,
    window: tuple[float, float] | None,
    n_sites: int | None = None,
    *,
    b: float | None = None,
    fit_b: bool = True,
) -> AdiabaticFit:
    """Nonlinear least squares of the adiabatic-tail model in log space.

    ``b`` seeds (or, with ``fit_b=False``, fixes) the Landau-Zener constant;
    without it the seed comes from :func:`fit_lz_regime` on the same window.
    """
    n_sites = n_sites or series.n_sites
    idx = series.window_indices(window)
    need = 2 if fit_b else 1
    if idx.size < need + 1:
        raise ValueError("degenerate window for the adiabatic fit")
    t, n = series.t_f[idx], series.n_def[idx]
    if np.any(n <= 0):
        raise ValueError("adiabatic fit needs positive defect densities")
    if b is None:
        b = fit_lz_regime(series, window, n_sites).b
    # seed a from the point where the power-law tail dominates most
    k = int(np.argmax(t))
    p = math.exp(-b * t[k] / n_sites**2)
    a0 = (1 - 2 * p) / max(n[k] - p, 1e-3 * n[k]) / t[k] ** 2

    def resid(theta):
        la = theta[0]
        bb = theta[1] if fit_b else b
        model = adiabatic_model(t, math.exp(la), bb, n_sites)
        return np.log(np.clip(model, 1e-300, None)) - np.log(n)

    x0 = [math.log(abs(a0)), b] if fit_b else [math.log(abs(a0))]
    sol = least_squares(resid, x0, xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=10000)
    a = math.exp(sol.x[0])
    return AdiabaticFit(a, float(sol.x[1]) if fit_b else float(b), sol.fun)


@dataclass
class BenchmarkReport:
    threshold_steps: int
    min_def_steps: int
    reference_exponent: float
    delta: float
    prefactor: float
    deviations: list[float]
    t_f: list[float]
    n_def: list[float]
    calibration: tuple[int, ...]
    kz_fit: PowerLawFit | None = None
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "threshold_steps": self.threshold_steps,
            "min_def_steps": self.min_def_steps,
            "reference_exponent": self.reference_exponent,
            "delta": self.delta,
            "kz_fit": self.kz_fit.to_json() if self.kz_fit is not None else None,
            "points": [
                {"t_f": t, "n_def": n, "deviation": d}
                for t, n, d in zip(self.t_f, self.n_def, self.deviations)
            ],
        }


def detect_threshold(
    series: ScalingSeries,
    reference_exponent: float = -0.5,
    delta: float = 0.2,
    calib_points: int = 3,
    kz_window: tuple[float, float] | None = None,
) -> BenchmarkReport:
    """Largest depth up to which the series tracks ``c t**reference_exponent``.

    ``c`` is the geometric mean of ``n / t**k`` over the first ``calib_points``
    points at or after the start of ``kz_window`` (the series start when no
    window is given). Points before the calibration start are reported but not
    tested. Calibration points outside ``kz_window`` are flagged.
    """
    if len(series) < calib_points + 1:
        raise ValueError(f"series needs at least {calib_points + 1} points")
    if delta <= 0:
        raise ValueError("delta must be positive")
    t, n, steps = series.t_f, series.n_def, series.n_steps
    start = 0
    flags: list[str] = []
    if kz_window is not None:
        after = np.flatnonzero(t >= kz_window[0] - 1e-9)
        if after.size == 0:
            raise ValueError("no points at or after the KZ window start")
        start = int(after[0])
    calib = np.arange(start, min(start + calib_points, len(series)))
    if calib.size < calib_points:
        flags.append("fewer calibration points than requested")
    if kz_window is not None:
        outside = [float(t[i]) for i in calib if t[i] > kz_window[1] + 1e-9]
        if outside:
            flags.append(f"calibration points outside the KZ window: {outside}")
    if np.any(n[calib] <= 0):
        raise ValueError("calibration points need positive defect densities")
    c = float(np.exp(np.mean(np.log(n[calib]) - reference_exponent * np.log(t[calib]))))
    ref = c * t**reference_exponent
    dev = (n - ref) / ref
    threshold = int(steps[start])
    for i in range(start, len(series)):
        if abs(dev[i]) > delta:
            break
        threshold = int(steps[i])
    kz_fit = None
    if kz_window is not None and series.window_indices(kz_window).size >= 3:
        kz_fit = fit_power_law(series, kz_window)
    return BenchmarkReport(
        threshold_steps=threshold,
        min_def_steps=int(steps[int(np.argmin(n))]),
        reference_exponent=reference_exponent,
        delta=delta,
        prefactor=c,
        deviations=[float(d) for d in dev],
        t_f=[float(x) for x in t],
        n_def=[float(x) for x in n],
        calibration=tuple(int(i) for i in calib),
        kz_fit=kz_fit,
        flags=flags,
    )


def optimal_time_step(
    results: Mapping[float, Sequence[tuple[int, float, float]]],
) -> tuple[float, dict[float, tuple[float, int]]]:
    """Per-``dt`` minimum over depth and the ``dt`` achieving the smallest one.

    ``results[dt]`` lists ``(n_steps, mean, std_err)``. Returns ``dt_star`` and
    ``{dt: (min mean, n_steps at the minimum)}``; ties keep the first depth.
    """
    if not results:
        raise ValueError("no curves given")
    minima: dict[float, tuple[float, int]] = {}
    for dt in sorted(results):
        curve = list(results[dt])
        if len(curve) < 3:
            raise ValueError(f"curve for dt={dt} has fewer than 3 depths")
        steps, mean, _ = min(curve, key=lambda r: (r[1], r[0]))
        minima[dt] = (float(mean), int(steps))
    dt_star = min(minima, key=lambda d: (minima[d][0], d))
    return dt_star, minima


def finite_size_onset(
    series: ScalingSeries,
    calib_window: tuple[float, float] = (2.0, 6.0),
    reference_exponent: float = -0.5,
    delta: float = 0.2,
) -> float:
    """First ``t_f`` from which ``n`` stays below ``(1 - delta) c t**k``.

    ``c`` is calibrated on ``calib_window`` as in :func:`detect_threshold`.
    Returns ``inf`` when the series never drops off.
    """
    idx = series.window_indices(calib_window)
    if idx.size < 1:
        raise ValueError("calibration window holds no points")
    t, n = series.t_f, series.n_def
    c = float(np.exp(np.mean(np.log(n[idx]) - reference_exponent * np.log(t[idx]))))
    below = n < (1.0 - delta) * c * t**reference_exponent
    below[: idx[-1] + 1] = False
    onset = math.inf
    for i in range(len(series) - 1, -1, -1):
        if not below[i]:
            break
        onset = float(t[i])
    return onset


def divergence_time(
    noisy: ScalingSeries, clean: ScalingSeries, delta: float = 0.1
) -> float:
    """First ``t_f`` where ``|noisy - clean| / clean`` exceeds ``delta`` (``inf`` if never)."""
    if not np.allclose(noisy.t_f, clean.t_f):
        raise ValueError("series must share their t_f grid")
    rel = np.abs(noisy.n_def - clean.n_def) / clean.n_def
    hit = np.flatnonzero(rel > delta)
    return float(noisy.t_f[hit[0]]) if hit.size else math.inf


def minimum_then_rise(series: ScalingSeries, n_sigma: float = 2.0) -> tuple[bool, int]:
    """Whether the curve falls to one minimum and then rises, within ``n_sigma`` errors.

    Monotonicity is checked pairwise: up to the turning point no point may
    exceed an earlier one, and from it on no point may fall below an earlier
    one, by more than ``n_sigma`` combined standard errors. Returns
    ``(True, earliest valid turning point)`` or ``(False, argmin)``.
    """
    n, se = series.n_def, series.std_err
    m = len(n)
    tol = n_sigma * np.sqrt(se[:, None] ** 2 + se[None, :] ** 2)
    diff = n[None, :] - n[:, None]  # diff[i, j] = n_j - n_i
    later = np.triu(np.ones((m, m), dtype=bool), 1)
    up = later & (diff > tol)
    down = later & (diff < -tol)
    for k in range(m):
        if not up[: k + 1, : k + 1].any() and not down[k:, k:].any():
            return True, k
    return False, int(np.argmin(n))
