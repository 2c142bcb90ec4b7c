"""Anneal schedules, critical exponents and Trotter plan compilation.

Gate convention: ``R_G(theta) = exp(-i theta G / 2)``. With that convention
the factor ``exp(+i dt A sum X)`` of the mixer is ``R_X(-2 A dt)`` on every
site and ``exp(+i dt B J_e Z_i Z_j)`` is ``R_ZZ(-2 J_e B dt)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .lattice import CouplingMap, SiteGraph


class ScheduleForm(str, Enum):
    LINEAR = "linear"


@dataclass(frozen=True)
class AnnealSchedule:
    form: ScheduleForm = ScheduleForm.LINEAR

    def at(self, s: float) -> tuple[float, float]:
        return schedule_at(self, s)

    def vectorized(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = np.asarray(s, dtype=float)
        return 1.0 - s, s


def schedule_at(schedule: AnnealSchedule, s: float) -> tuple[float, float]:
    """Return ``(A(s), B(s))``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"schedule parameter s={s} outside [0, 1]")
    if schedule.form is ScheduleForm.LINEAR:
        return 1.0 - s, float(s)
    raise ValueError(f"unsupported schedule form {schedule.form!r}")


@dataclass(frozen=True)
class CriticalExponents:
    d: int
    z: float
    nu: float

    def __post_init__(self):
        if self.d <= 0 or self.z <= 0 or self.nu <= 0:
            raise ValueError("critical exponents must be strictly positive")


def kz_exponent(exps: CriticalExponents) -> float:
    """Defect-density exponent ``-d nu / (1 + z nu)``."""
    return -exps.d * exps.nu / (1.0 + exps.z * exps.nu)


ISING_1D = CriticalExponents(d=1, z=1.0, nu=1.0)


@dataclass(frozen=True)
class ScalingLaw:
    exponent: float
    prefactor: float

    def __post_init__(self):
        if not np.isfinite(self.exponent):
            raise ValueError("exponent must be finite")
        if self.prefactor <= 0:
            raise ValueError("prefactor must be positive")

    def __call__(self, t):
        return self.prefactor * np.asarray(t, dtype=float) ** self.exponent


@dataclass(frozen=True, eq=False)
class TrotterPlan:
    """A fully resolved first-order anneal.

    Row ``m - 1`` of ``x_angles`` and ``zz_angles`` holds step ``m``. Each step
    applies ``R_X(x_angles[m-1])`` on all sites, then the ZZ layers in
    ascending color order.
    """

    graph: SiteGraph
    couplings: CouplingMap
    schedule: AnnealSchedule
    dt: float
    n_steps: int
    x_angles: np.ndarray = field(repr=False)
    zz_angles: np.ndarray = field(repr=False)

    @property
    def t_f(self) -> float:
        return self.n_steps * self.dt

    @property
    def n_layers(self) -> int:
        return self.graph.n_colors

    def to_json(self) -> dict:
        layers = self.graph.layers()
        steps = []
        for m in range(self.n_steps):
            steps.append(
                {
                    "m": m + 1,
                    "x_angle": float(self.x_angles[m]),
                    "layers": [
                        {"color": c, "angles": [float(self.zz_angles[m, e]) for e in edges]}
                        for c, edges in enumerate(layers)
                    ],
                }
            )
        return {"dt": self.dt, "n_steps": self.n_steps, "t_f": self.t_f, "steps": steps}


def build_trotter_plan(
    graph: SiteGraph,
    couplings: CouplingMap,
    schedule: AnnealSchedule | None = None,
    dt: float = 0.5,
    n_steps: int = 1,
) -> TrotterPlan:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if couplings.edges != graph.edges:
        raise ValueError("couplings do not match the graph edges")
    schedule = schedule or AnnealSchedule()
    # s_m = m dt / t_f = m / N_t, evaluated at the step endpoint
    s = np.arange(1, n_steps + 1) / n_steps
    a, b = schedule.vectorized(s)
    x_angles = -2.0 * a * dt
    zz_angles = -2.0 * np.outer(b, couplings.as_array()) * dt
    x_angles.setflags(write=False)
    zz_angles.setflags(write=False)
    return TrotterPlan(graph, couplings, schedule, float(dt), int(n_steps), x_angles, zz_angles)
