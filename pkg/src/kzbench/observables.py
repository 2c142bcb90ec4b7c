"""Defect density, kink-kink correlations and Ising energies.

Bitstrings list sites left to right: character ``k`` is site ``k`` and ``"0"``
means ``s_k = +1``. Counts are ``{bitstring: shots}`` maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedObservableError
from .lattice import CouplingMap, Geometry, SiteGraph
from .statevec import PureState, expect_zz_all, zz_diagonal


@dataclass(frozen=True)
class DefectSeriesPoint:
    t_f: float
    n_steps: int
    n_def: float
    std_err: float = 0.0

    def __post_init__(self):
        if not -1e-12 <= self.n_def <= 1 + 1e-12:
            raise ValueError(f"defect density {self.n_def} outside [0, 1]")
        if self.std_err < 0:
            raise ValueError("std_err must be non-negative")


@dataclass(frozen=True)
class KinkCorrelation:
    r: int
    c_kk: float
    xi: float

    @property
    def r_over_xi(self) -> float:
        return self.r / self.xi


def counts_to_arrays(counts: dict[str, int]) -> tuple[np.ndarray, np.ndarray]:
    """Return spins ``s`` (rows of +-1, one per distinct bitstring) and their weights."""
    if not counts:
        raise ValueError("empty counts")
    keys = list(counts)
    n = len(keys[0])
    if any(len(k) != n for k in keys):
        raise ValueError("bitstrings of unequal length")
    raw = np.frombuffer("".join(keys).encode(), dtype=np.uint8).reshape(len(keys), n)
    spins = 1 - 2 * (raw - ord("0")).astype(np.int8)
    weights = np.fromiter(counts.values(), dtype=np.int64, count=len(keys))
    if weights.sum() < 1:
        raise ValueError("counts hold no shots")
    return spins, weights


def _weighted_mean_se(values: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    total = int(weights.sum())
    mean = float(weights @ values) / total
    if total < 2:
        return mean, 0.0
    var = float(weights @ (values - mean) ** 2) / (total - 1)
    return mean, math.sqrt(max(var, 0.0) / total)


def defect_density_state(state: PureState, graph: SiteGraph) -> float:
    """Exact ``(1 / 2N_e) sum_e (1 - <Z_i Z_j>)``."""
    if state.n_sites != graph.n_sites:
        raise ValueError("state and graph site counts differ")
    if graph.n_edges == 0:
        raise UndefinedObservableError("defect density needs at least one edge")
    zz = expect_zz_all(state, graph.edges)
    return float(0.5 * np.mean(1.0 - zz))


def kink_matrix(spins: np.ndarray, edges) -> np.ndarray:
    """Kink indicators ``K = (1 - s_i s_j) / 2`` per distinct shot and edge."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return (1 - spins[:, e[:, 0]] * spins[:, e[:, 1]]) // 2


def defect_density_samples(counts: dict[str, int], graph: SiteGraph) -> tuple[float, float]:
    """Mean per-shot kink fraction and its standard error over shots."""
    spins, weights = counts_to_arrays(counts)
    if spins.shape[1] != graph.n_sites:
        raise ValueError("bitstring length differs from the site count")
    if graph.n_edges == 0:
        raise UndefinedObservableError("defect density needs at least one edge")
    per_shot = kink_matrix(spins, graph.edges).mean(axis=1)
    return _weighted_mean_se(per_shot, weights)


def kink_kink(counts: dict[str, int], graph: SiteGraph, r_max: int, *, scale: float = 1.0) -> list[KinkCorrelation]:
    """Connected kink-kink correlator normalized by ``n_def**2``.

    ``C_r = (1 / N_r) sum_i (<K_i K_{i+r}> - n^2) / n^2`` with edges in chain
    order. Periodic chains wrap and ``N_r = N_e``; open chains use the
    ``N_e - r`` valid pairs. ``scale`` multiplies the indicator (2 gives the
    ``1 - s s`` convention); it cancels in ``C_r``.
    """
    if graph.geometry not in (Geometry.OPEN_CHAIN, Geometry.PERIODIC_CHAIN):
        raise ValueError("kink_kink is defined for chain geometries only")
    spins, weights = counts_to_arrays(counts)
    order = graph.chain_order()
    kinks = kink_matrix(spins, [graph.edges[e] for e in order]).astype(float)
    total = weights.sum()
    n_e = kinks.shape[1]
    n_def = float(weights @ kinks.mean(axis=1)) / total
    if n_def <= 0:
        raise UndefinedObservableError("no defects in the samples, the correlator is undefined")
    if not 1 <= r_max <= n_e - 1:
        raise ValueError(f"r_max must lie in [1, {n_e - 1}]")
    kinks *= scale
    mean_k = scale * n_def
    out = []
    for r in range(1, r_max + 1):
        if graph.geometry is Geometry.PERIODIC_CHAIN:
            pair = kinks * np.roll(kinks, -r, axis=1)
        else:
            pair = kinks[:, : n_e - r] * kinks[:, r:]
        mean_pair = (weights @ pair) / total
        c = float(np.mean((mean_pair - mean_k**2) / mean_k**2))
        out.append(KinkCorrelation(r, c, 1.0 / n_def))
    return out


def classical_energy(bitstring: str, couplings: CouplingMap, n_sites: int | None = None) -> float:
    """``E = -sum_e J_e s_i s_j`` for one bitstring."""
    need = 1 + max((j for _, j in couplings.edges), default=-1)
    if n_sites is not None and len(bitstring) != n_sites:
        raise ValueError(f"bitstring has {len(bitstring)} sites, expected {n_sites}")
    if len(bitstring) < need:
        raise ValueError(f"bitstring too short for couplings on {need} sites")
    s = [1 - 2 * int(ch) for ch in bitstring]
    return -float(sum(J * s[i] * s[j] for (i, j), J in zip(couplings.edges, couplings.values)))


def classical_energies(spins: np.ndarray, couplings: CouplingMap) -> np.ndarray:
    e = np.asarray(couplings.edges, dtype=np.int64).reshape(-1, 2)
    return -(spins[:, e[:, 0]] * spins[:, e[:, 1]]) @ couplings.as_array()


def residual_energy(
    source: dict[str, int] | PureState,
    couplings: CouplingMap,
    e0: float,
    graph: SiteGraph | None = None,
) -> tuple[float, float]:
    """``E - e0`` as ``(mean, std_err)``; exact (std_err 0) for a state."""
    if isinstance(source, PureState):
        edges = couplings.edges
        zz = expect_zz_all(source, edges) if edges else np.zeros(0)
        return float(-(zz @ couplings.as_array()) - e0), 0.0
    spins, weights = counts_to_arrays(source)
    if graph is not None and spins.shape[1] != graph.n_sites:
        raise ValueError("bitstring length differs from the site count")
    mean, se = _weighted_mean_se(classical_energies(spins, couplings), weights)
    return mean - e0, se


def problem_energy_state(state: PureState, graph: SiteGraph, couplings: CouplingMap) -> float:
    """``<H_P>`` from the diagonal; slower than ``residual_energy`` but independent of the kernels."""
    return float(-(state.probabilities() @ zz_diagonal(graph, couplings)))
