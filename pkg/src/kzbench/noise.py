"""Quantum-trajectory simulation of noisy Trotter anneals.

Noise per Trotter step, in order:

* the R_X layer, then a Pauli error per site with probability ``e_1q``
  (X, Y or Z uniformly), then relaxation of every site over ``dur_1q``;
* for each color layer: the R_ZZ gates, then a two-qubit Pauli error per gate
  (uniform over the 15 non-identity Paulis), then relaxation of every site
  over the layer duration.

Each R_ZZ is counted as ``native_2q`` native two-qubit gates (default 2, as in
a CNOT-RZ-CNOT decomposition), so its error probability is
``1 - (1 - e_2q)**native_2q`` and its duration ``native_2q * dur_2q``.
Relaxation is amplitude damping with ``1 - exp(-d/T1)`` and pure dephasing,
a Z flip with probability ``(1 - exp(-d/T_phi)) / 2`` where
``1/T_phi = 1/T2 - 1/(2 T1)``. Every site relaxes during every layer, so idle
qubits decohere too. Readout flips each bit with probability ``e_ro``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import reduce
from itertools import product
from typing import Sequence

import numpy as np

from . import _kernels as K
from .errors import ConfigError
from .model import TrotterPlan
from .statevec import compile_plan, index_to_bitstring, init_plus, sample_from_probabilities


@dataclass(frozen=True)
class NoiseModel:
    """Device noise parameters. Times ``t1``/``t2`` in microseconds, durations in nanoseconds."""

    t1: float
    t2: float
    e_1q: float
    e_2q: float
    e_ro: float
    dur_1q: float = 57.0
    dur_2q: float = 533.0
    dur_ro: float = 1400.0
    eta: float = 1.0

    def __post_init__(self):
        if self.t1 <= 0 or self.t2 <= 0:
            raise ConfigError("t1 and t2 must be positive")
        if self.t2 > 2.0 * self.t1 * (1 + 1e-12):
            raise ConfigError(f"unphysical model: t2={self.t2} exceeds 2*t1={2 * self.t1}")
        for name in ("e_1q", "e_2q", "e_ro"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        for name in ("dur_1q", "dur_2q", "dur_ro"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.eta <= 0:
            raise ConfigError("eta must be positive")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> NoiseModel:
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown noise model fields: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in doc.items()})

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def default_sherbrooke_model() -> NoiseModel:
    """Average calibration of a 127-qubit Eagle device."""
    return NoiseModel(t1=266.37, t2=178.71, e_1q=1.25e-3, e_2q=1.10e-2, e_ro=2.41e-2)


def scaled(base: NoiseModel, eta: float) -> NoiseModel:
    """Divide coherence times by ``eta`` and multiply error rates by it (capped at 1)."""
    if not eta > 0:
        raise ConfigError("eta must be positive")
    return replace(
        base,
        t1=base.t1 / eta,
        t2=base.t2 / eta,
        e_1q=min(1.0, base.e_1q * eta),
        e_2q=min(1.0, base.e_2q * eta),
        e_ro=min(1.0, base.e_ro * eta),
        eta=base.eta * eta,
    )


@dataclass(frozen=True)
class LayerRates:
    p1: float
    p2: float
    damp_x: float
    deph_x: float
    damp_zz: float
    deph_zz: float


def layer_rates(model: NoiseModel, native_2q: int = 2) -> LayerRates:
    gamma_phi = 1.0 / model.t2 - 0.5 / model.t1  # 1/us

    def relax(dur_ns: float) -> tuple[float, float]:
        d = dur_ns * 1e-3
        return -math.expm1(-d / model.t1), -0.5 * math.expm1(-gamma_phi * d)

    damp_x, deph_x = relax(model.dur_1q)
    damp_zz, deph_zz = relax(native_2q * model.dur_2q)
    p2 = -math.expm1(native_2q * math.log1p(-model.e_2q)) if model.e_2q < 1 else 1.0
    return LayerRates(model.e_1q, p2, damp_x, deph_x, damp_zz, deph_zz)


@dataclass
class TrajectoryResult:
    n_trajectories: int
    eta: float
    means: dict[str, float]
    std_errs: dict[str, float]
    zz_mean: np.ndarray
    zz_std_err: np.ndarray
    counts: dict[str, int] | None = None

    def mean(self, name: str) -> float:
        return self.means[name]

    def std_err(self, name: str) -> float:
        return self.std_errs[name]


def _mean_se(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = x.shape[0]
    mean = x.mean(axis=0)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, x.std(axis=0, ddof=1) / math.sqrt(n)


def _run_chunk(args) -> tuple[np.ndarray, np.ndarray | None]:
    cp, rates, seeds, shots, e_ro, edges = args
    n = cp.n_sites
    zz = np.empty((len(seeds), len(edges)))
    samples = [] if shots else None
    ei = np.ascontiguousarray(edges[:, 0])
    ej = np.ascontiguousarray(edges[:, 1])
    for t, seed in enumerate(seeds):
        rng = np.random.Generator(np.random.Philox(seed))
        psi = init_plus(n).amplitudes
        K.trajectory(
            psi, n, cp.x_angles, cp.tables, cp.patterns, cp.edge_i, cp.edge_j, cp.layer_ptr,
            rates.p1, rates.p2, rates.damp_x, rates.deph_x, rates.damp_zz, rates.deph_zz, rng,
        )
        if shots:
            idx = sample_from_probabilities(psi.real**2 + psi.imag**2, shots, rng)
            idx = idx ^ _flip_masks(rng, len(idx), n, e_ro)
            z = 1 - 2 * ((idx[:, None] >> ei) & 1)
            zz[t] = (z * (1 - 2 * ((idx[:, None] >> ej) & 1))).mean(axis=0)
            samples.append(idx)
        else:
            zz[t] = K.zz_expectations(psi, n, ei, ej)
    return zz, (np.concatenate(samples) if shots else None)


def _flip_masks(rng: np.random.Generator, shots: int, n: int, e_ro: float) -> np.ndarray:
    if e_ro <= 0.0:
        return np.zeros(shots, dtype=np.int64)
    flips = rng.random((shots, n)) < e_ro
    return flips.astype(np.int64) @ (np.int64(1) << np.arange(n, dtype=np.int64))


def run_noisy_anneal(
    plan: TrotterPlan,
    model: NoiseModel,
    n_traj: int,
    shots_per_traj: int = 0,
    rng_seed: int | Sequence[int] = 0,
    *,
    mitigate_readout: bool = False,
    native_2q: int = 2,
    workers: int = 1,
    keep_counts: bool = False,
) -> TrajectoryResult:
    """Average observables over ``n_traj`` stochastic trajectories.

    With ``shots_per_traj == 0`` each trajectory contributes exact ``<Z_i Z_j>``
    values and readout error enters as the factor ``(1 - 2 e_ro)**2``. With
    shots, each trajectory is sampled and every bit is flipped with
    probability ``e_ro``. ``mitigate_readout`` rescales the two-point values by
    ``(1 - 2 e_ro)**-2``. Trajectory ``k`` draws from
    ``Philox(SeedSequence(rng_seed).spawn(n_traj)[k])`` whatever ``workers`` is.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    if shots_per_traj < 0:
        raise ValueError("shots_per_traj must be non-negative")
    if mitigate_readout and model.e_ro >= 0.5:
        raise ValueError("readout mitigation needs e_ro < 0.5")
    graph = plan.graph
    if graph.n_edges == 0:
        raise ValueError("defect density needs at least one edge")
    cp = compile_plan(plan)
    rates = layer_rates(model, native_2q)
    edges = np.asarray(graph.edges, dtype=np.int64)
    seeds = np.random.SeedSequence(rng_seed).spawn(n_traj)
    n_chunks = max(1, min(int(workers), n_traj))
    bounds = np.linspace(0, n_traj, n_chunks + 1).astype(int)
    jobs = [
        (cp, rates, seeds[lo:hi], shots_per_traj, model.e_ro, edges)
        for lo, hi in zip(bounds[:-1], bounds[1:])
    ]
    if n_chunks == 1:
        parts = [_run_chunk(jobs[0])]
    else:
        with ProcessPoolExecutor(n_chunks) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    zz = np.concatenate([p[0] for p in parts])
    if not shots_per_traj:
        zz = zz * (1.0 - 2.0 * model.e_ro) ** 2
    if mitigate_readout:
        zz = zz / (1.0 - 2.0 * model.e_ro) ** 2
    couplings = plan.couplings.as_array()
    per_traj = {
        "n_def": 0.5 * (1.0 - zz).mean(axis=1),
        "energy": -(zz @ couplings),
    }
    means, ses = {}, {}
    for name, values in per_traj.items():
        m, s = _mean_se(values)
        means[name], ses[name] = float(m), float(s)
    zz_mean, zz_se = _mean_se(zz)
    counts = None
    if keep_counts and shots_per_traj:
        idx = np.concatenate([p[1] for p in parts])
        values, c = np.unique(idx, return_counts=True)
        counts = {index_to_bitstring(int(v), graph.n_sites): int(k) for v, k in zip(values, c)}
        counts = dict(sorted(counts.items()))
    return TrajectoryResult(n_traj, model.eta, means, ses, zz_mean, zz_se, counts)


# -- readout ------------------------------------------------------------------


def apply_readout_error(counts: dict[str, int], e_ro: float, rng: np.random.Generator) -> dict[str, int]:
    """Flip every measured bit independently with probability ``e_ro``."""
    if not 0.0 <= e_ro <= 1.0:
        raise ValueError("e_ro must lie in [0, 1]")
    if e_ro == 0.0:
        return dict(counts)
    out: dict[str, int] = {}
    for bits, c in sorted(counts.items()):
        arr = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
        flips = rng.random((c, len(bits))) < e_ro
        for row in (arr[None, :] ^ flips).astype(np.uint8):
            key = (row + ord("0")).tobytes().decode()
            out[key] = out.get(key, 0) + 1
    return dict(sorted(out.items()))


def mitigate_readout_expectation(
    counts: dict[str, int],
    e_ro: float,
    terms: list[tuple[int, ...]] | None = None,
) -> np.ndarray:
    """Readout-corrected ``<prod_{k in term} Z_k>`` for each term.

    The raw estimate of a weight-``w`` term is divided by ``(1 - 2 e_ro)**w``,
    the inverse of the tensor product of symmetric confusion matrices.
    Default terms are the single sites.
    """
    if not 0.0 <= e_ro < 0.5:
        raise ValueError("readout mitigation needs 0 <= e_ro < 0.5")
    if not counts:
        raise ValueError("empty counts")
    n = len(next(iter(counts)))
    if terms is None:
        terms = [(k,) for k in range(n)]
    bits = np.array([[ch == "1" for ch in b] for b in counts], dtype=np.int8)
    weights = np.array(list(counts.values()), dtype=float)
    z = 1 - 2 * bits
    out = np.empty(len(terms))
    for t, term in enumerate(terms):
        prod = np.prod(z[:, list(term)], axis=1) if term else np.ones(len(weights))
        out[t] = (weights @ prod) / weights.sum() / (1.0 - 2.0 * e_ro) ** len(term)
    return out


# -- density-matrix oracle ----------------------------------------------------

_PAULIS = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def _embed(ops: dict[int, np.ndarray], n: int) -> np.ndarray:
    # site k is bit k of the basis index, i.e. the k-th factor from the right
    return reduce(np.kron, [ops.get(k, _PAULIS[0]) for k in reversed(range(n))])


def density_matrix_anneal(plan: TrotterPlan, model: NoiseModel, native_2q: int = 2) -> np.ndarray:
    """Exact mixed-state evolution with Kraus maps; returns the final ``rho``.

    Intended as an oracle for the trajectory sampler on at most 3 sites.
    """
    n = plan.graph.n_sites
    if n > 3:
        raise ValueError("the density-matrix oracle is limited to 3 sites")
    rates = layer_rates(model, native_2q)
    dim = 1 << n
    psi = np.full(dim, dim**-0.5, dtype=complex)
    rho = np.outer(psi, psi.conj())
    X, Z = _PAULIS[1], _PAULIS[3]

    def pauli_1q(rho, p):
        for k in range(n):
            ops = [_embed({k: P}, n) for P in _PAULIS[1:]]
            rho = (1 - p) * rho + p / 3 * sum(O @ rho @ O.conj().T for O in ops)
        return rho

    def pauli_2q(rho, i, j, p):
        ops = [_embed({i: _PAULIS[a], j: _PAULIS[b]}, n) for a, b in product(range(4), repeat=2)][1:]
        return (1 - p) * rho + p / 15 * sum(O @ rho @ O.conj().T for O in ops)

    def relax(rho, damp, deph):
        for k in range(n):
            Zk = _embed({k: Z}, n)
            rho = (1 - deph) * rho + deph * Zk @ rho @ Zk
        k0 = np.array([[1, 0], [0, math.sqrt(1 - damp)]], dtype=complex)
        k1 = np.array([[0, math.sqrt(damp)], [0, 0]], dtype=complex)
        for k in range(n):
            A, B = _embed({k: k0}, n), _embed({k: k1}, n)
            rho = A @ rho @ A.conj().T + B @ rho @ B.conj().T
        return rho

    layers = plan.graph.layers()
    for m in range(plan.n_steps):
        phi = plan.x_angles[m]
        rx = math.cos(phi / 2) * _PAULIS[0] - 1j * math.sin(phi / 2) * X
        U = _embed({k: rx for k in range(n)}, n)
        rho = U @ rho @ U.conj().T
        rho = pauli_1q(rho, rates.p1)
        rho = relax(rho, rates.damp_x, rates.deph_x)
        for edges in layers:
            for e in edges:
                i, j = plan.graph.edges[e]
                theta = plan.zz_angles[m, e]
                zz = np.diag(_embed({i: Z, j: Z}, n)).real
                D = np.diag(np.exp(-0.5j * theta * zz))
                rho = D @ rho @ D.conj().T
            for e in edges:
                rho = pauli_2q(rho, *plan.graph.edges[e], rates.p2)
            rho = relax(rho, rates.damp_zz, rates.deph_zz)
    return rho


def density_matrix_zz(rho: np.ndarray, n: int, edges, e_ro: float = 0.0) -> np.ndarray:
    """``Tr(rho Z_i Z_j)`` per edge, including the readout factor ``(1 - 2 e_ro)**2``."""
    Z = _PAULIS[3]
    out = [np.trace(rho @ _embed({i: Z, j: Z}, n)).real for i, j in edges]
    return np.asarray(out) * (1.0 - 2.0 * e_ro) ** 2


__all__ = [
    "LayerRates",
    "NoiseModel",
    "TrajectoryResult",
    "apply_readout_error",
    "default_sherbrooke_model",
    "density_matrix_anneal",
    "density_matrix_zz",
    "layer_rates",
    "mitigate_readout_expectation",
    "run_noisy_anneal",
    "scaled",
]
