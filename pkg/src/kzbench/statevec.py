"""Dense state-vector simulation of digitized anneals.

Amplitudes are ``complex128``; basis index bit ``k`` is the Z bit of site
``k`` (0 for sigma_z = +1). Gates follow ``R_G(theta) = exp(-i theta G / 2)``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import _kernels as K
from .errors import ResourceLimitError
from .lattice import CouplingMap, SiteGraph
from .model import AnnealSchedule, TrotterPlan

MAX_SITES = 26  # 2**26 amplitudes = 1 GiB, plus one int32 pattern per color

NORM_TOL = 1e-10


def check_size(n_sites: int) -> None:
    if n_sites < 1:
        raise ValueError("n_sites must be positive")
    if n_sites > MAX_SITES:
        raise ResourceLimitError(f"{n_sites} sites exceeds the state-vector limit of {MAX_SITES}")


@dataclass(eq=False)
class PureState:
    n_sites: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_sites,):
            raise ValueError(f"expected {1 << self.n_sites} amplitudes, got {self.amplitudes.shape}")

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def probabilities(self) -> np.ndarray:
        a = self.amplitudes
        return a.real**2 + a.imag**2

    def copy(self) -> PureState:
        return PureState(self.n_sites, self.amplitudes.copy())


def init_plus(n_sites: int) -> PureState:
    check_size(n_sites)
    dim = 1 << n_sites
    return PureState(n_sites, np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128))


def basis_state(bits: str) -> PureState:
    """Computational basis state; character ``k`` of ``bits`` is site ``k``."""
    n = len(bits)
    check_size(n)
    psi = np.zeros(1 << n, dtype=np.complex128)
    psi[bitstring_to_index(bits)] = 1.0
    return PureState(n, psi)


def bitstring_to_index(bits: str) -> int:
    if any(ch not in "01" for ch in bits):
        raise ValueError(f"not a bitstring: {bits!r}")
    return int(bits[::-1], 2) if bits else 0


def index_to_bitstring(index: int, n_sites: int) -> str:
    return format(index, f"0{n_sites}b")[::-1]


def _check_site(state: PureState, *sites: int) -> None:
    for s in sites:
        if not 0 <= s < state.n_sites:
            raise IndexError(f"site {s} out of range for {state.n_sites} sites")


def apply_rx(state: PureState, site: int, phi: float) -> PureState:
    _check_site(state, site)
    K.rx(state.amplitudes, state.n_sites, site, float(phi))
    return state


def apply_rzz(state: PureState, i: int, j: int, theta: float) -> PureState:
    _check_site(state, i, j)
    if i == j:
        raise ValueError("R_ZZ needs two distinct sites")
    K.rzz(state.amplitudes, state.n_sites, i, j, float(theta))
    return state


# -- compiled plans ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CompiledPlan:
    """Kernel-ready arrays for a :class:`TrotterPlan`.

    Each color layer is diagonal. ``patterns[c, x]`` packs the parities of the
    layer's edges for basis index ``x`` into an integer, and
    ``tables[m, c, p]`` is the layer's phase for step ``m`` and pattern ``p``.
    Edge arrays are listed layer by layer; ``layer_ptr`` delimits layers.
    """

    n_sites: int
    x_angles: np.ndarray
    tables: np.ndarray
    patterns: np.ndarray
    edge_i: np.ndarray
    edge_j: np.ndarray
    layer_ptr: np.ndarray


@lru_cache(maxsize=8)
def _layer_patterns(graph: SiteGraph) -> tuple[np.ndarray, tuple[tuple[int, ...], ...]]:
    check_size(graph.n_sites)
    idx = np.arange(1 << graph.n_sites, dtype=np.int64)
    layers = tuple(tuple(l) for l in graph.layers())
    patterns = np.zeros((len(layers), idx.size), dtype=np.int32)
    for c, edges in enumerate(layers):
        for k, e in enumerate(edges):
            i, j = graph.edges[e]
            patterns[c] |= (((idx >> i) ^ (idx >> j)) & 1).astype(np.int32) << k
    patterns.setflags(write=False)
    return patterns, layers


def compile_plan(plan: TrotterPlan) -> CompiledPlan:
    graph = plan.graph
    patterns, layers = _layer_patterns(graph)
    width = max((len(l) for l in layers), default=0)
    p = np.arange(1 << width)
    tables = np.ones((plan.n_steps, len(layers), 1 << width), dtype=np.complex128)
    for c, edges in enumerate(layers):
        if not edges:
            continue
        # sign of z_i z_j per edge for each pattern value
        signs = 1.0 - 2.0 * ((p[:, None] >> np.arange(len(edges))) & 1)
        phase = plan.zz_angles[:, list(edges)] @ signs.T  # (n_steps, 2**width)
        tables[:, c, :] = np.exp(-0.5j * phase)
    order = [e for l in layers for e in l]
    edges = np.asarray([graph.edges[e] for e in order], dtype=np.int64).reshape(-1, 2)
    ptr = np.cumsum([0] + [len(l) for l in layers]).astype(np.int64)
    return CompiledPlan(
        graph.n_sites,
        np.ascontiguousarray(plan.x_angles, dtype=np.float64),
        tables,
        patterns,
        np.ascontiguousarray(edges[:, 0]),
        np.ascontiguousarray(edges[:, 1]),
        ptr,
    )


def run_trotter_anneal(plan: TrotterPlan, initial: PureState | None = None) -> PureState:
    """Apply the plan's steps ``m = 1..N_t`` to a copy of ``initial`` (|+>^N by default)."""
    n = plan.graph.n_sites
    state = init_plus(n) if initial is None else initial.copy()
    if state.n_sites != n:
        raise ValueError(f"state has {state.n_sites} sites, plan has {n}")
    cp = compile_plan(plan)
    psi = state.amplitudes
    for m in range(plan.n_steps):
        K.rx_all(psi, n, cp.x_angles[m])
        for c in range(cp.patterns.shape[0]):
            K.apply_phase(psi, cp.patterns[c], cp.tables[m, c])
    return state


def zz_diagonal(graph: SiteGraph, couplings: CouplingMap) -> np.ndarray:
    """Diagonal of ``sum_e J_e Z_i Z_j`` over the computational basis."""
    check_size(graph.n_sites)
    idx = np.arange(1 << graph.n_sites, dtype=np.int64)
    out = np.zeros(idx.size)
    for (i, j), J in zip(graph.edges, couplings.values):
        out += J * (1.0 - 2.0 * (((idx >> i) ^ (idx >> j)) & 1))
    return out


def run_reference_anneal(
    graph: SiteGraph,
    couplings: CouplingMap,
    schedule: AnnealSchedule | None = None,
    t_f: float = 10.0,
    fine_dt: float = 0.01,
    initial: PureState | None = None,
) -> PureState:
    """Near-continuum evolution by symmetric splitting at ``fine_dt``.

    Each substep of length ``h`` evaluates the schedule at its midpoint and
    applies half a mixer step, the full diagonal step, then half a mixer step.
    Adjacent half mixer steps are merged.
    """
    if fine_dt > 0.01:
        raise ValueError("the reference evolution requires fine_dt <= 0.01")
    if t_f <= 0:
        raise ValueError("t_f must be positive")
    schedule = schedule or AnnealSchedule()
    n = graph.n_sites
    state = init_plus(n) if initial is None else initial.copy()
    psi = state.amplitudes
    diag = zz_diagonal(graph, couplings)
    n_sub = max(1, math.ceil(t_f / fine_dt - 1e-9))
    h = t_f / n_sub
    a, b = schedule.vectorized((np.arange(n_sub) + 0.5) / n_sub)
    # exp(+i h A X / 2) = R_X(-h A)
    pending = -h * a[0]
    for k in range(n_sub):
        K.rx_all(psi, n, pending)
        psi *= np.exp(1j * h * b[k] * diag)
        pending = -h * a[k] if k + 1 == n_sub else -h * (a[k] + a[k + 1])
    K.rx_all(psi, n, pending)
    return state


# -- observables on states --------------------------------------------------


def expect_zz(state: PureState, edge: tuple[int, int]) -> float:
    i, j = edge
    _check_site(state, i, j)
    ei = np.array([i], dtype=np.int64)
    ej = np.array([j], dtype=np.int64)
    return float(K.zz_expectations(state.amplitudes, state.n_sites, ei, ej)[0])


def expect_zz_all(state: PureState, edges) -> np.ndarray:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return K.zz_expectations(
        state.amplitudes, state.n_sites, np.ascontiguousarray(e[:, 0]), np.ascontiguousarray(e[:, 1])
    )


def expect_x(state: PureState, site: int) -> float:
    _check_site(state, site)
    view = state.amplitudes.reshape(-1, 2, 1 << site)
    return float(2.0 * np.vdot(view[:, 0, :], view[:, 1, :]).real)


def expect_diagonal(state: PureState, diag: np.ndarray) -> float:
    return float(state.probabilities() @ diag)


def sample_indices(state: PureState, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Born-rule samples as basis indices, in ascending order."""
    return sample_from_probabilities(state.probabilities(), shots, rng)


def sample_from_probabilities(prob: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    if shots < 1:
        raise ValueError("shots must be at least 1")
    counts = rng.multinomial(shots, prob / prob.sum())
    return np.repeat(np.arange(prob.size, dtype=np.int64), counts)


def sample_bitstrings(state: PureState, shots: int, rng_seed: int) -> dict[str, int]:
    """Return ``{bitstring: count}`` sorted by bitstring; Philox keyed by ``rng_seed``."""
    rng = np.random.Generator(np.random.Philox(key=int(rng_seed)))
    idx = sample_indices(state, shots, rng)
    values, counts = np.unique(idx, return_counts=True)
    out = {index_to_bitstring(int(v), state.n_sites): int(c) for v, c in zip(values, counts)}
    return dict(sorted(out.items()))


def dump_state(state: PureState, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", state.n_sites))
        fh.write(state.amplitudes.astype("<c16").tobytes())


def load_state(path: str | Path) -> PureState:
    with open(path, "rb") as fh:
        (n,) = struct.unpack("<Q", fh.read(8))
        check_size(n)
        data = np.frombuffer(fh.read(), dtype="<c16")
    return PureState(int(n), data.astype(np.complex128))
