"""Ground-truth oracles: classical ground states and spectra of H(s).

``H(s) = -A(s) sum_k X_k - B(s) sum_e J_e Z_i Z_j`` commutes with the parity
``P = prod_k X_k``. Spectra are computed inside the two parity sectors, in the
basis ``(|x> +- |~x>) / sqrt(2)`` where ``x`` has its top bit clear and ``~x``
is its bitwise complement, so parity labels are exact by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ResourceLimitError
from .lattice import CouplingMap, SiteGraph
from .model import AnnealSchedule
from .statevec import index_to_bitstring, zz_diagonal

MAX_BRUTE_FORCE = 24
MAX_SPECTRUM = 14
DENSE_SECTOR = 512  # sector dimension up to which a dense eigensolver is used

_CHUNK = 1 << 20


def brute_force_ground(couplings: CouplingMap, graph: SiteGraph, tol: float = 1e-9) -> tuple[float, list[str]]:
    """Exhaustive minimum of ``-sum J s_i s_j``; returns ``(e0, sorted minimizers)``."""
    n = graph.n_sites
    if n > MAX_BRUTE_FORCE:
        raise ResourceLimitError(f"brute force limited to {MAX_BRUTE_FORCE} sites, got {n}")
    edges = np.asarray(graph.edges, dtype=np.int64).reshape(-1, 2)
    J = couplings.as_array()
    best = math.inf
    argmin: list[int] = []
    for start in range(0, 1 << n, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, 1 << n), dtype=np.int64)
        par = ((idx[:, None] >> edges[:, 0]) ^ (idx[:, None] >> edges[:, 1])) & 1
        energy = -((1.0 - 2.0 * par) @ J)
        low = energy.min()
        scale = tol * max(1.0, abs(low))
        if low < best - scale:
            best = float(low)
            argmin = []
        if low <= best + scale:
            argmin.extend(int(i) for i in idx[energy <= best + scale])
    return best, sorted(index_to_bitstring(i, n) for i in argmin)


@dataclass(frozen=True)
class SpectrumSlice:
    s: float
    eigenvalues: tuple[float, ...]
    parities: tuple[int, ...]
    relative: bool = False

    def __post_init__(self):
        if any(b < a - 1e-12 for a, b in zip(self.eigenvalues, self.eigenvalues[1:])):
            raise ValueError("eigenvalues must be ascending")
        if any(p not in (1, -1) for p in self.parities):
            raise ValueError("parities must be +1 or -1")

    def gap(self, parity: int | None = None) -> float:
        """First excitation energy, optionally within one parity sector."""
        levels = [e for e, p in zip(self.eigenvalues, self.parities) if parity is None or p == parity]
        return levels[1] - levels[0]


def _sector_parts(graph: SiteGraph, couplings: CouplingMap, sign: int):
    """Diagonal and off-diagonal pieces of the sector Hamiltonian at A = B = 1."""
    n = graph.n_sites
    half = 1 << (n - 1)
    full = (1 << n) - 1
    reps = np.arange(half, dtype=np.int64)
    diag = zz_diagonal(graph, couplings)[:half]
    rows, cols, vals = [], [], []
    for k in range(n):
        if k < n - 1:
            target = reps ^ (1 << k)
            val = np.ones(half)
        else:
            # flipping the top bit leaves the representative set; map back through the complement
            target = reps ^ (full ^ (1 << k))
            val = np.full(half, float(sign))
        rows.append(reps)
        cols.append(target)
        vals.append(val)
    mix = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(half, half)
    )
    return diag, mix


def check_spectrum_size(n: int) -> None:
    if n > MAX_SPECTRUM:
        raise ResourceLimitError(f"spectra limited to {MAX_SPECTRUM} sites, got {n}")


def _lowest(diag: np.ndarray, mix, a: float, b: float, k: int) -> np.ndarray:
    dim = diag.size
    k = min(k, dim)
    if a == 0.0:
        return np.sort(-b * diag)[:k]
    h = (-a) * mix - b * sp.diags(diag)
    if dim <= DENSE_SECTOR or k >= dim - 1:
        return scipy.linalg.eigvalsh(h.toarray())[:k]
    vals = spla.eigsh(h.tocsc(), k=k, which="SA", tol=1e-12, v0=np.ones(dim), return_eigenvectors=False)
    return np.sort(vals)


class SectorHamiltonian:
    """Parity-sector blocks of ``H(s)`` for one instance, reusable across ``s``."""

    def __init__(self, graph: SiteGraph, couplings: CouplingMap, schedule: AnnealSchedule | None = None):
        check_spectrum_size(graph.n_sites)
        self.graph = graph
        self.schedule = schedule or AnnealSchedule()
        self.parts = {sign: _sector_parts(graph, couplings, sign) for sign in (1, -1)}

    def lowest(self, s: float, k: int, parity: int) -> np.ndarray:
        a, b = self.schedule.at(s)
        diag, mix = self.parts[parity]
        return _lowest(diag, mix, a, b, k)

    def matrix(self, s: float, parity: int) -> np.ndarray:
        a, b = self.schedule.at(s)
        diag, mix = self.parts[parity]
        return ((-a) * mix - b * sp.diags(diag)).toarray()


def spectrum_at(
    graph: SiteGraph,
    couplings: CouplingMap,
    s: float,
    k: int = 4,
    *,
    relative: bool = False,
    schedule: AnnealSchedule | None = None,
) -> SpectrumSlice:
    """Lowest ``k`` levels of ``H(s)`` with parity labels.

    Ties between sectors list the even level first. With ``relative`` the
    energies are measured from the ground energy.
    """
    n = graph.n_sites
    if k < 1 or k > (1 << n):
        raise ValueError(f"k must lie in [1, {1 << n}]")
    ham = SectorHamiltonian(graph, couplings, schedule)
    levels = [(float(e), 1) for e in ham.lowest(s, k, 1)] + [(float(e), -1) for e in ham.lowest(s, k, -1)]
    levels.sort(key=lambda t: (t[0], -t[1]))
    levels = levels[:k]
    e0 = levels[0][0] if relative else 0.0
    return SpectrumSlice(float(s), tuple(e - e0 for e, _ in levels), tuple(p for _, p in levels), relative)


def dense_hamiltonian(graph: SiteGraph, couplings: CouplingMap, s: float, schedule: AnnealSchedule | None = None) -> np.ndarray:
    """Full ``2^N x 2^N`` matrix of ``H(s)``, for tests on small systems."""
    n = graph.n_sites
    if n > 12:
        raise ResourceLimitError("dense Hamiltonian limited to 12 sites")
    a, b = (schedule or AnnealSchedule()).at(s)
    dim = 1 << n
    h = np.diag(-b * zz_diagonal(graph, couplings)).astype(float)
    idx = np.arange(dim)
    for k in range(n):
        h[idx ^ (1 << k), idx] -= a
    return h


def parity_operator(n_sites: int) -> np.ndarray:
    dim = 1 << n_sites
    p = np.zeros((dim, dim))
    idx = np.arange(dim)
    p[idx ^ (dim - 1), idx] = 1.0
    return p


def parity_gap(ham: SectorHamiltonian, s: float) -> float:
    """``E_1 - E_0`` inside the even sector, which holds the ground state."""
    e = ham.lowest(s, 2, 1)
    return float(e[1] - e[0])


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def min_parity_gap(
    graph: SiteGraph,
    couplings: CouplingMap,
    s_grid: np.ndarray | None = None,
    *,
    refine: bool = True,
    tol: float = 1e-4,
    schedule: AnnealSchedule | None = None,
) -> tuple[float, float]:
    """Minimum even-sector gap over ``s``; returns ``(gap, s_star)``.

    The coarse grid (101 points on [0, 1] by default) is refined once by a
    golden-section search between the neighbours of the coarse minimum.
    """
    ham = SectorHamiltonian(graph, couplings, schedule)
    grid = np.linspace(0.0, 1.0, 101) if s_grid is None else np.asarray(s_grid, dtype=float)
    if grid.size < 1 or grid.min() < 0 or grid.max() > 1:
        raise ValueError("s_grid must lie in [0, 1]")
    gaps = np.array([parity_gap(ham, s) for s in grid])
    i = int(np.argmin(gaps))
    best_s, best = float(grid[i]), float(gaps[i])
    if not refine or grid.size < 3:
        return best, best_s
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, grid.size - 1)])
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = parity_gap(ham, c), parity_gap(ham, d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = parity_gap(ham, c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = parity_gap(ham, d)
    for s, g in ((c, fc), (d, fd)):
        if g < best:
            best, best_s = g, s
    return float(best), float(best_s)
