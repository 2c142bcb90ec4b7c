"""Pure numpy implementation of the state-vector kernels.

This module is the reference and fallback for ``_ckernels``. Both modules
expose the same functions, consume random numbers in the same order and act
in place on a C-contiguous ``complex128`` amplitude vector whose basis index
has bit ``k`` equal to the Z eigenvalue bit of site ``k`` (0 -> +1, 1 -> -1).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

BLOCK = 256


@lru_cache(maxsize=32)
def _bits(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.int8)


def _split(psi: np.ndarray, site: int):
    view = psi.reshape(-1, 2, 1 << site)
    return view[:, 0, :], view[:, 1, :]


def rx(psi: np.ndarray, n: int, site: int, angle: float) -> None:
    c = np.cos(0.5 * angle)
    s = -1j * np.sin(0.5 * angle)
    lo, hi = _split(psi, site)
    a = lo.copy()
    lo *= c
    lo += s * hi
    hi *= c
    hi += s * a


def rx_all(psi: np.ndarray, n: int, angle: float) -> None:
    for site in range(n):
        rx(psi, n, site, angle)


def rzz(psi: np.ndarray, n: int, i: int, j: int, theta: float) -> None:
    par = (_bits(n)[:, i] ^ _bits(n)[:, j]).astype(bool)
    psi[~par] *= np.exp(-0.5j * theta)
    psi[par] *= np.exp(0.5j * theta)


def pauli(psi: np.ndarray, n: int, site: int, kind: int) -> None:
    """Apply I, X, Y or Z (``kind`` 0..3) on one site."""
    if kind == 0:
        return
    lo, hi = _split(psi, site)
    if kind == 3:
        hi *= -1.0
        return
    a = lo.copy()
    if kind == 1:
        lo[...] = hi
        hi[...] = a
    else:
        lo[...] = -1j * hi
        hi[...] = 1j * a


def apply_phase(psi: np.ndarray, pattern: np.ndarray, table: np.ndarray) -> None:
    psi *= table[pattern]


def zz_expectations(psi: np.ndarray, n: int, edge_i: np.ndarray, edge_j: np.ndarray) -> np.ndarray:
    prob = psi.real**2 + psi.imag**2
    bits = _bits(n)
    out = np.empty(len(edge_i))
    for e, (i, j) in enumerate(zip(edge_i, edge_j)):
        par = bits[:, i] ^ bits[:, j]
        out[e] = prob.sum() - 2.0 * prob[par.astype(bool)].sum()
    return out


class _Stream:
    def __init__(self, rng):
        self.rng = rng
        self.buf = rng.random(BLOCK)
        self.pos = 0

    def next(self) -> float:
        if self.pos == BLOCK:
            self.buf = self.rng.random(BLOCK)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return float(u)


def _damp(psi: np.ndarray, n: int, p: float, stream: _Stream) -> None:
    bits = _bits(n)
    keep = np.sqrt(1.0 - p)
    start = 0
    while start < n:
        u = stream.next()
        prob = psi.real**2 + psi.imag**2
        norm0 = prob.sum()
        counts = bits[:, start:].sum(axis=1)
        total = float(prob @ (1.0 - p) ** counts)
        if u * norm0 < total:
            psi *= keep**counts / np.sqrt(total / norm0)
            return
        q = n - 1
        running = np.zeros(len(psi), dtype=np.int64)
        for site in range(start, n):
            running += bits[:, site]
            if u * norm0 >= float(prob @ (1.0 - p) ** running):
                q = site
                break
        psi *= keep ** bits[:, start:q].sum(axis=1)
        lo, hi = _split(psi, q)
        lo[...] = np.sqrt(p) * hi
        hi[...] = 0.0
        psi /= np.sqrt(np.vdot(psi, psi).real)
        start = q + 1


def _relax(psi: np.ndarray, n: int, damp: float, deph: float, stream: _Stream) -> None:
    if deph > 0.0:
        for site in range(n):
            if stream.next() < deph:
                pauli(psi, n, site, 3)
    if damp > 0.0:
        _damp(psi, n, damp, stream)


def trajectory(
    psi: np.ndarray,
    n: int,
    x_angles: np.ndarray,
    tables: np.ndarray,
    patterns: np.ndarray,
    edge_i: np.ndarray,
    edge_j: np.ndarray,
    layer_ptr: np.ndarray,
    p1: float,
    p2: float,
    damp_x: float,
    deph_x: float,
    damp_zz: float,
    deph_zz: float,
    rng,
) -> None:
    """Run one stochastic trajectory of a noisy Trotter anneal in place.

    Per step: the mixer layer, a one-qubit Pauli error per site with
    probability ``p1``, relaxation over the mixer duration, then for each
    color layer the diagonal ZZ phase, a two-qubit Pauli error per edge with
    probability ``p2`` and relaxation over the layer duration.
    """
    stream = _Stream(rng)
    n_colors = len(layer_ptr) - 1
    for m in range(len(x_angles)):
        rx_all(psi, n, x_angles[m])
        if p1 > 0.0:
            for site in range(n):
                if stream.next() < p1:
                    pauli(psi, n, site, 1 + int(stream.next() * 3.0))
        _relax(psi, n, damp_x, deph_x, stream)
        for c in range(n_colors):
            apply_phase(psi, patterns[c], tables[m, c])
            if p2 > 0.0:
                for e in range(layer_ptr[c], layer_ptr[c + 1]):
                    if stream.next() < p2:
                        k = 1 + int(stream.next() * 15.0)
                        pauli(psi, n, int(edge_i[e]), k & 3)
                        pauli(psi, n, int(edge_j[e]), k >> 2)
            _relax(psi, n, damp_zz, deph_zz, stream)
