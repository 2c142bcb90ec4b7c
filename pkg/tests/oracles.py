"""Independent dense-matrix constructions used as test oracles."""

from functools import reduce

import numpy as np
from scipy.linalg import expm

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def site_op(op, k, n):
    # basis index bit k is site k, so site k is the k-th Kronecker factor from the right
    factors = [op if q == k else I2 for q in range(n - 1, -1, -1)]
    return reduce(np.kron, factors)


def rx_matrix(phi, k, n):
    return expm(-0.5j * phi * site_op(X, k, n))


def rzz_matrix(theta, i, j, n):
    return expm(-0.5j * theta * site_op(Z, i, n) @ site_op(Z, j, n))


def trotter_unitary(plan):
    g = plan.graph
    n = g.n_sites
    U = np.eye(1 << n, dtype=complex)
    for m in range(plan.n_steps):
        for k in range(n):
            U = rx_matrix(plan.x_angles[m], k, n) @ U
        for layer in g.layers():
            for e in layer:
                i, j = g.edges[e]
                U = rzz_matrix(plan.zz_angles[m, e], i, j, n) @ U
    return U


def plus_state(n):
    return np.full(1 << n, 2 ** (-n / 2), dtype=complex)


def hamiltonian(graph, couplings, s):
    n = graph.n_sites
    H = -(1 - s) * sum(site_op(X, k, n) for k in range(n))
    for (i, j), J in zip(graph.edges, couplings.values):
        H = H - s * J * site_op(Z, i, n) @ site_op(Z, j, n)
    return H
