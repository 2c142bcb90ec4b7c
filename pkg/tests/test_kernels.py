import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import kzbench._kernels as K
from kzbench._kernels import _pykernels as P
from kzbench.lattice import assign_couplings, heavy_hex, periodic_chain
from kzbench.model import build_trotter_plan
from kzbench.noise import default_sherbrooke_model, layer_rates, scaled
from kzbench.statevec import compile_plan, init_plus

try:
    from kzbench._kernels import _ckernels as CK
except ImportError:  # pragma: no cover
    CK = None

needs_c = pytest.mark.skipif(CK is None, reason="compiled kernels not built")


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return psi / np.linalg.norm(psi)


def test_backend_selected():
    assert K.BACKEND in ("cython", "python")


@needs_c
@given(st.integers(1, 8), st.integers(0, 10**6), st.floats(-7, 7))
def test_gates_agree(n, seed, angle):
    psi = random_state(n, seed)
    rng = np.random.default_rng(seed)
    site = int(rng.integers(n))
    for mod_a, mod_b in ((P, CK),):
        a, b = psi.copy(), psi.copy()
        mod_a.rx(a, n, site, angle)
        mod_b.rx(b, n, site, angle)
        assert np.allclose(a, b, atol=1e-13)
        for kind in range(4):
            mod_a.pauli(a, n, site, kind)
            mod_b.pauli(b, n, site, kind)
        assert np.allclose(a, b, atol=1e-13)
        if n >= 2:
            i, j = sorted(rng.choice(n, 2, replace=False))
            mod_a.rzz(a, n, int(i), int(j), angle)
            mod_b.rzz(b, n, int(i), int(j), angle)
            assert np.allclose(a, b, atol=1e-13)
            ei = np.array([i], dtype=np.int64)
            ej = np.array([j], dtype=np.int64)
            assert np.allclose(mod_a.zz_expectations(a, n, ei, ej), mod_b.zz_expectations(b, n, ei, ej), atol=1e-13)


@needs_c
@pytest.mark.parametrize("graph", [periodic_chain(6), heavy_hex(1, 1)])
@pytest.mark.parametrize("eta", [1.0, 30.0])
def test_noisy_trajectories_agree(graph, eta):
    J = assign_couplings(graph, "disordered", seed=4)
    plan = build_trotter_plan(graph, J, dt=0.6, n_steps=7)
    cp = compile_plan(plan)
    r = layer_rates(scaled(default_sherbrooke_model(), eta))
    args = (cp.x_angles, cp.tables, cp.patterns, cp.edge_i, cp.edge_j, cp.layer_ptr,
            r.p1, r.p2, r.damp_x, r.deph_x, r.damp_zz, r.deph_zz)
    for seed in range(5):
        a = init_plus(graph.n_sites).amplitudes
        b = a.copy()
        ra = np.random.Generator(np.random.Philox(seed))
        rb = np.random.Generator(np.random.Philox(seed))
        P.trajectory(a, graph.n_sites, *args, ra)
        CK.trajectory(b, graph.n_sites, *args, rb)
        assert np.allclose(a, b, atol=1e-10)
        assert abs(np.linalg.norm(a) - 1) < 1e-8
        # both backends consumed the same random numbers
        assert ra.random() == rb.random()
