import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kzbench.errors import ConfigError
from kzbench.lattice import assign_couplings, open_chain, periodic_chain
from kzbench.model import build_trotter_plan
from kzbench.noise import (
    NoiseModel,
    apply_readout_error,
    default_sherbrooke_model,
    density_matrix_anneal,
    density_matrix_zz,
    layer_rates,
    mitigate_readout_expectation,
    run_noisy_anneal,
    scaled,
)
from kzbench.observables import defect_density_state
from kzbench.statevec import run_trotter_anneal

BASE = default_sherbrooke_model()


def test_default_model():
    assert BASE.t1 == 266.37 and BASE.t2 == 178.71
    assert BASE.e_1q == 1.25e-3 and BASE.e_2q == 0.0110 and BASE.e_ro == 2.41e-2
    assert BASE.dur_2q == 533.0 and BASE.eta == 1.0
    assert scaled(BASE, 1.0) == BASE


def test_scaling_examples():
    assert scaled(BASE, 10).e_2q == pytest.approx(0.110)
    assert scaled(BASE, 0.01).t1 == pytest.approx(26637.0)
    m = scaled(BASE, 100)
    assert m.e_2q == 1.0 and m.dur_2q == BASE.dur_2q
    with pytest.raises(ConfigError):
        scaled(BASE, 0)


@given(st.floats(1e-4, 40))
def test_scaling_invariants(eta):
    m = scaled(BASE, eta)
    assert m.t1 == pytest.approx(BASE.t1 / eta) and m.t2 == pytest.approx(BASE.t2 / eta)
    assert m.t2 <= 2 * m.t1
    for name in ("e_1q", "e_2q", "e_ro"):
        assert getattr(m, name) == pytest.approx(min(1.0, getattr(BASE, name) * eta))
    r = layer_rates(m)
    assert all(0 <= v <= 1 for v in vars(r).values())


def test_model_validation_and_json():
    with pytest.raises(ConfigError):
        NoiseModel(t1=10, t2=25, e_1q=0, e_2q=0, e_ro=0)
    with pytest.raises(ConfigError):
        NoiseModel(t1=10, t2=5, e_1q=1.5, e_2q=0, e_ro=0)
    doc = json.loads(BASE.dumps())
    assert set(doc) == {"t1", "t2", "e_1q", "e_2q", "e_ro", "dur_1q", "dur_2q", "dur_ro", "eta"}
    assert NoiseModel.from_json(doc) == BASE
    with pytest.raises(ConfigError):
        NoiseModel.from_json({**doc, "bogus": 1})


def test_zero_rates_match_statevector():
    g = periodic_chain(6)
    J = assign_couplings(g, "disordered", seed=3)
    plan = build_trotter_plan(g, J, dt=0.5, n_steps=6)
    quiet = NoiseModel(t1=1e300, t2=1e300, e_1q=0, e_2q=0, e_ro=0)
    exact = defect_density_state(run_trotter_anneal(plan), g)
    for n_traj in (1, 7):
        res = run_noisy_anneal(plan, quiet, n_traj, rng_seed=5)
        assert res.mean("n_def") == pytest.approx(exact, abs=1e-12)
        assert res.std_err("n_def") == pytest.approx(0, abs=1e-12)


def test_vanishing_eta_converges_to_statevector():
    g = periodic_chain(6)
    plan = build_trotter_plan(g, assign_couplings(g), dt=0.5, n_steps=8)
    exact = defect_density_state(run_trotter_anneal(plan), g)
    res = run_noisy_anneal(plan, scaled(BASE, 1e-6), 20, rng_seed=1, mitigate_readout=True)
    assert res.mean("n_def") == pytest.approx(exact, abs=1e-6)


@pytest.mark.parametrize("graph", [open_chain(2), periodic_chain(3)])
def test_trajectories_match_density_matrix(graph):
    J = assign_couplings(graph, "disordered", seed=7)
    plan = build_trotter_plan(graph, J, dt=0.7, n_steps=4)
    model = scaled(BASE, 20)
    rho = density_matrix_anneal(plan, model)
    assert np.trace(rho).real == pytest.approx(1, abs=1e-12)
    assert np.allclose(rho, rho.conj().T)
    assert np.linalg.eigvalsh(rho).min() > -1e-12
    want = density_matrix_zz(rho, graph.n_sites, graph.edges, model.e_ro)
    res = run_noisy_anneal(plan, model, 10_000, rng_seed=11)
    assert np.all(np.abs(res.zz_mean - want) <= 5 * res.zz_std_err + 1e-12)


def test_workers_do_not_change_results():
    g = periodic_chain(5)
    plan = build_trotter_plan(g, assign_couplings(g), dt=0.5, n_steps=5)
    model = scaled(BASE, 5)
    a = run_noisy_anneal(plan, model, 12, shots_per_traj=10, rng_seed=[3, 4], keep_counts=True)
    b = run_noisy_anneal(plan, model, 12, shots_per_traj=10, rng_seed=[3, 4], keep_counts=True, workers=3)
    assert a.means == b.means and a.counts == b.counts
    assert sum(a.counts.values()) == 120
    assert np.array_equal(a.zz_mean, b.zz_mean)


def test_result_ranges():
    g = periodic_chain(4)
    plan = build_trotter_plan(g, assign_couplings(g), dt=0.5, n_steps=3)
    res = run_noisy_anneal(plan, scaled(BASE, 10), 30, shots_per_traj=4, rng_seed=0)
    assert 0 <= res.mean("n_def") <= 1
    assert all(v >= 0 for v in res.std_errs.values())
    assert res.eta == 10


def test_readout_identity_and_determinism():
    counts = {"0101": 30, "1111": 2}
    assert apply_readout_error(counts, 0.0, np.random.default_rng(0)) == counts
    assert np.allclose(mitigate_readout_expectation(counts, 0.0), [28 / 32, -1, 28 / 32, -1])
    a = apply_readout_error(counts, 0.2, np.random.default_rng(4))
    assert a == apply_readout_error(counts, 0.2, np.random.default_rng(4))
    assert sum(a.values()) == 32
    with pytest.raises(ValueError):
        mitigate_readout_expectation(counts, 0.5)


def test_readout_single_site_exact_enumeration():
    e = 0.1
    # exhaustive over the flip pattern of one bit: <Z> = (1 - e) * 1 + e * (-1)
    expected = sum(p * z for p, z in ((1 - e, 1), (e, -1)))
    assert expected == pytest.approx(0.8)
    rng = np.random.default_rng(0)
    noisy = apply_readout_error({"0": 200_000}, e, rng)
    raw = mitigate_readout_expectation(noisy, 0.0)[0]
    assert raw == pytest.approx(0.8, abs=4 * np.sqrt(1 / 200_000))
    assert mitigate_readout_expectation(noisy, e)[0] == pytest.approx(1.0, abs=5 * np.sqrt(1 / 200_000) / 0.8)


@given(st.floats(0, 0.49), st.sampled_from(["00", "01", "10", "11"]))
def test_deterministic_zz_recovery(e, bits):
    # channel expectation for one bitstring, by enumerating all four flip patterns
    z = np.array([1 - 2 * int(c) for c in bits])
    channel = 0.0
    for flips in itertools.product((0, 1), repeat=2):
        p = np.prod([e if f else 1 - e for f in flips])
        channel += p * np.prod(z * (1 - 2 * np.array(flips)))
    assert channel == pytest.approx(z.prod() * (1 - 2 * e) ** 2)
    recovered = channel / (1 - 2 * e) ** 2
    assert recovered == pytest.approx(z.prod())
    assert mitigate_readout_expectation({bits: 3}, e, [(0, 1)])[0] == pytest.approx(z.prod() / (1 - 2 * e) ** 2)


def test_trajectory_norm():
    from kzbench import _kernels as K
    from kzbench.statevec import compile_plan, init_plus

    g = periodic_chain(6)
    plan = build_trotter_plan(g, assign_couplings(g), dt=0.5, n_steps=10)
    cp = compile_plan(plan)
    r = layer_rates(scaled(BASE, 40))
    for seed in range(20):
        psi = init_plus(6).amplitudes
        K.trajectory(psi, 6, cp.x_angles, cp.tables, cp.patterns, cp.edge_i, cp.edge_j, cp.layer_ptr,
                     r.p1, r.p2, r.damp_x, r.deph_x, r.damp_zz, r.deph_zz,
                     np.random.Generator(np.random.Philox(seed)))
        assert abs(np.linalg.norm(psi) - 1) < 1e-8
