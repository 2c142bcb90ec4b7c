import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kzbench.errors import UndefinedObservableError
from kzbench.exact import brute_force_ground
from kzbench.lattice import CouplingMap, assign_couplings, heavy_hex, open_chain, periodic_chain
from kzbench.model import build_trotter_plan
from kzbench.observables import (
    DefectSeriesPoint,
    classical_energy,
    defect_density_samples,
    defect_density_state,
    kink_kink,
    problem_energy_state,
    residual_energy,
)
from kzbench.statevec import PureState, basis_state, init_plus, run_trotter_anneal, sample_bitstrings


def flip(bits: str) -> str:
    return bits.translate(str.maketrans("01", "10"))


def test_defect_density_state_examples():
    assert defect_density_state(init_plus(6), periodic_chain(6)) == pytest.approx(0.5)
    assert defect_density_state(basis_state("000000"), periodic_chain(6)) == 0
    assert defect_density_state(basis_state("00011"), open_chain(5)) == pytest.approx(0.25)
    from kzbench.lattice import Geometry, SiteGraph

    with pytest.raises(UndefinedObservableError):
        defect_density_state(init_plus(1), SiteGraph(1, (), Geometry.OPEN_CHAIN))


def test_defect_density_samples_examples():
    assert defect_density_samples({"0000": 50}, periodic_chain(4)) == (0.0, 0.0)
    mean, se = defect_density_samples({"0011": 1, "0000": 1}, open_chain(4))
    assert mean == pytest.approx(1 / 6)
    assert se == pytest.approx(np.std([1 / 3, 0], ddof=1) / np.sqrt(2))
    with pytest.raises(ValueError):
        defect_density_samples({}, open_chain(4))


@pytest.mark.parametrize("seed", range(3))
def test_sampling_consistency(seed):
    g = heavy_hex(1, 1)
    rng = np.random.default_rng(seed)
    amp = rng.normal(size=1 << g.n_sites) + 1j * rng.normal(size=1 << g.n_sites)
    state = PureState(g.n_sites, amp / np.linalg.norm(amp))
    exact = defect_density_state(state, g)
    mean, se = defect_density_samples(sample_bitstrings(state, 20_000, seed), g)
    assert abs(mean - exact) < 4 * se


def test_series_point_validation():
    DefectSeriesPoint(1.0, 2, 0.3, 0.01)
    with pytest.raises(ValueError):
        DefectSeriesPoint(1.0, 2, 1.3)
    with pytest.raises(ValueError):
        DefectSeriesPoint(1.0, 2, 0.3, -1)


def test_kink_kink_hand_example():
    # kinks on the second and fourth of five edges
    out = kink_kink({"001100": 1}, open_chain(6), 3)
    k = np.array([0, 1, 0, 1, 0])
    n = k.mean()
    c2 = np.mean([(k[i] * k[i + 2] - n**2) / n**2 for i in range(3)])
    assert out[1].r == 2 and out[1].c_kk == pytest.approx(c2)
    assert c2 == pytest.approx(13 / 12)
    assert out[0].xi == pytest.approx(2.5) and out[1].r_over_xi == pytest.approx(0.8)


def test_kink_kink_independent_coins():
    # on an open chain every kink pattern is reachable, so kinks can be independent coins
    rng = np.random.default_rng(0)
    g = open_chain(11)
    spins = np.cumsum(rng.random((40_000, 10)) < 0.3, axis=1) % 2
    rows = np.hstack([np.zeros((40_000, 1), dtype=int), spins])
    counts: dict[str, int] = {}
    for row in rows:
        key = "".join(map(str, row))
        counts[key] = counts.get(key, 0) + 1
    for c in kink_kink(counts, g, 5):
        assert abs(c.c_kk) < 0.05


@given(st.lists(st.text("01", min_size=8, max_size=8), min_size=1, max_size=20), st.integers(1, 7))
def test_kink_kink_flip_and_scale_invariance(strings, r_max):
    counts: dict[str, int] = {}
    for s in strings:
        counts[s] = counts.get(s, 0) + 1
    g = periodic_chain(8)
    try:
        base = kink_kink(counts, g, r_max)
    except UndefinedObservableError:
        assert all(len(set(s)) == 1 for s in strings)
        return
    flipped = kink_kink({flip(s): c for s, c in counts.items()}, g, r_max)
    doubled = kink_kink(counts, g, r_max, scale=2.0)
    for a, b, c in zip(base, flipped, doubled):
        assert a.c_kk == pytest.approx(b.c_kk) and a.c_kk == pytest.approx(c.c_kk)


def test_kink_kink_errors():
    with pytest.raises(UndefinedObservableError):
        kink_kink({"0000": 3}, periodic_chain(4), 2)
    with pytest.raises(ValueError):
        kink_kink({"0110": 3}, periodic_chain(4), 4)
    with pytest.raises(ValueError):
        kink_kink({"0" * 12: 1}, heavy_hex(1, 1), 1)


def test_classical_energy_examples():
    J = CouplingMap(((0, 1), (1, 2)), (1.0, -1.0))
    assert classical_energy("110", J) == -2
    assert min(classical_energy("".join(b), J) for b in itertools.product("01", repeat=3)) == -2
    ring = assign_couplings(periodic_chain(4))
    assert classical_energy("0000", ring) == -4
    with pytest.raises(ValueError):
        classical_energy("00", J)
    with pytest.raises(ValueError):
        classical_energy("0000", J, n_sites=3)


@given(st.text("01", min_size=7, max_size=7), st.integers(0, 6))
def test_single_flip_changes_energy_by_2J_per_edge(bits, k):
    g = open_chain(7)
    J = assign_couplings(g)
    new = bits[:k] + flip(bits[k]) + bits[k + 1 :]
    touched = [e for e in g.edges if k in e]
    s = [1 - 2 * int(c) for c in bits]
    expected = sum(2 * s[i] * s[j] for i, j in touched)
    assert classical_energy(new, J) - classical_energy(bits, J) == pytest.approx(expected)


def test_residual_energy_examples():
    g = periodic_chain(6)
    J = assign_couplings(g)
    e0, ground = brute_force_ground(J, g)
    assert residual_energy({ground[0]: 10}, J, e0) == (0.0, 0.0)
    uniform = {"".join(b): 1 for b in itertools.product("01", repeat=6)}
    mean, _ = residual_energy(uniform, J, e0)
    assert mean == pytest.approx(6.0)


@pytest.mark.parametrize("seed", range(4))
def test_residual_energy_nonnegative_and_consistent(seed):
    g = periodic_chain(8)
    J = assign_couplings(g, "disordered", seed=seed)
    e0, _ = brute_force_ground(J, g)
    state = run_trotter_anneal(build_trotter_plan(g, J, dt=0.6, n_steps=8))
    exact, se = residual_energy(state, J, e0)
    assert se == 0 and exact >= -1e-12
    assert exact == pytest.approx(problem_energy_state(state, g, J) - e0, abs=1e-12)
    mean, se = residual_energy(sample_bitstrings(state, 20_000, seed), J, e0, g)
    assert abs(mean - exact) < 4 * se
