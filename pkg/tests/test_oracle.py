import numpy as np
import pytest
from hypothesis import given, strategies as st

from opendicke import ModelParams, oracle
from opendicke.basis import ReducedState, ground_state, state_dim
from opendicke.liouvillian import assemble
from opendicke.solvers import propagate

from helpers import rel_err


def test_liouville_space_dimension():
    L = oracle.build_full_liouvillian(ModelParams(N=1, g=1.0, kappa=1.0), 2)
    assert L.shape == (16, 16)


def test_size_ceiling():
    with pytest.raises(ValueError):
        oracle.build_full_liouvillian(ModelParams(N=7), 2)


def test_independent_decay_of_two_emitters():
    p = ModelParams(N=2, gamma=1.0)
    rho0 = np.zeros((4, 4), dtype=complex)
    rho0[3, 3] = 1.0  # both excited
    t = np.array([0.0, 0.5, 1.0, 2.0])
    traj = oracle.full_propagate(p, 1, rho0, t)
    both = traj[:, 3, 3].real
    one = traj[:, 1, 1].real + traj[:, 2, 2].real
    np.testing.assert_allclose(both, np.exp(-2 * t), atol=1e-9)
    # single-emitter populations decay as exp(-t)
    np.testing.assert_allclose(both + 0.5 * one, np.exp(-t), atol=1e-9)


def test_undriven_steady_state_is_ground_state():
    p = ModelParams(N=2, g=0.8, gamma=1.0, kappa=1.5, delta=0.3)
    rho = oracle.full_steady_state(p, 3)
    np.testing.assert_allclose(rho, oracle.full_ground_state(2, 3), atol=1e-12)


def test_extract_ground_state():
    red = oracle.extract(oracle.full_ground_state(3, 2), 3, 2)
    np.testing.assert_array_equal(red.coeffs, ground_state(3, 2).coeffs)


def test_symmetric_bell_state_coherence():
    psi = np.zeros(4, dtype=complex)
    psi[[1, 2]] = 1 / np.sqrt(2)  # (|01> + |10>)/sqrt2
    rho = np.outer(psi, psi.conj())
    s10 = np.array([[0, 0], [1, 0]])
    s01 = s10.T
    direct = np.trace((np.kron(s10, s01) + np.kron(s01, s10)) @ rho)
    red = oracle.extract(rho, 2, 1)
    assert red.coeff(0, 1, 1) == pytest.approx(direct)
    assert direct == pytest.approx(1.0)


@given(st.integers(1, 4), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_extract_inverts_inject(N, M, seed):
    rng = np.random.default_rng(seed)
    s = oracle.random_symmetric_state(N, M, rng)
    back = oracle.extract(oracle.inject(s), N, M)
    np.testing.assert_allclose(back.coeffs, s.coeffs, atol=1e-12)


def test_extract_inject_hundred_states(rng):
    for k in range(100):
        N = 1 + k % 4
        s = oracle.random_symmetric_state(N, 2, rng, rank=3)
        assert rel_err(oracle.extract(oracle.inject(s), N, 2).coeffs, s.coeffs) < 1e-12


def test_injected_state_is_permutation_invariant(rng):
    s = oracle.random_symmetric_state(3, 1, rng)
    rho = oracle.inject(s)
    # swap emitters 0 and 2
    perm = [int(f"{a:03b}"[::-1], 2) for a in range(8)]
    np.testing.assert_allclose(rho[np.ix_(perm, perm)], rho, atol=1e-14)


def test_inject_rejects_non_hermitian(rng):
    c = rng.normal(size=state_dim(2, 1)) + 1j * rng.normal(size=state_dim(2, 1))
    with pytest.raises(ValueError):
        oracle.inject(ReducedState(c, 2, 1))


def test_two_emitter_dicke_levels():
    levels = oracle.dicke_eigenbasis(2)
    labels = sorted((lv.l, lv.m, lv.degeneracy) for lv in levels)
    assert labels == [(0.0, 0.0, 1), (1.0, -1.0, 1), (1.0, 0.0, 1), (1.0, 1.0, 1)]


def test_four_emitter_degeneracies():
    levels = oracle.dicke_eigenbasis(4)
    deg = {}
    for lv in levels:
        deg.setdefault(lv.l, set()).add(lv.degeneracy)
    assert deg == {2.0: {1}, 1.0: {3}, 0.0: {2}}
    assert sum(lv.degeneracy for lv in levels) == 16
    assert all(abs(lv.m) <= lv.l <= 2 for lv in levels)


def test_full_steady_state_is_positive(rng):
    for _ in range(3):
        p = oracle.random_params(rng, 2)
        rho = oracle.full_steady_state(p, 3)
        assert np.linalg.eigvalsh(rho).min() >= -1e-8
        assert np.trace(rho).real == pytest.approx(1.0)


@pytest.mark.parametrize("N, M", [(1, 3), (2, 3), (3, 2)])
def test_reduced_dynamics_follow_full_dynamics(rng, N, M):
    p = oracle.random_params(rng, N, scale=1.0)
    rho0 = oracle.random_density_matrix(N, M, rng)
    t = np.array([0.0, 0.3, 1.0, 4.0, 10.0])
    full = oracle.full_propagate(p, M, rho0, t, rtol=1e-11, atol=1e-13)
    red = propagate(assemble(p, M), oracle.extract(rho0, N, M), t, rtol=1e-11, atol=1e-13)
    for k in range(len(t)):
        ref = oracle.extract(full[k], N, M).coeffs
        assert np.max(np.abs(red.states[k].coeffs - ref)) < 1e-8


def test_implicit_full_propagation_matches_explicit(rng):
    p = oracle.random_params(rng, 2, scale=1.0)
    rho0 = oracle.random_density_matrix(2, 2, rng)
    t = np.array([0.0, 0.5, 2.0])
    a = oracle.full_propagate(p, 2, rho0, t, rtol=1e-10, atol=1e-12)
    b = oracle.full_propagate(p, 2, rho0, t, rtol=1e-10, atol=1e-12, method="Radau")
    np.testing.assert_allclose(a, b, atol=1e-7)
