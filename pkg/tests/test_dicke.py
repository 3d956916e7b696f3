from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from opendicke import dicke, oracle
from opendicke.basis import ReducedState, ground_state, sym_basis, thermal_state


def _zero_coherences(s: ReducedState) -> ReducedState:
    b = s.blocks.copy()
    keep = sym_basis(s.N).diagonal_triples
    mask = np.zeros(len(b), dtype=bool)
    mask[keep] = True
    b[~mask] = 0
    return ReducedState(b.reshape(-1), s.N, s.M)


def test_two_emitter_expansion_coefficients():
    t = dicke.build_coeff_table(2)
    np.testing.assert_array_equal(t.coeffs[(1.0, 0.0)], [0.5, 0.5])
    np.testing.assert_array_equal(t.coeffs[(0.0, 0.0)], [0.5, -0.5])
    np.testing.assert_array_equal(t.coeffs[(1.0, -1.0)], [1.0, 0.0])
    np.testing.assert_array_equal(t.coeffs[(1.0, 1.0)], [1.0, 0.0])


def test_two_emitter_populations(rng):
    s = oracle.random_symmetric_state(2, 2, rng)
    P = lambda *t: s.tls_coeffs()[sym_basis(2).triple_index(*t)].real
    assert dicke.population(s, 1.0, 0.0) == pytest.approx(0.5 * (P(1, 0, 0) + P(0, 1, 1)), abs=1e-15)
    assert dicke.population(s, 0.0, 0.0) == pytest.approx(0.5 * (P(1, 0, 0) - P(0, 1, 1)), abs=1e-15)
    assert dicke.population(s, 1.0, -1.0) == pytest.approx(P(0, 0, 0), abs=1e-15)
    assert dicke.population(s, 1.0, 1.0) == pytest.approx(P(2, 0, 0), abs=1e-15)


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 6])
def test_table_matches_projectors(N):
    """Every a_k(l, m) equals the projector element between states differing on 2k sites."""
    table = dicke.build_coeff_table(N)
    for lv in oracle.dicke_eigenbasis(N):
        n = int(lv.m + N / 2)
        Pi = lv.projector
        ones = list(combinations(range(N), n))
        a = sum(1 << (N - 1 - i) for i in ones[0])
        for bset in ones:
            b = sum(1 << (N - 1 - i) for i in bset)
            k = n - len(set(ones[0]) & set(bset))
            assert Pi[a, b].real == pytest.approx(table.coeffs[(lv.l, lv.m)][k], abs=1e-12)
            assert abs(Pi[a, b].imag) < 1e-12


@pytest.mark.parametrize("N", range(1, 9))
def test_degeneracies_count_the_hilbert_space(N):
    t = dicke.build_coeff_table(N)
    assert sum(d * (2 * l + 1) for l, d in t.degeneracies.items()) == 2**N


@pytest.mark.parametrize("N", [3, 4, 7])
def test_structural_zeros(N):
    t = dicke.build_coeff_table(N)
    for (l, m), a in t.coeffs.items():
        n = int(m + N / 2)
        assert np.all(a[min(n, N - n) + 1:] == 0)


def test_l_values():
    assert dicke.l_values(4) == [2.0, 1.0, 0.0]
    assert dicke.l_values(5) == [2.5, 1.5, 0.5]
    assert dicke.l_min(5) == 0.5


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_completeness(N, seed):
    s = oracle.random_symmetric_state(N, 1, np.random.default_rng(seed))
    assert sum(dicke.populations(s).values()) == pytest.approx(1.0, abs=1e-12)


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_populations_are_nonnegative(N, seed):
    s = oracle.random_symmetric_state(N, 1, np.random.default_rng(seed), rank=1)
    assert min(dicke.populations(s).values()) >= -1e-9


def test_ground_state_lives_on_top_ladder():
    g = ground_state(4, 2)
    assert dicke.subspace_population(g, 2.0) == pytest.approx(1.0)
    assert dicke.subspace_population(g, 1.0) == 0.0
    assert dicke.subspace_population(g, 0.0) == 0.0
    assert dicke.collectivity_R(g, 2.0) == 1.0
    assert np.isnan(dicke.collectivity_R(g, 1.0))
    assert dicke.dark_state_population(g, 2.0) == 1.0
    assert dicke.dark_state_population(g, 1.0) == 0.0
    assert dicke.total_dark_population(g) == 0.0


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_incoherent_state_has_unit_collectivity(rng, N):
    s = _zero_coherences(oracle.random_symmetric_state(N, 2, rng))
    for l in dicke.l_values(N):
        assert dicke.collectivity_R(s, l) == pytest.approx(1.0, abs=1e-12)
    t = thermal_state(N, 1, 0.37)
    assert all(v == pytest.approx(1.0) for v in dicke.collectivity_all(t).values())


def test_collectivity_against_full_space(rng):
    N = 4
    s = oracle.random_symmetric_state(N, 1, rng, rank=2)
    rho = oracle.inject(s)
    rho_diag = np.diag(np.diag(rho))
    levels = oracle.dicke_eigenbasis(N)
    for l in dicke.l_values(N):
        num = sum(np.trace(lv.projector @ rho).real for lv in levels if lv.l == l)
        den = sum(np.trace(lv.projector @ rho_diag).real for lv in levels if lv.l == l)
        assert dicke.subspace_population(s, l) == pytest.approx(num, abs=1e-12)
        assert dicke.collectivity_R(s, l) == pytest.approx(num / den, rel=1e-10)
        # one representative vector per (l, m) copy gives the same ratio
        v = [lv.vectors[:, 0] for lv in levels if lv.l == l]
        num1 = sum((x.conj() @ rho @ x).real for x in v)
        den1 = sum((x.conj() @ rho_diag @ x).real for x in v)
        assert num1 / den1 == pytest.approx(num / den, rel=1e-10)


def test_undefined_ratio_is_nan():
    assert np.isnan(dicke.collectivity_R(ground_state(3, 1), 0.5))


def test_text_export():
    text = dicke.build_coeff_table(2).to_text()
    lines = text.strip().splitlines()
    assert lines[0].startswith("#")
    assert "2 0 0 1 -0.5" in lines


def test_invalid_level():
    with pytest.raises(ValueError):
        dicke.projector_coefficient(3, 0.5, 1.5, 0)
    with pytest.raises(ValueError):
        dicke.build_coeff_table(0)
