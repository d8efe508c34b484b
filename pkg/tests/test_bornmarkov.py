import numpy as np
import pytest

from pairkin.bornmarkov import (BathCouplingParams, ExponentialCorrelation,
                                TabulatedCorrelation, pseudomode_ladder,
                                pseudomode_validation, rates_from_correlation,
                                renormalize_hamiltonian)
from pairkin.fock import FockSpace, one_pair_sector, second_quantize
from pairkin.spin import make_hamiltonian


def lorentzian_rates(g0, gamma, delta, lam2):
    # closed-form oracle: lam2 * g0 * integral of exp(-(gamma+i*delta)tau)
    return (lam2 * g0 * gamma / (gamma**2 + delta**2),
            -lam2 * g0 * delta / (gamma**2 + delta**2))


def test_rates_resonant_example():
    kS, kap = rates_from_correlation(ExponentialCorrelation(1.0, 2.0, 0.0),
                                     BathCouplingParams(1.0))
    np.testing.assert_allclose(kS, 0.5, rtol=1e-10)
    assert abs(kap) <= 1e-10


def test_rates_detuned_example():
    kS, kap = rates_from_correlation(ExponentialCorrelation(1.0, 1.0, 1.0),
                                     BathCouplingParams(2.0))
    np.testing.assert_allclose(kS, 1.0, rtol=1e-10)
    np.testing.assert_allclose(kap, -1.0, rtol=1e-10)


def test_rates_zero_coupling():
    kS, kap = rates_from_correlation(ExponentialCorrelation(1.0, 1.0, 0.5),
                                     BathCouplingParams(0.0))
    assert kS == 0.0 and kap == 0.0


def test_rates_match_lorentzian_oracle():
    rng = np.random.default_rng(50)
    for _ in range(15):
        g0 = rng.uniform(0.2, 3.0)
        gamma = rng.uniform(0.3, 4.0)
        delta = rng.uniform(-3.0, 3.0)
        lam2 = rng.uniform(0.0, 2.0)
        kS, kap = rates_from_correlation(ExponentialCorrelation(g0, gamma, delta),
                                         BathCouplingParams(lam2))
        kS_ref, kap_ref = lorentzian_rates(g0, gamma, delta, lam2)
        scale = max(abs(kS_ref), abs(kap_ref), 1e-30)
        assert abs(kS - kS_ref) <= 1e-8 * scale
        assert abs(kap - kap_ref) <= 1e-8 * scale


def test_rates_sign_structure():
    kS, kap = rates_from_correlation(ExponentialCorrelation(0.7, 1.3, 0.0),
                                     BathCouplingParams(1.0))
    assert kS > 0 and abs(kap) <= 1e-12


def test_negative_rate_flagged():
    with pytest.raises(ValueError, match="negative rate"):
        rates_from_correlation(ExponentialCorrelation(-1.0, 1.0, 0.0),
                               BathCouplingParams(1.0))


def test_conjugate_symmetry_both_forms():
    # away from tau = 0 the symmetry holds for any complex amplitude; at
    # tau = 0 it additionally requires Im g(0) = 0, so test that with real g0
    taus = np.linspace(-4.0, 4.0, 41)
    taus_nonzero = taus[taus != 0.0]
    g_exp = ExponentialCorrelation(0.8 + 0.1j, 1.2, 0.7)
    np.testing.assert_allclose(g_exp.value(-taus_nonzero),
                               np.conj(g_exp.value(taus_nonzero)), atol=1e-15)
    g_real = ExponentialCorrelation(0.8, 1.2, 0.7)
    np.testing.assert_allclose(g_real.value(-taus), np.conj(g_real.value(taus)),
                               atol=1e-15)
    grid = np.linspace(0.0, 25.0, 5001)
    g_tab = TabulatedCorrelation(grid, np.exp(-(1.2 + 0.7j) * grid))
    np.testing.assert_allclose(g_tab.value(-taus), np.conj(g_tab.value(taus)),
                               atol=1e-15)


def test_tabulated_integral_matches_analytic():
    gamma, delta = 1.0, 0.6
    grid = np.linspace(0.0, 25.0, 25001)
    g = TabulatedCorrelation(grid, np.exp(-(gamma + 1j * delta) * grid))
    kS, kap = rates_from_correlation(g, BathCouplingParams(1.0))
    kS_ref, kap_ref = lorentzian_rates(1.0, gamma, delta, 1.0)
    # trapezoid body error O(h^2); the exponential tail extrapolation is exact
    assert abs(kS - kS_ref) <= 1e-5
    assert abs(kap - kap_ref) <= 1e-5


def test_tabulated_tail_not_converged():
    grid = np.linspace(0.0, 2.0, 100)
    g = TabulatedCorrelation(grid, np.exp(-grid))
    with pytest.raises(ValueError, match="tail"):
        rates_from_correlation(g, BathCouplingParams(1.0))


def test_tabulated_validation():
    with pytest.raises(ValueError):
        TabulatedCorrelation(np.array([0.1, 0.2]), np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        TabulatedCorrelation(np.array([0.0, 0.0]), np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        TabulatedCorrelation(np.array([0.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        ExponentialCorrelation(1.0, -1.0, 0.0)


def test_renormalize_hamiltonian():
    space = FockSpace(1)
    h0 = second_quantize(np.zeros((4, 4)), space)
    assert (renormalize_hamiltonian(h0, 0.0, space) - h0).nnz == 0
    shifted = renormalize_hamiltonian(h0, 0.3, space)
    np.testing.assert_allclose(one_pair_sector(shifted, space),
                               np.diag([0.3, 0.0, 0.0, 0.0]), atol=0)
    h_ex = second_quantize(make_hamiltonian("exchange", [2.0]), space)
    np.testing.assert_allclose(one_pair_sector(renormalize_hamiltonian(h_ex, 0.5, space),
                                               space),
                               np.diag([0.5, 2.0, 2.0, 2.0]), atol=0)


def test_pseudomode_zero_coupling_flat():
    res = pseudomode_validation(0.0, 1.0, 0.0)
    assert res.predicted_kS == 0.0
    assert abs(res.fitted_rate) <= 1e-10
    assert abs(res.fitted_shift) <= 1e-10


def test_pseudomode_weak_coupling_agreement():
    res = pseudomode_validation(0.05, 1.0, 0.0)
    np.testing.assert_allclose(res.predicted_kS, 0.0025)
    assert res.relative_error <= 0.05


def test_pseudomode_detuned_agreement():
    res = pseudomode_validation(0.05, 1.0, 1.0)
    np.testing.assert_allclose(res.predicted_kS, 0.00125)
    assert res.relative_error <= 0.05
    # the fitted frequency shift tracks the predicted renormalization
    assert abs(res.fitted_shift - res.predicted_kappaS) <= 0.05 * res.predicted_kS


def test_pseudomode_enforces_weak_coupling():
    with pytest.raises(ValueError, match="too strong"):
        pseudomode_validation(0.5, 1.0, 0.0)
    with pytest.raises(ValueError, match="shorter than"):
        pseudomode_validation(0.05, 1.0, 0.0, t_end=10.0)
    with pytest.raises(ValueError):
        pseudomode_validation(0.1, -1.0, 0.0)


def test_pseudomode_ladder_interface():
    with pytest.raises(ValueError):
        pseudomode_ladder([])
    results = pseudomode_ladder([0.2], gamma=1.0)
    assert len(results) == 1 and results[0].lam == 0.2
