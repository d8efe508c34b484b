import numpy as np
import pytest

from pairkin.models import (Generator, GeneratorKind, MeasurementParams,
                            dephasing_identity_deviation,
                            dephasing_lindblad_identity_check, haberkorn_rhs,
                            measurement_only_rhs,
                            measurement_recombination_rewritten_rhs,
                            measurement_recombination_rhs,
                            recombination_yield_rates)
from pairkin.spin import (RateParams, make_hamiltonian, preset_state,
                          projectors, random_density, random_hermitian)

H0 = make_hamiltonian("zero")
SINGLET = preset_state("singlet")
T0 = preset_state("t0")
ST0_COHERENCE = np.zeros((4, 4), dtype=complex)
ST0_COHERENCE[0, 2] = ST0_COHERENCE[2, 0] = 1.0


def test_haberkorn_singlet_decay_rate():
    out = haberkorn_rhs(SINGLET, H0, RateParams(1.0, 0.0))
    np.testing.assert_allclose(out, -2.0 * SINGLET, atol=0)


def test_haberkorn_triplet_untouched_by_singlet_rate():
    out = haberkorn_rhs(T0, H0, RateParams(1.0, 0.0))
    np.testing.assert_allclose(out, np.zeros((4, 4)), atol=0)


def test_haberkorn_coherence_decay_rate():
    # the S-T0 coherence decays at kS + kT
    a, b = 0.7, 0.4
    out = haberkorn_rhs(ST0_COHERENCE, H0, RateParams(a, b))
    np.testing.assert_allclose(out, -(a + b) * ST0_COHERENCE, atol=1e-15)


def test_haberkorn_rejects_non_hermitian():
    bad = np.zeros((4, 4), dtype=complex)
    bad[0, 2] = 1.0
    with pytest.raises(ValueError, match="not Hermitian"):
        haberkorn_rhs(bad, H0, RateParams(1.0, 0.0))


def test_measurement_only_fixed_point():
    out = measurement_only_rhs(SINGLET, H0, 3.0)
    np.testing.assert_allclose(out, np.zeros((4, 4)), atol=0)


def test_measurement_only_kills_coherence():
    out = measurement_only_rhs(ST0_COHERENCE, H0, 3.0)
    np.testing.assert_allclose(out, -3.0 * ST0_COHERENCE, atol=0)


def test_measurement_only_trace_free():
    rng = np.random.default_rng(8)
    for _ in range(30):
        out = measurement_only_rhs(random_hermitian(rng), random_hermitian(rng), 1.0)
        assert abs(np.trace(out)) <= 1e-12


def test_measurement_only_rejects_negative_rate():
    with pytest.raises(ValueError):
        measurement_only_rhs(SINGLET, H0, -1.0)


def test_measurement_recombination_reduces_to_measurement_only():
    rng = np.random.default_rng(9)
    rho, h = random_hermitian(rng), random_hermitian(rng)
    mp = MeasurementParams(2.5, 0.0, 0.0)
    np.testing.assert_allclose(measurement_recombination_rhs(rho, h, mp),
                               measurement_only_rhs(rho, h, 2.5), atol=0)


def test_measurement_recombination_certain_loss():
    # pS = pT = 1 removes both sandwich terms, leaving -k*rho
    rng = np.random.default_rng(10)
    rho, k = random_hermitian(rng), 1.7
    out = measurement_recombination_rhs(rho, H0, MeasurementParams(k, 1.0, 1.0))
    np.testing.assert_allclose(out, -k * rho, atol=1e-14)
    # and the rewritten coefficients collapse to the same -k*rho
    out2 = measurement_recombination_rewritten_rhs(rho, H0, MeasurementParams(k, 1.0, 1.0))
    np.testing.assert_allclose(out2, -k * rho, atol=1e-14)


def test_measurement_recombination_singlet_channel():
    out = measurement_recombination_rhs(SINGLET, H0, MeasurementParams(1.0, 1.0, 0.0))
    np.testing.assert_allclose(out, -SINGLET, atol=0)


def test_rewritten_form_matches_original():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(200):
        rho = random_hermitian(rng)
        h = random_hermitian(rng)
        mp = MeasurementParams(rng.uniform(0, 3), rng.uniform(), rng.uniform())
        a = measurement_recombination_rhs(rho, h, mp)
        b = measurement_recombination_rewritten_rhs(rho, h, mp)
        worst = max(worst, float(np.max(np.abs(a - b))))
    assert worst <= 1e-12


def test_rewritten_form_triplet_example():
    # QS rho QS and {QS, rho} both vanish for a pure T+ state, leaving -k~T rho
    rho = preset_state("tplus")
    out = measurement_recombination_rewritten_rhs(rho, H0, MeasurementParams(1.0, 0.5, 0.5))
    np.testing.assert_allclose(out, -0.5 * rho, atol=0)


def test_rewritten_form_zero_rate_is_commutator():
    rng = np.random.default_rng(12)
    rho, h = random_hermitian(rng), random_hermitian(rng)
    out = measurement_recombination_rewritten_rhs(rho, h, MeasurementParams(0.0, 0.3, 0.4))
    np.testing.assert_allclose(out, -1j * (h @ rho - rho @ h), atol=0)


def test_dephasing_identity_random():
    assert dephasing_lindblad_identity_check(100, seed=42) <= 1e-13


def test_dephasing_identity_coherence_case():
    qs, qt = projectors()
    lhs = (2 * qs @ ST0_COHERENCE @ qs - qs @ ST0_COHERENCE - ST0_COHERENCE @ qs
           + 2 * qt @ ST0_COHERENCE @ qt - qt @ ST0_COHERENCE - ST0_COHERENCE @ qt)
    np.testing.assert_allclose(lhs, -2.0 * ST0_COHERENCE, atol=0)
    assert dephasing_identity_deviation(ST0_COHERENCE) == 0.0


def test_dephasing_identity_projector_case():
    qs, _ = projectors()
    lhs = 2 * qs @ qs @ qs - qs @ qs - qs @ qs
    assert np.count_nonzero(lhs) == 0
    assert dephasing_identity_deviation(qs) == 0.0


def test_dephasing_check_needs_trials():
    with pytest.raises(ValueError):
        dephasing_lindblad_identity_check(0, seed=1)


def test_yield_rates_examples():
    assert recombination_yield_rates(SINGLET, RateParams(1.0, 1.0)) == (2.0, 0.0)
    assert recombination_yield_rates(T0, RateParams(1.0, 1.0)) == (0.0, 2.0)
    mixed = 0.5 * SINGLET + 0.5 * T0
    fs, ft = recombination_yield_rates(mixed, RateParams(1.0, 3.0))
    np.testing.assert_allclose((fs, ft), (1.0, 3.0))


def test_yield_rates_flag_unphysical():
    with pytest.raises(ValueError, match="unphysical"):
        recombination_yield_rates(np.diag([-1.0, 0, 0, 0]).astype(complex),
                                  RateParams(1.0, 0.0))


def test_generators_preserve_hermiticity():
    rng = np.random.default_rng(77)
    for _ in range(40):
        rho = random_hermitian(rng)
        h = random_hermitian(rng)
        outs = [
            haberkorn_rhs(rho, h, RateParams(rng.uniform(0, 2), rng.uniform(0, 2))),
            measurement_only_rhs(rho, h, rng.uniform(0, 2)),
            measurement_recombination_rhs(
                rho, h, MeasurementParams(rng.uniform(0, 2), rng.uniform(), rng.uniform())),
        ]
        for out in outs:
            assert np.max(np.abs(out - out.conj().T)) <= 1e-12


def test_trace_contracts_of_generators():
    rng = np.random.default_rng(78)
    qs, qt = projectors()
    for _ in range(20):
        rho = random_density(rng)
        h = random_hermitian(rng)
        kS, kT = rng.uniform(0, 2, size=2)
        d_tr = np.trace(haberkorn_rhs(rho, h, RateParams(kS, kT))).real
        expected = -2 * kS * np.trace(qs @ rho).real - 2 * kT * np.trace(qt @ rho).real
        assert abs(d_tr - expected) <= 1e-12 and d_tr <= 1e-12
        mp = MeasurementParams(rng.uniform(0, 2), rng.uniform(), rng.uniform())
        d_tr = np.trace(measurement_recombination_rhs(rho, h, mp)).real
        expected = (-mp.ktilde_S * np.trace(qs @ rho).real
                    - mp.ktilde_T * np.trace(qt @ rho).real)
        assert abs(d_tr - expected) <= 1e-12 and d_tr <= 1e-12


def test_measurement_params_validation():
    mp = MeasurementParams(2.0, 0.25, 0.5)
    assert mp.ktilde_S == 0.5 and mp.ktilde_T == 1.0
    with pytest.raises(ValueError):
        MeasurementParams(-1.0, 0.5, 0.5)
    with pytest.raises(ValueError):
        MeasurementParams(1.0, 1.5, 0.5)
    with pytest.raises(ValueError):
        MeasurementParams(1.0, 0.5, -0.1)


def test_generator_kinds_and_constraints():
    h = make_hamiltonian("st0-mixing", [1.0])
    gen = Generator.jones_hore(h, 2.0, 1.0)
    assert gen.kind == GeneratorKind.JONES_HORE
    assert abs(gen.measurement.pS + gen.measurement.pT - 1.0) < 1e-15
    assert gen.measurement.k == 3.0
    with pytest.raises(ValueError, match="pS \\+ pT"):
        Generator(GeneratorKind.JONES_HORE, h,
                  measurement=MeasurementParams(1.0, 0.2, 0.2))
    with pytest.raises(ValueError):
        Generator.jones_hore(h, -1.0, 0.0)


def test_generator_rejects_non_hermitian_hamiltonian():
    bad = np.zeros((4, 4), dtype=complex)
    bad[0, 1] = 1.0
    with pytest.raises(ValueError, match="Hermitian"):
        Generator.haberkorn(bad, RateParams(1.0, 0.0))


def test_generator_flux_coefficients():
    h = make_hamiltonian("zero")
    assert Generator.haberkorn(h, RateParams(1.0, 0.5)).flux_coefficients() == (2.0, 1.0)
    assert Generator.measurement_only(h, 3.0).flux_coefficients() == (0.0, 0.0)
    gen = Generator.measurement_recombination(h, MeasurementParams(2.0, 0.5, 0.25))
    assert gen.flux_coefficients() == (1.0, 0.5)
    assert Generator.measurement_only(h, 3.0).conserves_trace
    assert not gen.conserves_trace


def test_generator_apply_matches_module_functions():
    rng = np.random.default_rng(5)
    rho, h = random_hermitian(rng), random_hermitian(rng)
    rates = RateParams(0.7, 0.2)
    np.testing.assert_allclose(Generator.haberkorn(h, rates)(rho),
                               haberkorn_rhs(rho, h, rates), atol=0)
    mp = MeasurementParams(1.1, 0.3, 0.6)
    np.testing.assert_allclose(
        Generator.measurement_recombination_rewritten(h, mp)(rho),
        measurement_recombination_rewritten_rhs(rho, h, mp), atol=0)
