import numpy as np
import pytest

from pairkin.spin import (RateParams, SpinBasis, hermiticity_defect,
                          make_hamiltonian, preset_state, projectors,
                          pure_state, random_density, validate_state)


def test_projectors_values():
    qs, qt = projectors()
    # exactly one nonzero entry in QS, at (S, S)
    assert qs[SpinBasis.S, SpinBasis.S] == 1.0
    assert np.count_nonzero(qs) == 1
    assert np.array_equal(qs + qt, np.eye(4))
    assert np.array_equal(qs @ qt, np.zeros((4, 4)))


def test_projectors_idempotent_exact():
    qs, qt = projectors()
    assert np.array_equal(qs @ qs, qs)
    assert np.array_equal(qt @ qt, qt)


def test_projectors_return_copies():
    qs1, _ = projectors()
    qs1[0, 0] = 7.0
    qs2, _ = projectors()
    assert qs2[0, 0] == 1.0


def test_make_hamiltonian_zero():
    assert np.array_equal(make_hamiltonian("zero"), np.zeros((4, 4)))


def test_make_hamiltonian_st0_mixing():
    h = make_hamiltonian("st0-mixing", [0.5])
    expected = np.zeros((4, 4))
    expected[0, 2] = expected[2, 0] = 0.5
    assert np.array_equal(h, expected)


def test_make_hamiltonian_exchange():
    h = make_hamiltonian("exchange", [2.0])
    assert np.array_equal(h, np.diag([0.0, 2.0, 2.0, 2.0]))


def test_make_hamiltonian_custom_roundtrip():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(4, 4))
    m = 0.5 * (m + m.T)
    h = make_hamiltonian("custom", m.flatten())
    np.testing.assert_allclose(h, m, atol=0)
    assert hermiticity_defect(h) == 0.0


def test_make_hamiltonian_custom_rejects_asymmetric():
    m = np.zeros((4, 4))
    m[0, 1] = 1.0
    with pytest.raises(ValueError, match="not Hermitian"):
        make_hamiltonian("custom", m.flatten())


@pytest.mark.parametrize("kind,params", [
    ("zero", [1.0]),
    ("st0-mixing", []),
    ("exchange", [1.0, 2.0]),
    ("custom", [0.0] * 15),
])
def test_make_hamiltonian_wrong_param_count(kind, params):
    with pytest.raises(ValueError, match="parameter"):
        make_hamiltonian(kind, params)


def test_make_hamiltonian_unknown_kind():
    with pytest.raises(ValueError, match="unknown"):
        make_hamiltonian("dipolar", [])


def test_builtin_hamiltonians_hermitian():
    for kind, params in [("zero", []), ("st0-mixing", [1.3]), ("exchange", [-0.7])]:
        assert hermiticity_defect(make_hamiltonian(kind, params)) == 0.0


def test_validate_state_passes_physical():
    report = validate_state(pure_state([1, 0, 0, 0]), 1e-10)
    assert report.passed
    assert report.hermiticity_defect == 0.0
    assert report.min_eigenvalue >= -1e-12


def test_validate_state_hermiticity_fail():
    m = np.zeros((4, 4), dtype=complex)
    m[0, 2] = 1.0  # (S, T0) set without its conjugate
    report = validate_state(m, 1e-10)
    assert not report.hermitian_ok
    assert not report.passed


def test_validate_state_positivity_fail():
    report = validate_state(np.diag([-0.1, 0, 0, 0]).astype(complex), 1e-10)
    assert report.hermitian_ok
    assert not report.positive_ok


def test_validate_state_accepts_projector_mixtures():
    rng = np.random.default_rng(5)
    for _ in range(25):
        w = rng.dirichlet(np.ones(4))
        rho = np.diag(w).astype(complex)
        assert validate_state(rho, 1e-12).passed


def test_validate_state_trace_above_one_allowed():
    # the trace is the mean pair number, not a probability
    assert validate_state(2.0 * np.eye(4, dtype=complex), 1e-12).passed


def test_validate_state_rejects_bad_tol_and_shape():
    with pytest.raises(ValueError):
        validate_state(np.eye(4), 0.0)
    with pytest.raises(ValueError):
        validate_state(np.eye(3))


def test_rate_params_validation():
    rp = RateParams(1.0, 0.5)
    assert rp.max_rate == 1.0
    with pytest.raises(ValueError):
        RateParams(-0.1, 0.0)
    with pytest.raises(ValueError):
        RateParams(0.0, -1.0)


def test_preset_states():
    assert np.array_equal(preset_state("singlet"), np.diag([1, 0, 0, 0]).astype(complex))
    assert np.array_equal(preset_state("t0"), np.diag([0, 0, 1, 0]).astype(complex))
    assert np.array_equal(preset_state("tplus"), np.diag([0, 1, 0, 0]).astype(complex))
    assert np.array_equal(preset_state("tminus"), np.diag([0, 0, 0, 1]).astype(complex))
    np.testing.assert_allclose(np.trace(preset_state("mixed")), 1.0)


def test_preset_coherent_normalized():
    rho = preset_state("coherent", alpha=3.0, beta=4.0j)
    assert abs(np.trace(rho) - 1.0) < 1e-15
    np.testing.assert_allclose(rho[0, 0], 9 / 25)
    np.testing.assert_allclose(rho[2, 2], 16 / 25)
    np.testing.assert_allclose(rho[0, 2], 3 * (-4j) / 25)


def test_preset_coherent_requires_amplitudes():
    with pytest.raises(ValueError):
        preset_state("coherent")
    with pytest.raises(ValueError):
        preset_state("coherent", alpha=0.0, beta=0.0)


def test_preset_random_needs_rng():
    with pytest.raises(ValueError):
        preset_state("random")
    rho = preset_state("random", rng=np.random.default_rng(1))
    report = validate_state(rho, 1e-10)
    assert report.passed and abs(report.trace_real - 1.0) < 1e-12


def test_random_density_physical():
    rng = np.random.default_rng(11)
    for _ in range(10):
        assert validate_state(random_density(rng), 1e-10).passed
