import numpy as np
import pytest

from pairkin import _kernels
from pairkin.fock import FockSpace, second_quantize
from pairkin.models import Generator
from pairkin.spin import RateParams, make_hamiltonian, preset_state


@pytest.fixture
def restore_backend():
    before = _kernels.active_backend()
    yield
    _kernels.set_backend(before)


def _lindblad_workload():
    space = FockSpace(2)
    h = np.asarray(second_quantize(make_hamiltonian("st0-mixing", [1.0]),
                                   space).todense())
    a = space._dense_ladder
    coeffs = np.array([1.0, 0.3, 0.3, 0.3])
    rho0 = np.zeros((space.dim, space.dim), dtype=complex)
    idx = space.index((2, 0, 0, 0))
    rho0[idx, idx] = 1.0
    return h, a, coeffs, rho0


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
def test_backends_agree_superop(restore_backend):
    gen = Generator.haberkorn(make_hamiltonian("st0-mixing", [0.7]),
                              RateParams(1.0, 0.2))
    L = gen.matrix()
    v0 = preset_state("singlet").flatten(order="F")
    _kernels.set_backend("numpy")
    out_np = _kernels.rk4_superop(L, v0, 1e-3, 500)
    _kernels.set_backend("numba")
    out_nb = _kernels.rk4_superop(L, v0, 1e-3, 500)
    np.testing.assert_allclose(out_np, out_nb, atol=1e-13)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
def test_backends_agree_lindblad(restore_backend):
    h, a, coeffs, rho0 = _lindblad_workload()
    _kernels.set_backend("numpy")
    out_np = _kernels.rk4_lindblad(h, a, coeffs, rho0, 1e-3, 300)
    _kernels.set_backend("numba")
    out_nb = _kernels.rk4_lindblad(h, a, coeffs, rho0, 1e-3, 300)
    np.testing.assert_allclose(out_np, out_nb, atol=1e-13)


def test_numpy_backend_runs(restore_backend):
    _kernels.set_backend("numpy")
    assert _kernels.active_backend() == "numpy"
    h, a, coeffs, rho0 = _lindblad_workload()
    out = _kernels.rk4_lindblad(h, a, coeffs, rho0, 1e-3, 50)
    assert out.shape == (51, 81, 81)
    traces = np.trace(out, axis1=1, axis2=2)
    np.testing.assert_allclose(traces, 1.0, atol=1e-12)


def test_set_backend_validation():
    with pytest.raises(ValueError):
        _kernels.set_backend("fortran")


def test_env_flag_selection(monkeypatch):
    monkeypatch.setenv(_kernels.BACKEND_ENV, "numpy")
    assert _kernels._default_backend() == "numpy"
    monkeypatch.setenv(_kernels.BACKEND_ENV, "auto")
    expected = "numba" if _kernels.HAVE_NUMBA else "numpy"
    assert _kernels._default_backend() == expected
    monkeypatch.setenv(_kernels.BACKEND_ENV, "crayon")
    with pytest.raises(RuntimeError):
        _kernels._default_backend()


def test_rejects_non_ladder_jumps():
    # full matrix: columns are not orthogonal, so A^+A is not diagonal
    bad = np.ones((1, 2, 2), dtype=complex)
    rho0 = np.eye(2, dtype=complex) / 2
    with pytest.raises(ValueError, match="ladder-like"):
        _kernels.rk4_lindblad(np.zeros((2, 2)), bad, np.array([1.0]), rho0,
                              1e-3, 10)


def test_superop_kernel_linear_flow():
    # dv/dt = L v with diagonal L reproduces the scalar exponential
    L = np.diag([-1.0, -2.0]).astype(complex)
    v0 = np.array([1.0, 1.0], dtype=complex)
    out = _kernels.rk4_superop(L, v0, 1e-3, 1000)
    np.testing.assert_allclose(out[-1], [np.exp(-1.0), np.exp(-2.0)], atol=1e-9)
