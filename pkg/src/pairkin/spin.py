"""One-pair spin space: basis order, projectors, Hamiltonians, state helpers.

A radical pair lives in a 4-dimensional spin space spanned by the singlet
state and the three triplet states. The basis order is fixed package-wide as
(S, T+, T0, T-) and is shared with the Fock-mode ordering in
:mod:`pairkin.fock`.

States are plain Hermitian 4x4 complex arrays. Their trace is *not*
normalized to one: it equals the mean number of surviving pairs and decays
under recombination.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

DIM = 4

HERMITICITY_TOL = 1e-12
POSITIVITY_FLOOR = -1e-10


class SpinBasis(IntEnum):
    """Basis-state index; the order is fixed and shared with the Fock modes."""

    S = 0
    T_PLUS = 1
    T_ZERO = 2
    T_MINUS = 3


BASIS_LABELS = ("S", "T+", "T0", "T-")

HAMILTONIAN_KINDS = ("zero", "st0-mixing", "exchange", "custom")

STATE_PRESETS = ("singlet", "t0", "tplus", "tminus", "mixed", "coherent", "random")

_QS = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
_QT = np.diag([0.0, 1.0, 1.0, 1.0]).astype(complex)


def projectors() -> tuple[np.ndarray, np.ndarray]:
    """Return ``(QS, QT)``, the projectors onto the singlet and triplet subspaces."""
    return _QS.copy(), _QT.copy()


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest entrywise deviation of ``m`` from its conjugate transpose."""
    return float(np.max(np.abs(m - m.conj().T)))


@dataclass(frozen=True)
class RateParams:
    """Singlet/triplet recombination rate parameters.

    ``kS`` and ``kT`` are the coefficients of the anticommutator loss terms;
    the full recombination rate constants (population decay rates of the pure
    subspace states) are ``2*kS`` and ``2*kT``.
    """

    kS: float
    kT: float

    def __post_init__(self):
        if self.kS < 0 or self.kT < 0:
            raise ValueError(f"rates must be nonnegative (got kS={self.kS}, kT={self.kT})")

    @property
    def max_rate(self) -> float:
        return max(self.kS, self.kT)


def make_hamiltonian(kind: str, params=()) -> np.ndarray:
    """Construct one of the built-in 4x4 Hamiltonians (hbar = 1).

    Kinds:
      ``zero``            no parameters; the zero matrix.
      ``st0-mixing``      one parameter ``omega``: off-diagonal coupling
                          between |S> and |T0>.
      ``exchange``        one parameter ``J``: uniform singlet-triplet
                          splitting ``J * QT``.
      ``custom``          16 parameters, a row-major real 4x4 matrix; must be
                          symmetric (i.e. Hermitian) to within 1e-12.
    """
    params = [float(p) for p in params]
    if kind == "zero":
        _expect_params(kind, params, 0)
        return np.zeros((DIM, DIM), dtype=complex)
    if kind == "st0-mixing":
        _expect_params(kind, params, 1)
        h = np.zeros((DIM, DIM), dtype=complex)
        h[SpinBasis.S, SpinBasis.T_ZERO] = params[0]
        h[SpinBasis.T_ZERO, SpinBasis.S] = params[0]
        return h
    if kind == "exchange":
        _expect_params(kind, params, 1)
        return params[0] * _QT.copy()
    if kind == "custom":
        _expect_params(kind, params, 16)
        h = np.asarray(params, dtype=float).reshape(DIM, DIM)
        defect = float(np.max(np.abs(h - h.T)))
        if defect > HERMITICITY_TOL:
            raise ValueError(f"custom Hamiltonian is not Hermitian (defect {defect:.3e})")
        return h.astype(complex)
    raise ValueError(f"unknown Hamiltonian kind {kind!r}; expected one of {HAMILTONIAN_KINDS}")


def _expect_params(kind, params, n):
    if len(params) != n:
        raise ValueError(f"Hamiltonian kind {kind!r} takes {n} parameter(s), got {len(params)}")


@dataclass(frozen=True)
class ValidationReport:
    """Per-check diagnostics for a candidate one-pair state."""

    hermiticity_defect: float
    trace_real: float
    trace_imag: float
    min_eigenvalue: float
    hermitian_ok: bool
    trace_ok: bool
    positive_ok: bool

    @property
    def passed(self) -> bool:
        return self.hermitian_ok and self.trace_ok and self.positive_ok


def validate_state(rho: np.ndarray, tol: float = HERMITICITY_TOL) -> ValidationReport:
    """Check Hermiticity, trace reality/sign and positivity of a state.

    Hermiticity and the trace checks use ``tol``; the positivity floor is
    ``-max(tol, 1e-10)`` (double-precision roundoff across long integrations).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (DIM, DIM):
        raise ValueError(f"expected a {DIM}x{DIM} matrix, got shape {rho.shape}")
    defect = hermiticity_defect(rho)
    tr = complex(np.trace(rho))
    herm = 0.5 * (rho + rho.conj().T)
    min_eig = float(np.linalg.eigvalsh(herm)[0])
    floor = -max(tol, -POSITIVITY_FLOOR)
    return ValidationReport(
        hermiticity_defect=defect,
        trace_real=tr.real,
        trace_imag=tr.imag,
        min_eigenvalue=min_eig,
        hermitian_ok=defect <= tol,
        trace_ok=abs(tr.imag) <= tol and tr.real >= -tol,
        positive_ok=min_eig >= floor,
    )


def basis_ket(index: int) -> np.ndarray:
    v = np.zeros(DIM, dtype=complex)
    v[index] = 1.0
    return v


def pure_state(vec: np.ndarray) -> np.ndarray:
    """Density matrix |v><v| of a (not necessarily normalized) ket."""
    v = np.asarray(vec, dtype=complex)
    return np.outer(v, v.conj())


def preset_state(name: str, *, alpha: complex = None, beta: complex = None,
                 rng: np.random.Generator = None) -> np.ndarray:
    """Build one of the named initial states.

    ``coherent`` is the normalized pure state alpha|S> + beta|T0>;
    ``random`` draws a random density matrix (requires ``rng``);
    ``mixed`` is the maximally mixed one-pair state I/4.
    """
    if name == "singlet":
        return pure_state(basis_ket(SpinBasis.S))
    if name == "t0":
        return pure_state(basis_ket(SpinBasis.T_ZERO))
    if name == "tplus":
        return pure_state(basis_ket(SpinBasis.T_PLUS))
    if name == "tminus":
        return pure_state(basis_ket(SpinBasis.T_MINUS))
    if name == "mixed":
        return np.eye(DIM, dtype=complex) / DIM
    if name == "coherent":
        if alpha is None or beta is None:
            raise ValueError("coherent preset needs alpha and beta")
        v = np.zeros(DIM, dtype=complex)
        v[SpinBasis.S] = alpha
        v[SpinBasis.T_ZERO] = beta
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("coherent preset needs a nonzero (alpha, beta)")
        return pure_state(v / norm)
    if name == "random":
        if rng is None:
            raise ValueError("random preset needs an rng (configure a seed)")
        return random_density(rng)
    raise ValueError(f"unknown state preset {name!r}; expected one of {STATE_PRESETS}")


def random_hermitian(rng: np.random.Generator, dim: int = DIM, scale: float = 1.0) -> np.ndarray:
    """Seeded random Hermitian matrix (Gaussian entries, symmetrized)."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def random_density(rng: np.random.Generator, dim: int = DIM) -> np.ndarray:
    """Seeded random density matrix (positive semidefinite, unit trace)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
