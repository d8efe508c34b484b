"""Right-hand sides of the one-pair recombination models.

Every model is a linear map on Hermitian 4x4 matrices built from the
singlet/triplet projectors QS, QT:

  haberkorn                 -i[H,rho] - kS {QS,rho} - kT {QT,rho}
  measurement-only          -i[H,rho] + k (QS rho QS + QT rho QT - rho)
  measurement-recombination -i[H,rho] + k ((1-pS) QS rho QS + (1-pT) QT rho QT - rho)
  rewritten form            -i[H,rho] + (2k - k~S - k~T) QS rho QS
                            - (k - k~T)(QS rho + rho QS) - k~T rho
  jones-hore                measurement-recombination restricted to pS + pT = 1

with k~S = pS*k and k~T = pT*k. The measurement-recombination generator and
its rewritten form are the same map, expressed with and without the triplet
sandwich term; the identity is checked by the test suite and ``selftest``.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .spin import DIM, RateParams, _QS, _QT, hermiticity_defect, random_hermitian

RHS_HERMITICITY_TOL = 1e-10


class GeneratorKind(str, Enum):
    HABERKORN = "haberkorn"
    MEASUREMENT_ONLY = "measurement-only"
    MEASUREMENT_RECOMBINATION = "measurement-recombination"
    MEASUREMENT_RECOMBINATION_REWRITTEN = "measurement-recombination-rewritten"
    JONES_HORE = "jones-hore"


class MeasurementParams:
    """Measurement rate ``k`` plus per-outcome recombination probabilities.

    ``k`` is the number of measurement events per second; ``pS`` (``pT``) is
    the probability that a singlet (triplet) outcome is followed by
    recombination. The derived rates ``ktilde_S = pS*k`` and
    ``ktilde_T = pT*k`` are exposed read-only.
    """

    __slots__ = ("_k", "_pS", "_pT")

    def __init__(self, k: float, pS: float, pT: float):
        if k < 0:
            raise ValueError(f"k must be nonnegative (got {k})")
        if not 0.0 <= pS <= 1.0 or not 0.0 <= pT <= 1.0:
            raise ValueError(f"pS and pT must lie in [0, 1] (got pS={pS}, pT={pT})")
        self._k = float(k)
        self._pS = float(pS)
        self._pT = float(pT)

    @property
    def k(self) -> float:
        return self._k

    @property
    def pS(self) -> float:
        return self._pS

    @property
    def pT(self) -> float:
        return self._pT

    @property
    def ktilde_S(self) -> float:
        return self._pS * self._k

    @property
    def ktilde_T(self) -> float:
        return self._pT * self._k

    def __repr__(self):
        return f"MeasurementParams(k={self._k}, pS={self._pS}, pT={self._pT})"


def _require_hermitian(rho: np.ndarray, what: str = "rho") -> None:
    defect = hermiticity_defect(rho)
    if defect > RHS_HERMITICITY_TOL:
        raise ValueError(f"{what} is not Hermitian (defect {defect:.3e})")


def _commutator_flow(rho, h):
    return -1j * (h @ rho - rho @ h)


def haberkorn_rhs(rho: np.ndarray, h: np.ndarray, rates: RateParams) -> np.ndarray:
    """Phenomenological kinetic generator with anticommutator loss terms."""
    _require_hermitian(rho)
    return _haberkorn_apply(rho, h, rates)


def _haberkorn_apply(rho, h, rates):
    out = _commutator_flow(rho, h)
    out = out - rates.kS * (_QS @ rho + rho @ _QS)
    out = out - rates.kT * (_QT @ rho + rho @ _QT)
    return out


def measurement_only_rhs(rho: np.ndarray, h: np.ndarray, k: float) -> np.ndarray:
    """Spin-measurement generator without recombination; conserves the trace."""
    if k < 0:
        raise ValueError(f"k must be nonnegative (got {k})")
    _require_hermitian(rho)
    return _measurement_apply(rho, h, MeasurementParams(k, 0.0, 0.0))


def measurement_recombination_rhs(rho: np.ndarray, h: np.ndarray,
                                  mp: MeasurementParams) -> np.ndarray:
    """Measurement generator with probabilistic recombination per outcome."""
    _require_hermitian(rho)
    return _measurement_apply(rho, h, mp)


def _measurement_apply(rho, h, mp):
    out = _commutator_flow(rho, h)
    out = out + mp.k * ((1.0 - mp.pS) * (_QS @ rho @ _QS)
                        + (1.0 - mp.pT) * (_QT @ rho @ _QT)
                        - rho)
    return out


def measurement_recombination_rewritten_rhs(rho: np.ndarray, h: np.ndarray,
                                            mp: MeasurementParams) -> np.ndarray:
    """Same generator as :func:`measurement_recombination_rhs`, expressed with
    a single sandwich term plus anticommutator and scalar terms."""
    _require_hermitian(rho)
    return _measurement_rewritten_apply(rho, h, mp)


def _measurement_rewritten_apply(rho, h, mp):
    kS_t, kT_t = mp.ktilde_S, mp.ktilde_T
    out = _commutator_flow(rho, h)
    out = out + (2.0 * mp.k - kS_t - kT_t) * (_QS @ rho @ _QS)
    out = out - (mp.k - kT_t) * (_QS @ rho + rho @ _QS)
    out = out - kT_t * rho
    return out


def dephasing_identity_deviation(rho: np.ndarray) -> float:
    """Entrywise deviation between the half-sum of the two full dephasing
    Lindblad structures (for QS and QT) and the measurement-only dissipator.

    Both sides are equal for every matrix because QS + QT = 1; the returned
    deviation should be at roundoff level.
    """
    lhs = (2.0 * (_QS @ rho @ _QS) - _QS @ rho - rho @ _QS
           + 2.0 * (_QT @ rho @ _QT) - _QT @ rho - rho @ _QT)
    rhs = 2.0 * (_QS @ rho @ _QS + _QT @ rho @ _QT - rho)
    return float(np.max(np.abs(lhs - rhs)))


def dephasing_lindblad_identity_check(n_trials: int, seed: int) -> float:
    """Max :func:`dephasing_identity_deviation` over seeded random Hermitian inputs."""
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    rng = np.random.default_rng(seed)
    return max(dephasing_identity_deviation(random_hermitian(rng)) for _ in range(n_trials))


def recombination_yield_rates(rho: np.ndarray, rates: RateParams) -> tuple[float, float]:
    """Instantaneous recombination fluxes (2 kS Tr(QS rho), 2 kT Tr(QT rho)).

    Their time integrals are the singlet/triplet yields; under the haberkorn
    flow d(Tr rho)/dt equals minus their sum.
    """
    flux_s = 2.0 * rates.kS * float(np.trace(_QS @ rho).real)
    flux_t = 2.0 * rates.kT * float(np.trace(_QT @ rho).real)
    if flux_s < -1e-10 or flux_t < -1e-10:
        raise ValueError(f"negative recombination flux ({flux_s:.3e}, {flux_t:.3e}); "
                         "state is unphysical")
    return flux_s, flux_t


class Generator:
    """A one-pair model: its kind, Hamiltonian and rate parameters.

    Instances are immutable and callable on Hermitian 4x4 matrices. The
    vectorized 16x16 superoperator matrix is built lazily and cached.
    """

    def __init__(self, kind: GeneratorKind, h: np.ndarray, *,
                 rates: RateParams = None, measurement: MeasurementParams = None):
        h = np.asarray(h, dtype=complex)
        if h.shape != (DIM, DIM):
            raise ValueError(f"Hamiltonian must be {DIM}x{DIM}, got shape {h.shape}")
        defect = hermiticity_defect(h)
        if defect > 1e-12:
            raise ValueError(f"Hamiltonian is not Hermitian (defect {defect:.3e})")
        kind = GeneratorKind(kind)
        if kind == GeneratorKind.HABERKORN:
            if rates is None:
                raise ValueError("haberkorn generator needs RateParams")
        elif measurement is None:
            raise ValueError(f"{kind.value} generator needs MeasurementParams")
        if kind == GeneratorKind.JONES_HORE and measurement is not None:
            if abs(measurement.pS + measurement.pT - 1.0) > 1e-12 and measurement.k > 0:
                raise ValueError("jones-hore requires pS + pT = 1 (k = k~S + k~T)")
        self.kind = kind
        self.h = h
        self.rates = rates
        self.measurement = measurement
        self._matrix = None

    @classmethod
    def haberkorn(cls, h, rates: RateParams) -> "Generator":
        return cls(GeneratorKind.HABERKORN, h, rates=rates)

    @classmethod
    def measurement_only(cls, h, k: float) -> "Generator":
        return cls(GeneratorKind.MEASUREMENT_ONLY, h,
                   measurement=MeasurementParams(k, 0.0, 0.0))

    @classmethod
    def measurement_recombination(cls, h, mp: MeasurementParams) -> "Generator":
        return cls(GeneratorKind.MEASUREMENT_RECOMBINATION, h, measurement=mp)

    @classmethod
    def measurement_recombination_rewritten(cls, h, mp: MeasurementParams) -> "Generator":
        return cls(GeneratorKind.MEASUREMENT_RECOMBINATION_REWRITTEN, h, measurement=mp)

    @classmethod
    def jones_hore(cls, h, ktilde_S: float, ktilde_T: float) -> "Generator":
        """Measurement-recombination model at k = k~S + k~T (pS + pT = 1)."""
        if ktilde_S < 0 or ktilde_T < 0:
            raise ValueError("ktilde_S and ktilde_T must be nonnegative")
        k = ktilde_S + ktilde_T
        if k == 0:
            mp = MeasurementParams(0.0, 0.5, 0.5)
        else:
            mp = MeasurementParams(k, ktilde_S / k, ktilde_T / k)
        return cls(GeneratorKind.JONES_HORE, h, measurement=mp)

    def apply(self, rho: np.ndarray, validate: bool = True) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if validate:
            _require_hermitian(rho)
        if self.kind == GeneratorKind.HABERKORN:
            return _haberkorn_apply(rho, self.h, self.rates)
        if self.kind == GeneratorKind.MEASUREMENT_RECOMBINATION_REWRITTEN:
            return _measurement_rewritten_apply(rho, self.h, self.measurement)
        return _measurement_apply(rho, self.h, self.measurement)

    __call__ = apply

    def matrix(self) -> np.ndarray:
        """Vectorized superoperator (column-stacking convention), cached."""
        if self._matrix is None:
            from .propagate import superoperator_matrix

            self._matrix = superoperator_matrix(self)
        return self._matrix

    @property
    def rate_scale(self) -> float:
        """Largest rate parameter; used for step-size control."""
        if self.kind == GeneratorKind.HABERKORN:
            return self.rates.max_rate
        return self.measurement.k

    @property
    def step_scale(self) -> float:
        """Spectral norm of H plus the largest rate; bounds the stiffness."""
        return float(np.linalg.norm(self.h, 2)) + self.rate_scale

    def flux_coefficients(self) -> tuple[float, float]:
        """(cS, cT) such that flux_S = cS*Tr(QS rho), flux_T = cT*Tr(QT rho)
        and d(Tr rho)/dt = -(flux_S + flux_T) along the flow."""
        if self.kind == GeneratorKind.HABERKORN:
            return 2.0 * self.rates.kS, 2.0 * self.rates.kT
        if self.kind == GeneratorKind.MEASUREMENT_ONLY:
            return 0.0, 0.0
        return self.measurement.ktilde_S, self.measurement.ktilde_T

    @property
    def conserves_trace(self) -> bool:
        cs, ct = self.flux_coefficients()
        return cs == 0.0 and ct == 0.0

    def __repr__(self):
        params = self.rates if self.kind == GeneratorKind.HABERKORN else self.measurement
        return f"Generator({self.kind.value}, {params!r})"
