"""Deterministic time propagation and the closed-form haberkorn propagator.

Propagation is fixed-step RK4. One-pair models are linear, so each generator
is vectorized once into its 16x16 superoperator matrix (column-stacking
convention: vec(rho) stacks the columns of rho) and the trajectory is stepped
by the matvec kernel. The closed-form haberkorn propagator
``W = expm(-(iH + kS QS + kT QT) t)`` serves as an independent oracle.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import _kernels
from .spin import DIM, RateParams, _QS, _QT, hermiticity_defect

STEP_WARN_THRESHOLD = 0.1
STEP_ERROR_THRESHOLD = 1.0


class StepSizeError(ValueError):
    """Raised when the requested step is too coarse for the model's stiffness."""


class NumericalContractError(RuntimeError):
    """A propagated trajectory violated a state invariant beyond tolerance."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid from t0 to t_end with n_steps steps."""

    t0: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > self.t0:
            raise ValueError(f"t_end ({self.t_end}) must exceed t0 ({self.t0})")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be at least 1 (got {self.n_steps})")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t0) / self.n_steps

    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t_end, self.n_steps + 1)


# Observable vocabulary. Coherence pairs are the upper-triangle entries in
# basis order; coh_A_B reads rho[A, B].
_COHERENCE_PAIRS = (
    ("S", "Tplus", 0, 1),
    ("S", "T0", 0, 2),
    ("S", "Tminus", 0, 3),
    ("Tplus", "T0", 1, 2),
    ("Tplus", "Tminus", 1, 3),
    ("T0", "Tminus", 2, 3),
)

ONE_PAIR_OBSERVABLES = (
    ("trace", "pop_S", "pop_Tplus", "pop_T0", "pop_Tminus")
    + tuple(f"coh_{a}_{b}_{part}" for a, b, _, _ in _COHERENCE_PAIRS for part in ("re", "im"))
    + ("flux_S", "flux_T")
)

MULTIPAIR_OBSERVABLES = ONE_PAIR_OBSERVABLES + ("mean_N",)


def compute_observables(states: np.ndarray,
                        flux_coefficients: tuple[float, float] = (0.0, 0.0)) -> dict:
    """Standard per-point observables of a stacked (n, 4, 4) state trajectory."""
    obs: dict[str, np.ndarray] = {}
    pops = [np.real(states[:, i, i]) for i in range(DIM)]
    obs["trace"] = sum(pops)
    obs["pop_S"], obs["pop_Tplus"], obs["pop_T0"], obs["pop_Tminus"] = pops
    for a, b, i, j in _COHERENCE_PAIRS:
        obs[f"coh_{a}_{b}_re"] = np.real(states[:, i, j])
        obs[f"coh_{a}_{b}_im"] = np.imag(states[:, i, j])
    cs, ct = flux_coefficients
    obs["flux_S"] = cs * obs["pop_S"]
    obs["flux_T"] = ct * (obs["pop_Tplus"] + obs["pop_T0"] + obs["pop_Tminus"])
    return obs


@dataclass
class Trajectory:
    """Time grid, propagated states and derived per-point observables."""

    grid: TimeGrid
    states: np.ndarray
    observables: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()

    def observable(self, name: str) -> np.ndarray:
        try:
            return self.observables[name]
        except KeyError:
            raise KeyError(f"unknown observable {name!r}") from None


def _vectorize_linear_map(apply_fn, dim: int) -> np.ndarray:
    """Matrix of a linear map on dim x dim matrices, column-stacking convention."""
    n = dim * dim
    L = np.empty((n, n), dtype=complex)
    for k in range(n):
        e = np.zeros(n, dtype=complex)
        e[k] = 1.0
        basis = e.reshape((dim, dim), order="F")
        L[:, k] = apply_fn(basis).flatten(order="F")
    return L


def superoperator_matrix(generator) -> np.ndarray:
    """16x16 matrix with ``matrix @ vec(rho) = vec(generator(rho))``."""
    return _vectorize_linear_map(lambda m: generator.apply(m, validate=False), DIM)


def check_step_size(dt: float, scale: float) -> None:
    """Warn when dt*scale exceeds 0.1; refuse to integrate beyond 1."""
    z = dt * scale
    if z > STEP_ERROR_THRESHOLD:
        raise StepSizeError(
            f"step size {dt:.3e} too coarse: dt*(|H| + max rate) = {z:.3f} > 1")
    if z > STEP_WARN_THRESHOLD:
        warnings.warn(f"coarse step: dt*(|H| + max rate) = {z:.3f} > 0.1; "
                      "RK4 accuracy may be poor", stacklevel=3)


def integrate(generator, rho0: np.ndarray, grid: TimeGrid, order: str = "rk4") -> Trajectory:
    """Propagate ``d rho/dt = generator(rho)`` over a uniform grid.

    The generator is vectorized once; stepping runs in the kernel backend.
    """
    if order != "rk4":
        raise ValueError(f"unsupported integration order {order!r}; only 'rk4'")
    rho0 = np.asarray(rho0, dtype=complex)
    defect = hermiticity_defect(rho0)
    if defect > 1e-10:
        raise ValueError(f"initial state is not Hermitian (defect {defect:.3e})")
    check_step_size(grid.dt, generator.step_scale)
    L = generator.matrix()
    vecs = _kernels.rk4_superop(L, rho0.flatten(order="F"), grid.dt, grid.n_steps)
    states = np.ascontiguousarray(vecs.reshape(-1, DIM, DIM).transpose(0, 2, 1))
    obs = compute_observables(states, generator.flux_coefficients())
    return Trajectory(grid=grid, states=states, observables=obs)


def haberkorn_exact(rho0: np.ndarray, h: np.ndarray, rates: RateParams,
                    t: float) -> np.ndarray:
    """Closed-form haberkorn state at time t.

    The anticommutator losses combine with -iH into a single non-Hermitian
    effective Hamiltonian, so the flow is ``W rho0 W^+`` with
    ``W = expm(-(iH + kS QS + kT QT) t)``; positivity of rho0 is preserved
    exactly.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative (got {t})")
    w = expm(-(1j * np.asarray(h, dtype=complex) + rates.kS * _QS + rates.kT * _QT) * t)
    return w @ np.asarray(rho0, dtype=complex) @ w.conj().T


def hermiticity_defects(states: np.ndarray) -> np.ndarray:
    """Per-point Hermiticity defect of a stacked trajectory."""
    return np.max(np.abs(states - states.conj().transpose(0, 2, 1)), axis=(1, 2))


def min_eigenvalues(states: np.ndarray) -> np.ndarray:
    """Per-point smallest eigenvalue (of the Hermitian part) of each state."""
    herm = 0.5 * (states + states.conj().transpose(0, 2, 1))
    return np.linalg.eigvalsh(herm)[:, 0]


def max_trace_increase(states: np.ndarray) -> float:
    """Largest per-step increase of the real trace along a trajectory."""
    traces = np.real(np.trace(states, axis1=1, axis2=2))
    if len(traces) < 2:
        return 0.0
    return float(np.max(np.diff(traces)))


def measure_rk4_order(h: np.ndarray, rates: RateParams, rho0: np.ndarray,
                      t_end: float, n_coarse: int = 40) -> float:
    """Observed RK4 convergence exponent against the closed-form propagator.

    Integrates to ``t_end`` with ``n_coarse`` and ``2*n_coarse`` steps and
    returns log2 of the final-state error ratio (should be close to 4).
    """
    from .models import Generator

    gen = Generator.haberkorn(h, rates)
    exact = haberkorn_exact(rho0, h, rates, t_end)
    errors = []
    for n in (n_coarse, 2 * n_coarse):
        traj = integrate(gen, rho0, TimeGrid(0.0, t_end, n))
        errors.append(np.max(np.abs(traj.states[-1] - exact)))
    return float(np.log2(errors[0] / errors[1]))
