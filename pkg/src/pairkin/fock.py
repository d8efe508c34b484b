"""Truncated bosonic Fock space over the four pair modes.

Each surviving radical pair is treated as a bosonic 'particle' in one of the
four spin modes (S, T+, T0, T-). Recombination is a Lindblad annihilation
process per mode, so an initial state with at most ``n_max`` quanta per mode
never leaves the truncated space: the dynamics only destroys particles, which
makes the per-mode cutoff exact rather than approximate (the edge-occupation
test in the suite checks this).

The multi-pair state is a normalized density matrix on the truncated space;
the one-pair matrix is recovered from the bilinear moments
``rho[i, j] = <a_j^+ a_i>``, whose equations of motion close and reproduce
the haberkorn flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from . import _kernels
from .propagate import (NumericalContractError, TimeGrid, check_step_size,
                        compute_observables)
from .spin import DIM, RateParams, hermiticity_defect

DEFAULT_DIM_CAP = 81  # (2+1)^4: n_max = 2 over four modes

N_SPIN_MODES = 4


class FockSpace:
    """Truncated Fock space over ``n_modes`` modes with per-mode cutoff ``n_max``.

    Basis states are occupation tuples enumerated lexicographically (first
    mode most significant). For the canonical four-mode space the tuple is
    (nS, nT+, nT0, nT-), matching the one-pair basis order.
    """

    def __init__(self, n_max: int, n_modes: int = N_SPIN_MODES):
        if n_max < 0:
            raise ValueError(f"n_max must be nonnegative (got {n_max})")
        if n_modes < 1:
            raise ValueError(f"n_modes must be positive (got {n_modes})")
        self.n_max = int(n_max)
        self.n_modes = int(n_modes)
        self.dim = (self.n_max + 1) ** self.n_modes

    def __eq__(self, other):
        return (isinstance(other, FockSpace)
                and (self.n_max, self.n_modes) == (other.n_max, other.n_modes))

    def __hash__(self):
        return hash((FockSpace, self.n_max, self.n_modes))

    def __repr__(self):
        return f"FockSpace(n_max={self.n_max}, n_modes={self.n_modes})"

    @cached_property
    def strides(self) -> np.ndarray:
        return (self.n_max + 1) ** np.arange(self.n_modes - 1, -1, -1)

    @cached_property
    def occupations(self) -> np.ndarray:
        """(dim, n_modes) occupation numbers of every basis state."""
        grids = np.indices((self.n_max + 1,) * self.n_modes)
        return grids.reshape(self.n_modes, -1).T

    @property
    def vacuum_index(self) -> int:
        return 0

    def index(self, occupations) -> int:
        """Basis index of an occupation tuple."""
        occ = np.asarray(occupations, dtype=int)
        if occ.shape != (self.n_modes,):
            raise ValueError(f"expected {self.n_modes} occupation numbers, got {occ.shape}")
        if np.any(occ < 0) or np.any(occ > self.n_max):
            raise ValueError(f"occupations {occ.tolist()} outside [0, {self.n_max}]")
        return int(occ @ self.strides)

    def single_occupation_indices(self) -> np.ndarray:
        """Index of the one-quantum state of each mode, in mode order."""
        if self.n_max < 1:
            raise ValueError("space has no one-quantum states (n_max = 0)")
        return self.strides.copy()

    @cached_property
    def _ladder_pairs(self):
        if self.n_max < 1:
            raise ValueError("ladder operators need n_max >= 1")
        pairs = []
        occ = self.occupations
        for m in range(self.n_modes):
            src = np.nonzero(occ[:, m] > 0)[0]
            dst = src - self.strides[m]
            amp = np.sqrt(occ[src, m]).astype(complex)
            a = sparse.csr_matrix((amp, (dst, src)), shape=(self.dim, self.dim))
            pairs.append((a, a.conj().T.tocsr()))
        return tuple(pairs)

    @cached_property
    def _dense_ladder(self) -> np.ndarray:
        return np.stack([np.asarray(a.todense()) for a, _ in self._ladder_pairs])

    @cached_property
    def _bilinears(self) -> np.ndarray:
        """(n_modes, n_modes, dim, dim) stack of a_j^+ a_i, indexed [i, j]."""
        a = self._dense_ladder
        adag = a.conj().transpose(0, 2, 1)
        return np.einsum("jab,ibc->ijac", adag, a)


def ladder_operators(space: FockSpace):
    """Per-mode (annihilation, creation) sparse operator pairs, in mode order."""
    return space._ladder_pairs


def number_operator(space: FockSpace, mode: int):
    """Sparse number operator a^+ a of one mode."""
    return sparse.diags(space.occupations[:, mode].astype(complex)).tocsr()


def total_number_operator(space: FockSpace):
    """Sparse total number operator summed over modes."""
    return sparse.diags(space.occupations.sum(axis=1).astype(complex)).tocsr()


def _dense(op) -> np.ndarray:
    if sparse.issparse(op):
        return np.asarray(op.todense(), dtype=complex)
    return np.asarray(op, dtype=complex)


def second_quantize(h: np.ndarray, space: FockSpace):
    """Lift a one-particle Hamiltonian to the Fock space: sum_ij h_ij a_i^+ a_j.

    This is the number-conserving one-body lift; restricted to the one-quantum
    sector it reproduces ``h`` entry for entry.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape != (space.n_modes, space.n_modes):
        raise ValueError(f"Hamiltonian shape {h.shape} does not match "
                         f"{space.n_modes} modes")
    if hermiticity_defect(h) > 1e-12:
        raise ValueError("one-particle Hamiltonian must be Hermitian")
    pairs = space._ladder_pairs
    out = sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    for i in range(space.n_modes):
        for j in range(space.n_modes):
            if h[i, j] != 0:
                out = out + h[i, j] * (pairs[i][1] @ pairs[j][0])
    return out.tocsr()


def one_pair_sector(op, space: FockSpace) -> np.ndarray:
    """Restriction of an operator to the one-quantum sector, in mode order."""
    idx = space.single_occupation_indices()
    return _dense(op)[np.ix_(idx, idx)]


def fock_occupation_state(space: FockSpace, occupations) -> np.ndarray:
    """Pure density matrix |n1, ..., nk><n1, ..., nk|."""
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    idx = space.index(occupations)
    rho[idx, idx] = 1.0
    return rho


def prepare_one_pair(rho4: np.ndarray, space: FockSpace) -> np.ndarray:
    """Lift a one-pair state into the Fock space as a mixture of one-quantum
    pure states, padding with vacuum weight when Tr(rho4) < 1.

    Requires 0 <= Tr(rho4) <= 1; states with larger trace are not convex
    mixtures of one-pair preparations.
    """
    if space.n_modes != N_SPIN_MODES:
        raise ValueError("one-pair preparation needs the four spin modes")
    rho4 = np.asarray(rho4, dtype=complex)
    if hermiticity_defect(rho4) > 1e-10:
        raise ValueError("one-pair state must be Hermitian")
    w, vecs = np.linalg.eigh(0.5 * (rho4 + rho4.conj().T))
    if w[0] < -1e-10:
        raise ValueError(f"one-pair state is not positive (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    total = float(np.sum(w))
    if total > 1.0 + 1e-9:
        raise ValueError(f"Tr(rho) = {total:.6f} > 1 cannot be prepared as a "
                         "mixture of one-pair states")
    idx = space.single_occupation_indices()
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for k in range(DIM):
        if w[k] == 0.0:
            continue
        psi = np.zeros(space.dim, dtype=complex)
        psi[idx] = vecs[:, k]
        out += w[k] * np.outer(psi, psi.conj())
    vac_weight = 1.0 - total
    if vac_weight > 0:
        out[space.vacuum_index, space.vacuum_index] += vac_weight
    return out


def _spin_jumps(rates: RateParams, space: FockSpace):
    if space.n_modes != N_SPIN_MODES:
        raise ValueError(f"spin-selective recombination needs {N_SPIN_MODES} modes, "
                         f"space has {space.n_modes}")
    coeffs = np.array([rates.kS, rates.kT, rates.kT, rates.kT])
    return space._dense_ladder, coeffs


def multipair_rhs(rho: np.ndarray, h_hat, rates: RateParams,
                  space: FockSpace) -> np.ndarray:
    """Right-hand side of the multi-pair kinetic equation.

    Full three-term Lindblad annihilation per mode (rate kS on the singlet
    mode, kT on each triplet mode) plus the Hamiltonian commutator; the
    result is traceless, so the multi-pair state stays normalized while pairs
    pile up in the vacuum.
    """
    rho = np.asarray(rho, dtype=complex)
    defect = hermiticity_defect(rho)
    if defect > 1e-10:
        raise ValueError(f"multi-pair state is not Hermitian (defect {defect:.3e})")
    a_stack, coeffs = _spin_jumps(rates, space)
    h = _dense(h_hat)
    out = -1j * (h @ rho - rho @ h)
    for m in range(a_stack.shape[0]):
        if coeffs[m] == 0.0:
            continue
        a = a_stack[m]
        adag = a.conj().T
        n = adag @ a
        out += coeffs[m] * (2.0 * (a @ rho @ adag) - n @ rho - rho @ n)
    return out


def reduce_to_one_pair(rho: np.ndarray, space: FockSpace) -> np.ndarray:
    """One-pair matrix of bilinear moments: rho4[i, j] = <a_j^+ a_i>.

    The trace of the result is the mean pair number <N>.
    """
    if space.n_modes != N_SPIN_MODES:
        raise ValueError("one-pair reduction needs the four spin modes")
    rho = np.asarray(rho, dtype=complex)
    return np.einsum("ab,ijba->ij", rho, space._bilinears)


def mean_value_rhs(op, rho: np.ndarray, h_hat, rates: RateParams,
                   space: FockSpace) -> complex:
    """Time derivative of <op> along the multi-pair flow.

    Computed from the adjoint (Heisenberg-picture) form
    ``-i<[op, H]> + sum_m c_m (<a_m^+ [op, a_m]> + <[a_m^+, op] a_m>)``;
    it equals ``Tr(op @ multipair_rhs(rho))``.
    """
    o = _dense(op)
    h = _dense(h_hat)
    rho = np.asarray(rho, dtype=complex)
    a_stack, coeffs = _spin_jumps(rates, space)

    def mean(x):
        return complex(np.trace(rho @ x))

    val = -1j * mean(o @ h - h @ o)
    for m in range(a_stack.shape[0]):
        if coeffs[m] == 0.0:
            continue
        a = a_stack[m]
        adag = a.conj().T
        val += coeffs[m] * (mean(adag @ (o @ a - a @ o)) + mean((adag @ o - o @ adag) @ a))
    return val


@dataclass
class MultiPairTrajectory:
    """Multi-pair trajectory plus its one-pair reduction at every grid point."""

    grid: TimeGrid
    space: FockSpace
    states: np.ndarray | None
    reduced: np.ndarray
    observables: dict

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()

    def observable(self, name: str) -> np.ndarray:
        try:
            return self.observables[name]
        except KeyError:
            raise KeyError(f"unknown observable {name!r}") from None


def integrate_lindblad(rho0: np.ndarray, h_op, jumps, grid: TimeGrid) -> np.ndarray:
    """Propagate a generic Lindblad equation in matrix form.

    ``jumps`` is a sequence of (coefficient, operator) pairs using the
    2 A rho A^+ - {A^+ A, rho} dissipator convention. Returns the stacked
    (n_steps+1, dim, dim) trajectory.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    defect = hermiticity_defect(rho0)
    if defect > 1e-10:
        raise ValueError(f"initial state is not Hermitian (defect {defect:.3e})")
    h = _dense(h_op)
    coeffs = np.array([float(c) for c, _ in jumps])
    if np.any(coeffs < 0):
        raise ValueError("jump coefficients must be nonnegative")
    a_stack = np.stack([_dense(a) for _, a in jumps]) if jumps else \
        np.zeros((0, rho0.shape[0], rho0.shape[0]), dtype=complex)
    scale = float(np.linalg.norm(h, 2)) + (float(np.max(coeffs)) if len(coeffs) else 0.0)
    check_step_size(grid.dt, scale)
    return _kernels.rk4_lindblad(h, a_stack, coeffs, rho0, grid.dt, grid.n_steps)


def integrate_multipair(rho0: np.ndarray, h_hat, rates: RateParams, grid: TimeGrid,
                        space: FockSpace, keep_states: bool = True,
                        validate: bool = True,
                        dim_cap: int = DEFAULT_DIM_CAP) -> MultiPairTrajectory:
    """Propagate the multi-pair kinetic equation and reduce at every grid point.

    The state must be normalized (Tr = 1). Contract checks (Hermiticity,
    trace conservation to 1e-9, positivity floor -1e-8) run on the whole
    trajectory unless ``validate=False``.
    """
    if space.dim > dim_cap:
        raise ValueError(f"Fock dimension {space.dim} exceeds the cap {dim_cap}; "
                         "lower n_max or raise dim_cap")
    a_stack, coeffs = _spin_jumps(rates, space)
    jumps = list(zip(coeffs, a_stack))
    tr0 = float(np.trace(np.asarray(rho0)).real)
    if abs(tr0 - 1.0) > 1e-10:
        raise ValueError(f"multi-pair state must have unit trace (got {tr0:.6e})")
    states = integrate_lindblad(rho0, h_hat, jumps, grid)
    reduced = np.einsum("tab,ijba->tij", states, space._bilinears)
    obs = compute_observables(reduced, (2.0 * rates.kS, 2.0 * rates.kT))
    obs["mean_N"] = obs.pop("trace")
    obs["trace"] = np.real(np.trace(states, axis1=1, axis2=2))
    herm = 0.5 * (states + states.conj().transpose(0, 2, 1))
    obs["min_eig"] = np.linalg.eigvalsh(herm)[:, 0]
    if validate:
        _check_multipair_contracts(states, obs, grid)
    return MultiPairTrajectory(grid=grid, space=space,
                               states=states if keep_states else None,
                               reduced=reduced, observables=obs)


def _check_multipair_contracts(states, obs, grid):
    times = grid.times()
    defects = np.max(np.abs(states - states.conj().transpose(0, 2, 1)), axis=(1, 2))
    for name, values, bound in (
        ("hermiticity defect", defects, 1e-10),
        ("trace deviation", np.abs(obs["trace"] - 1.0), 1e-9),
        ("negative eigenvalue", -obs["min_eig"], 1e-8),
    ):
        bad = np.nonzero(values > bound)[0]
        if len(bad):
            i = int(bad[0])
            raise NumericalContractError(
                f"multi-pair {name} {values[i]:.3e} exceeds {bound:.0e} "
                f"at t = {times[i]:.6g} (grid point {i})")


def equivalence_max_deviation(rho0: np.ndarray, h: np.ndarray, rates: RateParams,
                              grid: TimeGrid, n_max: int = 1) -> float:
    """Max entrywise deviation between the one-pair haberkorn trajectory and
    the reduced multi-pair trajectory from the same preparation.

    The two routes share nothing but the model parameters: one runs the 4x4
    generator, the other runs the full truncated Fock dynamics and reduces.
    """
    from .models import Generator
    from .propagate import integrate

    gen = Generator.haberkorn(h, rates)
    one_pair = integrate(gen, rho0, grid)
    space = FockSpace(n_max)
    h_hat = second_quantize(np.asarray(h, dtype=complex), space)
    rho_fock = prepare_one_pair(rho0, space)
    multi = integrate_multipair(rho_fock, h_hat, rates, grid, space, keep_states=False)
    return float(np.max(np.abs(one_pair.states - multi.reduced)))


equivalence_report = equivalence_max_deviation
