"""Invariant suite behind the ``pairkin selftest`` subcommand.

Every check is deterministic (fixed seeds) so the printed table and the
report file are byte-identical across runs.
"""

from __future__ import annotations

import numpy as np

from .bornmarkov import (BathCouplingParams, ExponentialCorrelation,
                         pseudomode_ladder, rates_from_correlation)
from .fock import (FockSpace, equivalence_max_deviation, fock_occupation_state,
                   integrate_multipair, ladder_operators, mean_value_rhs,
                   multipair_rhs, second_quantize)
from .models import (Generator, MeasurementParams,
                     dephasing_lindblad_identity_check,
                     measurement_recombination_rewritten_rhs,
                     measurement_recombination_rhs, recombination_yield_rates)
from .propagate import (TimeGrid, haberkorn_exact, integrate, max_trace_increase,
                        measure_rk4_order, min_eigenvalues, superoperator_matrix)
from .spin import (RateParams, make_hamiltonian, preset_state, projectors,
                   random_density, random_hermitian)


class CheckFailure(Exception):
    pass


def _ensure(ok: bool, detail: str) -> str:
    if not ok:
        raise CheckFailure(detail)
    return detail


def check_projector_algebra() -> str:
    qs, qt = projectors()
    eye = np.eye(4)
    exact = (np.array_equal(qs @ qs, qs) and np.array_equal(qt @ qt, qt)
             and np.array_equal(qs + qt, eye)
             and np.array_equal(qs @ qt, np.zeros((4, 4))))
    return _ensure(exact, "idempotence, completeness, orthogonality exact")


def check_dephasing_identity() -> str:
    dev = dephasing_lindblad_identity_check(100, seed=42)
    return _ensure(dev <= 1e-13, f"max deviation {dev:.3e} (tol 1e-13)")


def check_measurement_forms_identity() -> str:
    rng = np.random.default_rng(7)
    dev = 0.0
    for _ in range(200):
        rho = random_hermitian(rng)
        h = random_hermitian(rng)
        mp = MeasurementParams(rng.uniform(0, 3), rng.uniform(), rng.uniform())
        a = measurement_recombination_rhs(rho, h, mp)
        b = measurement_recombination_rewritten_rhs(rho, h, mp)
        dev = max(dev, float(np.max(np.abs(a - b))))
    return _ensure(dev <= 1e-12, f"max deviation {dev:.3e} (tol 1e-12)")


def check_generator_hermiticity() -> str:
    rng = np.random.default_rng(11)
    dev = 0.0
    for _ in range(50):
        rho = random_hermitian(rng)
        h = random_hermitian(rng)
        gens = [
            Generator.haberkorn(h, RateParams(rng.uniform(0, 2), rng.uniform(0, 2))),
            Generator.measurement_only(h, rng.uniform(0, 2)),
            Generator.measurement_recombination(
                h, MeasurementParams(rng.uniform(0, 2), rng.uniform(), rng.uniform())),
            Generator.jones_hore(h, rng.uniform(0, 2), rng.uniform(0, 2)),
        ]
        for gen in gens:
            out = gen(rho)
            dev = max(dev, float(np.max(np.abs(out - out.conj().T))))
    return _ensure(dev <= 1e-12, f"max Hermiticity defect {dev:.3e} (tol 1e-12)")


def check_measurement_only_trace() -> str:
    rng = np.random.default_rng(13)
    gen = Generator.measurement_only(random_hermitian(rng), 5.0)
    rhs_trace = max(abs(complex(np.trace(gen(random_hermitian(rng)))))
                    for _ in range(20))
    traj = integrate(gen, random_density(rng), TimeGrid(0.0, 2.0, 1500))
    drift = float(np.max(np.abs(traj.observables["trace"]
                                - traj.observables["trace"][0])))
    return _ensure(rhs_trace <= 1e-12 and drift <= 1e-9,
                   f"rhs trace {rhs_trace:.3e}, trajectory drift {drift:.3e}")


def check_haberkorn_decay() -> str:
    gen = Generator.haberkorn(make_hamiltonian("zero"), RateParams(1.0, 0.0))
    traj = integrate(gen, preset_state("singlet"), TimeGrid(0.0, 1.0, 1000))
    err = abs(traj.observables["pop_S"][-1] - np.exp(-2.0))
    return _ensure(err <= 1e-8, f"pop_S(1) vs e^-2: error {err:.3e}")


def check_rabi() -> str:
    omega = 1.3
    gen = Generator.haberkorn(make_hamiltonian("st0-mixing", [omega]),
                              RateParams(0.0, 0.0))
    traj = integrate(gen, preset_state("singlet"), TimeGrid(0.0, 3.0, 3000))
    err = float(np.max(np.abs(traj.observables["pop_S"]
                              - np.cos(omega * traj.times) ** 2)))
    return _ensure(err <= 1e-8, f"pop_S vs cos^2: max error {err:.3e}")


def check_rk4_vs_exact() -> str:
    rng = np.random.default_rng(17)
    h = random_hermitian(rng)
    rates = RateParams(rng.uniform(0, 2), rng.uniform(0, 2))
    rho0 = random_density(rng)
    traj = integrate(Generator.haberkorn(h, rates), rho0, TimeGrid(0.0, 0.7, 2000))
    exact = haberkorn_exact(rho0, h, rates, 0.7)
    err = float(np.max(np.abs(traj.states[-1] - exact)))
    return _ensure(err <= 1e-8, f"final-state error {err:.3e} (tol 1e-8)")


def check_rk4_order() -> str:
    rng = np.random.default_rng(19)
    p = measure_rk4_order(make_hamiltonian("st0-mixing", [1.0]),
                          RateParams(0.3, 0.1), random_density(rng), 2.0, 40)
    return _ensure(3.7 <= p <= 4.3, f"measured exponent {p:.3f} (want [3.7, 4.3])")


def check_superoperator_structure() -> str:
    h0 = make_hamiltonian("zero")
    m = superoperator_matrix(Generator.measurement_only(h0, 1.7))
    nullity = int(np.sum(np.abs(np.linalg.eigvals(m)) < 1e-10))
    hab = superoperator_matrix(Generator.haberkorn(h0, RateParams(1.0, 0.0)))
    abscissa = float(np.max(np.linalg.eigvals(hab).real))
    ss = hab[0, 0].real  # vec index 0 is the (S,S) entry
    ok = nullity == 10 and abscissa <= 1e-12 and abs(ss + 2.0) < 1e-12
    return _ensure(ok, f"nullity {nullity} (want 10), abscissa {abscissa:.1e}, "
                       f"SS rate {ss:.3f} (want -2)")


def check_haberkorn_positivity() -> str:
    rng = np.random.default_rng(23)
    h = random_hermitian(rng)
    rates = RateParams(1.5, 0.4)
    rho0 = random_density(rng)
    traj = integrate(Generator.haberkorn(h, rates), rho0, TimeGrid(0.0, 3.0, 3000))
    worst_rk4 = float(np.min(min_eigenvalues(traj.states)))
    worst_exact = min(float(np.min(np.linalg.eigvalsh(
        haberkorn_exact(rho0, h, rates, t)))) for t in (0.5, 1.5, 3.0))
    ok = worst_rk4 >= -1e-9 and worst_exact >= -1e-9
    return _ensure(ok, f"min eigenvalue rk4 {worst_rk4:.3e}, exact {worst_exact:.3e}")


def check_fock_commutators() -> str:
    # At n_max = 1 every ladder amplitude is 1, so the identities are bitwise
    # exact; at larger cutoffs products of sqrt(n) amplitudes carry one ulp.
    worst_unit, worst = 0.0, 0.0
    for n_max, tol in ((1, 0.0), (2, 1e-14)):
        space = FockSpace(n_max=n_max)
        pairs = ladder_operators(space)
        occ = space.occupations
        defect = 0.0
        for i in range(4):
            for j in range(4):
                a_i = np.asarray(pairs[i][0].todense())
                adag_j = np.asarray(pairs[j][1].todense())
                comm = a_i @ adag_j - adag_j @ a_i
                expected = np.eye(space.dim) if i == j else np.zeros((space.dim, space.dim))
                cols = np.nonzero((occ[:, i] < n_max) & (occ[:, j] < n_max))[0]
                defect = max(defect, float(np.max(np.abs(
                    comm[:, cols] - expected[:, cols]))))
                a_j = np.asarray(pairs[j][0].todense())
                defect = max(defect, float(np.max(np.abs(a_i @ a_j - a_j @ a_i))))
        if n_max == 1:
            worst_unit = defect
        else:
            worst = defect
    ok = worst_unit == 0.0 and worst <= 1e-14
    return _ensure(ok, f"defect {worst_unit:.1e} at n_max=1 (want exact), "
                       f"{worst:.1e} at n_max=2 (tol 1e-14)")


def check_multipair_conservation() -> str:
    space = FockSpace(n_max=2)
    h_hat = second_quantize(make_hamiltonian("st0-mixing", [1.0]), space)
    rho0 = fock_occupation_state(space, (2, 0, 0, 0))
    traj = integrate_multipair(rho0, h_hat, RateParams(1.0, 0.3),
                               TimeGrid(0.0, 1.0, 800), space, keep_states=True)
    trace_dev = float(np.max(np.abs(traj.observables["trace"] - 1.0)))
    min_eig = float(np.min(traj.observables["min_eig"]))
    # No leakage: the Hamiltonian conserves and the dissipators lower the total
    # pair number, so sectors above the initial total stay empty. One quantum
    # in a cutoff-2 space must never populate any two-quantum state.
    traj1 = integrate_multipair(fock_occupation_state(space, (1, 0, 0, 0)), h_hat,
                                RateParams(1.0, 0.3), TimeGrid(0.0, 1.0, 800),
                                space, keep_states=True)
    above = np.nonzero(space.occupations.sum(axis=1) > 1)[0]
    leak = float(np.max(np.abs(traj1.states[:, above, above].real)))
    ok = trace_dev <= 1e-9 and min_eig >= -1e-8 and leak == 0.0
    return _ensure(ok, f"trace dev {trace_dev:.3e}, min eig {min_eig:.3e}, "
                       f"leak above initial sector {leak:.1e}")


def check_adjoint_consistency() -> str:
    space = FockSpace(n_max=1)
    rng = np.random.default_rng(29)
    h_hat = second_quantize(random_hermitian(rng), space)
    rates = RateParams(0.8, 0.5)
    worst = 0.0
    for _ in range(50):
        op = random_hermitian(rng, dim=space.dim, scale=0.5)
        rho = random_density(rng, dim=space.dim)
        lhs = mean_value_rhs(op, rho, h_hat, rates, space)
        rhs = complex(np.trace(op @ multipair_rhs(rho, h_hat, rates, space)))
        worst = max(worst, abs(lhs - rhs))
    return _ensure(worst <= 1e-11, f"max |adjoint mismatch| {worst:.3e} (tol 1e-11)")


def check_reduction_equivalence() -> str:
    rng = np.random.default_rng(31)
    worst = 0.0
    scenarios = [
        (preset_state("singlet"), make_hamiltonian("st0-mixing", [1.0]),
         RateParams(1.0, 0.3)),
        (preset_state("mixed"), random_hermitian(rng), RateParams(0.5, 2.0)),
        (random_density(rng), make_hamiltonian("exchange", [2.0]),
         RateParams(3.0, 0.0)),
        (preset_state("coherent", alpha=0.6, beta=0.8), random_hermitian(rng),
         RateParams(0.0, 0.0)),
    ]
    for rho0, h, rates in scenarios:
        scale = max(np.linalg.norm(h, 2) + rates.max_rate, 1.0)
        grid = TimeGrid(0.0, 3.0 / scale, 600)
        worst = max(worst, equivalence_max_deviation(rho0, h, rates, grid))
    return _ensure(worst <= 1e-7, f"max deviation {worst:.3e} (tol 1e-7)")


def check_moment_decay_rates() -> str:
    space = FockSpace(n_max=1)
    kS, kT = 0.7, 0.4
    psi = np.zeros(space.dim, dtype=complex)
    psi[space.single_occupation_indices()] = 0.5
    rho0 = np.outer(psi, psi.conj())
    grid = TimeGrid(0.0, 2.0, 2000)
    traj = integrate_multipair(rho0, second_quantize(np.zeros((4, 4)), space),
                               RateParams(kS, kT), grid, space, keep_states=False)
    worst = 0.0
    times = traj.times
    for entry, rate in (((0, 0), 2 * kS), ((2, 0), kS + kT), ((3, 1), 2 * kT)):
        moment = np.abs(traj.reduced[:, entry[0], entry[1]])
        slope = np.polyfit(times, np.log(moment), 1)[0]
        worst = max(worst, abs(-slope - rate) / rate)
    return _ensure(worst <= 1e-6, f"max relative rate error {worst:.3e} (tol 1e-6)")


def check_bornmarkov_lorentzian() -> str:
    worst = 0.0
    for delta in (0.0, 1.0):
        g = ExponentialCorrelation(1.0, 1.0, delta)
        kS, kap = rates_from_correlation(g, BathCouplingParams(2.0))
        denom = 1.0 + delta * delta
        worst = max(worst, abs(kS - 2.0 / denom) / (2.0 / denom))
        exact_shift = -2.0 * delta / denom
        if exact_shift != 0:
            worst = max(worst, abs(kap - exact_shift) / abs(exact_shift))
        else:
            worst = max(worst, abs(kap))
    return _ensure(worst <= 1e-8, f"max relative error {worst:.3e} (tol 1e-8)")


def check_pseudomode_ladder() -> str:
    results = pseudomode_ladder([0.2, 0.1, 0.05], gamma=1.0, delta=0.0)
    errors = [r.relative_error for r in results]
    monotone = all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
    ok = monotone and errors[-1] <= 0.05
    return _ensure(ok, "relative errors " + ", ".join(f"{e:.4f}" for e in errors))


def check_model_difference() -> str:
    h = make_hamiltonian("st0-mixing", [1.0])
    grid = TimeGrid(0.0, 3.0, 3000)
    rho0 = preset_state("singlet")
    hab = integrate(Generator.haberkorn(h, RateParams(1.0, 0.0)), rho0, grid)
    jh = integrate(Generator.jones_hore(h, 2.0, 0.0), rho0, grid)
    dev = float(np.max(np.abs(hab.states - jh.states)))
    return _ensure(dev > 1e-3, f"max trajectory deviation {dev:.3e} (want > 1e-3)")


def check_yield_fluxes() -> str:
    rates = RateParams(1.0, 3.0)
    mixed = 0.5 * preset_state("singlet") + 0.5 * preset_state("t0")
    fs, ft = recombination_yield_rates(mixed, rates)
    gen = Generator.haberkorn(make_hamiltonian("zero"), rates)
    traj = integrate(gen, preset_state("mixed"), TimeGrid(0.0, 0.5, 500))
    inc = max_trace_increase(traj.states)
    ok = abs(fs - 1.0) < 1e-12 and abs(ft - 3.0) < 1e-12 and inc <= 0.0
    return _ensure(ok, f"fluxes ({fs:.3f}, {ft:.3f}), max trace increase {inc:.1e}")


CHECKS = (
    ("projector-algebra", check_projector_algebra),
    ("dephasing-identity", check_dephasing_identity),
    ("measurement-forms-identity", check_measurement_forms_identity),
    ("generator-hermiticity", check_generator_hermiticity),
    ("measurement-only-trace", check_measurement_only_trace),
    ("haberkorn-exponential-decay", check_haberkorn_decay),
    ("rabi-oscillation", check_rabi),
    ("rk4-vs-exact", check_rk4_vs_exact),
    ("rk4-order", check_rk4_order),
    ("superoperator-structure", check_superoperator_structure),
    ("haberkorn-positivity", check_haberkorn_positivity),
    ("fock-commutators", check_fock_commutators),
    ("multipair-conservation", check_multipair_conservation),
    ("adjoint-consistency", check_adjoint_consistency),
    ("reduction-equivalence", check_reduction_equivalence),
    ("moment-decay-rates", check_moment_decay_rates),
    ("bornmarkov-lorentzian", check_bornmarkov_lorentzian),
    ("pseudomode-ladder", check_pseudomode_ladder),
    ("model-difference", check_model_difference),
    ("yield-fluxes", check_yield_fluxes),
)


def run_selftest() -> tuple[bool, str]:
    """Run every check; returns (all_passed, formatted table)."""
    width = max(len(name) for name, _ in CHECKS)
    lines = []
    all_ok = True
    for name, fn in CHECKS:
        try:
            detail = fn()
            status = "PASS"
        except CheckFailure as exc:
            detail = str(exc)
            status = "FAIL"
            all_ok = False
        lines.append(f"{status}  {name:<{width}}  {detail}")
    lines.append(f"{'OK' if all_ok else 'FAILED'}: "
                 f"{sum(1 for l in lines if l.startswith('PASS'))}/{len(CHECKS)} "
                 "checks passed")
    return all_ok, "\n".join(lines) + "\n"
