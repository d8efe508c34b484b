"""Spin-selective radical-pair recombination kinetics.

One-pair master equations (haberkorn and the measurement-like family), the
multi-pair Fock-space dynamics whose bilinear moments reproduce the haberkorn
flow, and weak-coupling rate extraction from bath correlation functions.
"""

from ._kernels import active_backend, set_backend
from .bornmarkov import (BathCouplingParams, ExponentialCorrelation,
                         PseudomodeResult, TabulatedCorrelation,
                         pseudomode_ladder, pseudomode_validation,
                         rates_from_correlation, renormalize_hamiltonian)
from .fock import (FockSpace, MultiPairTrajectory, equivalence_max_deviation,
                   equivalence_report, fock_occupation_state, integrate_lindblad,
                   integrate_multipair, ladder_operators, mean_value_rhs,
                   multipair_rhs, number_operator, one_pair_sector,
                   prepare_one_pair, reduce_to_one_pair, second_quantize,
                   total_number_operator)
from .models import (Generator, GeneratorKind, MeasurementParams,
                     dephasing_identity_deviation,
                     dephasing_lindblad_identity_check, haberkorn_rhs,
                     measurement_only_rhs, measurement_recombination_rewritten_rhs,
                     measurement_recombination_rhs, recombination_yield_rates)
from .propagate import (NumericalContractError, StepSizeError, TimeGrid,
                        Trajectory, compute_observables, haberkorn_exact,
                        hermiticity_defects, integrate, max_trace_increase,
                        measure_rk4_order, min_eigenvalues, superoperator_matrix)
from .spin import (BASIS_LABELS, DIM, RateParams, SpinBasis, ValidationReport,
                   basis_ket, hermiticity_defect, make_hamiltonian, preset_state,
                   projectors, pure_state, random_density, random_hermitian,
                   validate_state)

__version__ = "0.1.0"
