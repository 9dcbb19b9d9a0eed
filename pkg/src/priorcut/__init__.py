"""Phase retrieval from magnitude-and-noisy-phase observations.

Recovers a complex signal from linear measurements whose phases are observed
through multiplicative circular noise. A multivariate von Mises prior on the
phases turns MAP estimation into a unit-modulus QCQP, solved by semidefinite
lifting with block-coordinate descent ("informed PhaseCut") or by greedy
coordinate minimization.

Subpackages / modules
---------------------
core      angles, Hermitian checks, seeded randomness
priors    von Mises densities, samplers, phase precision matrices
model     observation model, instance generation, signal recovery
problem   MAP objective assembly (misfit matrix, lifted quadratic form)
solvers   BCD lifting solver, greedy solver, extraction, brute-force oracle
harness   Monte-Carlo experiment driver and CSV output
"""

from priorcut.core import hermitian_check, make_rng, mix_seed, wrap_angle
from priorcut.priors import (
    CustomPrior,
    MarkovChainParams,
    MarkovPrior,
    MvmParams,
    PhasePrecision,
    UniformPrior,
    Vm1dPrior,
    mahalanobis_phase_distance,
    mvm_unnormalized_log_density,
    precision_from_mvm,
    precision_markov,
    sample_markov_phases,
    sample_vm1d,
    vm1d_log_density,
)
from priorcut.model import (
    GenerationConfig,
    ProblemInstance,
    absorb_mean_phases,
    generate_instance,
    pseudo_inverse,
    recover_signal,
)
from priorcut.problem import (
    LiftedProblem,
    build_lifted_problem,
    data_misfit_matrix,
    map_objective,
    qcqp_objective,
)
from priorcut.solvers import (
    BcdSettings,
    LiftedSolution,
    bcd_lifting_solve,
    brute_force_oracle,
    extract_phases,
    greedy_coordinate_solve,
    leading_eigenvector,
)
from priorcut.harness import (
    ExperimentConfig,
    TrialRecord,
    normalized_correlation,
    run_experiment,
    run_trial,
)

__version__ = "0.1.0"

__all__ = [
    "BcdSettings",
    "CustomPrior",
    "ExperimentConfig",
    "GenerationConfig",
    "LiftedProblem",
    "LiftedSolution",
    "MarkovChainParams",
    "MarkovPrior",
    "MvmParams",
    "PhasePrecision",
    "ProblemInstance",
    "TrialRecord",
    "UniformPrior",
    "Vm1dPrior",
    "absorb_mean_phases",
    "bcd_lifting_solve",
    "brute_force_oracle",
    "build_lifted_problem",
    "data_misfit_matrix",
    "extract_phases",
    "generate_instance",
    "greedy_coordinate_solve",
    "hermitian_check",
    "leading_eigenvector",
    "mahalanobis_phase_distance",
    "make_rng",
    "map_objective",
    "mix_seed",
    "mvm_unnormalized_log_density",
    "normalized_correlation",
    "precision_from_mvm",
    "precision_markov",
    "pseudo_inverse",
    "qcqp_objective",
    "recover_signal",
    "run_experiment",
    "run_trial",
    "sample_markov_phases",
    "sample_vm1d",
    "vm1d_log_density",
    "wrap_angle",
]
