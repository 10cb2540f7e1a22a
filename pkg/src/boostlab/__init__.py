"""Smooth boosting with lazy approximate Bregman projections and simulated quantum subroutines."""

from ._backend import BACKEND
from .boosting import (
    ImplicitMeasure,
    MajorityVote,
    RunRecord,
    evaluate_majority,
    loss_vector,
    multiplicative_update,
    run_kale_smoothboost,
    run_quantumboost,
    theorem_iterations,
)
from .bregman import (
    DensityTarget,
    exact_projection_constant,
    project_approx,
    project_exact,
    verify_approx_definition,
)
from .diagnostics import check_projection_entropy, check_regret_bound, potential_diagnostics
from .errors import (
    BoostlabError,
    BoundViolation,
    ConfigError,
    EstimatorFailure,
    FloorViolation,
    Infeasible,
    SizeLimit,
    SupportViolation,
    WeakLearnerContractViolation,
    ZeroWeight,
)
from .learners import PlantedLearner, StumpLearner, planted_weak_learn, stump_weak_learn
from .measures import (
    SmoothDistribution,
    TrainingSet,
    density,
    kl_measures,
    kl_re_identity_residual,
    normalize,
    relative_entropy,
    weight,
)
from .quantum import (
    MeanEstimator,
    QueryLedger,
    amplitude_estimate,
    estimate_mean,
    prepare_smooth_sample,
    statevector_crosscheck,
)
from .tasks import SyntheticTask, generate_task

__version__ = "0.1.0"
