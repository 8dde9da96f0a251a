"""Online decision making under one-sided feedback with generalized linear models."""

from . import learners
from .bench import RunConfig, emit_plotdata, load_config, run_experiment
from .design import DesignState, init_design, rank1_update, width
from .environment import (
    LossLedger,
    Oracle,
    Stream,
    StreamKind,
    StreamSpec,
    build_stream,
    compute_cutoff,
    fit_oracle,
    make_synthetic_stream,
    make_theorem1_stream,
    one_sided_loss,
    replay_stream,
)
from .glm import IDENTITY, LOGISTIC, FitResult, GlmProblem, LinkSpec, compute_eta, fit_mle, get_link, project_beta
from .learners import (
    AdaptiveLearner,
    BaselineLearner,
    GreedyLearner,
    PassiveLearner,
    SgdLearner,
    orthogonal_exact_minimizer,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveLearner",
    "BaselineLearner",
    "DesignState",
    "FitResult",
    "GlmProblem",
    "GreedyLearner",
    "IDENTITY",
    "LOGISTIC",
    "LinkSpec",
    "LossLedger",
    "Oracle",
    "PassiveLearner",
    "RunConfig",
    "SgdLearner",
    "Stream",
    "StreamKind",
    "StreamSpec",
    "build_stream",
    "compute_cutoff",
    "compute_eta",
    "emit_plotdata",
    "fit_mle",
    "fit_oracle",
    "get_link",
    "init_design",
    "learners",
    "load_config",
    "make_synthetic_stream",
    "make_theorem1_stream",
    "one_sided_loss",
    "orthogonal_exact_minimizer",
    "project_beta",
    "rank1_update",
    "replay_stream",
    "run_experiment",
    "width",
]
