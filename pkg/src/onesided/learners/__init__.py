"""Decision policies under one-sided feedback."""

from ._base import Decision, OneSidedLearner
from .exact import Side, orthogonal_exact_minimizer
from .passive import PassiveLearner, default_schedule, passive_learn, one_sided_utility, sauer_bound
from .refit import (
    AdaptiveLearner,
    BaselineKind,
    BaselineLearner,
    GreedyLearner,
    confidence_constant,
    kappa,
    rho_t,
)
from .sgd import SgdLearner, default_omega_radius, project_slab

METHODS = ("adaptive", "greedy", "eps_greedy", "os_eps_greedy", "noise", "os_noise", "margin", "passive", "sgd")

__all__ = [
    "AdaptiveLearner",
    "BaselineKind",
    "BaselineLearner",
    "Decision",
    "GreedyLearner",
    "METHODS",
    "OneSidedLearner",
    "PassiveLearner",
    "SgdLearner",
    "Side",
    "confidence_constant",
    "default_omega_radius",
    "default_schedule",
    "kappa",
    "one_sided_utility",
    "orthogonal_exact_minimizer",
    "passive_learn",
    "project_slab",
    "rho_t",
    "sauer_bound",
]
