"""Shuffled estimation: maximum likelihood for the multiset of parameter values.

The parameter vector is modelled as an unknown multiset ``psi`` placed in a
uniformly random order ``Pi`` drawn from a permutation group ``G``.  The
shuffled estimate of ``theta`` is ``E_psi_hat(psi_Pi | X)``, a weighted
average of permutations of the usual MLE.
"""
from .models import GaussianMeansModel, MultinomialModel, ShuffledModel
from .oracle import exact_conditional_theta, exact_mle, exact_permutation_posterior, exact_shuffled_loglik
from .permute import Permutation, ShuffleGroup
from .saem import SaemConfig, SaemResult, run

__all__ = [
    "GaussianMeansModel",
    "MultinomialModel",
    "ShuffledModel",
    "Permutation",
    "ShuffleGroup",
    "SaemConfig",
    "SaemResult",
    "run",
    "exact_mle",
    "exact_conditional_theta",
    "exact_permutation_posterior",
    "exact_shuffled_loglik",
]
