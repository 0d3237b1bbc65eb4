"""Exact shuffled-likelihood computations by enumerating the group.

Everything here sums over all ``|G|`` permutations, so it is limited to
groups of at most :data:`~shuffled.permute.ENUMERATION_CAP` movable indices.
These functions are the ground truth the stochastic code is tested against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .models import ModelError, ShuffledModel
from .permute import ENUMERATION_CAP, Permutation, ShuffleGroup


@dataclass(frozen=True)
class PermutationPosterior:
    permutations: tuple[Permutation, ...]
    weights: np.ndarray

    def weight_of(self, perm: Permutation) -> float:
        return float(self.weights[self.permutations.index(perm)])

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {perm.mapping: float(w) for perm, w in zip(self.permutations, self.weights)}


@dataclass(frozen=True)
class ExactFit:
    psi_hat: np.ndarray
    theta_shuffle: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    psi_raw: np.ndarray


def _table(model: ShuffledModel, x, psi, group: ShuffleGroup, cap: int):
    perms = group.as_array(cap)
    psi = np.asarray(psi, dtype=np.float64)
    thetas = psi[perms]
    for theta in thetas:
        if not model.valid_theta(theta):
            raise ModelError(f"invalid parameter {theta!r} for {model!r}")
    return perms, thetas, model.log_density_many(x, thetas)


def exact_shuffled_loglik(model: ShuffledModel, x, psi, group: ShuffleGroup, cap: int = ENUMERATION_CAP) -> float:
    """``log((1/|G|) * sum_pi f(x | psi_pi))`` (model constants dropped)."""
    _, _, logs = _table(model, x, psi, group, cap)
    if np.all(logs == -np.inf):
        return -math.inf
    return float(logsumexp(logs) - math.log(len(logs)))


def _weights(logs: np.ndarray) -> np.ndarray:
    if np.all(logs == -np.inf):
        raise ModelError("every permutation has zero likelihood")
    w = np.exp(logs - logsumexp(logs))
    return w / w.sum()


def exact_permutation_posterior(model: ShuffledModel, x, psi, group: ShuffleGroup, cap: int = ENUMERATION_CAP) -> PermutationPosterior:
    """Conditional distribution of the shuffle given the data, at fixed ``psi``."""
    perms, _, logs = _table(model, x, psi, group, cap)
    return PermutationPosterior(tuple(Permutation(tuple(r)) for r in perms), _weights(logs))


def exact_conditional_theta(model: ShuffledModel, x, psi, group: ShuffleGroup, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Posterior mean of ``theta = psi_Pi``: a weighted average of permutations of ``psi``."""
    _, thetas, logs = _table(model, x, psi, group, cap)
    return _weights(logs) @ thetas


def exact_em_step(model: ShuffledModel, x, psi, group: ShuffleGroup, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """One EM iteration: ``E_psi[t(X)_{Pi^-1} | X]``."""
    perms, _, logs = _table(model, x, psi, group, cap)
    return _weights(logs) @ _inverse_stats(model, x, perms)


def _inverse_stats(model: ShuffledModel, x, perms: np.ndarray) -> np.ndarray:
    inv = np.argsort(perms, axis=1)
    return model.stat(x)[inv]


def sort_movable(psi, group: ShuffleGroup) -> np.ndarray:
    """Canonical representative of ``psi`` modulo ``G``: movable entries ascending."""
    out = np.array(psi, dtype=np.float64)
    idx = list(group.movable)
    out[idx] = np.sort(out[idx])
    return out


def exact_mle(
    model: ShuffledModel,
    x,
    group: ShuffleGroup,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    psi0=None,
    cap: int = ENUMERATION_CAP,
) -> ExactFit:
    """Maximise the shuffled likelihood by exact EM fixed-point iteration.

    Starts from ``model.initial_psi(x)`` unless ``psi0`` is given, and stops
    once the max-norm change drops below ``tol``.  If ``max_iter`` is reached
    the last iterate is returned with ``converged=False``.
    """
    perms = group.as_array(cap)
    stats = _inverse_stats(model, x, perms)
    psi = np.array(model.initial_psi(x) if psi0 is None else psi0, dtype=np.float64)
    converged = False
    it = 0
    while it < max_iter:
        logs = model.log_density_many(x, psi[perms])
        new = _weights(logs) @ stats
        it += 1
        delta = float(np.max(np.abs(new - psi)))
        psi = new
        if delta < tol:
            converged = True
            break
    theta = exact_conditional_theta(model, x, psi, group, cap)
    return ExactFit(
        psi_hat=sort_movable(psi, group),
        theta_shuffle=theta,
        loglik=exact_shuffled_loglik(model, x, psi, group, cap),
        iterations=it,
        converged=converged,
        psi_raw=psi,
    )
