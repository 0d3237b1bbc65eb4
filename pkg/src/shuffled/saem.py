"""Stochastic approximation EM with a Metropolis-Hastings transposition kernel.

Each iteration makes one MH move on the latent permutation at the current
``psi`` and then folds the permuted statistic into running averages with
weight ``gamma(k) = 1 / (k + c)``::

    psi       <- (1 - gamma) * psi       + gamma * t(x)[perm^-1]
    theta_bar <- (1 - gamma) * theta_bar + gamma * psi[perm]

``psi`` converges to the shuffled MLE and ``theta_bar`` to the shuffled
estimate ``E_psi(psi_Pi | X)``.  The long loops run in compiled code when
available (see :mod:`shuffled._backend`).
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .models import ShuffledModel, stat_permuted
from .oracle import exact_shuffled_loglik, sort_movable
from .permute import (
    ENUMERATION_CAP,
    GroupError,
    Permutation,
    ShuffleGroup,
    apply,
    draw_transpositions,
    propose_transposition,
)

BLOCK = 1 << 16


@dataclass(frozen=True)
class SaemConfig:
    iterations: int = 100_000
    restarts: int = 10
    gamma_offset: float = 1000.0
    seed: int = 0
    use_oracle_loglik: bool = True

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.gamma_offset > 0:
            raise ValueError("gamma_offset must be positive")

    def gamma(self, k: int) -> float:
        return 1.0 / (k + self.gamma_offset)


@dataclass
class SaemState:
    psi: np.ndarray
    theta_bar: np.ndarray
    perm: Permutation
    iter: int = 0

    @classmethod
    def start(cls, model: ShuffledModel, x) -> "SaemState":
        psi = np.array(model.initial_psi(x), dtype=np.float64)
        return cls(psi=psi, theta_bar=psi.copy(), perm=Permutation.identity(len(psi)))


@dataclass(frozen=True, eq=False)
class SaemResult:
    psi_hat: np.ndarray
    psi_raw: np.ndarray
    theta_shuffle: np.ndarray
    acceptance_rate: float
    iterations_total: int
    final_loglik_estimate: float | None = None
    backend: str = field(default="", compare=False)


def _exp_draw(u):
    # inverse CDF on (0, 1]; Z is finite so -Z <= -inf never holds
    return -np.log1p(-u)


def mh_step(model: ShuffledModel, x, state: SaemState, group: ShuffleGroup, rng: np.random.Generator):
    """One Metropolis-Hastings move; returns ``(new_state, accepted)``."""
    i, j = propose_transposition(group, rng)
    z = float(_exp_draw(rng.random()))
    h = model.swap_log_ratio(np.asarray(x), state.psi, state.perm, i, j)
    if -z <= h:
        m = list(state.perm.mapping)
        m[i], m[j] = m[j], m[i]
        return SaemState(state.psi, state.theta_bar, Permutation(tuple(m)), state.iter), True
    return state, False


def saem_iterate(model: ShuffledModel, x, state: SaemState, group: ShuffleGroup, config: SaemConfig, rng: np.random.Generator) -> SaemState:
    """One SA-EM iteration (reference implementation of the kernel loop)."""
    if len(group.movable) >= 2:
        state, _ = mh_step(model, x, state, group, rng)
    g = config.gamma(state.iter)
    psi = (1 - g) * state.psi + g * stat_permuted(model, x, state.perm)
    theta = (1 - g) * state.theta_bar + g * apply(state.perm, psi)
    return SaemState(psi, theta, state.perm, state.iter + 1)


def _chain(model, data, stat, psi, theta, perm, inv, group, steps, c, rng):
    """Advance one restart in blocks of pre-drawn randomness; returns accepts."""
    accepted = 0
    done = 0
    movable = len(group.movable) >= 2
    empty_i = np.empty(0, dtype=np.int64)
    empty_z = np.empty(0, dtype=np.float64)
    while done < steps:
        size = min(BLOCK, steps - done)
        if movable:
            I, J = draw_transpositions(group, rng, size)
            Z = _exp_draw(rng.random(size))
        else:
            I = J = empty_i
            Z = empty_z
        accepted += _backend.saem_chain(
            model.kind, data, model.kernel_scale, stat, psi, theta, perm, inv,
            np.ascontiguousarray(I, dtype=np.int64), np.ascontiguousarray(J, dtype=np.int64),
            np.ascontiguousarray(Z, dtype=np.float64), size, float(c), done,
        )
        done += size
    return accepted


def run(model: ShuffledModel, x, group: ShuffleGroup, config: SaemConfig = SaemConfig(), rng: np.random.Generator | None = None) -> SaemResult:
    """Fit the shuffled model by SA-EM with restarts.

    Every restart resets the step counter (so ``gamma``) and the permutation
    to the identity, continues from the previous ``psi``, and restarts the
    ``theta_bar`` average at ``psi``.
    """
    if group.p != model.p:
        raise GroupError(f"group acts on {group.p} indices, model has p={model.p}")
    x = model.check_observation(x)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    data = model.kernel_data(x)
    stat = np.ascontiguousarray(model.stat(x), dtype=np.float64)
    psi = np.array(model.initial_psi(x), dtype=np.float64)
    theta = psi.copy()
    accepted = 0
    for _ in range(config.restarts):
        perm = np.arange(model.p, dtype=np.int64)
        inv = perm.copy()
        theta[:] = psi
        accepted += _chain(model, data, stat, psi, theta, perm, inv, group, config.iterations, config.gamma_offset, rng)
    total = config.iterations * config.restarts
    moves = total if len(group.movable) >= 2 else 0
    loglik = None
    if config.use_oracle_loglik and len(group.movable) <= ENUMERATION_CAP:
        loglik = exact_shuffled_loglik(model, x, psi, group)
    return SaemResult(
        psi_hat=sort_movable(psi, group),
        psi_raw=psi.copy(),
        theta_shuffle=theta.copy(),
        acceptance_rate=accepted / moves if moves else 0.0,
        iterations_total=total,
        final_loglik_estimate=loglik,
        backend=_backend.current(),
    )


def mh_samples(model: ShuffledModel, x, psi, group: ShuffleGroup, n_samples: int, rng: np.random.Generator, burn_in: float = 0.1) -> tuple[np.ndarray, int]:
    """Permutation states of the MH chain at fixed ``psi`` after burn-in.

    Returns the ``(n_samples, p)`` state array and the number of accepted moves
    (burn-in included).
    """
    x = model.check_observation(x)
    psi = np.ascontiguousarray(psi, dtype=np.float64)
    burn = int(math.ceil(burn_in * n_samples))
    total = burn + n_samples
    I, J = draw_transpositions(group, rng, total)
    Z = _exp_draw(rng.random(total))
    perm = np.arange(model.p, dtype=np.int64)
    inv = perm.copy()
    out = np.empty((total, model.p), dtype=np.int64)
    accepted = _backend.mh_trace(
        model.kind, model.kernel_data(x), model.kernel_scale, psi, perm, inv,
        np.ascontiguousarray(I), np.ascontiguousarray(J), np.ascontiguousarray(Z), out,
    )
    return out[burn:], accepted


def mh_stationarity_check(
    model: ShuffledModel,
    x,
    psi,
    group: ShuffleGroup,
    n_samples: int,
    rng: np.random.Generator,
    thin: int = 1,
    cap: int = ENUMERATION_CAP,
) -> dict[tuple[int, ...], float]:
    """Empirical distribution over ``G`` of the MH chain at fixed ``psi``.

    Keeps every ``thin``-th of ``n_samples`` post-burn-in states.  Every group
    element appears as a key, with frequency 0 if never visited.
    """
    if len(group.movable) > cap:
        raise GroupError(f"|movable|={len(group.movable)} exceeds enumeration cap {cap}")
    states, _ = mh_samples(model, x, psi, group, n_samples, rng)
    states = states[::thin]
    counts = Counter(map(tuple, states.tolist()))
    freq = {perm.mapping: 0.0 for perm in group.enumerate(cap)}
    for key, cnt in counts.items():
        freq[key] = cnt / len(states)
    return freq


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


__all__ = [
    "SaemConfig",
    "SaemState",
    "SaemResult",
    "mh_step",
    "saem_iterate",
    "run",
    "mh_samples",
    "mh_stationarity_check",
    "total_variation",
]
