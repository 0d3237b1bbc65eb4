"""Classical estimators used as comparisons for the shuffled estimator."""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .models import ShuffledModel


def mle(model: ShuffledModel, x) -> np.ndarray:
    return model.stat(model.check_observation(x))


def james_stein_eb(x, sigma2: float = 1.0) -> np.ndarray:
    """Positive-part James-Stein estimate shrinking toward the grand mean.

    Efron-Morris form with the ``p - 3`` correction for estimating the mean.
    """
    x = np.asarray(x, dtype=np.float64)
    p = x.shape[0]
    if p < 4:
        raise ValueError("James-Stein with an estimated mean needs p >= 4")
    mu = x.mean()
    s = float(np.sum((x - mu) ** 2))
    if s == 0:
        return np.full(p, mu)
    b = max(0.0, 1.0 - (p - 3) * sigma2 / s)
    return mu + b * (x - mu)


@dataclass(frozen=True)
class CountOfCounts:
    """``N[k]`` = number of categories observed exactly ``k`` times."""

    N: dict[int, int]
    n: int
    p: int

    def __getitem__(self, k: int) -> int:
        return self.N.get(k, 0)


def count_of_counts(x, n: int | None = None) -> CountOfCounts:
    counts = [int(v) for v in np.asarray(x).tolist()]
    if any(c < 0 for c in counts):
        raise ValueError("counts must be non-negative")
    total = sum(counts)
    if n is None:
        n = total
    if total != n:
        raise ValueError(f"counts sum to {total}, expected n={n}")
    return CountOfCounts(N=dict(sorted(Counter(counts).items())), n=n, p=len(counts))


def good_turing_percount(cc: CountOfCounts, k: int) -> float:
    """Good-Turing estimate of the probability of one category seen ``k`` times."""
    if cc[k] == 0:
        raise ValueError(f"no category observed {k} times")
    if cc.n == 0:
        raise ValueError("empty sample")
    return (k + 1) * cc[k + 1] / (cc.n * cc[k])


def good_turing_unseen_mass(cc: CountOfCounts) -> float:
    """Estimated total probability of unobserved categories, ``N_1 / n``."""
    if cc.n < 1:
        raise ValueError("empty sample")
    return cc[1] / cc.n


def good_turing_estimates(x) -> np.ndarray:
    """Per-category Good-Turing estimates (these need not sum to one)."""
    cc = count_of_counts(x)
    return np.array([good_turing_percount(cc, int(k)) for k in np.asarray(x).tolist()])


def _compositions(n: int, p: int):
    """All non-negative integer vectors of length ``p`` summing to ``n``."""
    for bars in itertools.combinations(range(n + p - 1), p - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(n + p - 1 - prev - 1)
        yield tuple(out)


def _multinomial_pmf(counts, theta) -> float:
    n = sum(counts)
    coef = math.factorial(n)
    prob = 1.0
    for c, t in zip(counts, theta):
        coef //= math.factorial(c)
        prob *= t**c
    return coef * prob


def expected_count_of_counts(p: int, n: int, theta, k: int) -> float:
    """``E N_{k,n}`` under ``Multinomial(n, theta)`` by enumerating every outcome."""
    total = 0.0
    for counts in _compositions(n, p):
        nk = sum(1 for c in counts if c == k)
        if nk:
            total += nk * _multinomial_pmf(counts, theta)
    return total


def good_posterior_mean(theta, n: int, k: int) -> float:
    """``E(theta | X = k)`` when theta is a uniform draw from the entries of ``theta``
    and ``X ~ Binomial(n, theta)``."""
    num = sum(t ** (k + 1) * (1 - t) ** (n - k) for t in theta)
    den = sum(t**k * (1 - t) ** (n - k) for t in theta)
    return num / den


def good_identity_check(p: int, n: int, theta) -> dict[int, tuple[float, float]]:
    """Both sides of Good's identity for each ``k`` in ``0..n``.

    Left: the posterior mean computed directly.  Right:
    ``(k+1) E N_{k+1,n+1} / ((n+1) E N_{k,n})`` with both expectations
    obtained by brute-force enumeration of multinomial outcomes.  Values of
    ``k`` with ``E N_{k,n} = 0`` are omitted.
    """
    theta = [float(t) for t in theta]
    if len(theta) != p:
        raise ValueError("theta must have length p")
    out = {}
    for k in range(n + 1):
        en_k = expected_count_of_counts(p, n, theta, k)
        if en_k == 0:
            continue
        rhs = (k + 1) * expected_count_of_counts(p, n + 1, theta, k + 1) / ((n + 1) * en_k)
        out[k] = (good_posterior_mean(theta, n, k), rhs)
    return out


def dirichlet_uniform_posterior_mean(x, n: int | None = None, p: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    n = int(x.sum()) if n is None else n
    p = x.shape[0] if p is None else p
    return (x + 1.0) / (n + p)


def arcsine_fwd(avg, n0: float):
    """Variance-stabilising map ``sqrt(n0) * asin(2 * avg - 1)``."""
    avg = np.asarray(avg, dtype=np.float64)
    if np.any((avg < 0) | (avg > 1)):
        raise ValueError("proportion outside [0, 1]")
    out = math.sqrt(n0) * np.arcsin(2.0 * avg - 1.0)
    return float(out) if out.ndim == 0 else out


def arcsine_inv(t, n0: float):
    out = (np.sin(np.asarray(t, dtype=np.float64) / math.sqrt(n0)) + 1.0) / 2.0
    return float(out) if out.ndim == 0 else out
