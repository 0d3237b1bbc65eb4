"""Base models for shuffled estimation.

A shuffled model draws a permutation ``Pi`` uniformly from a group ``G`` and
then observes ``X ~ f(x | psi_Pi)``.  The models here expose what both the
exact (enumeration) route and SA-EM need: the log-density up to an additive
constant, the sufficient statistic on the mean-value scale, and the change in
log-density caused by exchanging two parameter positions.

Additive constants (normal normaliser, multinomial coefficient) are dropped
from every log-density.  All consumers use differences or normalised
weights, so the constant never matters.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from pathlib import Path

import numpy as np

from .permute import Permutation, ShuffleGroup, apply, invert

SIMPLEX_TOL = 1e-12


class ModelError(ValueError):
    """Invalid observation or parameter for a model."""


class ShuffledModel(ABC):
    """Contract shared by the base models.

    Subclasses set ``kind`` to the integer code used by the compiled kernels.
    """

    kind: int
    name: str
    p: int

    @abstractmethod
    def log_density(self, x: np.ndarray, theta: np.ndarray) -> float:
        """``log f(x | theta)`` up to a theta-free constant; ``-inf`` where it vanishes."""

    @abstractmethod
    def log_density_many(self, x: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        """Row-wise :meth:`log_density` for a ``(k, p)`` stack of parameters."""

    @abstractmethod
    def stat(self, x: np.ndarray) -> np.ndarray:
        """Sufficient statistic on the mean-value scale."""

    @abstractmethod
    def valid_theta(self, theta: np.ndarray) -> bool: ...

    @abstractmethod
    def check_observation(self, x) -> np.ndarray:
        """Validate and coerce an observation vector."""

    @abstractmethod
    def swap_log_ratio(self, x: np.ndarray, psi: np.ndarray, perm: Permutation, i: int, j: int) -> float:
        """Change in log-density when the images of ``i`` and ``j`` under ``perm`` are exchanged."""

    def initial_psi(self, x: np.ndarray) -> np.ndarray:
        """Starting point for EM and SA-EM: the complete-data MLE."""
        return self.stat(x)

    def kernel_data(self, x: np.ndarray) -> np.ndarray:
        """Float vector handed to the compiled kernels alongside ``kind``."""
        return np.asarray(x, dtype=np.float64)

    @property
    def kernel_scale(self) -> float:
        return 1.0


class GaussianMeansModel(ShuffledModel):
    """``X ~ N(theta, sigma2 * I)`` with known common variance."""

    kind = 0
    name = "gaussian"

    def __init__(self, p: int, sigma2: float = 1.0):
        if p < 1:
            raise ModelError("p must be positive")
        if not sigma2 > 0:
            raise ModelError("sigma2 must be positive")
        self.p = int(p)
        self.sigma2 = float(sigma2)

    def __repr__(self):
        return f"GaussianMeansModel(p={self.p}, sigma2={self.sigma2})"

    def check_observation(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.p,):
            raise ModelError(f"expected observation of length {self.p}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ModelError("observation must be finite")
        return x

    def valid_theta(self, theta) -> bool:
        theta = np.asarray(theta, dtype=np.float64)
        return theta.shape == (self.p,) and bool(np.all(np.isfinite(theta)))

    def log_density(self, x, theta) -> float:
        r = np.asarray(x, dtype=np.float64) - np.asarray(theta, dtype=np.float64)
        return float(-np.dot(r, r) / (2.0 * self.sigma2))

    def log_density_many(self, x, thetas) -> np.ndarray:
        r = np.asarray(x, dtype=np.float64)[None, :] - np.asarray(thetas, dtype=np.float64)
        return -np.einsum("ij,ij->i", r, r) / (2.0 * self.sigma2)

    def stat(self, x) -> np.ndarray:
        return np.array(x, dtype=np.float64)

    def swap_log_ratio(self, x, psi, perm, i, j) -> float:
        a = psi[perm(i)]
        b = psi[perm(j)]
        h = (x[i] - a) ** 2 + (x[j] - b) ** 2
        h = h - (x[i] - b) ** 2 - (x[j] - a) ** 2
        return float(h / (2.0 * self.sigma2))

    @property
    def kernel_scale(self) -> float:
        return 2.0 * self.sigma2


def _xlogy(counts: np.ndarray, probs: np.ndarray) -> np.ndarray:
    # 0 * log 0 = 0; positive count at zero probability gives -inf.
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(counts == 0, 0.0, counts * np.log(probs))


class MultinomialModel(ShuffledModel):
    """``X ~ Multinomial(n, theta)`` over ``p`` categories."""

    kind = 1
    name = "multinomial"

    def __init__(self, p: int, n: int):
        if p < 1:
            raise ModelError("p must be positive")
        if n < 0:
            raise ModelError("n must be non-negative")
        self.p = int(p)
        self.n = int(n)

    def __repr__(self):
        return f"MultinomialModel(p={self.p}, n={self.n})"

    def check_observation(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape != (self.p,):
            raise ModelError(f"expected observation of length {self.p}, got shape {arr.shape}")
        if np.any(arr < 0) or np.any(arr != np.round(arr)):
            raise ModelError("multinomial counts must be non-negative integers")
        if int(arr.sum()) != self.n:
            raise ModelError(f"counts sum to {int(arr.sum())}, expected n={self.n}")
        return arr.astype(np.int64)

    def valid_theta(self, theta) -> bool:
        theta = np.asarray(theta, dtype=np.float64)
        return (
            theta.shape == (self.p,)
            and bool(np.all(theta >= 0))
            and abs(float(theta.sum()) - 1.0) <= SIMPLEX_TOL * max(1, self.p)
        )

    def log_density(self, x, theta) -> float:
        return float(_xlogy(np.asarray(x), np.asarray(theta, dtype=np.float64)).sum())

    def log_density_many(self, x, thetas) -> np.ndarray:
        x = np.asarray(x)[None, :]
        return _xlogy(np.broadcast_to(x, np.shape(thetas)), np.asarray(thetas, dtype=np.float64)).sum(axis=1)

    def stat(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.n == 0:
            return np.full(self.p, 1.0 / self.p)
        return x / self.n

    def initial_psi(self, x) -> np.ndarray:
        # A zero entry of psi can never gain mass under EM or SA-EM, so an
        # unobserved category would pin the fit to the boundary. Start from
        # the uniform-Dirichlet posterior mean in that case.
        x = np.asarray(x, dtype=np.float64)
        if np.all(x > 0):
            return self.stat(x)
        return (x + 1.0) / (self.n + self.p)

    def swap_log_ratio(self, x, psi, perm, i, j) -> float:
        xi, xj = float(x[i]), float(x[j])
        if xi == xj:
            return 0.0
        a = float(psi[perm(i)])
        b = float(psi[perm(j)])
        old = _term(xi, a) + _term(xj, b)
        new = _term(xi, b) + _term(xj, a)
        if old == -math.inf:
            # current state impossible (also when the proposal is): always move
            return math.inf
        return new - old


def _term(count: float, prob: float) -> float:
    if count == 0:
        return 0.0
    if prob <= 0:
        return -math.inf
    return count * math.log(prob)


def log_joint(model: ShuffledModel, x, perm: Permutation, psi, group: ShuffleGroup) -> float:
    """``log f(x | psi_perm) - log |G|``."""
    theta = apply(perm, psi)
    if not model.valid_theta(theta):
        raise ModelError(f"invalid parameter {theta!r} for {model!r}")
    return model.log_density(x, theta) - math.log(group.order())


def swap_log_ratio(model: ShuffledModel, x, psi, perm: Permutation, i: int, j: int) -> float:
    if i == j:
        raise ModelError("swap needs distinct indices")
    return model.swap_log_ratio(np.asarray(x), np.asarray(psi, dtype=np.float64), perm, i, j)


def stat_permuted(model: ShuffledModel, x, perm: Permutation) -> np.ndarray:
    """The complete-data statistic ``t(x)`` permuted by ``perm^-1``."""
    return apply(invert(perm), model.stat(x))


def make_model(name: str, x, sigma2: float = 1.0) -> ShuffledModel:
    """Build a model sized to observation ``x`` (multinomial ``n`` is the count total)."""
    x = np.asarray(x)
    if name == "gaussian":
        return GaussianMeansModel(x.shape[0], sigma2)
    if name == "multinomial":
        return MultinomialModel(x.shape[0], int(round(float(np.sum(x)))))
    raise ModelError(f"unknown model {name!r}")


def read_observations(path: str | Path) -> list[np.ndarray]:
    """Read numeric vectors, one per line, comma- or whitespace-separated.

    Blank lines and ``#`` comments are skipped.
    """
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        try:
            rows.append(np.array([float(f) for f in fields]))
        except ValueError:
            raise ModelError(f"{path}:{lineno}: non-numeric field in {line!r}") from None
    if not rows:
        raise ModelError(f"{path}: no observations")
    return rows
