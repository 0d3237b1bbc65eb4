"""Finite decision problems: risk, Bayes risk and symmetrisation of priors.

On a finite, tabulated problem the statements about permutation-invariant
risk can be checked with exact sums instead of integrals.  Parameters are
tuples so that permuting a parameter vector gives another grid point.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .permute import ENUMERATION_CAP, ShuffleGroup

ROW_TOL = 1e-12
INVARIANCE_TOL = 1e-12


class GridError(ValueError):
    """Parameter grid is not closed under the group."""


def _permute(theta: tuple, perm: Sequence[int]) -> tuple:
    return tuple(theta[k] for k in perm)


@dataclass(frozen=True)
class FinitePrior:
    thetas: tuple[tuple, ...]
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (len(self.thetas),):
            raise ValueError("one weight per parameter point required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("prior weights must be non-negative and sum to 1")
        object.__setattr__(self, "weights", w)

    def weight(self, theta) -> float:
        try:
            return float(self.weights[self.thetas.index(tuple(theta))])
        except ValueError:
            return 0.0

    def as_dict(self) -> dict[tuple, float]:
        out: dict[tuple, float] = {}
        for t, w in zip(self.thetas, self.weights):
            out[t] = out.get(t, 0.0) + float(w)
        return out


@dataclass(frozen=True)
class FiniteDecisionProblem:
    """Tabulated problem.

    ``lik[t, s]`` is ``P(xs[s] | thetas[t])``, ``loss[t, a]`` is
    ``L(thetas[t], actions[a])`` and ``rule[s]`` is the action index taken
    after observing ``xs[s]``.
    """

    thetas: tuple[tuple, ...]
    xs: tuple
    lik: np.ndarray
    actions: tuple
    loss: np.ndarray
    rule: np.ndarray

    def __post_init__(self):
        lik = np.asarray(self.lik, dtype=np.float64)
        loss = np.asarray(self.loss, dtype=np.float64)
        rule = np.asarray(self.rule, dtype=np.int64)
        if lik.shape != (len(self.thetas), len(self.xs)):
            raise ValueError(f"likelihood table shape {lik.shape} does not match grid")
        if loss.shape != (len(self.thetas), len(self.actions)):
            raise ValueError(f"loss table shape {loss.shape} does not match grid")
        if rule.shape != (len(self.xs),) or np.any((rule < 0) | (rule >= len(self.actions))):
            raise ValueError("rule must map every sample point to an action index")
        if np.any(np.abs(lik.sum(axis=1) - 1.0) > ROW_TOL):
            raise ValueError("likelihood rows must sum to 1")
        object.__setattr__(self, "thetas", tuple(tuple(t) for t in self.thetas))
        object.__setattr__(self, "lik", lik)
        object.__setattr__(self, "loss", loss)
        object.__setattr__(self, "rule", rule)

    def index(self, theta) -> int:
        return self.thetas.index(tuple(theta))

    def with_rule(self, rule) -> "FiniteDecisionProblem":
        return FiniteDecisionProblem(self.thetas, self.xs, self.lik, self.actions, self.loss, rule)


def risk(problem: FiniteDecisionProblem, t: int, rule=None) -> float:
    """``R(theta_t, a) = sum_x P(x | theta_t) L(theta_t, a(x))``."""
    rule = problem.rule if rule is None else np.asarray(rule)
    return float(np.dot(problem.lik[t], problem.loss[t, rule]))


def risk_vector(problem: FiniteDecisionProblem, rule=None) -> np.ndarray:
    rule = problem.rule if rule is None else np.asarray(rule)
    return np.einsum("ts,ts->t", problem.lik, problem.loss[:, rule])


def bayes_risk(problem: FiniteDecisionProblem, prior: FinitePrior, rule=None) -> float:
    r = risk_vector(problem, rule)
    return float(sum(w * r[problem.index(t)] for t, w in zip(prior.thetas, prior.weights) if w != 0))


def closure(thetas, group: ShuffleGroup, cap: int = ENUMERATION_CAP) -> tuple[tuple, ...]:
    """Grid extended by every permuted vector, in first-seen order."""
    perms = [p.mapping for p in group.enumerate(cap)]
    seen: dict[tuple, None] = {}
    for t in thetas:
        for perm in perms:
            seen.setdefault(_permute(tuple(t), perm), None)
    return tuple(seen)


def symmetrize(prior: FinitePrior, group: ShuffleGroup, cap: int = ENUMERATION_CAP) -> FinitePrior:
    """Average the prior over the group: ``(1/|G|) sum_pi (prior o pi^-1)``."""
    perms = [p.mapping for p in group.enumerate(cap)]
    support = closure(prior.thetas, group, cap)
    acc = dict.fromkeys(support, 0.0)
    for t, w in zip(prior.thetas, prior.weights):
        for perm in perms:
            acc[_permute(t, perm)] += w
    weights = np.array([acc[t] for t in support]) / len(perms)
    return FinitePrior(support, weights / weights.sum())


def permuted_prior(prior: FinitePrior, perm: Sequence[int]) -> FinitePrior:
    """Prior that puts ``prior(theta)`` on ``theta_perm``."""
    return FinitePrior(tuple(_permute(t, perm) for t in prior.thetas), prior.weights)


def is_exchangeable(prior: FinitePrior, group: ShuffleGroup, tol: float = 1e-12, cap: int = ENUMERATION_CAP) -> bool:
    """True if every group element leaves the weights unchanged, point by point."""
    d = prior.as_dict()
    for perm in group.enumerate(cap):
        for t, w in d.items():
            if abs(d.get(_permute(t, perm.mapping), 0.0) - w) > tol:
                return False
    return True


def priors_equal(a: FinitePrior, b: FinitePrior, tol: float = 1e-12) -> bool:
    da, db = a.as_dict(), b.as_dict()
    return all(abs(da.get(k, 0.0) - db.get(k, 0.0)) <= tol for k in set(da) | set(db))


def risk_is_invariant(problem: FiniteDecisionProblem, group: ShuffleGroup, rule=None, tol: float = INVARIANCE_TOL, cap: int = ENUMERATION_CAP) -> bool:
    r = risk_vector(problem, rule)
    for perm in group.enumerate(cap):
        for t, theta in enumerate(problem.thetas):
            if abs(r[problem.index(_permute(theta, perm.mapping))] - r[t]) > tol:
                return False
    return True


@dataclass(frozen=True)
class TheoremCheck:
    lhs: float
    rhs: float
    permutation_invariant_risk: bool
    exchangeable_prior: bool

    @property
    def condition_holds(self) -> bool:
        return self.permutation_invariant_risk or self.exchangeable_prior

    @property
    def deviation(self) -> float:
        return abs(self.lhs - self.rhs)


def check_theorem1(problem: FiniteDecisionProblem, prior: FinitePrior, group: ShuffleGroup, rule=None, tol: float = 1e-12) -> TheoremCheck:
    """Compare the Bayes risk under ``prior`` and under its symmetrisation.

    Raises :class:`GridError` if the problem's grid is not closed under the
    group.  When either the risk is invariant or the prior is exchangeable,
    the two Bayes risks must agree to ``tol`` and an ``AssertionError`` is
    raised otherwise.
    """
    grid = set(problem.thetas)
    if set(closure(problem.thetas, group)) != grid:
        raise GridError("parameter grid is not closed under the group")
    if not set(prior.thetas) <= grid:
        raise GridError("prior support is outside the parameter grid")
    sym = symmetrize(prior, group)
    res = TheoremCheck(
        lhs=bayes_risk(problem, prior, rule),
        rhs=bayes_risk(problem, sym, rule),
        permutation_invariant_risk=risk_is_invariant(problem, group, rule),
        exchangeable_prior=is_exchangeable(prior, group),
    )
    if res.condition_holds and res.deviation > tol:
        raise AssertionError(f"Bayes risks differ by {res.deviation:.3e} although the theorem applies")
    return res


def _orbit_sample_space(rng: np.random.Generator, p: int, values: Sequence[int], group: ShuffleGroup, max_size: int) -> tuple[tuple, ...]:
    xs: tuple[tuple, ...] = ()
    perms = [q.mapping for q in group.enumerate()]
    for _ in range(50):
        base = tuple(int(v) for v in rng.choice(values, size=p))
        orbit = {_permute(base, perm) for perm in perms}
        merged = tuple(dict.fromkeys(xs + tuple(sorted(orbit))))
        if len(merged) <= max_size:
            xs = merged
        if len(xs) >= max_size - 1:
            break
    return xs


def random_problem(
    rng: np.random.Generator,
    p: int,
    group: ShuffleGroup | None = None,
    equivariant: bool = True,
    grid_values: Sequence[float] = (0.0, 0.5, 1.0),
    max_xs: int = 6,
    loss: Callable[[tuple, tuple], float] | None = None,
) -> FiniteDecisionProblem:
    """Random finite problem whose grid and sample space are closed under ``group``.

    The likelihood ``P(x | theta) ~ exp(-beta * |x - theta|^2)`` is jointly
    permutation invariant.  With ``equivariant=True`` the rule applies one
    random map to every coordinate, so with a permutation-invariant loss the
    risk is invariant; otherwise the rule is an arbitrary table.
    """
    group = group or ShuffleGroup.full(p)
    thetas = closure([tuple(float(v) for v in t) for t in _grid(grid_values, p)], group)
    xs = _orbit_sample_space(rng, p, [0, 1, 2], group, max_xs)
    beta = float(rng.uniform(0.2, 2.0))
    lik = np.array([[np.exp(-beta * sum((a - b) ** 2 for a, b in zip(x, t))) for x in xs] for t in thetas])
    lik /= lik.sum(axis=1, keepdims=True)
    fmap = {v: float(rng.uniform(-0.5, 1.5)) for v in (0, 1, 2)}
    actions = tuple(dict.fromkeys(tuple(fmap[v] for v in x) for x in xs))
    if loss is None:
        def loss(t, a):
            return sum((ti - ai) ** 2 for ti, ai in zip(t, a))
    loss_tab = np.array([[loss(t, a) for a in actions] for t in thetas])
    if equivariant:
        rule = [actions.index(tuple(fmap[v] for v in x)) for x in xs]
    else:
        rule = rng.integers(0, len(actions), size=len(xs))
    return FiniteDecisionProblem(thetas, xs, lik, actions, loss_tab, rule)


def _grid(values, p):
    return list(itertools.product(values, repeat=p))


def random_prior(rng: np.random.Generator, thetas, exchangeable: bool = False, group: ShuffleGroup | None = None) -> FinitePrior:
    w = rng.dirichlet(np.ones(len(thetas)))
    prior = FinitePrior(tuple(thetas), w)
    if exchangeable:
        sym = symmetrize(prior, group or ShuffleGroup.full(len(thetas[0])))
        d = sym.as_dict()
        prior = FinitePrior(tuple(thetas), np.array([d.get(t, 0.0) for t in thetas]))
    return prior


def run_theorem_suite(seed: int = 0, cases: int = 100) -> dict:
    """Randomised check of the symmetrisation results on ``cases`` problems.

    Cycles through three kinds of instance: invariant risk with an arbitrary
    prior, arbitrary rule with an exchangeable prior, and arbitrary rule with
    an arbitrary prior (no equality expected).  Returns counts and the
    largest deviation seen where equality is required.
    """
    rng = np.random.default_rng(seed)
    summary = {"cases": 0, "applicable": 0, "failures": 0, "max_deviation": 0.0,
               "lemma_failures": 0, "idempotence_failures": 0}
    for c in range(cases):
        p = 2 + c % 2
        group = ShuffleGroup.full(p)
        kind = c % 3
        problem = random_problem(rng, p, group, equivariant=(kind == 0))
        prior = random_prior(rng, problem.thetas, exchangeable=(kind == 1), group=group)
        res = _check_no_raise(problem, prior, group)
        summary["cases"] += 1
        if res.condition_holds:
            summary["applicable"] += 1
            summary["max_deviation"] = max(summary["max_deviation"], res.deviation)
            if res.deviation > 1e-12:
                summary["failures"] += 1
        sym = symmetrize(prior, group)
        if not priors_equal(symmetrize(sym, group), sym):
            summary["idempotence_failures"] += 1
        if not is_exchangeable(sym, group) or (is_exchangeable(prior, group) != priors_equal(prior, sym)):
            summary["lemma_failures"] += 1
    summary["passed"] = summary["failures"] == 0 and summary["lemma_failures"] == 0 and summary["idempotence_failures"] == 0
    return summary


def _check_no_raise(problem, prior, group) -> TheoremCheck:
    try:
        return check_theorem1(problem, prior, group)
    except AssertionError:
        sym = symmetrize(prior, group)
        return TheoremCheck(bayes_risk(problem, prior), bayes_risk(problem, sym),
                            risk_is_invariant(problem, group), is_exchangeable(prior, group))
