"""End-to-end experiments: batting averages and multinomial species sampling.

Both emit flat :class:`ExperimentRecord` rows so results can be written as
CSV and compared byte for byte across reruns.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import saem
from .baselines import arcsine_fwd, arcsine_inv, dirichlet_uniform_posterior_mean, james_stein_eb
from .models import GaussianMeansModel, MultinomialModel
from .permute import ShuffleGroup

AT_BATS_FIRST = 45

# Hits in the first 45 at-bats of the 1970 season, 18 players, in table order.
FIRST_45_HITS = (18, 17, 16, 15, 14, 14, 13, 12, 11, 11, 10, 10, 10, 10, 10, 9, 8, 7)

# Clemente (first row): actual remainder of season, and the boosted variant.
CLEMENTE_REMAINDER = (127, 367)
CLEMENTE_BOOST = {"hits_first": 20, "hits_remain": 143, "atbats_remain": 367}

BASEBALL_HEADER = ("player", "hits_first", "atbats_first", "hits_remain", "atbats_remain")
RECORD_HEADER = ("experiment", "estimator", "replicate", "p", "error", "seed")

# Reduced SA-EM budget for the 400-fit species simulation.
SPECIES_CONFIG = saem.SaemConfig(iterations=20_000, restarts=2, use_oracle_loglik=False)


class DataError(ValueError):
    """Missing or malformed experiment input."""


@dataclass(frozen=True)
class BaseballRecord:
    player: str
    hits_first: int
    atbats_first: int
    hits_remain: int | None = None
    atbats_remain: int | None = None

    def __post_init__(self):
        if not 0 <= self.hits_first <= self.atbats_first:
            raise DataError(f"{self.player}: hits_first must lie in [0, atbats_first]")
        if (self.hits_remain is None) != (self.atbats_remain is None):
            raise DataError(f"{self.player}: holdout hits and at-bats must both be given")
        if self.hits_remain is not None and not 0 <= self.hits_remain <= self.atbats_remain:
            raise DataError(f"{self.player}: hits_remain must lie in [0, atbats_remain]")

    @property
    def has_holdout(self) -> bool:
        return self.hits_remain is not None and self.atbats_remain > 0


@dataclass(frozen=True)
class ExperimentRecord:
    experiment: str
    estimator: str
    replicate: int
    p: int
    error: float
    seed: int

    def __post_init__(self):
        if not self.error >= 0:
            raise ValueError("error must be non-negative")

    def row(self) -> list[str]:
        return [self.experiment, self.estimator, str(self.replicate), str(self.p), f"{self.error:.6g}", str(self.seed)]


def rng_stream(seed: int, replicate: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, replicate, *key)``.

    Distinct keys give statistically independent streams (``SeedSequence``
    spawn keys); the same key always reproduces the same stream.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replicate), *map(int, key)))
    return np.random.Generator(np.random.PCG64(ss))


def write_records(records: Iterable[ExperimentRecord], out=None) -> str:
    """Write records as CSV to ``out`` (path or text stream); returns the CSV text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_HEADER)
    for r in records:
        w.writerow(r.row())
    text = buf.getvalue()
    if isinstance(out, (str, Path)):
        Path(out).write_text(text)
    elif out is not None:
        out.write(text)
    return text


# -- batting averages ---------------------------------------------------------


def default_baseball_records() -> list[BaseballRecord]:
    """First-45 data only; Clemente is the one player whose holdout is known."""
    recs = []
    for k, h in enumerate(FIRST_45_HITS):
        if k == 0:
            recs.append(BaseballRecord("Clemente", h, AT_BATS_FIRST, *CLEMENTE_REMAINDER))
        else:
            recs.append(BaseballRecord(f"player{k + 1:02d}", h, AT_BATS_FIRST))
    return recs


def load_baseball_csv(path: str | Path) -> list[BaseballRecord]:
    """Read the 18-row batting CSV (header ``player,hits_first,atbats_first,hits_remain,atbats_remain``)."""
    path = Path(path)
    if not path.exists():
        raise DataError(
            f"{path}: holdout file not found; supply the remainder-of-season hits and at-bats "
            "from the Efron-Morris (1975) batting table"
        )
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(c.strip() for c in rows[0]) != BASEBALL_HEADER:
        raise DataError(f"{path}: expected header {','.join(BASEBALL_HEADER)}")
    body = [r for r in rows[1:] if r and any(c.strip() for c in r)]
    if len(body) != len(FIRST_45_HITS):
        raise DataError(f"{path}: expected {len(FIRST_45_HITS)} data rows, found {len(body)}")
    recs = []
    for lineno, r in enumerate(body, 2):
        if len(r) != len(BASEBALL_HEADER):
            raise DataError(f"{path}:{lineno}: expected {len(BASEBALL_HEADER)} fields")
        try:
            hf, af, hr, ar = (int(c) for c in r[1:])
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-integer field") from None
        if af != AT_BATS_FIRST:
            raise DataError(f"{path}:{lineno}: atbats_first must be {AT_BATS_FIRST}")
        recs.append(BaseballRecord(r[0].strip(), hf, af, hr, ar))
    return recs


def clemente_boost(records: Sequence[BaseballRecord]) -> list[BaseballRecord]:
    """Replace the first row (Clemente) by the boosted 20/45, 143/367 record."""
    first = records[0]
    return [BaseballRecord(first.player, CLEMENTE_BOOST["hits_first"], first.atbats_first,
                           CLEMENTE_BOOST["hits_remain"], CLEMENTE_BOOST["atbats_remain"]), *records[1:]]


def baseball_estimates(records: Sequence[BaseballRecord], config: saem.SaemConfig = saem.SaemConfig()) -> dict[str, dict[str, np.ndarray]]:
    """Estimates on the transformed and the proportion scale, per estimator.

    Returns ``{"mle"|"james_stein"|"shuffled": {"transformed": ..., "raw": ...}}``.
    """
    avg = np.array([r.hits_first / r.atbats_first for r in records])
    x = arcsine_fwd(avg, AT_BATS_FIRST)
    p = len(x)
    fit = saem.run(GaussianMeansModel(p, 1.0), x, ShuffleGroup.full(p), config)
    est = {"mle": x, "james_stein": james_stein_eb(x, 1.0), "shuffled": fit.theta_shuffle}
    return {k: {"transformed": v, "raw": arcsine_inv(v, AT_BATS_FIRST)} for k, v in est.items()}


def baseball_run(records: Sequence[BaseballRecord], variant: str = "standard", config: saem.SaemConfig = saem.SaemConfig()) -> dict[str, float]:
    """Total squared prediction error of each estimator on the proportion scale."""
    if variant == "clemente_boost":
        records = clemente_boost(records)
    elif variant != "standard":
        raise ValueError(f"unknown variant {variant!r}")
    missing = [r.player for r in records if not r.has_holdout]
    if missing:
        raise DataError(f"holdout data missing for {len(missing)} players (e.g. {missing[0]}); load the Efron-Morris batting CSV")
    truth = np.array([r.hits_remain / r.atbats_remain for r in records])
    est = baseball_estimates(records, config)
    return {k: float(np.sum((v["raw"] - truth) ** 2)) for k, v in est.items()}


def baseball_records(records, variant: str, seeds: Sequence[int], config: saem.SaemConfig = saem.SaemConfig()) -> list[ExperimentRecord]:
    out = []
    for rep, seed in enumerate(seeds):
        cfg = saem.SaemConfig(config.iterations, config.restarts, config.gamma_offset, seed, config.use_oracle_loglik)
        errs = baseball_run(records, variant, cfg)
        for name in ("mle", "james_stein", "shuffled"):
            out.append(ExperimentRecord(f"baseball_{variant}", name, rep, len(records), errs[name], seed))
    return out


# -- species sampling ---------------------------------------------------------


def dirichlet_uniform(rng: np.random.Generator, p: int) -> np.ndarray:
    """Draw from Dirichlet(1, ..., 1) as normalised unit exponentials."""
    e = rng.standard_exponential(p)
    return e / e.sum()


def _species_replicate(p: int, n: int, rep: int, seed: int, config: saem.SaemConfig) -> list[ExperimentRecord]:
    rng = rng_stream(seed, rep, p)
    theta = dirichlet_uniform(rng, p)
    x = rng.multinomial(n, theta)
    fit = saem.run(MultinomialModel(p, n), x, ShuffleGroup.full(p), config, rng=rng)
    est = {
        "mle": x / n,
        "shuffled": fit.theta_shuffle,
        "bayes": dirichlet_uniform_posterior_mean(x, n, p),
    }
    for name, v in est.items():
        if abs(v.sum() - 1.0) > 1e-9:
            raise AssertionError(f"{name} estimate left the simplex (sum={v.sum()!r})")
    return [ExperimentRecord("species", name, rep, p, float(np.sum((v - theta) ** 2)), seed) for name, v in est.items()]


def species_sim(
    p_values: Sequence[int] = (5, 10, 25, 50),
    n: int = 50,
    reps: int = 100,
    seed: int = 0,
    config: saem.SaemConfig = SPECIES_CONFIG,
    workers: int = 1,
) -> list[ExperimentRecord]:
    """Dirichlet-multinomial simulation comparing MLE, shuffled and Bayes estimates.

    Rows come back ordered by ``(p, replicate, estimator)`` whatever the
    number of workers, so output is reproducible.
    """
    jobs = [(p, n, rep, seed, config) for p in p_values for rep in range(reps)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            chunks = list(pool.map(lambda a: _species_replicate(*a), jobs))
    else:
        chunks = [_species_replicate(*a) for a in jobs]
    return [r for chunk in chunks for r in chunk]


def expected_unseen_mass(p: int, n: int) -> float:
    """``E sum_i theta_i 1{X_i = 0}`` for theta ~ Dirichlet(1, ..., 1), X ~ Multinomial(n, theta).

    Each ``theta_i ~ Beta(1, p-1)``, so the expectation is
    ``p * B(2, n+p-1) / B(1, p-1)``.
    """
    log_b = lambda a, b: math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)  # noqa: E731
    return p * math.exp(log_b(2, n + p - 1) - log_b(1, p - 1))


def summarize(records: Iterable[ExperimentRecord]) -> dict[tuple[str, int, str], float]:
    """Median error per ``(experiment, p, estimator)``."""
    groups: dict[tuple[str, int, str], list[float]] = {}
    for r in records:
        groups.setdefault((r.experiment, r.p, r.estimator), []).append(r.error)
    return {k: float(np.median(v)) for k, v in sorted(groups.items())}
