"""Command-line entry point: ``shuffled <subcommand> ...``.

Every subcommand writes CSV to stdout (or ``--out``).  Exit status is 0 on
success, 1 when inputs fail validation and 2 on a runtime failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

import numpy as np

from . import baselines, experiments, oracle, risk, saem
from .models import ModelError, make_model, read_observations
from .permute import GroupError, ShuffleGroup

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {s!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _int_list(s: str) -> list[int]:
    try:
        vals = [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("values must be positive integers")
    return vals


@dataclass
class CliConfig:
    subcommand: str
    options: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="shuffled", description=__doc__.splitlines()[0], formatter_class=fmt)
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    def model_args(p):
        p.add_argument("--model", choices=("gaussian", "multinomial"), required=True, help="base model")
        p.add_argument("--data", required=True, help="observation file: one vector per line, comma or whitespace separated (first line is used)")
        p.add_argument("--group", default="full", help="shuffle group: identity | full | fix=<indices held fixed>")
        p.add_argument("--sigma2", type=_positive_float, default=1.0, help="known variance (gaussian model)")

    p = sub.add_parser("exact-mle", help="shuffled MLE by exact enumeration of the group", formatter_class=fmt)
    model_args(p)
    p.add_argument("--tol", type=_positive_float, default=1e-10, help="max-norm convergence tolerance")
    p.add_argument("--max-iter", type=_positive_int, default=100_000, help="EM iteration limit")

    p = sub.add_parser("saem-fit", help="shuffled MLE and estimate by SA-EM", formatter_class=fmt)
    model_args(p)
    p.add_argument("--iters", type=_positive_int, default=100_000, help="iterations per restart")
    p.add_argument("--restarts", type=_positive_int, default=10, help="number of restarts")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--gamma-offset", type=_positive_float, default=1000.0, help="c in the step size 1/(k + c)")
    p.add_argument("--out", default=None, help="output CSV path (default: stdout)")

    p = sub.add_parser("baseball", help="batting-average prediction errors", formatter_class=fmt)
    p.add_argument("--data", default=None, help="CSV with header player,hits_first,atbats_first,hits_remain,atbats_remain")
    p.add_argument("--clemente-boost", action="store_true", help="use the boosted Clemente record (20/45, 143/367)")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--seeds", type=_positive_int, default=1, help="number of consecutive seeds starting at --seed")
    p.add_argument("--iters", type=_positive_int, default=100_000, help="SA-EM iterations per restart")
    p.add_argument("--restarts", type=_positive_int, default=10, help="SA-EM restarts")
    p.add_argument("--out", default=None, help="output CSV path (default: stdout)")

    p = sub.add_parser("species-sim", help="Dirichlet-multinomial simulation", formatter_class=fmt)
    p.add_argument("--p", type=_int_list, default=[5, 10, 25, 50], help="comma-separated category counts")
    p.add_argument("--n", type=_positive_int, default=50, help="sample size")
    p.add_argument("--reps", type=_positive_int, default=100, help="replicates per p")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--iters", type=_positive_int, default=experiments.SPECIES_CONFIG.iterations, help="SA-EM iterations per restart")
    p.add_argument("--restarts", type=_positive_int, default=experiments.SPECIES_CONFIG.restarts, help="SA-EM restarts")
    p.add_argument("--full-budget", action="store_true", help="use 10 restarts of 100000 iterations")
    p.add_argument("--workers", type=_positive_int, default=1, help="parallel replicate workers")
    p.add_argument("--out", default=None, help="output CSV path (default: stdout)")

    p = sub.add_parser("risk-check", help="randomised check of Bayes-risk symmetrisation", formatter_class=fmt)
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--cases", type=_positive_int, default=100, help="number of random problems")

    p = sub.add_parser("good-turing", help="Good-Turing estimates from a count vector", formatter_class=fmt)
    p.add_argument("--counts", required=True, help="file with one vector of non-negative integer counts")
    return parser


def parse_args(argv=None) -> CliConfig:
    ns = build_parser().parse_args(argv)
    opts = vars(ns)
    return CliConfig(opts.pop("subcommand"), opts)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(cfg: CliConfig):
    x = read_observations(cfg.data)[0]
    model = make_model(cfg.model, x, cfg.sigma2)
    x = model.check_observation(x)
    group = ShuffleGroup.parse(cfg.group, model.p)
    return model, x, group


def _estimate_table(psi, theta) -> list[str]:
    lines = ["index,psi_hat,theta_shuffle"]
    lines += [f"{i},{_fmt(a)},{_fmt(b)}" for i, (a, b) in enumerate(zip(psi, theta))]
    return lines


def _exact_mle(cfg):
    model, x, group = _load(cfg)
    fit = oracle.exact_mle(model, x, group, tol=cfg.tol, max_iter=cfg.max_iter)
    lines = _estimate_table(fit.psi_hat, fit.theta_shuffle)
    lines.append(f"# loglik={fit.loglik:.12g} iterations={fit.iterations} converged={str(fit.converged).lower()}")
    _emit("\n".join(lines) + "\n", None)
    return EXIT_OK


def _saem_fit(cfg):
    model, x, group = _load(cfg)
    config = saem.SaemConfig(cfg.iters, cfg.restarts, cfg.gamma_offset, cfg.seed)
    res = saem.run(model, x, group, config)
    lines = _estimate_table(res.psi_hat, res.theta_shuffle)
    ll = "NA" if res.final_loglik_estimate is None else f"{res.final_loglik_estimate:.12g}"
    lines.append(f"# acceptance_rate={_fmt(res.acceptance_rate)} iterations_total={res.iterations_total} loglik={ll} seed={cfg.seed}")
    _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK


def _baseball(cfg):
    if cfg.data is None:
        raise experiments.DataError(
            "baseball needs --data: the remainder-of-season hits and at-bats for all 18 players "
            "(Efron-Morris 1975 batting table) are not shipped"
        )
    records = experiments.load_baseball_csv(cfg.data)
    variant = "clemente_boost" if cfg.clemente_boost else "standard"
    config = saem.SaemConfig(cfg.iters, cfg.restarts, seed=cfg.seed)
    seeds = [cfg.seed + k for k in range(cfg.seeds)]
    text = experiments.write_records(experiments.baseball_records(records, variant, seeds, config))
    _emit(text, cfg.out)
    return EXIT_OK


def _species(cfg):
    iters, restarts = (100_000, 10) if cfg.full_budget else (cfg.iters, cfg.restarts)
    config = saem.SaemConfig(iters, restarts, use_oracle_loglik=False)
    recs = experiments.species_sim(cfg.p, cfg.n, cfg.reps, cfg.seed, config, cfg.workers)
    _emit(experiments.write_records(recs), cfg.out)
    return EXIT_OK


def _risk(cfg):
    s = risk.run_theorem_suite(cfg.seed, cfg.cases)
    print("check,result,detail")
    print(f"risk_equality,{'pass' if s['failures'] == 0 else 'fail'},applicable={s['applicable']}/{s['cases']} max_deviation={s['max_deviation']:.3e}")
    print(f"exchangeability,{'pass' if s['lemma_failures'] == 0 else 'fail'},failures={s['lemma_failures']}")
    print(f"idempotence,{'pass' if s['idempotence_failures'] == 0 else 'fail'},failures={s['idempotence_failures']}")
    return EXIT_OK if s["passed"] else EXIT_RUNTIME


def _good_turing(cfg):
    x = read_observations(cfg.counts)[0]
    if np.any(x < 0) or np.any(x != np.round(x)):
        raise ModelError("counts must be non-negative integers")
    cc = baselines.count_of_counts(x.astype(np.int64))
    print("k,N_k,estimate")
    for k, nk in cc.N.items():
        if nk > 0:
            print(f"{k},{nk},{_fmt(baselines.good_turing_percount(cc, k))}")
    print(f"# unseen_mass={_fmt(baselines.good_turing_unseen_mass(cc))} n={cc.n} p={cc.p}")
    return EXIT_OK


_COMMANDS = {
    "exact-mle": _exact_mle,
    "saem-fit": _saem_fit,
    "baseball": _baseball,
    "species-sim": _species,
    "risk-check": _risk,
    "good-turing": _good_turing,
}


def run_cli(cfg: CliConfig) -> int:
    try:
        return _COMMANDS[cfg.subcommand](cfg)
    except (ModelError, GroupError, experiments.DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main(argv=None) -> int:
    return run_cli(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
