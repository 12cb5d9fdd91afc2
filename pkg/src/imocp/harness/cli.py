"""Command line entry point: ``imocp run|bounds|validate``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from ..priors import Regularizer, prior_from_spec
from ..metrics import TheoryConstants, theorem1_bound, theorem2_bound
from . import data as datasets
from .config import ConfigError, load_config
from .experiment import run_experiment


def _load(args):
    cfg = load_config(args.config)
    return cfg.with_overrides(seeds=args.seeds, algorithms=args.algorithms, output=args.out)


def cmd_run(args) -> int:
    cfg = _load(args)
    if args.jobs is not None:
        cfg.jobs = args.jobs
    result = run_experiment(cfg)
    print(f"wrote {cfg.output}/summary.csv, aggregate.csv and {len(result.summaries)} record files")
    header = f"{'label':<28}{'seeds':>6}{'error rate':>12}{'  se':>8}{'cum. loss':>12}{'w. regret':>12}"
    print(header)
    for a in result.aggregate:
        print(f"{a['label']:<28}{a['seeds']:>6}{a['mean_error_rate']:>12.4f}"
              f"{a['se_error_rate']:>8.4f}{a['mean_cumulative_loss']:>12.3f}"
              f"{a['mean_weighted_regret']:>12.3f}")
    return 0


def cmd_bounds(args) -> int:
    """Coverage and regret bounds for IM-OCP before running anything.

    The regret bound needs ``D_T``, which is only known after a run; here
    it is replaced by its worst case over the iterate interval,
    ``L/2 (B + varpi/mu)^2``.
    """
    cfg = _load(args)
    T = cfg.calibration.horizon
    etas = cfg.schedule.etas(T)
    probs = cfg.feedback_probs
    if isinstance(probs, dict):
        p_min = min(probs.values())
    else:
        p_min = float(np.min(probs))
    bound = cfg.calibration.score_bound
    print(f"T={T} alpha={cfg.calibration.alpha} p_min={p_min:g} "
          f"eta_1={etas[0]:.6g} eta_T={etas[-1]:.6g} sum(eta)={etas.sum():.6g}")
    for spec in cfg.priors:
        reg = Regularizer(prior_from_spec(spec, bound=bound), cfg.calibration.alpha, cfg.sigma)
        varpi = float(np.max(etas)) / p_min
        d_worst = 0.5 * reg.smooth_l * (bound + varpi / reg.mu) ** 2
        consts = TheoryConstants.from_run(reg, etas, p_min, D_T=d_worst)
        print(f"{spec['kind']:<20} mu={reg.mu:g} L={reg.smooth_l:.6g} "
              f"theorem1={theorem1_bound(consts, T):.6g} "
              f"theorem2(worst D_T={d_worst:.4g})={theorem2_bound(consts, etas):.6g}")
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"config ok: {len(cfg.algorithms)} algorithms, {len(cfg.priors)} priors, "
          f"{len(cfg.seeds)} seeds, horizon {cfg.calibration.horizon}")
    if cfg.data["source"] == "ujiindoorloc":
        samples = datasets.load_ujiindoorloc(cfg.data["path"], float(cfg.data["floor_dbm"]))
        found = sorted(set(samples.building.tolist()))
        print(f"dataset ok: {len(samples)} rows, buildings {found}")
        if isinstance(cfg.feedback_probs, dict):
            missing = sorted(set(found) - set(cfg.feedback_probs))
            if missing:
                raise ConfigError(f"no feedback probability for buildings {missing}")
        if len(cfg.data["train_sizes"]) < len(found):
            raise ConfigError("train_sizes must list one size per building")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imocp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (("run", cmd_run, "run an experiment"),
                            ("bounds", cmd_bounds, "print coverage and regret bounds for a config"),
                            ("validate", cmd_validate, "check a config and its dataset")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--seeds", help="seed count or comma-separated list")
        p.add_argument("--out", help="output directory")
        p.add_argument("--algorithms", help="comma-separated subset of aci,iaci,baci,ibaci,imocp")
        if name == "run":
            p.add_argument("--jobs", type=int, help="worker processes for seed replicas")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, datasets.DataFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
