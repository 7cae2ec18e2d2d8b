"""Command-line entry point ``invlp``.

Subcommands: ``gen``, ``fit``, ``eval``, ``certify``, ``bound``, ``bench``.
Exit codes: 0 success, 2 configuration/input error, 3 numerical failure,
4 infeasible or degenerate problem.
"""

from __future__ import annotations

import argparse
import datetime
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .bench import SUITE_NAMES, run_suite
from .complexity import VARIANTS, BoundInputs, epsilon_net_samples, sample_complexity
from .config import load_config
from .dynamics import SystemSpec, TransitionDataset, generate_dataset, make_oracle
from .errors import ConfigurationError, InputError, InvlpError
from .invariant import ValueModel, fit, guaranteed_threshold, lipschitz_estimate
from .metrics import classify_grid, estimate_metrics

logger = logging.getLogger("invlp")


def _write_json(obj, path) -> None:
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_gen(args) -> int:
    cfg = load_config(args.config, {"K": args.K})
    data = generate_dataset(cfg.system, cfg.state_set, cfg.control_set, cfg.raw["K"], cfg.seeds["data"])
    out = Path(args.out) if args.out else cfg.output_path("dataset", "data.csv")
    data.to_csv(out)
    logger.info("wrote %d transitions to %s", len(data), out)
    return 0


def cmd_fit(args) -> int:
    cfg = load_config(args.config, {"alpha": args.alpha})
    data_path = Path(args.data) if args.data else cfg.output_path("dataset", "data.csv")
    if data_path.exists():
        data = TransitionDataset.from_csv(data_path)
    else:
        logger.info("%s not found, generating the dataset from the config", data_path)
        data = generate_dataset(cfg.system, cfg.state_set, cfg.control_set, cfg.raw["K"], cfg.seeds["data"])
    model = fit(data, cfg.state_set, cfg.fit_config())
    model.metadata["system"] = cfg.system.to_dict()
    model.metadata["seeds"].update(data=cfg.seeds["data"], centers=cfg.seeds["centers"])
    if not args.no_timestamp:
        model.metadata["created"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    out = Path(args.out) if args.out else cfg.output_path("model", "model.json")
    model.save(out)
    logger.info("model with N=%d written to %s", model.basis.size, out)
    return 0


def _threshold(model: ValueModel, args) -> tuple[float, dict]:
    if args.mode == "standard":
        return 0.0, {}
    if args.mode == "conservative":
        if "conservative_threshold" not in model.metadata:
            raise ConfigurationError("model has no stored E_bar; refit with split_fraction set")
        return float(model.metadata["conservative_threshold"]), {"E_bar": model.metadata["E_bar"]}
    if args.L_f is None:
        raise ConfigurationError("guaranteed mode needs --L-f (an upper bound on Lip(f))")
    if args.epsilon is not None:
        eps = args.epsilon
    elif args.data:
        data = TransitionDataset.from_csv(args.data)
        eps = model.cset.dispersion_upper_bound(data.X, args.dispersion_resolution)
    else:
        raise ConfigurationError("guaranteed mode needs --epsilon or --data to bound the covering radius")
    lip_v = args.lip_v
    if lip_v is None:
        lip_v = lipschitz_estimate(model, args.lipschitz_budget, args.seed)
    info = {"L_f": args.L_f, "epsilon_net": eps, "lip_v": lip_v,
            "lip_v_is_estimate": args.lip_v is None}
    return guaranteed_threshold(model.alpha, args.L_f, eps, lip_v), info


def cmd_eval(args) -> int:
    model = ValueModel.load(args.model)
    threshold, info = _threshold(model, args)
    report = {"mode": args.mode, "threshold": threshold, **info}
    system_dict = model.metadata.get("system")
    if args.config:
        system_dict = load_config(args.config).system.to_dict()
    system = SystemSpec.from_dict(system_dict) if system_dict else None
    if system is not None and system.control_dim == 0:
        oracle = make_oracle(system, model.cset, args.horizon)
        report["metrics"] = estimate_metrics(model, threshold, oracle, args.samples, args.seed).to_dict()
    else:
        probes = model.cset.sample_uniform(args.samples, args.seed)
        report["accepted_fraction"] = float(model.member(probes, threshold).mean())
        report["metrics"] = None
    _write_json(report, args.report)
    if args.grid:
        kw = {"projection": True} if model.dim > 2 else {}
        classify_grid(model, threshold, args.grid_resolution, args.grid, **kw)
    return 0


def cmd_bound(args) -> int:
    if args.alpha is not None or args.L is not None:
        if args.alpha is None or args.L is None:
            raise InputError("--alpha and --L must be given together")
        res = sample_complexity(BoundInputs(args.epsilon, args.delta, args.n, args.D, args.alpha, args.L, args.L_f))
        out = {"zeta": res["zeta"], "K": res["K"], "formula_variant": "lipschitz"}
    else:
        K = epsilon_net_samples(args.epsilon, args.delta, args.D, args.n, args.variant)
        out = {"zeta": args.epsilon / (2 * args.D), "K": K, "formula_variant": args.variant}
    _write_json(out, args.out)
    return 0


def cmd_bench(args) -> int:
    table = run_suite(args.suite, args.scale, args.samples, args.horizon, args.seed, args.reseeds)
    _write_json(table, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invlp", description="Data-driven invariant set approximation")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=int, default=None, help="BLAS threads (default: all cores)")
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a transition dataset")
    g.add_argument("config")
    g.add_argument("--out")
    g.add_argument("--K", type=int)
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("fit", help="solve the LP and write a model file")
    f.add_argument("config")
    f.add_argument("--data")
    f.add_argument("--out")
    f.add_argument("--alpha", type=float)
    f.add_argument("--no-timestamp", action="store_true")
    f.set_defaults(func=cmd_fit)

    for name, modes, default in (("eval", ("standard", "conservative", "guaranteed"), "standard"),
                                 ("certify", ("conservative", "guaranteed"), "conservative")):
        e = sub.add_parser(name, help="score a model against the rollout oracle")
        e.add_argument("model")
        e.add_argument("--mode", choices=modes, default=default)
        e.add_argument("--config")
        e.add_argument("--samples", type=int, default=100_000)
        e.add_argument("--horizon", type=int, default=1000)
        e.add_argument("--seed", type=int, default=0)
        e.add_argument("--report", default="-")
        e.add_argument("--grid")
        e.add_argument("--grid-resolution", type=int, default=101)
        e.add_argument("--L-f", dest="L_f", type=float)
        e.add_argument("--lip-v", dest="lip_v", type=float)
        e.add_argument("--epsilon", type=float)
        e.add_argument("--data")
        e.add_argument("--dispersion-resolution", type=int, default=200)
        e.add_argument("--lipschitz-budget", type=int, default=100_000)
        e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bound", help="sample-size calculators")
    b.add_argument("--epsilon", type=float, required=True)
    b.add_argument("--delta", type=float, required=True)
    b.add_argument("--D", type=float, required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--alpha", type=float)
    b.add_argument("--L", type=float)
    b.add_argument("--L-f", dest="L_f", type=float)
    b.add_argument("--variant", choices=VARIANTS, default="proof")
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bound)

    r = sub.add_parser("bench", help="run a benchmark suite")
    r.add_argument("suite", choices=SUITE_NAMES)
    r.add_argument("--scale", type=float, default=1.0)
    r.add_argument("--samples", type=int, default=100_000)
    r.add_argument("--horizon", type=int, default=1000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--reseeds", type=int)
    r.add_argument("--out", default="-")
    r.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    threads = args.threads or os.cpu_count() or 1
    try:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=threads):
            return args.func(args)
    except InvlpError as exc:
        print(f"invlp: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"invlp: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
