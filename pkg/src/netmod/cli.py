"""Command-line front end: test, simulate, and sweep subcommands.

Every flag can also come from a JSON config file (``--config``); explicit
flags win. All randomness flows from one root seed, so identical invocations
produce identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dag import load_dag
from .errors import NetmodError
from .estimation import EstimatorConfig
from .graph import load_network, validate
from .heterogeneity import ProjectionConfig, load_hypotheses, run_test
from .simulate import (SimConfig, simulate_trial, sweep_noise, sweep_units,
                       write_dataset, write_sweep_rows)

DEFAULT_SEED = 20240101


def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--estimator", choices=["ensemble", "stratified"], default=None)
    p.add_argument("--draws", type=int, default=None, metavar="B",
                   help="bootstrap refits (default 50)")
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-leaf", type=int, default=None,
                   help="min samples per tree leaf (default: adapts to n)")
    p.add_argument("--min-n", type=int, default=None)
    p.add_argument("--estimand", choices=["risk_difference", "log_risk_ratio"],
                   default=None)
    p.add_argument("--p-min", type=float, default=None,
                   help="probability clip floor for log_risk_ratio")
    p.add_argument("--adjust-neighbor-treatment", action="store_true", default=None,
                   help="add fraction-of-treated-neighbors as a confounder")
    p.add_argument("--bins", type=int, default=None,
                   help="equal-frequency bins for numeric modifiers (default 10)")


def _load_config_file(path):
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise NetmodError(f"{path}: config file must hold a JSON object")
    return data


def _merged(args, cfg_file: dict, key: str, default=None):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    return cfg_file.get(key, default)


def _build_configs(args, cfg_file, seed):
    est = EstimatorConfig(
        estimator=_merged(args, cfg_file, "estimator", "ensemble"),
        n_draws=int(_merged(args, cfg_file, "draws", 50)),
        max_depth=int(_merged(args, cfg_file, "max_depth", 6)),
        min_leaf=_merged(args, cfg_file, "min_leaf"),
        seed=seed,
        estimand=_merged(args, cfg_file, "estimand", "risk_difference"),
        p_min=float(_merged(args, cfg_file, "p_min", 0.01)),
        min_n=int(_merged(args, cfg_file, "min_n", 16)),
        adjust_neighbor_treatment=bool(
            _merged(args, cfg_file, "adjust_neighbor_treatment", False)),
    )
    proj = ProjectionConfig(
        bins=int(_merged(args, cfg_file, "bins", 10)),
        variance_floor=float(_merged(args, cfg_file, "variance_floor", 1e-6)),
        relative_floor=float(_merged(args, cfg_file, "relative_floor", 0.04)),
    )
    return est, proj


def cmd_test(args) -> int:
    cfg_file = _load_config_file(args.config)

    def need(key):
        v = _merged(args, cfg_file, key)
        if v is None:
            raise NetmodError(f"missing required option --{key.replace('_', '-')}")
        return v

    edges = _merged(args, cfg_file, "edges")
    if edges is None:
        raise NetmodError("missing required option --edges")
    if isinstance(edges, str):
        edges = [edges]
    net = load_network(edges, covariate_path=need("covariates"),
                       schema_path=_merged(args, cfg_file, "schema"))
    problems = validate(net)
    if problems:
        for v in problems[:10]:
            print(f"invalid input: {v}", file=sys.stderr)
        return 2
    dag = load_dag(need("dag"))
    hyps, file_i0 = load_hypotheses(need("hypotheses"))
    i0 = float(_merged(args, cfg_file, "i0", file_i0))
    seed = int(_merged(args, cfg_file, "seed", DEFAULT_SEED))
    est, proj = _build_configs(args, cfg_file, seed)

    report = run_test(net, dag, hyps, i0=i0,
                      treatment=_merged(args, cfg_file, "treatment"),
                      outcome=_merged(args, cfg_file, "outcome"),
                      estimator_config=est, projection_config=proj)

    outdir = Path(_merged(args, cfg_file, "out", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(report.to_json(), encoding="utf-8")
    (outdir / "report.txt").write_text(report.to_text(), encoding="utf-8")
    sys.stdout.write(report.to_text())
    return 0


def cmd_simulate(args) -> int:
    cfg_file = _load_config_file(args.config)
    n = _merged(args, cfg_file, "n")
    if n is None:
        raise NetmodError("missing required option --n")
    cfg = SimConfig(
        n=int(n),
        m=int(_merged(args, cfg_file, "m", 3)),
        sigma=float(_merged(args, cfg_file, "sigma", 1.0)),
        seed=int(_merged(args, cfg_file, "seed", DEFAULT_SEED)),
        store_ground_truth=bool(_merged(args, cfg_file, "ground_truth", False)),
        formula=_merged(args, cfg_file, "formula", "additive"),
    )
    outdir = _merged(args, cfg_file, "out", ".")
    paths = write_dataset(simulate_trial(cfg), outdir)
    for p in paths:
        print(p)
    return 0


def cmd_sweep(args) -> int:
    cfg_file = _load_config_file(args.config)
    seed = int(_merged(args, cfg_file, "seed", DEFAULT_SEED))
    base = SimConfig(
        n=int(_merged(args, cfg_file, "n", 2000)),
        m=int(_merged(args, cfg_file, "m", 3)),
        sigma=float(_merged(args, cfg_file, "sigma", 1.0)),
        seed=seed,
    )
    reps = int(_merged(args, cfg_file, "reps", 10))
    i0 = float(_merged(args, cfg_file, "i0", 0.0))
    outdir = Path(_merged(args, cfg_file, "out", "."))
    outdir.mkdir(parents=True, exist_ok=True)
    out_path = outdir / "results.csv"

    if args.kind == "units":
        sizes_raw = _merged(args, cfg_file, "sizes",
                            "8,16,32,64,128,256,512,1024,2048,4096")
        sizes = [int(s) for s in str(sizes_raw).split(",") if s.strip()]
        rows = sweep_units(base, sizes, reps, i0=i0)
    else:
        var_raw = _merged(args, cfg_file, "variances", "0,1,4,16,64,256,1024,4096")
        variances = [float(s) for s in str(var_raw).split(",") if s.strip()]
        rows = sweep_noise(base, variances, reps, i0=i0)
    count = write_sweep_rows(rows, out_path)
    print(f"{out_path} ({count} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netmod",
        description="Test hypothesized treatment effect modifiers in a social network.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run the effect-modifier test on data files")
    p_test.add_argument("--edges", action="append", metavar="FILE",
                        help="edge-list file (repeatable; files are unioned)")
    p_test.add_argument("--covariates", metavar="FILE")
    p_test.add_argument("--schema", metavar="FILE",
                        help="JSON column-kind sidecar for the covariate file")
    p_test.add_argument("--dag", metavar="FILE")
    p_test.add_argument("--hypotheses", metavar="FILE")
    p_test.add_argument("--treatment", metavar="NAME")
    p_test.add_argument("--outcome", metavar="NAME")
    p_test.add_argument("--i0", type=float, default=None,
                        help="rejection threshold (default 0)")
    p_test.add_argument("--seed", type=int, default=None)
    p_test.add_argument("--out", metavar="DIR")
    p_test.add_argument("--config", metavar="FILE")
    _add_estimator_flags(p_test)
    p_test.set_defaults(func=cmd_test)

    p_sim = sub.add_parser("simulate", help="generate a synthetic trial dataset")
    p_sim.add_argument("--n", type=int, default=None, required=False)
    p_sim.add_argument("--m", type=int, default=None)
    p_sim.add_argument("--sigma", type=float, default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", metavar="DIR")
    p_sim.add_argument("--ground-truth", dest="ground_truth",
                       action="store_true", default=None)
    p_sim.add_argument("--formula", choices=["additive", "nested"], default=None)
    p_sim.add_argument("--config", metavar="FILE")
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="replicate the unit-count or noise sweeps")
    p_sweep.add_argument("kind", choices=["units", "noise"])
    p_sweep.add_argument("--sizes", metavar="N1,N2,...", default=None)
    p_sweep.add_argument("--variances", metavar="V1,V2,...", default=None)
    p_sweep.add_argument("--n", type=int, default=None,
                         help="unit count for noise sweeps (default 2000)")
    p_sweep.add_argument("--m", type=int, default=None)
    p_sweep.add_argument("--sigma", type=float, default=None,
                         help="noise std dev for unit sweeps (default 1)")
    p_sweep.add_argument("--reps", type=int, default=None)
    p_sweep.add_argument("--i0", type=float, default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--out", metavar="DIR")
    p_sweep.add_argument("--config", metavar="FILE")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NetmodError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
