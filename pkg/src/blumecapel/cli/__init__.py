"""``blumecapel`` command line.

Exit codes: 0 success, 2 invalid configuration, 3 solver failure,
4 step cap exhausted (rows are still written).
"""

from __future__ import annotations

import argparse
import contextlib
import sys
import time

from .. import __version__
from ..equilibrium import DomainError, SolverError
from ..exactchain import CapExhausted
from .config import EXPERIMENTS, ConfigError, build_config, load_toml
from .experiments import EXIT_CAP, EXIT_CONFIG, EXIT_SOLVER, RUNNERS, resolved_points
from .output import dumps, write_table
from .scaling import MODELS, ScalingFit, fit_scaling

__all__ = ["main", "run", "fit_scaling", "ScalingFit"]

_S = argparse.SUPPRESS


def _parser():
    common = argparse.ArgumentParser(add_help=False, argument_default=_S)
    common.add_argument("--seed", help="unsigned 64-bit seed (default 0)")
    common.add_argument("--threads", help="worker threads (default 1)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--json", action="store_true", default=_S, help="line-delimited JSON instead of CSV")
    common.add_argument("--config", help="flat TOML file; flags override its values")

    model = argparse.ArgumentParser(add_help=False, argument_default=_S)
    model.add_argument("--n", help="system sizes: 20,40 or 20:320:*2")
    model.add_argument("--beta", help="inverse temperatures: 1.4:3.0:0.01")
    model.add_argument("--k", help="interactions, absolute or curve-relative like 0.9*k1")
    model.add_argument("--tol", help="solver tolerance")

    top = argparse.ArgumentParser(prog="blumecapel", parents=[common])
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    p = {name: sub.add_parser(name, parents=[common, model], argument_default=_S) for name in EXPERIMENTS}
    p["phase-diagram"].description = "Phase label and mixing prediction on a (beta, K) grid."
    p["critical-curves"].description = "kc2, k1, kc1 and wc along a beta sweep."
    for name in ("mix-exact", "mix-couple"):
        p[name].add_argument("--cap", help="step cap per run")
    p["mix-exact"].add_argument("--eps", help="TV levels (default 0.25)")
    p["mix-exact"].add_argument("--t-max", dest="t_max", help="iteration cap for the exact chain")
    p["mix-exact"].add_argument("--all-starts", dest="all_starts", action="store_true", default=_S,
                                help="maximise over every count state")
    p["mix-couple"].add_argument("--replicas")
    p["mix-couple"].add_argument("--start", choices=("all-plus", "all-minus", "all-zero"))
    p["mix-couple"].add_argument("--trace", action="store_true", default=_S, help="emit t,rho,sx,sy of replica 0")
    p["coupling-contraction"].add_argument("--mode", choices=("profile", "empirical"))
    p["coupling-contraction"].add_argument("--z", help="magnetization grid")
    p["coupling-contraction"].add_argument("--replicas")
    p["bottleneck"].add_argument("--zprime", help="cut location (default: the saddle of I)")
    p["scaling-fit"].add_argument("--input", help="CSV or JSON-lines table")
    p["scaling-fit"].add_argument("--x-col", dest="x_col")
    p["scaling-fit"].add_argument("--y-col", dest="y_col")
    p["scaling-fit"].add_argument("--model", choices=MODELS)
    return top


def _values(argv):
    args = vars(_parser().parse_args(argv))
    values = load_toml(args.pop("config")) if "config" in args else {}
    if "experiment" in values and values["experiment"] != args["experiment"]:
        raise ConfigError("experiment", f"config file is for {values['experiment']!r}")
    values.update(args)
    # the cap of mix-exact is the exact-chain iteration limit
    if values.get("experiment") == "mix-exact" and values.get("cap") is not None:
        values.setdefault("t_max", values.pop("cap"))
    return values


def run(cfg, stdout=None):
    """Run one experiment and write its table; returns the exit status."""
    points = resolved_points(cfg) if cfg.k else []
    meta = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "version": __version__,
        # output path and thread count cannot change results, so they stay out of the header
        "config": {k: v for k, v in cfg.to_dict().items() if k not in ("out", "threads")},
        "resolved_k": [{"beta": b, "k_spec": s, "k": k} for b, s, k in points],
    }
    start = time.perf_counter()
    table = RUNNERS[cfg.experiment](cfg)
    wall = time.perf_counter() - start
    for row in table.rows:
        row.setdefault("experiment", cfg.experiment)
        row.setdefault("seed", cfg.seed)
    columns = table.columns + [c for c in ("experiment", "seed") if c not in table.columns]
    with contextlib.ExitStack() as stack:
        fh = stack.enter_context(open(cfg.out, "w")) if cfg.out else (stdout or sys.stdout)
        write_table(fh, meta, columns, table.rows, table.trailers, as_json=cfg.json)
    if cfg.out:
        # timing lives beside the data so the data file depends only on (config, seed)
        with open(cfg.out + ".meta.json", "w") as fh:
            fh.write(dumps({**meta, "wall_time_s": wall, "exit_status": table.status}) + "\n")
    print(f"{cfg.experiment}: {len(table.rows)} rows in {wall:.2f} s", file=sys.stderr)
    return table.status


def main(argv=None):
    try:
        cfg = build_config(_values(argv))
        return run(cfg)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except CapExhausted as exc:
        print(f"cap exhausted: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
