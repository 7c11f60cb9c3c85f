"""Command line front end.

Exit codes: 0 success, 1 validation error, 2 runtime error (overflow,
degenerate estimator, too many failed replications).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .asymptotics import theta_params, zeta_variance_crosscheck
from .config import ExperimentConfig, load_config
from .errors import (
    CappedModeError,
    DegenerateEstimatorError,
    ExperimentError,
    IndeterminateThetaError,
    PopulationOverflowError,
    QuadratureError,
    ValidationError,
)
from .estimate import ESTIMATE_COLUMNS, clse_variance, clse_variance_homogeneous
from .plots import histogram_svg, qq_svg
from .simulate import (
    SimConfig,
    offspring_to_csv,
    read_trajectory_csv,
    simulate,
    trajectory_to_csv,
)
from .verify import (
    CheckTable,
    fluctuation_check,
    lemma1_check,
    lindeberg_diagnostic,
    normality_experiment,
    variance_process_check,
)

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2
CHECKS = ("lemma1", "fluctuation", "varprocess", "lindeberg", "zeta")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def write_outputs(out_dir, files):
    """Write every ``{name: text}`` entry via temp file + rename, only after all are rendered."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, out / name)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def provenance(cfg: ExperimentConfig, command, files=None):
    block = {
        "command": command,
        "config_hash": cfg.config_hash(),
        "master_seed": cfg.master_seed,
        "version": __version__,
        "config": cfg.to_dict(),
    }
    if files:
        block["files"] = {
            name: hashlib.sha256(text.encode()).hexdigest() for name, text in sorted(files.items())
        }
    return block


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o)}")


def _apply_overrides(cfg: ExperimentConfig, args):
    for attr in ("horizon", "replications", "master_seed", "workers"):
        v = getattr(args, attr, None)
        if v is not None:
            setattr(cfg, attr, v)
    if getattr(args, "plots", False):
        cfg.plots = True
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_simulate(args):
    cfg = _apply_overrides(load_config(args.config), args)
    off, imm = cfg.offspring_model(), cfg.immigration_model()
    mode = "per_individual" if cfg.record_offspring else cfg.mode
    files = {}
    for r in range(cfg.replications):
        traj = simulate(off, imm, SimConfig(cfg.horizon, cfg.master_seed, r, mode))
        stem = f"trajectory_r{r:05d}"
        files[f"{stem}.csv"] = trajectory_to_csv(traj)
        if cfg.record_offspring:
            files[f"{stem}.offspring.csv"] = offspring_to_csv(traj)
    files["provenance.json"] = _dump(provenance(cfg, "simulate", files))
    write_outputs(args.out, files)
    print(f"wrote {len(files) - 1} trajectory file(s) to {args.out}")
    return EXIT_OK


def _estimate_one(z, cfg: ExperimentConfig, imm):
    kind = cfg.estimator.get("kind", "clse")
    if kind == "clse":
        return clse_variance(z, imm)
    imm_mean = cfg.estimator.get("imm_mean")
    if imm_mean is None:
        imm_mean = float(imm.moments(1)[0])
    return clse_variance_homogeneous(z, cfg.estimator.get("offspring_mean", 1.0), imm_mean)


def cmd_estimate(args):
    cfg = _apply_overrides(load_config(args.config), args)
    if args.kind:
        cfg.estimator = dict(cfg.estimator, kind=args.kind)
    imm = cfg.immigration_model()
    rows = []
    if args.trajectory:
        traj = read_trajectory_csv(args.trajectory)
        rows.append(_estimate_one(traj, cfg, imm).to_row())
    else:
        off = cfg.offspring_model()
        for r in range(cfg.replications):
            traj = simulate(off, imm, SimConfig(cfg.horizon, cfg.master_seed, r))
            rows.append(_estimate_one(traj, cfg, imm).to_row(cfg.master_seed, r))
    lines = [",".join(ESTIMATE_COLUMNS)]
    lines += [",".join(str(row[c]) for c in ESTIMATE_COLUMNS) for row in rows]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        files = {"estimates.csv": text}
        files["provenance.json"] = _dump(provenance(cfg, "estimate", files))
        write_outputs(args.out, files)
    return EXIT_OK


def cmd_experiment(args):
    cfg = _apply_overrides(load_config(args.config), args)
    off, imm = cfg.offspring_model(), cfg.immigration_model()
    summary = normality_experiment(
        off, imm, cfg.horizon, cfg.replications, cfg.master_seed,
        workers=cfg.workers, theta=cfg.theta,
    )
    files = {"replications.csv": summary.replication_csv()}
    if cfg.plots and len(summary.statistics) and summary.sigma_sq > 0:
        sigma = summary.sigma_sq ** 0.5
        files["histogram.svg"] = histogram_svg(summary.statistics, sigma)
        files["qq.svg"] = qq_svg(summary.statistics, sigma)
    report = summary.report()
    report["provenance"] = dict(report["provenance"], **provenance(cfg, "experiment", files))
    files["summary.json"] = _dump(report)
    write_outputs(args.out, files)
    print(
        f"sigma^2={summary.sigma_sq:.6g} mean={summary.mean:.6g} var={summary.variance:.6g} "
        f"ks={summary.ks_distance:.4f} ad={summary.anderson_darling:.4f} "
        f"failures={sum(summary.failures.values())}"
    )
    return EXIT_OK


def cmd_check(args):
    cfg = _apply_overrides(load_config(args.config), args)
    off, imm = cfg.offspring_model(), cfg.immigration_model()
    which = args.which
    n, R, seed, workers = cfg.horizon, cfg.replications, cfg.master_seed, cfg.workers
    if which == "lemma1":
        table = lemma1_check(off, imm, n, cfg.t_grid, cfg.phi, cfg.c_sequence(), R, seed,
                             workers, power=cfg.power)
    elif which == "fluctuation":
        table = fluctuation_check(off, imm, n, cfg.t_grid, R, seed, workers)
    elif which == "varprocess":
        table = variance_process_check(off, imm, n, cfg.t_grid, R, seed, workers, theta=cfg.theta)
    elif which == "lindeberg":
        table = lindeberg_diagnostic(imm, n, cfg.eps_grid, seed=seed)
    else:
        params = theta_params(off, imm, n, theta=cfg.theta)
        closed, numeric = zeta_variance_crosscheck(params)
        rel = abs(closed - numeric) / abs(closed)
        table = CheckTable("zeta", ("closed_form", "numeric", "rel_error"), [(closed, numeric, rel)],
                           {"params": params.to_dict()})
    print(table.format())
    files = {f"check_{which}.csv": table.to_csv()}
    files[f"check_{which}.json"] = _dump({"meta": table.meta, **provenance(cfg, f"check {which}", files)})
    write_outputs(args.out, files)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="branchimm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_required=True):
        sp.add_argument("config", help="JSON config file")
        sp.add_argument("--seed", dest="master_seed", type=int)
        sp.add_argument("--horizon", type=int)
        sp.add_argument("--replications", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", required=out_required, help="output directory")

    sp = sub.add_parser("simulate", help="write trajectory CSV files")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("estimate", help="estimate b^2 from a stored or simulated trajectory")
    common(sp, out_required=False)
    sp.add_argument("--trajectory", help="trajectory CSV (k,Z,xi) to re-estimate")
    sp.add_argument("--kind", choices=("clse", "homogeneous"))
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("experiment", help="Monte Carlo test of asymptotic normality")
    common(sp)
    sp.add_argument("--plots", action="store_true", help="also write SVG histogram and QQ plot")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("check", help="limit-law diagnostics")
    sp.add_argument("which", choices=CHECKS)
    common(sp)
    sp.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, IndeterminateThetaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (
        DegenerateEstimatorError,
        PopulationOverflowError,
        CappedModeError,
        ExperimentError,
        QuadratureError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
