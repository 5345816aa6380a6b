"""Command-line entry point: ``radfriction <command> --config <path> --out <dir>``.

Exit status: 0 when every check passes, 1 when a physics check fails,
2 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from ._fmt import write_csv, write_summary
from .analytic import WITH_SHIFT, ZERO_SHIFT, emission_prefactor, friction_force_vec, level_shift, mean_acceleration
from .config import ConfigError, RunConfig, format_config, load_config
from .dynamics import export_series_csv, hemisphere_mean_frequency
from .experiments import Verdict, convergence_study, linearity_sweep, simulation_checks
from .params import ParameterError, derive_gamma0, dimensionless_groups, validate_params

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CONVERGENCE_TARGETS = {"rate_error": 0.01, "force_error": 0.15}


def _groups(cfg: RunConfig, verdict: Verdict, mean_p: float) -> None:
    scales = dimensionless_groups(cfg.atom, mean_p)
    verdict.note("gamma_ratio", scales.gamma_ratio)
    verdict.note("recoil_param", scales.recoil_param)
    verdict.note("beta", scales.beta)
    report = validate_params(cfg.atom, scales)
    report.raise_if_errors()
    for i, w in enumerate(report.warnings):
        verdict.note(f"warning.{i}", w)


def cmd_rate(cfg: RunConfig, out: str) -> Verdict:
    v = Verdict()
    v.note("gamma0", derive_gamma0(cfg.atom))
    _groups(cfg, v, 0.0)
    write_csv(os.path.join(out, "rate.csv"), ["quantity", "value"], [["gamma0", derive_gamma0(cfg.atom)]])
    return v


def cmd_shift(cfg: RunConfig, out: str) -> Verdict:
    v = Verdict()
    s = level_shift(cfg.atom)
    rows = [
        ["cutoff_omega", cfg.atom.cutoff_omega],
        ["b_r", s.b_r],
        ["b_i", s.b_i],
        ["prefactor_with_shift", emission_prefactor(cfg.atom, WITH_SHIFT)],
        ["prefactor_zero_shift", emission_prefactor(cfg.atom, ZERO_SHIFT)],
    ]
    for k, val in rows:
        v.note(k, val)
    write_csv(os.path.join(out, "shift.csv"), ["quantity", "value"], rows)
    return v


def _times(cfg: RunConfig) -> np.ndarray:
    n = cfg.setup().n_out()
    return np.arange(n) * (cfg.run.stride / cfg.gamma0)


def cmd_force_analytic(cfg: RunConfig, out: str) -> Verdict:
    v = Verdict()
    setup = cfg.setup()
    pack = setup.pack(cfg.pack.beta)
    _groups(cfg, v, pack.mean_p)
    t = _times(cfg)
    f = friction_force_vec(cfg.atom, pack, t, cfg.run.shift_mode)
    a = mean_acceleration(cfg.atom, pack, t, cfg.run.shift_mode)
    scale = float(np.max(np.abs(f))) or 1.0
    identity = float(np.max(np.abs(cfg.atom.mass * a - f))) / scale
    v.note("shift_mode", cfg.run.shift_mode)
    v.note("mean_p", pack.mean_p)
    v.add("acceleration_force_identity", identity, 1e-12)
    write_csv(os.path.join(out, "force_analytic.csv"), ["t", "f_x", "f_y", "f_z"], np.column_stack([t, f]))
    return v


def cmd_simulate(cfg: RunConfig, out: str) -> Verdict:
    v = Verdict()
    setup = cfg.setup()
    pack = setup.pack(cfg.pack.beta)
    _groups(cfg, v, pack.mean_p)
    trajs, series, force = setup.run(cfg.pack.beta, beta_max=cfg.pack.beta)
    v.note("mean_p", series.mean_p)
    v.note("n_modes", len(trajs[0].coupled))
    v.note("dt", trajs[0].dt)
    simulation_checks(setup, trajs, series, force, v)
    if series.mean_p > 0:
        fwd, bwd = hemisphere_mean_frequency(trajs, pack)
        v.note("mean_frequency_forward", fwd)
        v.note("mean_frequency_backward", bwd)
    export_series_csv(series, force, os.path.join(out, "series.csv"))
    return v


def cmd_sweep(cfg: RunConfig, out: str) -> Verdict:
    v = Verdict()
    res = linearity_sweep(cfg.run.betas, cfg.setup(), cfg.run.t_star, cfg.run.source)
    write_csv(
        os.path.join(out, "sweep.csv"),
        ["beta", "mean_p", "force_x", "warning"],
        [[p.beta, p.mean_p, p.force_x, p.warning] for p in res.points],
    )
    v.note("source", cfg.run.source)
    v.note("t_star", res.t_star)
    v.note("slope", res.slope)
    v.note("intercept", res.intercept)
    v.add("r_squared", res.r_squared, 0.999, relation=">=")
    v.add("intercept_over_max_force", abs(res.intercept) / res.max_force, 1e-3)
    v.add("slope", res.slope, 0.0, res.slope < 0, "<")
    return v


def cmd_converge(cfg: RunConfig, out: str) -> Verdict:
    v = Verdict()
    metric = cfg.run.metric
    res = convergence_study(cfg.run.ladder, metric, cfg.setup(), beta=cfg.pack.beta, source=cfg.run.source)
    write_csv(
        os.path.join(out, "convergence.csv"),
        ["n_omega", "n_theta", "n_phi", metric],
        [[*r, e] for r, e in res.rows],
    )
    v.note("metric", metric)
    v.note("source", cfg.run.source)
    v.add("monotone", float(res.monotone), 1.0, res.monotone, ">=")
    v.add(f"final_{metric}", res.errors[-1], CONVERGENCE_TARGETS[metric])
    return v


COMMANDS = {
    "rate": cmd_rate,
    "shift": cmd_shift,
    "force-analytic": cmd_force_analytic,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "converge": cmd_converge,
}


def run_command(command: str, config: RunConfig, out_dir) -> int:
    """Run one command, write its CSV, ``checks.csv`` and ``summary.txt``.

    Returns the exit status. An unknown command writes nothing.
    """
    if command not in COMMANDS:
        return EXIT_USAGE
    out = os.fspath(out_dir)
    try:
        os.makedirs(out, exist_ok=True)
        verdict = COMMANDS[command](config, out)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    verdict.values.insert(0, ("command", command))
    with open(os.path.join(out, "config.txt"), "w") as fh:
        fh.write(format_config(config))
    verdict.write(os.path.join(out, "checks.csv"), os.path.join(out, "summary.txt"))
    return EXIT_OK if verdict.passed else EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def main(argv=None) -> int:
    parser = _Parser(prog="radfriction", description=__doc__.splitlines()[0])
    parser.add_argument("command", help=" | ".join(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    if args.command not in COMMANDS:
        print(f"radfriction: unknown command {args.command!r}; choose from {', '.join(COMMANDS)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
    except (OSError, ConfigError) as exc:
        print(f"radfriction: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run_command(args.command, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
