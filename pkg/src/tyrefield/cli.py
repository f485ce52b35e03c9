"""Batch command-line interface.

    tyrefield <command> --config <path> [--out <dir>] [--seed <u64>]

Commands: steady-force, simulate, equilibrium, stability-chart, bode,
check-dissipativity. Exit codes: 0 success, 1 configuration/validation
error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import friction as fr
from .config import ConfigError, RunConfig, parse_config
from .linearize import EquilibriumError, find_equilibrium, linearize
from .output import ResultBundle, render_svg, timed_bundle, write_csv
from .simulate import SimulationBlowUp, simulate
from .spectral import (
    PoleError,
    Rect,
    bode_sweep,
    default_chart_rect,
    make_chart_factory,
    stability_chart,
)
from .vehicle import assemble_model, check_dissipativity

COMMANDS = ("steady-force", "simulate", "equilibrium", "stability-chart",
            "bode", "check-dissipativity")


def run(command: str, cfg: RunConfig, seed: int = 0) -> ResultBundle:
    """Dispatch one batch command; deterministic for a given config + seed."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {COMMANDS}")
    started = time.time()
    h = cfg.config_hash()
    a = cfg.analysis

    if command == "steady-force":
        ax = cfg.front
        law = fr.FrictionLaw(mu_d=ax.mu_d, mu_s=ax.mu_s, v_s=ax.v_s, sigma_3=ax.sigma_3,
                             eps=ax.eps, constant_mu=ax.constant_mu)
        env = fr.BristleEnv(sigma_0=ax.sigma_0, sigma_1=ax.sigma_1, sigma_2=ax.sigma_2,
                            V=cfg.vehicle.v_x / ax.L, L=ax.L, F_z=ax.F_z,
                            chi_1=cfg.vehicle.chi_1, chi_2=cfg.vehicle.chi_2)
        profile = fr.PressureProfile(kind=ax.pressure, a=ax.a)
        v = np.linspace(a.v_min, a.v_max, a.v_steps)
        Fq = np.array([fr.steady_force(law, env, profile, vi, method="quadrature") for vi in v])
        if profile.kind in ("constant", "exponential"):
            Fc = np.array([fr.steady_force(law, env, profile, vi, method="closed") for vi in v])
        else:
            Fc = Fq.copy()
        payload = {"v": v, "F_closed": Fc, "F_quadrature": Fq}
        return timed_bundle(command, h, seed, payload, started)

    if command == "simulate":
        model = assemble_model(cfg.vehicle_config())
        traj = simulate(model, cfg.scenario_obj(), cfg.sim_grid())
        return timed_bundle(command, h, seed, {"trajectory": traj}, started)

    if command == "equilibrium":
        model = assemble_model(cfg.vehicle_config())
        delta = np.deg2rad([a.delta1_deg, a.delta2_deg])
        eq = find_equilibrium(model, delta)
        return timed_bundle(command, h, seed, {"equilibrium": eq}, started)

    if command == "stability-chart":
        factory = make_chart_factory(cfg.vehicle_config(), a.lambda1, a.lambda2)
        chi = np.linspace(a.chi_min, a.chi_max, a.chi_steps)
        vx = np.linspace(a.vx_min, a.vx_max, a.vx_steps)
        if a.omega_max > 0:
            rect = Rect(sigma_max=a.sigma_max, omega_max=a.omega_max)
        else:
            rect = lambda lin, c, v: default_chart_rect(lin, sigma_max=a.sigma_max)
        counts, errors = stability_chart(factory, chi, vx, rect=rect, workers=a.workers)
        payload = {"chi": chi, "vx": vx, "counts": counts, "errors": errors}
        return timed_bundle(command, h, seed, payload, started)

    if command == "bode":
        model = assemble_model(cfg.vehicle_config())
        delta = np.deg2rad([a.delta1_deg, a.delta2_deg])
        eq = find_equilibrium(model, delta)
        lin = linearize(model, eq)
        omegas = np.logspace(np.log10(a.omega_lo), np.log10(a.omega_hi), a.omega_steps)
        bode = bode_sweep(lin, omegas)
        return timed_bundle(command, h, seed, {"bode": bode}, started)

    # check-dissipativity
    report = check_dissipativity(cfg.vehicle_config(), seed=seed)
    return timed_bundle(command, h, seed, {"report": report}, started)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tyrefield",
        description="Distributed-tyre single-track vehicle models: simulation and analysis.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the run configuration")
    parser.add_argument("--out", default=None, help="output directory (default: config [output] dir)")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    args = parser.parse_args(argv)

    try:
        with open(args.config, encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1

    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    out_dir = args.out or cfg.output.dir
    try:
        bundle = run(args.command, cfg, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (fr.FrictionRangeError, fr.QuadratureError, SimulationBlowUp,
            EquilibriumError, PoleError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2

    if cfg.output.csv:
        paths = write_csv(bundle, out_dir)
        for p in paths:
            print(p)
    if cfg.output.svg and bundle.kind != "check-dissipativity":
        try:
            print(render_svg(bundle, out_dir))
        except ValueError as exc:
            print(f"plotting skipped: {exc}", file=sys.stderr)
    if bundle.kind == "stability-chart" and bundle.payload.get("errors"):
        for (i, j), msg in sorted(bundle.payload["errors"].items()):
            print(f"cell ({i},{j}) failed: {msg}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
