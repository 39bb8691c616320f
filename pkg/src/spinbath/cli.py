"""Command line entry point: ``spinbath simulate | trajectory | check``.

Exit codes: 0 success, 1 failed check, 2 configuration error, 3 aborted
integration.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import sys
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, RunConfig, parse_config
from .diagnostics import convergence_order, drift_report, reference_integrate
from .ensemble import ObservableSeries, ensemble_average
from .model import SpinBathError, SpinVector, Surface, surface_hamiltonian
from .sampling import sample_initial_spin, sample_stream
from .splitting import Scheme, Variant, VariantPolicy, integrate_trajectory, n_variants, round_trip, IntegrationAborted

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3
FLOAT_FORMAT = ".15g"
SIMULATE_COLUMNS = ("t", "sigma_z", "sigma_z_err", "sigma_x", "sigma_x_err", "abs2_bohr", "abs2_geo")
TRAJECTORY_COLUMNS = ("t", "Sx", "Sy", "Sz", "H_surface", "casimir", "bohr", "geometric")


def _fmt(x: float) -> str:
    return format(float(x), FLOAT_FORMAT)


@contextlib.contextmanager
def _open_output(cfg: RunConfig):
    if cfg.output is None:
        yield sys.stdout
    else:
        with open(cfg.output, "w", newline="") as fh:
            yield fh


def _write_rows(cfg: RunConfig, header, columns):
    with _open_output(cfg) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([_fmt(v) for v in row])


def initial_spin(cfg: RunConfig) -> SpinVector:
    if cfg.initial_spin is not None:
        return cfg.initial_spin
    return sample_initial_spin(sample_stream(cfg.seed, 0), cfg.params, cfg.boltzmann_scale).spin


def cmd_simulate(cfg: RunConfig) -> int:
    series: ObservableSeries = ensemble_average(cfg.params, cfg)
    _write_rows(
        cfg,
        SIMULATE_COLUMNS,
        (series.times, series.sigma_z, series.sigma_z_err, series.sigma_x,
         series.sigma_x_err, series.abs2_bohr, series.abs2_geo),
    )
    if series.aborted:
        print(f"error: {len(series.aborted)} sample(s) aborted: {series.aborted}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def cmd_trajectory(cfg: RunConfig) -> int:
    s0 = initial_spin(cfg)
    try:
        traj = integrate_trajectory(
            s0, cfg.surface, cfg.params, cfg.dt, cfg.n_steps,
            cfg.variant_policy, cfg.scheme, stride=cfg.output_stride,
        )
    except IntegrationAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT
    spins = traj.spins
    energy = [surface_hamiltonian(cfg.surface, SpinVector.from_array(x), cfg.params) for x in spins]
    casimir = np.einsum("ij,ij->i", spins, spins)
    _write_rows(
        cfg,
        TRAJECTORY_COLUMNS,
        (traj.times, spins[:, 0], spins[:, 1], spins[:, 2], energy, casimir,
         traj.phases.bohr, traj.phases.geometric),
    )
    return EXIT_OK


@dataclass
class CheckResult:
    name: str
    value: float
    limit: str
    passed: bool


def _guarded(name: str, limit: str, fn, ok) -> CheckResult:
    try:
        value = fn()
    except SpinBathError as exc:
        log.info("%s failed: %s", name, exc)
        return CheckResult(name, float("nan"), limit, False)
    except IntegrationAborted as exc:
        log.info("%s failed: %s", name, exc)
        return CheckResult(name, float("nan"), limit, False)
    return CheckResult(name, value, limit, bool(ok(value)))


def run_checks(cfg: RunConfig) -> list[CheckResult]:
    """Reversibility, drift, order and oracle checks at the configured parameters."""
    p, s0 = cfg.params, initial_spin(cfg)
    schemes = [Scheme.TROTTER] + ([cfg.scheme] if cfg.scheme is not Scheme.TROTTER else [])
    results = []
    n_rev = 10_000
    for surf in Surface:
        policies = [VariantPolicy()] + [VariantPolicy(Variant(v)) for v in range(1, n_variants(surf) + 1)]
        for scheme in schemes:
            for pol in policies:
                results.append(_guarded(
                    f"reversibility {surf.name} {scheme.value} {pol}", "< 1e-9",
                    lambda: float(np.max(np.abs(
                        round_trip(s0, surf, p, cfg.dt, n_rev, pol, scheme).as_array() - s0.as_array()))),
                    lambda v: v < 1e-9,
                ))
    for surf in Surface:
        energy_limit = 1e-8 if surf is Surface.S12 else 1e-4

        def drifts(surf=surf):
            traj = integrate_trajectory(s0, surf, p, cfg.dt, cfg.n_steps, cfg.variant_policy, cfg.scheme,
                                        stride=cfg.output_stride, track_phases=False)
            return drift_report(traj, p)

        try:
            rep = drifts()
        except (SpinBathError, IntegrationAborted) as exc:
            log.info("drift run on %s failed: %s", surf.name, exc)
            rep = None
        nan = float("nan")
        results.append(CheckResult(f"casimir drift {surf.name}", rep.casimir_rel_drift if rep else nan,
                                   "< 1e-6", bool(rep and rep.casimir_rel_drift < 1e-6)))
        results.append(CheckResult(f"energy drift {surf.name}", rep.energy_rel_drift if rep else nan,
                                   f"< {energy_limit:g}", bool(rep and rep.energy_rel_drift < energy_limit)))
    for surf in Surface:
        for scheme in schemes:
            nominal = scheme.order
            taus = [0.1, 0.05, 0.025, 0.0125] if nominal == 2 else [0.2, 0.1, 0.05, 0.025]
            results.append(_guarded(
                f"order {surf.name} {scheme.value}", f">= {nominal - 0.2:g}",
                lambda: convergence_order(surf, scheme, s0, p, 10.0, taus),
                lambda v, n=nominal: v >= n - 0.2,
            ))
    for surf in Surface:
        def oracle(surf=surf):
            ref = reference_integrate(s0, surf, p, 10.0, 1e-12)(10.0)
            traj = integrate_trajectory(s0, surf, p, 1e-4, 100_000, scheme=Scheme.YOSHIDA4,
                                        stride=100_000, track_phases=False)
            return float(np.max(np.abs(traj.spins[-1] - ref)))

        results.append(_guarded(f"oracle match {surf.name}", "< 1e-6", oracle, lambda v: v < 1e-6))
    return results


def cmd_check(cfg: RunConfig) -> int:
    results = run_checks(cfg)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {r.value:<12.4g} {r.limit:<10} {'PASS' if r.passed else 'FAIL'}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_CHECK


COMMANDS = {"simulate": cmd_simulate, "trajectory": cmd_trajectory, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinbath", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", metavar="PATH")
    parser.add_argument("--mu", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--t-end", type=float)
    parser.add_argument("--samples", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--scheme")
    parser.add_argument("--variant-policy")
    parser.add_argument("--surface")
    parser.add_argument("--initial-spin", metavar="SX,SY,SZ")
    parser.add_argument("--stride", type=int)
    parser.add_argument("--output", metavar="PATH")
    parser.add_argument("--workers", type=int)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        cfg = parse_config(args.config, flags)
        if args.command != "check":
            cfg.n_steps  # validates t_end against dt before any work starts
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
