"""Monte Carlo ensemble averages of Pauli expectation values and phase factors.

Each sample draws an initial spin, expresses rho_s in the adiabatic basis
there, and evolves the three matrix elements of the observable on their own
surfaces: (1,1) and (2,2) carry the diagonal elements, the mean surface
(1,2) carries the coherence together with exp(-i (Bohr + geometric)).
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .model import EPS_GAP, ModelParams, Surface
from .sampling import BOLTZMANN_SCALE, draw_samples, rho_subsystem
from .splitting import CYCLE, EPS_LIN, Scheme, VariantPolicy, build_schedule

log = logging.getLogger(__name__)

CHUNK = 256
TARGET_POINTS = 500


@dataclass
class ObservableSeries:
    times: np.ndarray
    sigma_z: np.ndarray
    sigma_z_err: np.ndarray
    sigma_x: np.ndarray
    sigma_x_err: np.ndarray
    abs2_bohr: np.ndarray
    abs2_geo: np.ndarray
    n_samples: int = 0
    aborted: list = field(default_factory=list)

    @property
    def aborted_fraction(self) -> float:
        return len(self.aborted) / self.n_samples if self.n_samples else 0.0


@dataclass(frozen=True)
class EnsembleSettings:
    """Integration settings shared by every sample."""

    dt: float = 0.001
    n_steps: int = 25000
    stride: int = 50
    scheme: Scheme = Scheme.YOSHIDA4
    variant_policy: VariantPolicy = CYCLE
    boltzmann_scale: float = BOLTZMANN_SCALE


def default_stride(n_steps: int) -> int:
    return max(1, n_steps // TARGET_POINTS)


def steps_for(t_end: float, dt: float) -> int:
    n = round(t_end / dt)
    if abs(n * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"t_end={t_end} is not a whole number of steps of dt={dt}")
    return int(n)


def _chunk_sums(p: ModelParams, cfg: EnsembleSettings, seed: int, start: int, stop: int):
    """Weighted partial sums for samples [start, stop)."""
    spins, weights = draw_samples(seed, range(start, stop), p, cfg.boltzmann_scale)
    scheds = {s: build_schedule(s, cfg.scheme) for s in Surface}
    var = {s: cfg.variant_policy.indices(s, cfg.n_steps) for s in Surface}
    out_z, out_x, bohr, geo, status = K.ensemble_chunk(
        spins, rho_subsystem(),
        scheds[Surface.S11].maps, scheds[Surface.S11].coefs, var[Surface.S11],
        scheds[Surface.S22].maps, scheds[Surface.S22].coefs, var[Surface.S22],
        scheds[Surface.S12].maps, scheds[Surface.S12].coefs, var[Surface.S12],
        cfg.dt, cfg.stride, p.omega, p.b, p.c1, p.c2, p.mu, EPS_GAP, EPS_LIN,
    )
    ok = status == K.OK
    aborted = [start + int(i) for i in np.flatnonzero(~ok)]
    w = weights[ok][:, None]
    sums = {"W": float(w.sum()), "C": float((w * w).sum())}
    for name, x in (("z", out_z[ok]), ("x", out_x[ok])):
        m = (w * x).sum(axis=0) / sums["W"] if sums["W"] > 0 else np.zeros(x.shape[1])
        dev = x - m
        sums[name] = (m, (w * w * dev * dev).sum(axis=0), (w * w * dev).sum(axis=0))
    sums["bohr"] = (w * np.exp(1j * bohr[ok])).sum(axis=0)
    sums["geo"] = (w * np.exp(1j * geo[ok])).sum(axis=0)
    return sums, aborted


def _chunk_job(args):
    return _chunk_sums(*args)


def _combine(parts, n_out):
    W = sum(s["W"] for s in parts)
    out = {}
    for name in ("z", "x"):
        m = sum(s["W"] * s[name][0] for s in parts) / W
        ss = np.zeros(n_out)
        for s in parts:
            mc, sc, dc = s[name]
            ss += sc + 2.0 * (mc - m) * dc + (mc - m) ** 2 * s["C"]
        out[name] = (m, np.sqrt(np.maximum(ss, 0.0)) / W)
    out["bohr"] = np.abs(sum(s["bohr"] for s in parts) / W) ** 2
    out["geo"] = np.abs(sum(s["geo"] for s in parts) / W) ** 2
    return out


def settings_from_run(run) -> EnsembleSettings:
    n_steps = steps_for(run.t_end, run.dt)
    stride = run.stride if run.stride is not None else default_stride(n_steps)
    return EnsembleSettings(run.dt, n_steps, stride, run.scheme, run.variant_policy, run.boltzmann_scale)


def ensemble_average(p: ModelParams, run) -> ObservableSeries:
    """Self-normalised importance-sampling estimate of the observables.

    ``run`` supplies samples, seed, workers and the integration settings
    (a :class:`spinbath.config.RunConfig`; its own ``params`` are ignored in
    favour of ``p``).

    Samples are split into fixed chunks of CHUNK indices, each with its own
    random streams, and partial sums are merged in chunk order, so the
    result does not depend on ``workers``. Samples whose integration fails
    are dropped and listed in ``aborted``.
    """
    samples, seed, workers = run.samples, run.seed, run.workers
    if samples < 1:
        raise ValueError("samples must be >= 1")
    cfg = settings_from_run(run)
    jobs = [(p, cfg, seed, lo, min(lo + CHUNK, samples)) for lo in range(0, samples, CHUNK)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chunk_job, jobs))
    else:
        results = [_chunk_job(j) for j in jobs]
    parts = [r[0] for r in results if r[0]["W"] > 0]
    aborted = [i for r in results for i in r[1]]
    if aborted:
        log.warning("%d of %d samples aborted", len(aborted), samples)
    n_out = cfg.n_steps // cfg.stride + 1
    times = np.arange(n_out) * cfg.stride * cfg.dt
    if not parts:
        nan = np.full(n_out, math.nan)
        return ObservableSeries(times, nan, nan, nan, nan, nan, nan, samples, aborted)
    c = _combine(parts, n_out)
    return ObservableSeries(
        times=times,
        sigma_z=c["z"][0],
        sigma_z_err=c["z"][1],
        sigma_x=c["x"][0],
        sigma_x_err=c["x"][1],
        abs2_bohr=c["bohr"],
        abs2_geo=c["geo"],
        n_samples=samples,
        aborted=aborted,
    )


def assemble_sample(rho_ad: np.ndarray, chi11: np.ndarray, chi22: np.ndarray, chi12: np.ndarray,
                    bohr: float, geometric: float) -> complex:
    """Full complex sum_{a a'} rho_{a a'} chi_{a' a}(t) for one sample.

    ``chi11``, ``chi22`` and ``chi12`` are the adiabatic-basis observable
    matrices evaluated on the (1,1), (2,2) and (1,2) trajectories. The
    imaginary part vanishes for Hermitian input; the ensemble kernel keeps
    only the real part.
    """
    f = np.exp(-1j * (bohr + geometric))
    return (
        rho_ad[0, 0] * chi11[0, 0]
        + rho_ad[1, 1] * chi22[1, 1]
        + rho_ad[0, 1] * chi12[1, 0] * f
        + rho_ad[1, 0] * chi12[0, 1] * np.conj(f)
    )
