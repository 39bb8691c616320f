"""Symmetric split-step propagators for the spin on each adiabatic surface.

Every elementary map moves a single spin component with the others held
fixed, and is the exact flow of its piece of the vector field. The
palindromic compositions below are therefore exactly time reversible.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .model import (
    EPS_GAP,
    BranchViolation,
    DegenerateGap,
    ModelParams,
    SpinVector,
    SplitCoeffs,
    Surface,
    split_coeffs,
)
from .phases import PhaseSeries

EPS_LIN = 1e-12

# (map, fraction of tau) sequences, one tuple per variant
_SX1, _SX2, _SY, _SZ, _SY12 = K.SX_COUPLING, K.SX_ROT, K.SY, K.SZ_COUPLING, K.SY_ROT
_SEQUENCES = {
    "adiabatic": (
        ((_SX1, 0.25), (_SX2, 0.5), (_SX1, 0.25), (_SY, 0.5), (_SZ, 1.0),
         (_SY, 0.5), (_SX1, 0.25), (_SX2, 0.5), (_SX1, 0.25)),
        ((_SZ, 0.5), (_SX1, 0.25), (_SX2, 0.5), (_SX1, 0.25), (_SY, 1.0),
         (_SX1, 0.25), (_SX2, 0.5), (_SX1, 0.25), (_SZ, 0.5)),
        ((_SY, 0.25), (_SZ, 0.5), (_SY, 0.25), (_SX1, 0.5), (_SX2, 1.0),
         (_SX1, 0.5), (_SY, 0.25), (_SZ, 0.5), (_SY, 0.25)),
    ),
    "mean": (
        ((_SX2, 0.5), (_SY12, 1.0), (_SX2, 0.5)),
        ((_SY12, 0.5), (_SX2, 1.0), (_SY12, 0.5)),
    ),
}


class Variant(enum.IntEnum):
    U1 = 1
    U2 = 2
    U3 = 3


class Scheme(enum.Enum):
    TROTTER = "trotter"
    YOSHIDA4 = "yoshida4"
    YOSHIDA6 = "yoshida6"

    @classmethod
    def parse(cls, text: str) -> "Scheme":
        key = text.strip().lower()
        if key == "yoshida":
            key = "yoshida4"
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown scheme {text!r}; expected trotter, yoshida4 or yoshida6") from None

    @property
    def order(self) -> int:
        return {"trotter": 2, "yoshida4": 4, "yoshida6": 6}[self.value]


def triple_jump(order: int) -> tuple[float, float]:
    """Yoshida weights (outer, inner) lifting a symmetric method to ``order``."""
    k = 1.0 / (order - 1)
    outer = 1.0 / (2.0 - 2.0**k)
    return outer, 1.0 - 2.0 * outer


def substep_weights(scheme: Scheme) -> np.ndarray:
    weights = np.array([1.0])
    for order in range(4, scheme.order + 1, 2):
        outer, inner = triple_jump(order)
        weights = np.concatenate([outer * weights, inner * weights, outer * weights])
    return weights


@dataclass(frozen=True)
class VariantPolicy:
    """Fixed variant, or ``fixed=None`` to cycle U1, U2, (U3,) U1, ..."""

    fixed: Variant | None = None

    @classmethod
    def parse(cls, text: str) -> "VariantPolicy":
        key = text.strip().lower()
        if key == "cycle":
            return cls()
        try:
            return cls(Variant[key.upper()])
        except KeyError:
            raise ValueError(f"unknown variant policy {text!r}; expected cycle, u1, u2 or u3") from None

    def __str__(self):
        return "cycle" if self.fixed is None else self.fixed.name.lower()

    def indices(self, surf: Surface, n_steps: int, start: int = 0) -> np.ndarray:
        """0-based variant index used at each step."""
        n_var = n_variants(surf)
        if self.fixed is not None:
            check_variant(surf, self.fixed)
            return np.full(n_steps, int(self.fixed) - 1, dtype=np.int64)
        return (np.arange(start, start + n_steps, dtype=np.int64)) % n_var


CYCLE = VariantPolicy()


def n_variants(surf: Surface) -> int:
    return 2 if surf is Surface.S12 else 3


def check_variant(surf: Surface, variant: Variant) -> None:
    if int(variant) > n_variants(surf):
        raise ValueError(f"surface {surf.name} admits only U1 and U2")


@dataclass(frozen=True)
class Schedule:
    """Flattened elementary maps for one full step of each variant."""

    maps: np.ndarray  # (n_variants, length) int64
    coefs: np.ndarray  # (n_variants, length) fractions of tau


def build_schedule(surf: Surface, scheme: Scheme = Scheme.TROTTER) -> Schedule:
    seqs = _SEQUENCES["mean" if surf is Surface.S12 else "adiabatic"]
    weights = substep_weights(scheme)
    maps, coefs = [], []
    for seq in seqs:
        m = [mid for _ in weights for mid, _frac in seq]
        c = [w * frac for w in weights for _mid, frac in seq]
        maps.append(m)
        coefs.append(c)
    return Schedule(np.array(maps, dtype=np.int64), np.array(coefs, dtype=float))


def _raise_status(status: int, where: str):
    if status == K.DEGENERATE:
        raise DegenerateGap(f"level gap vanished {where}")
    if status == K.BRANCH:
        raise BranchViolation(f"analytic flow left its branch {where}; reduce the time step")


def _casimir(p: ModelParams, casimir: float | None) -> float:
    return p.radius**2 if casimir is None else casimir


def flow_sx_nonlinear(surf: Surface, s: SpinVector, tau: float, p: ModelParams, casimir: float | None = None) -> SpinVector:
    """Exact flow of dSx/dt = ±c3c / sqrt(c2c + c1c Sx) (+ on S11, - on S22)."""
    if surf is Surface.S12:
        raise ValueError("no nonlinear Sx flow on the mean surface")
    sx, status = K.flow_sx(surf.sign, s.sx, s.sy, s.sz, tau, p.omega, p.b, p.c1, p.mu, _casimir(p, casimir), EPS_GAP, EPS_LIN)
    _raise_status(status, f"in the Sx flow at {s}")
    return SpinVector(sx, s.sy, s.sz)


def flow_sz_nonlinear(surf: Surface, s: SpinVector, tau: float, p: ModelParams, casimir: float | None = None) -> SpinVector:
    """Exact flow of dSz/dt = ±b3c / sqrt(b2c + b1c Sz)."""
    if surf is Surface.S12:
        raise ValueError("no nonlinear Sz flow on the mean surface")
    sz, status = K.flow_sz(surf.sign, s.sx, s.sy, s.sz, tau, p.omega, p.b, p.c1, p.mu, _casimir(p, casimir), EPS_GAP, EPS_LIN)
    _raise_status(status, f"in the Sz flow at {s}")
    return SpinVector(s.sx, s.sy, sz)


def flow_shift(surf: Surface, axis: str, s: SpinVector, tau: float, p: ModelParams, casimir: float | None = None) -> SpinVector:
    """Single-component shift maps.

    ``axis``: ``sx_rot`` (any surface), ``sy`` (S11/S22, full Sy velocity),
    ``sy_rot`` (S12), or ``sx_coupling`` (alias of the nonlinear Sx flow).
    """
    if axis == "sx_coupling":
        return flow_sx_nonlinear(surf, s, tau, p, casimir)
    mid = {"sx_rot": K.SX_ROT, "sy": K.SY, "sy_rot": K.SY_ROT}.get(axis)
    if mid is None:
        raise ValueError(f"unknown shift axis {axis!r}")
    if (mid == K.SY and surf is Surface.S12) or (mid == K.SY_ROT and surf is not Surface.S12):
        raise ValueError(f"shift {axis!r} does not belong to surface {surf.name}")
    sx, sy, sz, status = K.apply_map(
        mid, surf.sign, s.sx, s.sy, s.sz, tau, *p.kernel_args, _casimir(p, casimir), EPS_GAP, EPS_LIN
    )
    _raise_status(status, f"in the Sy shift at {s}")
    return SpinVector(sx, sy, sz)


def _step(surf, variant, s, tau, p, scheme, casimir):
    check_variant(surf, variant)
    sched = build_schedule(surf, scheme)
    k = int(variant) - 1
    sx, sy, sz, status = K.apply_schedule(
        sched.maps[k], sched.coefs[k], surf.sign, s.sx, s.sy, s.sz, tau,
        *p.kernel_args, _casimir(p, casimir), EPS_GAP, EPS_LIN,
    )
    _raise_status(status, f"during a {variant.name} step from {s}")
    return SpinVector(sx, sy, sz)


def trotter_step(surf: Surface, variant: Variant, s: SpinVector, tau: float, p: ModelParams, casimir: float | None = None) -> SpinVector:
    """One palindromic second-order step U^k(tau)."""
    return _step(surf, variant, s, tau, p, Scheme.TROTTER, casimir)


def yoshida_step(
    surf: Surface, variant: Variant, s: SpinVector, tau: float, p: ModelParams,
    casimir: float | None = None, order: int = 4,
) -> SpinVector:
    """Triple-jump composition of :func:`trotter_step` (order 4 or 6)."""
    scheme = {4: Scheme.YOSHIDA4, 6: Scheme.YOSHIDA6}[order]
    return _step(surf, variant, s, tau, p, scheme, casimir)


@dataclass
class Trajectory:
    surface: Surface
    times: np.ndarray
    spins: np.ndarray  # (n, 3)
    phases: PhaseSeries
    dt: float
    variant_policy: VariantPolicy = CYCLE
    scheme: Scheme = Scheme.YOSHIDA4
    stride: int = 1
    casimir: float = field(default=1.0)

    def __len__(self):
        return len(self.times)

    def spin(self, k: int) -> SpinVector:
        return SpinVector.from_array(self.spins[k])


class IntegrationAborted(Exception):
    def __init__(self, step: int, cause: Exception):
        super().__init__(f"integration aborted at step {step}: {cause}")
        self.step = step
        self.cause = cause


def integrate_trajectory(
    s0: SpinVector,
    surf: Surface,
    p: ModelParams,
    tau: float,
    n_steps: int,
    variant_policy: VariantPolicy = CYCLE,
    scheme: Scheme = Scheme.YOSHIDA4,
    stride: int = 1,
    track_phases: bool = True,
    variant_offset: int = 0,
) -> Trajectory:
    """Propagate ``s0`` for ``n_steps`` steps of size ``tau``.

    C^2 is frozen from |s0|^2 for the whole run. Phases are accumulated at
    every step and stored, with the spins, every ``stride`` steps. A negative
    ``tau`` integrates backwards.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if not math.isfinite(tau):
        raise ValueError("tau must be finite")
    sched = build_schedule(surf, scheme)
    variants = variant_policy.indices(surf, n_steps, variant_offset)
    casimir = s0.norm2
    spins, bohr, geo, filled, status, fail_step = K.run_trajectory(
        s0.sx, s0.sy, s0.sz, sched.maps, sched.coefs, variants, surf.sign, tau, stride,
        *p.kernel_args, casimir, EPS_GAP, EPS_LIN, track_phases,
    )
    if status != K.OK:
        try:
            _raise_status(status, f"on surface {surf.name}")
        except (DegenerateGap, BranchViolation) as exc:
            raise IntegrationAborted(fail_step, exc) from exc
    times = np.arange(len(spins)) * stride * tau
    return Trajectory(
        surface=surf,
        times=times,
        spins=spins,
        phases=PhaseSeries(bohr=bohr, geometric=geo),
        dt=tau,
        variant_policy=variant_policy,
        scheme=scheme,
        stride=stride,
        casimir=casimir,
    )


def round_trip(
    s0: SpinVector, surf: Surface, p: ModelParams, tau: float, n_steps: int,
    variant_policy: VariantPolicy = CYCLE, scheme: Scheme = Scheme.YOSHIDA4,
) -> SpinVector:
    """Integrate forward ``n_steps`` then back along the reversed variant sequence."""
    fwd = integrate_trajectory(s0, surf, p, tau, n_steps, variant_policy, scheme, stride=max(n_steps, 1), track_phases=False)
    end = SpinVector.from_array(fwd.spins[-1])
    sched = build_schedule(surf, scheme)
    variants = variant_policy.indices(surf, n_steps)[::-1].copy()
    spins, _, _, _, status, step = K.run_trajectory(
        end.sx, end.sy, end.sz, sched.maps, sched.coefs, variants, surf.sign, -tau, max(n_steps, 1),
        *p.kernel_args, s0.norm2, EPS_GAP, EPS_LIN, False,
    )
    if status != K.OK:
        try:
            _raise_status(status, f"on the return leg on surface {surf.name}")
        except (DegenerateGap, BranchViolation) as exc:
            raise IntegrationAborted(step, exc) from exc
    return SpinVector.from_array(spins[-1])


__all__ = [
    "CYCLE",
    "IntegrationAborted",
    "Schedule",
    "Scheme",
    "SplitCoeffs",
    "Trajectory",
    "Variant",
    "VariantPolicy",
    "build_schedule",
    "flow_shift",
    "flow_sx_nonlinear",
    "flow_sz_nonlinear",
    "integrate_trajectory",
    "round_trip",
    "split_coeffs",
    "substep_weights",
    "trotter_step",
    "yoshida_step",
]
