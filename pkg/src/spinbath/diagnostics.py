"""Reference ODE solutions, drift and round-trip diagnostics, convergence orders."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .model import ModelParams, SpinBathError, SpinVector, Surface, surface_hamiltonian
from .splitting import Scheme, Trajectory, integrate_trajectory, round_trip


class StiffnessFailure(SpinBathError):
    """The adaptive reference solver could not complete the interval."""


@dataclass(frozen=True)
class DriftReport:
    casimir_rel_drift: float
    energy_rel_drift: float
    reversibility_defect: float
    measured_order: float = 0.0


@dataclass
class ReferenceSolution:
    """Dense output of the adaptive solver; call with a time or array of times."""

    t: np.ndarray
    y: np.ndarray  # (3, n)
    _sol: object

    def __call__(self, t):
        return self._sol(t)


def _exact_rhs(sign: float, p: ModelParams):
    om, c1b, c2b, mu = p.omega, p.c1 * p.b, p.c2 * p.b, p.mu

    def rhs(_t, y):
        sx, sy, sz = y
        if sign == 0.0:
            gx = gy = 0.0
            gz = sz - c2b
        else:
            gap = math.sqrt((om + mu * sx) ** 2 + (mu * sy) ** 2 + (c1b + mu * sz) ** 2)
            k = sign * mu / gap
            gx, gy, gz = k * (om + mu * sx), k * mu * sy, sz - c2b + k * (c1b + mu * sz)
        return [gy * sz - gz * sy, gz * sx - gx * sz, gx * sy - gy * sx]

    return rhs


def reference_integrate(s0: SpinVector, surf: Surface, p: ModelParams, t_end: float, tol: float = 1e-12) -> ReferenceSolution:
    """Integrate the unsplit equations of motion with an adaptive 8(5,3) pair (DOP853)."""
    if not 1e-14 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-14, 1e-6]")
    sol = solve_ivp(
        _exact_rhs(surf.sign, p), (0.0, t_end), s0.as_array(), method="DOP853",
        rtol=tol, atol=tol, dense_output=True,
    )
    if not sol.success:
        raise StiffnessFailure(sol.message)
    return ReferenceSolution(sol.t, sol.y, sol.sol)


def mean_surface_rotation(s0: SpinVector, p: ModelParams, t) -> np.ndarray:
    """Closed-form (1,2) flow: rotation about z at the constant rate Sz - c2 b."""
    t = np.asarray(t, dtype=float)
    w = s0.sz - p.c2 * p.b
    c, s = np.cos(w * t), np.sin(w * t)
    return np.stack([s0.sx * c - s0.sy * s, s0.sx * s + s0.sy * c, np.full_like(t, s0.sz)], axis=-1)


def drift_report(traj: Trajectory, p: ModelParams, order_taus=None) -> DriftReport:
    """Maximum relative drifts along ``traj`` plus a round-trip defect.

    The measured order is only computed when ``order_taus`` is given, since it
    needs several extra runs; otherwise it is reported as 0.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    spins = traj.spins
    n2 = np.einsum("ij,ij->i", spins, spins)
    casimir = float(np.max(np.abs(n2 - n2[0])) / n2[0])
    energies = np.array([surface_hamiltonian(traj.surface, SpinVector.from_array(x), p) for x in spins])
    e0 = energies[0]
    energy = float(np.max(np.abs(energies - e0)) / abs(e0)) if e0 != 0 else float(np.max(np.abs(energies)))
    n_steps = (len(traj) - 1) * traj.stride
    s0 = traj.spin(0)
    if n_steps == 0:
        rev = 0.0
    else:
        back = round_trip(s0, traj.surface, p, traj.dt, n_steps, traj.variant_policy, traj.scheme)
        rev = float(np.max(np.abs(back.as_array() - s0.as_array())))
    order = 0.0
    if order_taus is not None:
        t_end = n_steps * traj.dt
        order = convergence_order(traj.surface, traj.scheme, s0, p, t_end, order_taus)
    return DriftReport(casimir, energy, rev, order)


def convergence_order(surf: Surface, scheme: Scheme, s0: SpinVector, p: ModelParams, t_end: float, taus) -> float:
    """Least-squares slope of log(error) against log(tau).

    The error is the largest component deviation over ten equally spaced
    times in (0, t_end].

    Errors are measured against the closed-form rotation on the mean surface
    and against :func:`reference_integrate` at tol 1e-13 elsewhere.
    """
    taus = np.asarray(taus, dtype=float)
    if len(taus) < 3:
        raise ValueError("need at least three step sizes")
    if not np.allclose(taus[1:] / taus[:-1], 0.5, rtol=1e-9):
        raise ValueError("each step size must halve the previous one")
    n_match = 10
    t_match = t_end * np.arange(1, n_match + 1) / n_match
    if surf is Surface.S12:
        exact = mean_surface_rotation(s0, p, t_match)
    else:
        exact = reference_integrate(s0, surf, p, t_end, tol=1e-13)(t_match).T
    errors = []
    for tau in taus:
        n = round(t_end / tau)
        if abs(n * tau - t_end) > 1e-9 * max(1.0, t_end) or n % n_match:
            raise ValueError(f"t_end/tau must be a multiple of {n_match} (tau={tau})")
        traj = integrate_trajectory(s0, surf, p, tau, n, scheme=scheme, stride=n // n_match, track_phases=False)
        errors.append(np.max(np.abs(traj.spins[1:] - exact)))
    slope, _ = np.polyfit(np.log(taus), np.log(errors), 1)
    return float(slope)
