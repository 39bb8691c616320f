"""Bohr and geometric phases along spin trajectories."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EPS_GAP, PAULI, DegenerateGap, ModelParams, SpinVector, adiabatic_frame


@dataclass
class PhaseSeries:
    """Accumulated phases at the stored points of a trajectory.

    ``bohr`` is the integral of omega_12 = E1 - E2; ``geometric`` is
    theta_1 - theta_2 with theta_a the accumulated Pancharatnam phase
    sum_j arg <a(t_j)|a(t_j+1)> of level a.
    """

    bohr: np.ndarray
    geometric: np.ndarray


def bohr_frequency(s: SpinVector, p: ModelParams) -> float:
    fr = adiabatic_frame(s, p)
    return fr.e1 - fr.e2


def pauli_adiabatic(which: str, s: SpinVector, p: ModelParams) -> np.ndarray:
    """V^dagger sigma V with V the adiabatic basis at ``s``."""
    v = adiabatic_frame(s, p).basis
    return v.conj().T @ PAULI[which] @ v


def pancharatnam_phases(vectors: np.ndarray) -> np.ndarray:
    """Cumulative sum_j arg <v_j|v_{j+1}> for a sequence of unit vectors.

    ``vectors`` has shape (n, 2). Result has length n and starts at 0. It
    depends only on the gauge of the first and the last vector of each
    partial path, not on the gauge of the points in between.
    """
    ov = np.einsum("ij,ij->i", vectors[:-1].conj(), vectors[1:])
    return np.concatenate([[0.0], np.cumsum(np.angle(ov))])


def accumulate_phases(traj, p: ModelParams) -> PhaseSeries:
    """Recompute the phases of a :class:`~spinbath.splitting.Trajectory` from its stored points."""
    return phases_along(traj.spins, traj.dt * traj.stride, p)


def phases_along(spins: np.ndarray, dt: float, p: ModelParams, eps_gap: float = EPS_GAP) -> PhaseSeries:
    """Phases along stored spins (shape (n, 3)) sampled every ``dt``.

    Trapezoidal rule for the Bohr integral, discrete overlaps for the
    geometric part.
    """
    frames = []
    for row in spins:
        try:
            frames.append(adiabatic_frame(SpinVector.from_array(row), p, eps_gap))
        except DegenerateGap as exc:
            raise DegenerateGap(f"{exc} (stored point {len(frames)})") from None
    omega12 = np.array([f.e1 - f.e2 for f in frames])
    bohr = np.concatenate([[0.0], np.cumsum(0.5 * dt * (omega12[1:] + omega12[:-1]))])
    v1 = np.array([f.v1 for f in frames])
    v2 = np.array([f.v2 for f in frames])
    geometric = pancharatnam_phases(v1) - pancharatnam_phases(v2)
    return PhaseSeries(bohr=bohr, geometric=geometric)
