"""Initial conditions: the quantum density matrix and the classical spin ensemble."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, SpinVector, adiabatic_frame, adiabatic_scalars

log = logging.getLogger(__name__)

EPS_GAMMA = 1e-8
# weight = exp(-BOLTZMANN_SCALE * beta * Sz^2), i.e. the Sz^2/2 bath term
BOLTZMANN_SCALE = 0.5


def rho_subsystem() -> np.ndarray:
    """|psi><psi| for psi = (2|1> - |2>)/sqrt(5) in the sigma_z basis."""
    psi = np.array([2.0, -1.0]) / math.sqrt(5.0)
    return np.outer(psi, psi).astype(complex)


def rho_adiabatic(s: SpinVector, p: ModelParams, rho_s: np.ndarray | None = None) -> np.ndarray:
    """rho_s expressed in the adiabatic basis of :func:`adiabatic_frame`."""
    rho_s = rho_subsystem() if rho_s is None else rho_s
    v = adiabatic_frame(s, p).basis
    return v.conj().T @ rho_s @ v


def rho_adiabatic_closed_form(s: SpinVector, p: ModelParams) -> np.ndarray:
    """Closed-form transform of the default rho_s in the G~ eigenvector convention.

    Matches V^dagger rho_s V with V built from :func:`gtilde_eigenvectors`.
    Below |gamma| = EPS_GAMMA those vectors are undefined and the result of
    :func:`rho_adiabatic` is returned instead.
    """
    sc = adiabatic_scalars(s, p)
    if abs(sc.gamma) < EPS_GAMMA:
        log.debug("gamma=%g below %g, using the adiabatic-frame transform", sc.gamma, EPS_GAMMA)
        return rho_adiabatic(s, p)
    g =(-sc.omega_tilde + sc.gap) / sc.gamma
    e = sc.eta / sc.gamma
    r11 = (9 * e**2 + (3 + g) ** 2) / 5
    r22 = (e**2 + (1 - 3 * g) ** 2) / 5
    r12 = -((3j * sc.eta + sc.gamma * (3 + g)) * (-1j * sc.eta + sc.gamma * (-1 + 3 * g))) / (5 * sc.gamma**2)
    norm = 2 * (1 + g**2 + e**2)
    return np.array([[r11, r12], [np.conj(r12), r22]], dtype=complex) / norm


@dataclass(frozen=True)
class WeightedSample:
    spin: SpinVector
    weight: float


def sample_stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for Monte Carlo sample ``index``."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def boltzmann_weight(sz, p: ModelParams, scale: float = BOLTZMANN_SCALE):
    return np.exp(-scale * p.beta * np.square(sz))


def sample_initial_spin(rng: np.random.Generator, p: ModelParams, scale: float = BOLTZMANN_SCALE) -> WeightedSample:
    """Uniform point on the sphere, Boltzmann factor on Sz carried as a weight."""
    cos_theta, u = rng.random(2)
    cos_theta = 2.0 * cos_theta - 1.0
    spin = SpinVector.from_angles(cos_theta, 2.0 * math.pi * u, p.radius)
    return WeightedSample(spin, float(boltzmann_weight(spin.sz, p, scale)))


def draw_samples(seed: int, indices, p: ModelParams, scale: float = BOLTZMANN_SCALE) -> tuple[np.ndarray, np.ndarray]:
    """Spins (n, 3) and weights (n,) for the given sample indices."""
    spins = np.empty((len(indices), 3))
    weights = np.empty(len(indices))
    for row, i in enumerate(indices):
        ws = sample_initial_spin(sample_stream(seed, int(i)), p, scale)
        spins[row] = ws.spin.as_array()
        weights[row] = ws.weight
    return spins, weights
