"""Adiabatic structure of a two-level system coupled to one classical spin.

The quantum part of the Hamiltonian is

    h(S) = -Omega sx - c1 b sz - mu S . sigma
         = -Omega~ sx + eta sy - gamma sz

with gamma = c1 b + mu Sz, eta = -mu Sy, Omega~ = Omega + mu Sx, and the
classical bath energy is Sz^2/2 - c2 b Sz. Units are dimensionless, hbar = 1.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K

log = logging.getLogger(__name__)

EPS_GAP = 1e-12
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


class SpinBathError(Exception):
    """Base class for numerical failures in this package."""


class DegenerateGap(SpinBathError):
    """The level gap vanished; the adiabatic frame is undefined there."""


class BranchViolation(SpinBathError):
    """An analytic flow left its real branch; the step is too large."""


@dataclass(frozen=True)
class ModelParams:
    omega: float = 1.0
    b: float = 1.0
    c1: float = 0.01
    c2: float = 0.1
    mu: float = 0.25
    beta: float = 0.3
    radius: float = 1.0

    def __post_init__(self):
        for name in ("omega", "b", "c1", "c2", "mu", "beta", "radius"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def kernel_args(self):
        return self.omega, self.b, self.c1, self.c2, self.mu


@dataclass(frozen=True)
class SpinVector:
    sx: float
    sy: float
    sz: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.sx, self.sy, self.sz)):
            raise ValueError(f"non-finite spin {self}")

    @classmethod
    def from_angles(cls, cos_theta: float, phi: float, radius: float = 1.0) -> "SpinVector":
        sin_theta = math.sqrt(max(0.0, 1.0 - cos_theta * cos_theta))
        return cls(radius * sin_theta * math.cos(phi), radius * sin_theta * math.sin(phi), radius * cos_theta)

    @classmethod
    def from_array(cls, arr) -> "SpinVector":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])

    @property
    def norm2(self) -> float:
        return self.sx * self.sx + self.sy * self.sy + self.sz * self.sz


class Surface(enum.Enum):
    S11 = "11"
    S22 = "22"
    S12 = "12"

    @property
    def sign(self) -> float:
        """Weight of the level gap in the surface Hamiltonian."""
        return {"11": 1.0, "22": -1.0, "12": 0.0}[self.value]

    @classmethod
    def parse(cls, text: str) -> "Surface":
        key = text.strip().upper().replace("S", "").replace("(", "").replace(")", "").replace(",", "")
        if key == "21":
            key = "12"
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown surface {text!r}; expected S11, S22 or S12") from None


@dataclass(frozen=True)
class AdiabaticScalars:
    gamma: float
    eta: float
    omega_tilde: float
    gap: float


@dataclass(frozen=True)
class AdiabaticFrame:
    e1: float
    e2: float
    v1: np.ndarray
    v2: np.ndarray

    @property
    def basis(self) -> np.ndarray:
        """Unitary with the eigenvectors as columns, ordered (v1, v2)."""
        return np.column_stack([self.v1, self.v2])


@dataclass(frozen=True)
class SplitCoeffs:
    """Coefficients of the analytically integrable pieces of the spin flow.

    With C^2 = Omega^2 + (c1 b)^2 + mu^2 |S|^2 frozen, the (1,1) flow reads
    dSx/dt ⊃ c3c / sqrt(c2c + c1c Sx) and dSz/dt ⊃ b3c / sqrt(b2c + b1c Sz);
    both radicands equal the squared gap on the sphere |S|^2 = casimir.
    """

    c1c: float
    c2c: float
    c3c: float
    b1c: float
    b2c: float
    b3c: float
    csq: float


def adiabatic_scalars(s: SpinVector, p: ModelParams) -> AdiabaticScalars:
    gamma = p.c1 * p.b + p.mu * s.sz
    eta = -p.mu * s.sy
    omega_tilde = p.omega + p.mu * s.sx
    gap = math.sqrt(omega_tilde**2 + gamma**2 + eta**2)
    return AdiabaticScalars(gamma, eta, omega_tilde, gap)


def hamiltonian_matrix(s: SpinVector, p: ModelParams) -> np.ndarray:
    sc = adiabatic_scalars(s, p)
    return np.array(
        [[-sc.gamma, -sc.omega_tilde - 1j * sc.eta], [-sc.omega_tilde + 1j * sc.eta, sc.gamma]],
        dtype=complex,
    )


def adiabatic_frame(s: SpinVector, p: ModelParams, eps_gap: float = EPS_GAP) -> AdiabaticFrame:
    """Closed-form eigenpairs of h(S).

    Gauge: the larger-magnitude component of each eigenvector is real and
    positive (ties resolved towards the first component).
    """
    gap, a1, b1, a2, b2 = K.frame(s.sx, s.sy, s.sz, p.omega, p.b, p.c1, p.mu)
    if gap < eps_gap:
        raise DegenerateGap(f"gap {gap:.3g} below {eps_gap:g} at {s}")
    return AdiabaticFrame(gap, -gap, np.array([a1, b1]), np.array([a2, b2]))


def gtilde_eigenvectors(s: SpinVector, p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvector expressions written in terms of G~ = G + i eta / gamma.

    These divide by gamma and do not diagonalize h(S) in general; they are
    kept for cross-checks only (see :func:`compare_gtilde_eigenvectors`).
    """
    sc = adiabatic_scalars(s, p)
    if sc.gamma == 0.0:
        raise DegenerateGap("gamma = 0: G is undefined")
    g = (-sc.omega_tilde + sc.gap) / sc.gamma
    gt = g + 1j * sc.eta / sc.gamma
    norm = math.sqrt(2.0 * (1.0 + abs(gt) ** 2))
    v1 = np.array([1 + np.conj(gt), gt - 1]) / norm
    v2 = np.array([1 - np.conj(gt), 1 + gt]) / norm
    return v1, v2


def compare_gtilde_eigenvectors(s: SpinVector, p: ModelParams) -> dict:
    """Eigen-residuals of the G~ eigenvector expressions, logged when large."""
    h = hamiltonian_matrix(s, p)
    v1, v2 = gtilde_eigenvectors(s, p)
    gap = adiabatic_scalars(s, p).gap
    res = {
        "residual_1": float(np.linalg.norm(h @ v1 - gap * v1)),
        "residual_2": float(np.linalg.norm(h @ v2 + gap * v2)),
    }
    if max(res.values()) > 1e-8:
        log.info("G~ eigenvectors are not eigenvectors of h(S) at %s: %s", s, res)
    return res


def surface_hamiltonian(surf: Surface, s: SpinVector, p: ModelParams) -> float:
    bath = 0.5 * s.sz * s.sz - p.c2 * p.b * s.sz
    if surf is Surface.S12:
        return bath
    return bath + surf.sign * adiabatic_scalars(s, p).gap


def surface_gradient(surf: Surface, s: SpinVector, p: ModelParams, eps_gap: float = EPS_GAP) -> np.ndarray:
    """(dH/dSx, dH/dSy, dH/dSz) of the surface Hamiltonian at ``s``."""
    dz_bath = s.sz - p.c2 * p.b
    if surf is Surface.S12:
        return np.array([0.0, 0.0, dz_bath])
    csq = K.casimir_constant(p.omega, p.b, p.c1, p.mu, s.norm2)
    root = math.sqrt(max(0.0, csq + 2.0 * p.mu * (p.omega * s.sx + p.c1 * p.b * s.sz)))
    if root < eps_gap:
        raise DegenerateGap(f"gap {root:.3g} below {eps_gap:g} at {s}")
    k = surf.sign * p.mu / root
    return np.array(
        [
            k * (p.omega + p.mu * s.sx),
            k * p.mu * s.sy,
            dz_bath + k * (p.c1 * p.b + p.mu * s.sz),
        ]
    )


def spin_velocity(surf: Surface, s: SpinVector, p: ModelParams) -> np.ndarray:
    """dS/dt = grad H x S, the non-canonical spin bracket flow."""
    return np.cross(surface_gradient(surf, s, p), s.as_array())


def split_coeffs(s: SpinVector, p: ModelParams, casimir: float | None = None) -> SplitCoeffs:
    """Coefficients at ``s``; ``casimir`` is |S|^2 (defaults to radius^2)."""
    cas = p.radius**2 if casimir is None else casimir
    csq = K.casimir_constant(p.omega, p.b, p.c1, p.mu, cas)
    mu, om, c1b = p.mu, p.omega, p.c1 * p.b
    return SplitCoeffs(
        c1c=2 * mu * om,
        c2c=csq + 2 * mu * c1b * s.sz,
        c3c=-mu * c1b * s.sy,
        b1c=2 * mu * c1b,
        b2c=csq + 2 * mu * om * s.sx,
        b3c=mu * om * s.sy,
        csq=csq,
    )


def berry_connection(
    s: SpinVector, p: ModelParams, h: float = 1e-6, eps_gap: float = EPS_GAP
) -> tuple[np.ndarray, np.ndarray]:
    """Phi_aa^I = -i <a|d/dS_I|a> for both levels by central differences.

    The neighbouring eigenvectors are put in the gauge that makes the
    centre's largest component real and positive, so a switch of the
    frame's gauge branch between the three points cannot leak into the
    difference. (Phase-aligning neighbours to the centre vector itself
    would be parallel transport and zero the connection.)
    """
    centre = adiabatic_frame(s, p, eps_gap)
    phi = np.zeros((2, 3))
    base = s.as_array()
    for i in range(3):
        shifted = []
        for sgn in (1.0, -1.0):
            pt = base.copy()
            pt[i] += sgn * h
            fr = adiabatic_frame(SpinVector.from_array(pt), p, eps_gap)
            shifted.append(fr)
        for a, (vc, vp, vm) in enumerate(
            [(centre.v1, shifted[0].v1, shifted[1].v1), (centre.v2, shifted[0].v2, shifted[1].v2)]
        ):
            k = 0 if abs(vc[0]) >= abs(vc[1]) else 1
            vp = _fix_component(vp, k)
            vm = _fix_component(vm, k)
            d = np.vdot(vc, (vp - vm) / (2 * h))
            if abs(d.real) > 1e-8:
                raise ArithmeticError(f"norm not preserved in finite difference: Re<v|dv> = {d.real:.3g}")
            phi[a, i] = d.imag
    return phi[0], phi[1]


def _fix_component(v: np.ndarray, k: int) -> np.ndarray:
    """Rephase ``v`` so that component ``k`` is real and positive."""
    return v * (np.conj(v[k]) / abs(v[k]))
