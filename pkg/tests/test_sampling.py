import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from spinbath.model import ModelParams, SpinVector, gtilde_eigenvectors
from spinbath.sampling import (
    EPS_GAMMA,
    boltzmann_weight,
    draw_samples,
    rho_adiabatic,
    rho_adiabatic_closed_form,
    rho_subsystem,
    sample_initial_spin,
    sample_stream,
)


def test_subsystem_density_matrix():
    rho = rho_subsystem()
    np.testing.assert_allclose(rho, [[0.8, -0.4], [-0.4, 0.2]], atol=1e-15)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(rho @ rho, rho, atol=1e-15)


@given(st.floats(-1, 1), st.floats(0, 2 * math.pi), st.floats(0, 1))
def test_adiabatic_density_matrix_is_a_state(c, phi, mu):
    rho = rho_adiabatic(SpinVector.from_angles(c, phi), ModelParams(mu=mu))
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-15)
    assert np.linalg.eigvalsh(rho).min() >= -1e-12


def test_adiabatic_density_matrix_random_points(rng):
    p = ModelParams(mu=0.75)
    for c, phi in zip(rng.uniform(-1, 1, 10_000), rng.uniform(0, 2 * np.pi, 10_000)):
        rho = rho_adiabatic(SpinVector.from_angles(c, phi), p)
        assert abs(np.trace(rho) - 1) < 1e-12
        assert abs(rho[0, 1] - np.conj(rho[1, 0])) < 1e-15


def test_closed_form_matches_gtilde_basis_transform(defaults):
    s = SpinVector(0.2, 0.3, 0.4)
    v1, v2 = gtilde_eigenvectors(s, defaults)
    v = np.column_stack([v1, v2])
    direct = v.conj().T @ rho_subsystem() @ v
    np.testing.assert_allclose(rho_adiabatic_closed_form(s, defaults), direct, atol=1e-10)


def test_closed_form_falls_back_at_small_gamma():
    p = ModelParams(mu=0.5, c1=0.0)
    s = SpinVector(0.6, 0.8, 0.5 * EPS_GAMMA)
    np.testing.assert_array_equal(rho_adiabatic_closed_form(s, p), rho_adiabatic(s, p))


def test_sample_on_sphere_and_deterministic(defaults):
    a = sample_initial_spin(sample_stream(7, 3), defaults)
    b = sample_initial_spin(sample_stream(7, 3), defaults)
    assert a == b
    assert abs(a.spin.norm2 - 1.0) < 1e-15
    assert a.weight == pytest.approx(math.exp(-0.5 * defaults.beta * a.spin.sz**2))
    other = sample_initial_spin(sample_stream(7, 4), defaults)
    assert other != a


def test_samples_independent_of_batching(defaults):
    spins_all, w_all = draw_samples(11, range(50), defaults)
    spins_b, w_b = draw_samples(11, range(20, 50), defaults)
    np.testing.assert_array_equal(spins_all[20:], spins_b)
    np.testing.assert_array_equal(w_all[20:], w_b)


def test_self_normalised_constant(defaults):
    _, w = draw_samples(5, range(1000), defaults)
    assert np.sum(w * 1.0) / np.sum(w) == 1.0


def test_azimuthal_symmetry(defaults):
    spins, _ = draw_samples(2024, range(100_000), defaults)
    for k in (0, 1):
        x = spins[:, k]
        assert abs(x.mean()) < 4 * x.std() / math.sqrt(len(x))


def test_weighted_sz_squared_matches_quadrature(defaults):
    beta = defaults.beta
    num = quad(lambda u: u * u * math.exp(-beta * u * u / 2), -1, 1, epsabs=1e-14)[0]
    den = quad(lambda u: math.exp(-beta * u * u / 2), -1, 1, epsabs=1e-14)[0]
    spins, w = draw_samples(99, range(1_000_000), defaults)
    x = spins[:, 2] ** 2
    mean = np.sum(w * x) / np.sum(w)
    err = math.sqrt(np.sum(w**2 * (x - mean) ** 2)) / np.sum(w)
    assert abs(mean - num / den) < 3 * err


def test_weight_scale_option(defaults):
    assert boltzmann_weight(0.5, defaults, scale=1.0) == pytest.approx(math.exp(-defaults.beta * 0.25))
