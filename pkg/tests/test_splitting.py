import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from spinbath.model import BranchViolation, DegenerateGap, ModelParams, SpinVector, Surface, surface_hamiltonian
from spinbath.splitting import (
    CYCLE,
    IntegrationAborted,
    Scheme,
    Variant,
    VariantPolicy,
    build_schedule,
    flow_shift,
    flow_sx_nonlinear,
    flow_sz_nonlinear,
    integrate_trajectory,
    n_variants,
    substep_weights,
    triple_jump,
    trotter_step,
    yoshida_step,
)

ADIABATIC = [Surface.S11, Surface.S22]


def all_steps():
    for surf in Surface:
        for k in range(1, n_variants(surf) + 1):
            yield surf, Variant(k)


class TestNonlinearFlows:
    S = SpinVector(0.2, 0.3, 0.4)

    @pytest.mark.parametrize("surf", ADIABATIC)
    def test_sx_flow_matches_ode(self, surf, defaults):
        p, s, tau = defaults, self.S, 0.01
        csq = p.omega**2 + (p.c1 * p.b) ** 2 + p.mu**2 * p.radius**2
        c1, c2, c3 = 2 * p.mu * p.omega, csq + 2 * p.mu * p.c1 * p.b * s.sz, -p.mu * p.c1 * p.b * s.sy
        sol = solve_ivp(lambda t, x: surf.sign * c3 / np.sqrt(c2 + c1 * x), (0, tau), [s.sx],
                        method="DOP853", rtol=1e-13, atol=1e-15)
        out = flow_sx_nonlinear(surf, s, tau, p)
        assert out.sx == pytest.approx(sol.y[0, -1], abs=1e-10)
        assert (out.sy, out.sz) == (s.sy, s.sz)

    @pytest.mark.parametrize("surf", ADIABATIC)
    def test_sz_flow_matches_ode(self, surf, defaults):
        p, s, tau = defaults, self.S, 0.01
        csq = p.omega**2 + (p.c1 * p.b) ** 2 + p.mu**2 * p.radius**2
        b1, b2, b3 = 2 * p.mu * p.c1 * p.b, csq + 2 * p.mu * p.omega * s.sx, p.mu * p.omega * s.sy
        sol = solve_ivp(lambda t, z: surf.sign * b3 / np.sqrt(b2 + b1 * z), (0, tau), [s.sz],
                        method="DOP853", rtol=1e-13, atol=1e-15)
        out = flow_sz_nonlinear(surf, s, tau, p)
        assert out.sz == pytest.approx(sol.y[0, -1], abs=1e-10)
        assert (out.sx, out.sy) == (s.sx, s.sy)

    @pytest.mark.parametrize("surf", ADIABATIC)
    def test_flat_field_when_sy_zero(self, surf, strong):
        s = SpinVector(0.6, 0.0, 0.8)
        assert flow_sx_nonlinear(surf, s, 0.7, strong) == s
        assert flow_sz_nonlinear(surf, s, 0.7, strong) == s

    @pytest.mark.parametrize("surf", ADIABATIC)
    def test_zero_step(self, surf, strong):
        s = SpinVector(0.36, -0.48, 0.8)
        assert flow_sx_nonlinear(surf, s, 0.0, strong) == s
        assert flow_sz_nonlinear(surf, s, 0.0, strong) == s

    def test_linear_limit(self):
        # Omega = 0 removes the Sx nonlinearity: the flow is then a constant-rate shift
        p = ModelParams(omega=0.0, mu=0.5)
        s = SpinVector(0.36, -0.48, 0.8)
        out = flow_sx_nonlinear(Surface.S11, s, 0.1, p)
        c2 = p.c1**2 + p.mu**2 + 2 * p.mu * p.c1 * s.sz
        assert out.sx == pytest.approx(s.sx + 0.1 * (-p.mu * p.c1 * s.sy) / math.sqrt(c2), abs=1e-15)

    def test_branch_violation_for_huge_step(self, strong):
        s = SpinVector(0.0, 1.0, 0.0)
        with pytest.raises(BranchViolation):
            for tau in (1e3, -1e3):
                flow_sz_nonlinear(Surface.S11, s, tau, strong)

    @given(st.floats(-1, 1), st.floats(0, 2 * math.pi), st.floats(-0.05, 0.05), st.sampled_from(ADIABATIC))
    def test_flows_invert(self, c, phi, tau, surf):
        p = ModelParams(mu=0.75)
        s = SpinVector.from_angles(c, phi)
        for flow in (flow_sx_nonlinear, flow_sz_nonlinear):
            back = flow(surf, flow(surf, s, tau, p), -tau, p)
            np.testing.assert_allclose(back.as_array(), s.as_array(), atol=1e-14)


class TestShifts:
    def test_rotation_shift(self, defaults):
        out = flow_shift(Surface.S11, "sx_rot", SpinVector(1, 1, 1), 0.1, defaults)
        assert out.sx == pytest.approx(0.91)
        assert (out.sy, out.sz) == (1, 1)

    def test_mean_surface_sy_shift_needs_sx(self, defaults):
        s = SpinVector(0.0, 0.6, 0.8)
        assert flow_shift(Surface.S12, "sy_rot", s, 0.3, defaults) == s

    def test_decoupled_sy_shift(self):
        p = ModelParams(mu=0.0)
        s = SpinVector(0.36, -0.48, 0.8)
        a = flow_shift(Surface.S11, "sy", s, 0.05, p)
        b = flow_shift(Surface.S12, "sy_rot", s, 0.05, p)
        assert a.sy == pytest.approx(b.sy, abs=1e-15)
        assert a.sy == pytest.approx(s.sy + 0.05 * s.sx * (s.sz - 0.1))

    def test_wrong_surface(self, defaults):
        with pytest.raises(ValueError):
            flow_shift(Surface.S12, "sy", SpinVector(0, 0, 1), 0.1, defaults)
        with pytest.raises(ValueError):
            flow_shift(Surface.S11, "sy_rot", SpinVector(0, 0, 1), 0.1, defaults)


class TestSteps:
    def test_weights(self):
        outer, inner = triple_jump(4)
        assert 2 * outer + inner == pytest.approx(1.0)
        assert outer == pytest.approx(1 / (2 - 2 ** (1 / 3)))
        for scheme in Scheme:
            assert substep_weights(scheme).sum() == pytest.approx(1.0)

    def test_schedules_are_palindromes(self):
        for surf in Surface:
            for scheme in Scheme:
                sched = build_schedule(surf, scheme)
                np.testing.assert_array_equal(sched.maps, sched.maps[:, ::-1])
                np.testing.assert_allclose(sched.coefs, sched.coefs[:, ::-1])

    def test_invalid_variant(self, defaults):
        with pytest.raises(ValueError):
            trotter_step(Surface.S12, Variant.U3, SpinVector(0, 0, 1), 0.01, defaults)

    @pytest.mark.parametrize("surf,variant", list(all_steps()))
    def test_zero_step_identity(self, surf, variant, strong):
        s = SpinVector(0.36, -0.48, 0.8)
        assert trotter_step(surf, variant, s, 0.0, strong) == s
        assert yoshida_step(surf, variant, s, 0.0, strong) == s

    @given(st.floats(-1, 1), st.floats(0, 2 * math.pi), st.floats(1e-4, 0.02), st.sampled_from(list(all_steps())),
           st.sampled_from([4, 6, None]))
    def test_reversible(self, c, phi, tau, step, order):
        surf, variant = step
        p = ModelParams(mu=0.75)
        s = SpinVector.from_angles(c, phi)
        if order is None:
            fwd = trotter_step(surf, variant, s, tau, p)
            back = trotter_step(surf, variant, fwd, -tau, p)
        else:
            fwd = yoshida_step(surf, variant, s, tau, p, order=order)
            back = yoshida_step(surf, variant, fwd, -tau, p, order=order)
        np.testing.assert_allclose(back.as_array(), s.as_array(), atol=1e-12)

    def test_mean_surface_rotation(self, defaults):
        n, tau = 31416, 0.001
        traj = integrate_trajectory(SpinVector(1, 0, 0), Surface.S12, defaults, tau, n,
                                    VariantPolicy(Variant.U1), Scheme.TROTTER, stride=n, track_phases=False)
        w, t = -0.1, n * tau
        np.testing.assert_allclose(traj.spins[-1], [math.cos(w * t), math.sin(w * t), 0.0], atol=1e-5)


class TestTrajectory:
    def test_empty(self, defaults):
        s = SpinVector(0.6, 0, 0.8)
        traj = integrate_trajectory(s, Surface.S11, defaults, 0.01, 0)
        assert len(traj) == 1
        np.testing.assert_array_equal(traj.spins[0], s.as_array())
        assert traj.phases.bohr[0] == 0 and traj.phases.geometric[0] == 0

    def test_cycle_indices(self):
        np.testing.assert_array_equal(CYCLE.indices(Surface.S11, 5), [0, 1, 2, 0, 1])
        np.testing.assert_array_equal(CYCLE.indices(Surface.S12, 5), [0, 1, 0, 1, 0])
        np.testing.assert_array_equal(VariantPolicy.parse("u2").indices(Surface.S22, 3), [1, 1, 1])

    def test_times_uniform(self, strong):
        traj = integrate_trajectory(SpinVector(0.6, 0, 0.8), Surface.S22, strong, 0.002, 100, stride=10)
        np.testing.assert_allclose(np.diff(traj.times), 0.02)
        assert len(traj) == 11

    def test_mean_surface_keeps_sz(self, strong):
        s = SpinVector.from_angles(0.3, 1.0)
        traj = integrate_trajectory(s, Surface.S12, strong, 0.001, 25_000, stride=1, track_phases=False)
        assert np.all(traj.spins[:, 2] == s.sz)
        rho2 = traj.spins[:, 0] ** 2 + traj.spins[:, 1] ** 2
        slope = np.polyfit(traj.times, rho2, 1)[0]
        assert abs(slope) < 1e-8

    def test_energy_conservation_strong_coupling(self, strong):
        s = SpinVector.from_angles(0.3, 1.0)
        traj = integrate_trajectory(s, Surface.S11, strong, 0.001, 25_000, stride=25, track_phases=False)
        e = np.array([surface_hamiltonian(Surface.S11, SpinVector.from_array(x), strong) for x in traj.spins])
        assert np.max(np.abs(e - e[0])) / abs(e[0]) < 1e-4

    @pytest.mark.parametrize("surf", ADIABATIC)
    def test_casimir_drift_shrinks_with_step(self, surf, strong):
        s = SpinVector.from_angles(0.3, 1.0)

        def drift(tau):
            n = round(5.0 / tau)
            traj = integrate_trajectory(s, surf, strong, tau, n, scheme=Scheme.TROTTER, stride=10, track_phases=False)
            n2 = np.einsum("ij,ij->i", traj.spins, traj.spins)
            return np.max(np.abs(n2 - 1.0))

        ratio = drift(0.02) / drift(0.01)
        assert 3.0 < ratio < 5.0

    @pytest.mark.parametrize("surf", ADIABATIC)
    def test_variants_agree_to_second_order(self, surf, strong):
        s = SpinVector.from_angles(0.3, 1.0)

        def spread(tau):
            n = round(1.0 / tau)
            ends = [integrate_trajectory(s, surf, strong, tau, n, VariantPolicy(Variant(k)), Scheme.TROTTER,
                                         stride=n, track_phases=False).spins[-1] for k in (1, 2, 3)]
            return max(np.max(np.abs(a - b)) for a in ends for b in ends)

        ratio = spread(0.02) / spread(0.01)
        assert 3.5 < ratio < 4.5

    def test_abort_reports_step(self, strong):
        with pytest.raises(IntegrationAborted) as info:
            integrate_trajectory(SpinVector(0.0, 1.0, 0.0), Surface.S11, strong, 50.0, 10, scheme=Scheme.TROTTER)
        assert info.value.step >= 0
        assert isinstance(info.value.cause, (BranchViolation, DegenerateGap))

    def test_rejects_bad_arguments(self, defaults):
        with pytest.raises(ValueError):
            integrate_trajectory(SpinVector(0, 0, 1), Surface.S11, defaults, 0.01, -1)
        with pytest.raises(ValueError):
            Scheme.parse("rk4")
