"""Approximate solution, forcing, remainder and the error functionals."""

import math

import numpy as np
import pytest

from slowns import asymptotics as asy
from slowns import grid
from slowns.grid import Grid2D, GridX, GridY
from slowns.model import FluidParams, make_initial_data, pressure, pressure_potential
from slowns.solver1d import SlabState, SolverConfig, equilibrium, slab_from_spec
from slowns.solver2d import (BoxTooSmall, State2D, equilibrium2d, rhs_primitive, run_full,
                             slow_embed)

PARAMS = FluidParams()
SPEC = make_initial_data("gaussian_bump", 0.3)


def paired(eps, n_y=128, n_x=32, L=7.0):
    gy = GridY(n_y, L)
    slab = slab_from_spec(SPEC, GridX(n_x), gy)
    g2 = Grid2D(GridX(n_x), GridY(n_y, L / eps))
    return slab, g2


def perturbed(state, g2, amp=1e-2):
    X, Y = np.meshgrid(g2.x.nodes, g2.y.nodes)
    env = np.exp(-(Y / g2.y.half_length * 4) ** 2)
    return State2D(state.rho + amp * env * np.cos(2 * np.pi * X),
                   state.u1 + amp * env * np.sin(2 * np.pi * X),
                   state.u2 - amp * env * np.cos(4 * np.pi * X), state.t)


def self_approx(full, g2):
    """Approximate solution equal to ``full`` with its PDE time derivatives."""
    rt, u1t, u2t = rhs_primitive(full, g2, PARAMS)
    return asy.ApproxSolution(full.rho.copy(), (full.u1.copy(), full.u2.copy()), 1.0, full.t,
                              rt, (u1t, u2t))


class TestBuildApprox:
    def test_equilibrium(self):
        g2 = Grid2D(GridX(32), GridY(32, 20.0))
        ap = asy.build_approx(equilibrium(32, GridY(32, 2.0)), 0.1, g2, PARAMS)
        assert np.all(ap.rho_a == 1.0) and np.all(ap.u_a[0] == 0) and np.all(ap.u_a[1] == 0)
        assert np.all(ap.rho_a_t == 0.0)

    def test_eps_one_resamples(self):
        slab, g2 = paired(1.0, n_y=64)
        ap = asy.build_approx(slab, 1.0, g2)
        assert np.array_equal(ap.rho_a, slab.eta) and np.array_equal(ap.u_a[1], slab.frakw)

    def test_unit_mass(self):
        slab, g2 = paired(0.1)
        ap = asy.build_approx(slab, 0.1, g2)
        assert np.max(np.abs(grid.integrate_x(ap.rho_a) - 1.0)) <= 1e-12

    def test_box_too_small(self):
        slab, _ = paired(0.1)
        with pytest.raises(BoxTooSmall):
            asy.build_approx(slab, 0.1, Grid2D(GridX(32), GridY(64, 30.0)))

    def test_grid_mismatch(self):
        slab, _ = paired(0.1)
        with pytest.raises(ValueError):
            asy.build_approx(slab, 0.1, Grid2D(GridX(64), GridY(128, 70.0)))


class TestForcing:
    def test_equilibrium(self):
        G = asy.forcing_G(equilibrium(32, GridY(32, 2.0)), 0.1, PARAMS)
        assert np.max(np.abs(G[0])) == 0.0 and np.max(np.abs(G[1])) == 0.0

    def test_y_independent_slab(self):
        x = GridX(32).nodes
        eta = np.tile(1.0 + 0.2 * np.cos(2 * np.pi * x), (32, 1))
        w = np.tile(0.1 * np.sin(2 * np.pi * x), (32, 1))
        slab = SlabState(eta, w, w.copy(), gy=GridY(32, 2.0))
        G = asy.forcing_G(slab, 0.2, PARAMS)
        assert max(np.max(np.abs(G[0])), np.max(np.abs(G[1]))) <= 1e-13
        assert np.max(np.abs(asy.continuity_source(slab, 0.2))) <= 1e-13

    def test_scaling(self):
        slab, _ = paired(1.0)
        eps = [0.2, 0.1, 0.05]
        norms = [asy.forcing_norms(asy.forcing_G(slab, e, PARAMS), slab.gy, e) for e in eps]
        l2 = [n[0] / math.sqrt(e) for n, e in zip(norms, eps)]
        li = [n[1] / e for n, e in zip(norms, eps)]
        for seq in (l2, li):
            assert max(seq) / min(seq) <= 2.0

    def test_embedding_matches_slab_grid(self):
        slab, g2 = paired(0.1)
        G2d = asy.forcing_G(slab, 0.1, PARAMS, g2)
        Gs = asy.forcing_G(slab, 0.1, PARAMS)
        assert np.max(np.abs(G2d[0] - Gs[0])) <= 1e-15

    def test_underresolved_warns(self):
        slab = slab_from_spec(SPEC, GridX(32), GridY(16, 7.0))
        with pytest.warns(UserWarning):
            asy.forcing_G(slab, 0.1, PARAMS)


class TestRemainder:
    def test_zero_when_full_equals_approx(self):
        full = perturbed(equilibrium2d(Grid2D(GridX(32), GridY(32, 2.0))),
                         Grid2D(GridX(32), GridY(32, 2.0)))
        g2 = Grid2D(GridX(32), GridY(32, 2.0))
        rf = asy.remainder(full, self_approx(full, g2), g2, PARAMS)
        for f in (rf.varrho, *rf.R, rf.omega, *rf.DtR, rf.flux):
            assert np.max(np.abs(f)) == 0.0

    def test_flux_and_vorticity_recheck(self):
        slab, g2 = paired(0.2)
        full = perturbed(slow_embed(slab, 0.2, g2), g2)
        ap = asy.build_approx(slab, 0.2, g2, PARAMS)
        rf = asy.remainder(full, ap, g2, PARAMS)
        R1, R2 = full.u1 - ap.u_a[0], full.u2 - ap.u_a[1]
        div_R = grid.ddx(R1) + grid.ddy(R2, g2.y)
        flux = PARAMS.nu * div_R - (pressure(PARAMS, full.rho) - pressure(PARAMS, ap.rho_a))
        assert np.max(np.abs(rf.flux - flux)) <= 1e-12
        omega = grid.ddy(R1, g2.y) - grid.ddx(R2)
        assert np.max(np.abs(rf.omega - omega)) <= 1e-12

    def test_idempotent(self):
        slab, g2 = paired(0.2)
        full = perturbed(slow_embed(slab, 0.2, g2), g2)
        ap = asy.build_approx(slab, 0.2, g2, PARAMS)
        a = asy.remainder(full, ap, g2, PARAMS)
        b = asy.remainder(full, ap, g2, PARAMS)
        for f, g in zip((a.varrho, *a.R, a.omega, *a.DtR, a.flux),
                        (b.varrho, *b.R, b.omega, *b.DtR, b.flux)):
            assert np.array_equal(f, g)

    def test_backward_difference(self):
        g2 = Grid2D(GridX(16), GridY(16, 1.0))
        s0 = perturbed(equilibrium2d(g2), g2)
        cfg = SolverConfig(dt=1e-4)
        s1, _ = run_full(s0, g2, PARAMS, cfg, 1e-4)
        ap = self_approx(s1, g2)
        from_pde = asy.remainder(s1, ap, g2, PARAMS)
        from_bd = asy.remainder(s1, ap, g2, PARAMS, prev_full=s0)
        assert np.max(np.abs(from_pde.DtR[0])) == 0.0
        assert np.max(np.abs(from_bd.DtR[0])) <= 1e-3

    def test_mismatch_errors(self):
        slab, g2 = paired(0.2)
        ap = asy.build_approx(slab, 0.2, g2, PARAMS)
        full = slow_embed(slab, 0.2, g2)
        full.t = 1.0
        with pytest.raises(ValueError):
            asy.remainder(full, ap, g2, PARAMS)
        with pytest.raises(ValueError):
            asy.remainder(equilibrium2d(Grid2D(GridX(16), GridY(16, 1.0))), ap, g2, PARAMS)


class TestPerturbationSystem:
    def test_zero(self):
        g2 = Grid2D(GridX(16), GridY(16, 1.0))
        full = equilibrium2d(g2)
        ap = self_approx(full, g2)
        rf = asy.remainder(full, ap, g2, PARAMS)
        zero = np.zeros(g2.shape)
        r = asy.perturbation_residual(full, ap, rf, (zero, zero), zero, PARAMS)
        assert max(np.max(np.abs(f)) for f in r) == 0.0

    @pytest.mark.parametrize("eps", [0.2, 0.1])
    def test_exact_approximate_system(self, eps):
        # full state advanced by the PDE, approximate state by the limit system with G
        slab, g2 = paired(eps)
        full = perturbed(slow_embed(slab, eps, g2), g2, amp=0.05)
        ap = asy.build_approx(slab, eps, g2, PARAMS)
        rf = asy.remainder(full, ap, g2, PARAMS)
        G = asy.forcing_G(slab, eps, PARAMS, g2)
        src = asy.continuity_source(slab, eps, g2)
        r = asy.perturbation_residual(full, ap, rf, G, src, PARAMS)
        scale = max(np.max(np.abs(G[1])), 1.0)
        assert max(np.max(np.abs(f)) for f in r) <= 1e-10 * scale

    def test_linearity(self):
        # residual = F(full) - F(approx) - G with F the primitive momentum operator
        slab, g2 = paired(0.2)
        full = perturbed(slow_embed(slab, 0.2, g2), g2, amp=0.05)
        prev = perturbed(slow_embed(slab, 0.2, g2), g2, amp=0.04)
        prev.t = -1e-3
        ap = asy.build_approx(slab, 0.2, g2, PARAMS)
        rf = asy.remainder(full, ap, g2, PARAMS, prev_full=prev)
        G = asy.forcing_G(slab, 0.2, PARAMS, g2)
        src = asy.continuity_source(slab, 0.2, g2)
        r = asy.perturbation_residual(full, ap, rf, G, src, PARAMS)
        gy = g2.y
        dx, dy = grid.ddx, lambda f: grid.ddy(f, gy)

        def F(rho, u1, u2, u1t):
            div = dx(u1) + dy(u2)
            return (rho * (u1t + u1 * dx(u1) + u2 * dy(u1)) - PARAMS.mu * (dx(dx(u1)) + dy(dy(u1)))
                    - PARAMS.mu_prime * dx(div) + dx(pressure(PARAMS, rho)))

        u1t = (full.u1 - prev.u1) / 1e-3
        expect = F(full.rho, full.u1, full.u2, u1t) - F(ap.rho_a, *ap.u_a, ap.u_a_t[0]) - G[0]
        assert np.max(np.abs(r[1] - expect)) <= 1e-10 * np.max(np.abs(expect))


class TestBudget:
    def zero_rf(self, t, g2):
        z = np.zeros(g2.shape)
        return asy.RemainderFields(z, (z, z), z, (z, z), z, t, g2, ((z, z), (z, z)),
                                   ((z, z), (z, z)))

    def test_zero_history(self):
        g2 = Grid2D(GridX(16), GridY(16, 1.0))
        b = asy.energy_budget([self.zero_rf(t, g2) for t in (0.0, 0.5, 1.0)])
        assert b.E_eps == 0.0 and b.theta_eps == 0.0
        assert asy.gradient_integrals([]) == {"I3": 0.0, "I4": 0.0, "I6": 0.0}

    def test_empty(self):
        with pytest.raises(ValueError):
            asy.energy_budget([])

    def test_single_snapshot(self):
        slab, g2 = paired(0.2)
        full = perturbed(slow_embed(slab, 0.2, g2), g2)
        rf = asy.remainder(full, asy.build_approx(slab, 0.2, g2, PARAMS), g2, PARAMS)
        b = asy.energy_budget([rf])
        terms = asy.snapshot_terms(rf)
        assert b.E_eps == pytest.approx(sum(terms[k] for k in asy.SUP_TERMS), rel=1e-14)
        assert all(b.breakdown[f"int_{k}"] == 0.0 for k in asy.INT_TERMS)
        assert all(b.E_eps >= v for v in b.breakdown.values())
        assert b.theta_eps == pytest.approx(0.01 * math.exp(0.0), rel=1e-2)

    def test_holder_chain(self):
        slab, g2 = paired(0.2)
        full = perturbed(slow_embed(slab, 0.2, g2), g2)
        rf = asy.remainder(full, asy.build_approx(slab, 0.2, g2, PARAMS), g2, PARAMS)
        lhs, rhs = asy.holder_chain(rf)
        assert 0 < lhs <= rhs

    def test_bands(self):
        assert asy.bootstrap_band(0.1, 0.5)["inside"]
        assert not asy.bootstrap_band(0.3, 0.5)["inside"]
        g2 = Grid2D(GridX(16), GridY(16, 1.0))
        assert asy.density_band(equilibrium2d(g2), 0.5, 2.0)


class TestRelativeEntropy:
    g2 = Grid2D(GridX(32), GridY(32, 2.0))

    def test_identity_zero(self):
        s = perturbed(equilibrium2d(self.g2), self.g2, 0.1)
        assert asy.relative_entropy(s, s.rho, (s.u1, s.u2), PARAMS, self.g2.y) == 0.0

    def test_constant_reference(self):
        s = perturbed(equilibrium2d(self.g2), self.g2, 0.1)
        one = np.ones(self.g2.shape)
        e = asy.relative_entropy(s, one, (0 * one, 0 * one), PARAMS, self.g2.y)
        P = pressure_potential(PARAMS, s.rho) - pressure_potential(PARAMS, one) \
            - 1.4 / 0.4 * (s.rho - 1)
        direct = grid.integrate_xy(0.5 * s.rho * (s.u1**2 + s.u2**2) + P, self.g2.y)
        assert e == pytest.approx(direct, rel=1e-10)
        assert e > 0

    def test_lower_bound(self):
        slab, g2 = paired(0.2)
        full = perturbed(slow_embed(slab, 0.2, g2), g2, 0.05)
        ap = asy.build_approx(slab, 0.2, g2, PARAMS)
        rf = asy.remainder(full, ap, g2, PARAMS)
        e1 = asy.relative_entropy(full, ap.rho_a, ap.u_a, PARAMS, g2.y)
        eta_lo = float(np.min(ap.rho_a))
        eta_hi = float(np.max(ap.rho_a))
        assert e1 >= asy.entropy_lower_bound(rf, eta_lo, eta_hi, PARAMS, exact_constant=True)

    def test_printed_constant_can_fail(self):
        # density-only remainder with a tight upper bound: the printed constant lacks a/2
        g2 = self.g2
        ref = np.ones(g2.shape)
        X, _ = np.meshgrid(g2.x.nodes, g2.y.nodes)
        full = State2D(ref + 0.01 * np.cos(2 * np.pi * X), 0 * ref, 0 * ref)
        ap = asy.ApproxSolution(ref, (0 * ref, 0 * ref), 1.0, 0.0, 0 * ref, (0 * ref, 0 * ref))
        rf = asy.remainder(full, ap, g2, PARAMS)
        e1 = asy.relative_entropy(full, ref, ap.u_a, PARAMS, g2.y)
        hi = float(np.max(full.rho))
        assert e1 >= asy.entropy_lower_bound(rf, 1.0, hi, PARAMS, exact_constant=True)
        assert e1 < asy.entropy_lower_bound(rf, 1.0, hi, PARAMS, exact_constant=False)

    def test_constant_reference_identity_is_energy_identity(self):
        g2 = Grid2D(GridX(16), GridY(16, 0.5))
        one = np.ones(g2.shape)
        ref = lambda t: (one, 0 * one, 0 * one, 0 * one, 0 * one, 0 * one)
        states = []
        run_full(perturbed(equilibrium2d(g2), g2, 0.05), g2, PARAMS, SolverConfig(dt=1e-3), 0.05,
                 on_sample=states.append)
        res = asy.entropy_identity_residual(states, ref, PARAMS, g2)

        def energy(s):
            return grid.integrate_xy(0.5 * s.rho * (s.u1**2 + s.u2**2)
                                     + pressure_potential(PARAMS, s.rho), g2.y)

        def diss(s):
            g1 = (grid.ddx(s.u1), grid.ddy(s.u1, g2.y))
            g2_ = (grid.ddx(s.u2), grid.ddy(s.u2, g2.y))
            d = g1[0] + g2_[1]
            return grid.integrate_xy(PARAMS.mu * (g1[0]**2 + g1[1]**2 + g2_[0]**2 + g2_[1]**2)
                                     + PARAMS.mu_prime * d**2, g2.y)

        t = np.array([s.t for s in states])
        E = np.array([energy(s) for s in states])
        D = np.array([diss(s) for s in states])
        cum = np.concatenate([[0], np.cumsum(0.5 * np.diff(t) * (D[1:] + D[:-1]))])
        assert res == pytest.approx(np.max(np.abs(E - E[0] + cum)), rel=1e-6, abs=1e-15)

    def test_manufactured_reference_refinement(self):
        g2 = Grid2D(GridX(16), GridY(16, 0.5))
        ref = asy.manufactured_reference(g2)
        res = []
        for dt in (2e-3, 1e-3):
            states = []
            r0 = ref(0.0)
            run_full(State2D(r0[0], r0[1], r0[2]), g2, PARAMS, SolverConfig(dt=dt), 0.1,
                     on_sample=states.append)
            res.append(asy.entropy_identity_residual(states, ref, PARAMS, g2))
        assert res[0] / res[1] >= 3.0
