"""Operator I, interpolation inequalities, density bounds, Lyapunov functionals and fits."""

import csv
import math

import numpy as np
import pytest

from slowns import grid, lab
from slowns.grid import GridX, GridY
from slowns.model import FluidParams, make_initial_data
from slowns.solver1d import (DiagnosticSeries, SlabState, SolverConfig, State1D, equilibrium,
                             run_slab, slab_from_spec)

PARAMS = FluidParams()
N = 64
X = GridX(N).nodes


class TestOperatorI:
    def test_constant(self):
        u = np.full(N, 2.5)
        np.testing.assert_allclose(lab.op_I(u), 2.5 * X, atol=1e-14)
        np.testing.assert_allclose(lab.op_I_tilde(u), 2.5 * (X - 0.5), atol=1e-14)

    def test_sine(self):
        u = np.sin(2 * np.pi * X)
        np.testing.assert_allclose(lab.op_I(u), (1 - np.cos(2 * np.pi * X)) / (2 * np.pi),
                                   atol=1e-14)

    def test_tilde_zero_mean(self):
        for u in lab.random_trig_fields(np.random.default_rng(0), N, 50):
            It = lab.op_I_tilde(u)
            assert abs(lab.closed_mean(It, u)) <= 1e-13

    def test_closed_mean_linear(self):
        # <c x> = c / 2, which the periodic rectangle rule misses
        u = np.full(N, 3.0)
        assert lab.closed_mean(lab.op_I(u), u) == pytest.approx(1.5, abs=1e-14)

    def test_bound(self):
        for u in lab.random_trig_fields(np.random.default_rng(1), N, 100):
            b = lab.operator_I_bounds(u)
            tol = 1e-3 * b["u_L1"]  # refined-grid quadrature of |u|
            assert b["sup"] <= b["u_L1"] + tol
            assert b["L1"] <= b["u_L1"] + tol
            assert b["deriv_L1"] <= b["u_L1"] + tol

    def test_primitive_of_derivative(self):
        for u in lab.random_trig_fields(np.random.default_rng(2), N, 30):
            ux = grid.ddx(u)
            np.testing.assert_allclose(lab.op_I(ux), u - u[0], atol=1e-11)
            np.testing.assert_allclose(lab.op_I_tilde(ux), u - u.mean(), atol=1e-11)


class TestGN:
    gy = GridY(128, 8.0)

    def test_zero_field(self):
        with pytest.raises(lab.UndefinedRatio):
            lab.gn_check(np.zeros((128, 32)), self.gy, 4)

    def test_bad_exponent(self):
        with pytest.raises(ValueError):
            lab.gn_check(np.ones((128, 32)), self.gy, 5)

    @pytest.mark.parametrize("p", [3, 4, 6])
    def test_quadrature_oracle(self, p):
        f = lambda x, y: np.sin(2 * np.pi * x) * np.exp(-y**2)
        fx = lambda x, y: 2 * np.pi * np.cos(2 * np.pi * x) * np.exp(-y**2)
        fy = lambda x, y: -2 * y * f(x, y)
        Xg, Yg = np.meshgrid(GridX(32).nodes, self.gy.nodes)
        got = lab.gn_check(f(Xg, Yg), self.gy, p).ratio
        want = lab.gn_quadrature_oracle(f, fx, fy, 8.0, p)
        assert got == pytest.approx(want, rel=5e-3)

    def test_branch_split(self):
        Xg, Yg = np.meshgrid(GridX(32).nodes, self.gy.nodes)
        tilde = np.sin(2 * np.pi * Xg) * np.exp(-Yg**2)
        bar = np.exp(-Yg**2 / 4)
        r = lab.gn_check(tilde, self.gy, 4)
        assert r.ratio_bar == 0.0 and r.ratio_tilde > 0
        r = lab.gn_check(bar, self.gy, 4)
        assert r.ratio_tilde == 0.0 and r.ratio_bar > 0

    def test_combined_below_branch_sum(self):
        # ||f||_p <= ||f~||_p + ||f_bar||_p, each branch bounded by its own term
        p = 6
        for fld in lab.random_gn_fields(np.random.default_rng(3), 20):
            Xg, Yg = np.meshgrid(GridX(32).nodes, self.gy.nodes)
            f = fld(Xg, Yg)
            r = lab.gn_check(f, self.gy, p)
            bar, tilde = grid.split_mean(f)
            bar = np.broadcast_to(bar[:, None], f.shape)
            rhs = sum(rr * d for rr, d in (
                (r.ratio_tilde, lab._denominators(tilde, self.gy, p)[2]),
                (r.ratio_bar, lab._denominators(bar, self.gy, p)[3])))
            assert grid.norm_lp(f, p, self.gy) <= rhs * (1 + 1e-12)

    @pytest.mark.parametrize("p", [3, 4, 6])
    def test_refinement_stability(self, p):
        fields = lab.random_gn_fields(np.random.default_rng(4), 200)
        coarse = lab.gn_max_ratio(fields, 32, 128, 8.0, p)
        fine = lab.gn_max_ratio(fields, 64, 256, 8.0, p)
        assert abs(fine / coarse - 1) <= 0.1


class TestWeightedPoincare:
    def test_sine(self):
        lhs, rhs = lab.weighted_poincare_check(np.ones(N), np.sin(2 * np.pi * X), 1.0)
        assert lhs == pytest.approx(0.5, rel=1e-13)
        assert rhs == pytest.approx((2 * np.pi) ** 2 / 2, rel=1e-13)

    def test_zero(self):
        assert lab.weighted_poincare_check(np.ones(N), np.zeros(N), 1.0) == (0.0, 0.0)

    @pytest.mark.parametrize("eta,w,bar", [
        (np.full(N, 2.0), np.zeros(N), 2.0),
        (np.ones(N), np.ones(N), 1.0),
        (np.ones(N), np.zeros(N), 0.5),
        (np.r_[-1.0, np.full(N - 1, 65 / 63)], np.zeros(N), 2.0),
    ])
    def test_rejects(self, eta, w, bar):
        with pytest.raises(lab.RejectedInput):
            lab.weighted_poincare_check(eta, w, bar)

    def test_random_pairs(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            eta, w, bar = lab.random_admissible_pair(rng)
            lhs, rhs = lab.weighted_poincare_check(eta, w, bar)
            assert lhs <= rhs * (1 + 1e-10)


class TestDensityWeightedPoincare:
    def test_constant(self):
        lhs, rhs = lab.density_weighted_poincare(np.ones(N), np.full(N, 3.0), 1.0, 1.0, 2)
        assert lhs == pytest.approx(9.0) and rhs == pytest.approx(9.0)

    def test_one_mode(self):
        lhs, rhs = lab.density_weighted_poincare(np.ones(N), np.sin(2 * np.pi * X), 1.0, 1.0, 2)
        assert lhs == pytest.approx(0.5, rel=1e-12)
        # |sin| has kinks, so its rectangle-rule integral is only O(h^2)
        assert rhs == pytest.approx(2 * np.pi**2 + 4 / np.pi**2, rel=1e-4)

    def test_two_dimensional(self):
        gy = GridY(32, 2.0)
        rho = np.full((32, N), 0.25)
        lhs, rhs = lab.density_weighted_poincare(rho, np.ones((32, N)), 1.0, 1.0, 2, gy=gy)
        assert lhs == pytest.approx(4.0) and rhs == pytest.approx(1.0)

    @pytest.mark.parametrize("kw", [dict(q=1.0), dict(M=2.0), dict(E0=0.5)])
    def test_rejects(self, kw):
        args = dict(rho=np.ones(N) + 0.5 * np.sin(2 * np.pi * X), u=np.ones(N), M=1.0,
                    E0=2.0, q=2)
        args.update(kw)
        with pytest.raises(lab.RejectedInput):
            lab.density_weighted_poincare(**args)

    def test_calibration_stable(self):
        a = lab.calibrate_poincare_constant(np.random.default_rng(6), 1.0, 2.0, 2, n=64)
        b = lab.calibrate_poincare_constant(np.random.default_rng(6), 1.0, 2.0, 2, n=128)
        assert 0 < a < 10 and abs(b / a - 1) <= 0.1


class TestDensityBounds:
    def test_equilibrium_isothermal(self):
        p = FluidParams(gamma=1.0)
        b = lab.density_bounds(make_initial_data("gaussian_bump", 0.0), p)
        assert b.e00_bar == pytest.approx(1.0, rel=1e-14)
        assert b.varsigma_bar1 == pytest.approx(1.0, rel=1e-14)
        assert b.eta_bar == pytest.approx(math.e**4, rel=1e-13)

    def test_lower_envelope_at_zero(self):
        spec = make_initial_data("gaussian_bump", 0.3)
        b = lab.density_bounds(spec, PARAMS)
        want = b.varsigma_lower * math.exp(-2 * math.sqrt(b.e00_bar) / PARAMS.nu)
        assert float(b.eta_lower_envelope(0.0)) == pytest.approx(want, rel=1e-14)
        assert b.eta_bar >= b.varsigma_upper

    def test_run_inside_bounds(self):
        spec = make_initial_data("gaussian_bump", 0.3)
        slab = slab_from_spec(spec, GridX(64), GridY(17, 7.0))
        _, series = run_slab(slab, PARAMS, SolverConfig(), 1.0, record=True)
        up, lo = lab.density_bound_margins(series.states, lab.density_bounds(spec, PARAMS))
        assert up > 0 and lo > 0


class TestLyapunov:
    bounds = lab.density_bounds(make_initial_data("gaussian_bump", 0.3), PARAMS)
    consts = lab.default_constants(bounds, PARAMS)

    def test_missing_constants(self):
        with pytest.raises(ValueError):
            lab.lyapunov_series([equilibrium(32)], PARAMS, "F2", None)

    @pytest.mark.parametrize("which", ["F2", "F3", "F4"])
    def test_equilibrium(self, which):
        s = lab.lyapunov_series([equilibrium(32), equilibrium(32, t=1.0)], PARAMS, which,
                                self.consts)
        assert np.all(np.abs(s[which]) <= 1e-12)

    def test_unknown(self):
        with pytest.raises(ValueError):
            lab.lyapunov_values(equilibrium(32), PARAMS, self.consts, "F5")

    def test_decaying_run(self):
        eta = 1 + 0.1 * np.cos(2 * np.pi * X)
        w = 0.1 * np.sin(2 * np.pi * X)
        w -= grid.integrate_x(eta * w)
        _, series = run_slab(State1D(eta, w, np.zeros(N)), PARAMS, SolverConfig(), 2.0,
                             record=True)
        for which in ("F2", "F3", "F4"):
            s = lab.lyapunov_series(series.states, PARAMS, which, self.consts)
            assert lab.monotone_after(s[which], s.times, t_start=0.1)
        base, F2 = lab.f2_comparison(series.states[0], PARAMS, self.consts)
        assert base <= F2

    def test_monotone_after(self):
        t = np.linspace(0, 1, 5)
        assert lab.monotone_after([5, 4, 4.02, 3, 2], t)
        assert not lab.monotone_after([5, 4, 4.5, 3, 2], t)
        assert lab.monotone_after([1, 9, 4, 3, 2], t, t_start=0.25)


class TestDecayFit:
    def test_exponential(self):
        t = np.linspace(0, 10, 50)
        fit = lab.decay_fit((t, 3 * np.exp(-0.7 * t)), window=(0.0, None))
        assert fit.C == pytest.approx(3.0, rel=1e-3)
        assert fit.alpha == pytest.approx(0.7, rel=1e-3)
        assert fit.r2 > 0.9999

    def test_constant(self):
        t = np.linspace(0, 10, 50)
        assert abs(lab.decay_fit((t, np.full(50, 2.0)), (0.0, None)).alpha) <= 1e-12

    def test_two_rates(self):
        t = np.linspace(0, 10, 50)
        alpha = lab.decay_fit((t, np.exp(-0.5 * t) + np.exp(-2 * t)), (0.0, None)).alpha
        assert 0.5 <= alpha <= 2.0

    def test_series_input(self):
        s = DiagnosticSeries()
        for ti in np.linspace(0, 5, 20):
            s.append(ti, {"v": 2 * math.exp(-ti)})
        assert lab.decay_fit(s, (1.0, 4.0), name="v").alpha == pytest.approx(1.0, rel=1e-10)

    @pytest.mark.parametrize("v", [np.r_[1.0, 0.0, 1.0], np.r_[1.0, -1.0, 1.0]])
    def test_rejects_nonpositive(self, v):
        with pytest.raises(ValueError):
            lab.decay_fit((np.arange(3.0), v), (0.0, None))

    def test_rejects_short_window(self):
        with pytest.raises(ValueError):
            lab.decay_fit((np.arange(5.0), np.ones(5)), (3.5, None))


def y_independent_history():
    gy = GridY(16, 2.0)
    eta = 1 + 0.1 * np.cos(2 * np.pi * X)
    w = 0.1 * np.sin(2 * np.pi * X)
    w -= grid.integrate_x(eta * w)
    slab = SlabState(np.tile(eta, (16, 1)), np.tile(w, (16, 1)), np.tile(w, (16, 1)), gy=gy)
    _, series = run_slab(slab, PARAMS, SolverConfig(), 0.2, record=True)
    return series.states


class TestSlabDiagnostics:
    @pytest.mark.parametrize("order", [1, 2])
    def test_y_independent(self, order):
        s = lab.y_derivative_checks(y_independent_history(), order)
        for name in s.names():
            assert np.max(np.abs(s[name])) <= 1e-12

    def test_gaussian_bump_mass(self):
        slab = slab_from_spec(make_initial_data("gaussian_bump", 0.3), GridX(64), GridY(17, 7.0))
        _, series = run_slab(slab, PARAMS, SolverConfig(), 0.5, record=True)
        s = lab.y_derivative_checks(series.states, 1)
        assert np.max(s["int_eta_y"]) <= 1e-10 and np.max(s["int_m_y"]) <= 1e-10

    def test_errors(self):
        h = y_independent_history()
        with pytest.raises(ValueError):
            lab.y_derivative_checks(h[:2], 1)
        with pytest.raises(ValueError):
            lab.y_derivative_checks(h, 3)

    def test_passive_zero(self):
        hist = [s for s in y_independent_history()]
        for s in hist:
            s.frakw = np.zeros_like(s.frakw)
        bounds = lab.density_bounds(make_initial_data("gaussian_bump", 0.3), PARAMS)
        ok, worst = lab.passive_decay_check(hist, PARAMS, bounds)
        assert np.all(ok) and worst == 0.0

    def test_passive_heat_mode(self):
        gy = GridY(16, 1.0)
        fw = np.tile(np.sin(2 * np.pi * X), (16, 1))
        slab = SlabState(np.ones((16, N)), np.zeros((16, N)), fw, gy=gy)
        _, series = run_slab(slab, PARAMS, SolverConfig(), 1.0, record=True)
        bounds = lab.density_bounds(make_initial_data("gaussian_bump", 0.3), PARAMS)
        ok, worst = lab.passive_decay_check(series.states, PARAMS, bounds)
        # the margin is 1 / (1 + tol) at t = 0 and falls with the heat decay
        assert np.all(ok) and worst == pytest.approx(1 / 1.05)
        t = series.states[-1].t
        final = grid.integrate_x(series.states[-1].frakw[0] ** 2)
        heat = 0.5 * math.exp(-2 * PARAMS.mu * (2 * np.pi) ** 2 * t)
        bound = 0.5 * math.exp(-PARAMS.mu * t / bounds.eta_bar**2)
        assert final == pytest.approx(heat, rel=1e-2) and final < 0.1 * bound

    def test_energy_identity_defect(self):
        t = np.linspace(0, 1, 101)
        assert lab.energy_identity_defect(t, np.exp(-t), np.exp(-t)) <= 1e-5

    def test_slab_norms_equilibrium(self):
        n = lab.slab_norms(equilibrium(32, GridY(16, 1.0)), PARAMS)
        assert all(v == 0.0 for v in n.values())


class TestVerdicts:
    def test_csv(self, tmp_path):
        path = tmp_path / "v.csv"
        lab.write_verdicts(path, [lab.Verdict("a", 1.0, 2.0, True),
                                  lab.Verdict("b", 3.0, 2.0, False)])
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["name", "lhs", "rhs", "margin", "pass"]
        assert rows[1][0] == "a" and float(rows[1][3]) == 1.0 and rows[1][4] == "true"
        assert rows[2][4] == "false"
