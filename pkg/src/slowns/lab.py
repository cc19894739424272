"""Checks of the functional-analytic ingredients behind the decay estimates.

Integral operators ``I`` and ``I~``, Gagliardo-Nirenberg and Poincare type
inequalities, explicit density bounds, Lyapunov functionals, decay fits and
the y-derivative and passive-field diagnostics of slab runs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from . import grid
from .grid import GridX, GridY
from .model import (FluidParams, pressure, pressure_potential, relative_potential)
from .solver1d import DiagnosticSeries, State1D, time_derivatives


class RejectedInput(ValueError):
    """Input violates a precondition of the inequality being checked."""


class UndefinedRatio(ZeroDivisionError):
    """The Gagliardo-Nirenberg denominator vanishes."""


# ---------------------------------------------------------------------------
# the operators I and I~


def _coeffs(u):
    n = u.shape[-1]
    c = np.fft.rfft(u, axis=-1) / n
    if n % 2 == 0:
        c[..., -1] = 0.0  # the Nyquist cosine integrates to zero at the nodes
    return c


def op_I(u):
    """``I(u)(x) = int_0^x u`` at the nodes, exact for the trigonometric interpolant."""
    u = np.asarray(u, dtype=float)
    n = u.shape[-1]
    c = _coeffs(u)
    x = np.arange(n) / n
    k = np.arange(1, c.shape[-1])
    # sum_k 2 Re(c_k (e^{2 pi i k x} - 1) / (2 pi i k))
    ph = np.exp(2j * np.pi * np.outer(x, k)) - 1.0
    periodic = 2.0 * np.real((c[..., 1:] / (2j * np.pi * k)) @ ph.T)
    return c[..., :1].real * x + periodic


def _mean_I(u):
    c = _coeffs(u)
    k = np.arange(1, c.shape[-1])
    return 0.5 * c[..., 0].real - 2.0 * np.real(np.sum(c[..., 1:] / (2j * np.pi * k), axis=-1))


def op_I_tilde(u):
    """``I(u) - <I(u)>`` with the exact mean of the interpolant's primitive."""
    u = np.asarray(u, dtype=float)
    return op_I(u) - np.asarray(_mean_I(u))[..., None]


def closed_mean(I_vals, u):
    """Trapezoid mean on ``[0, 1]`` of a primitive, closed with ``I(1) = <u>``.

    Exact for ``I(u)`` of a trigonometric polynomial, including the linear
    part that the periodic rectangle rule misses.
    """
    I_vals = np.asarray(I_vals, float)
    n = I_vals.shape[-1]
    end = I_vals[..., 0] + grid.integrate_x(u)
    return (I_vals.sum(axis=-1) + 0.5 * (end - I_vals[..., 0])) / n


def operator_I_bounds(u) -> dict:
    """Pieces of the bound on ``I(u)``; each is at most ``||u||_L1``.

    Returns ``sup |I|``, ``||I||_L1``, ``||I'||_L1`` and ``||u||_L1``.  The
    primitive is sampled on a 16-fold refined grid of its interpolant.
    """
    u = np.asarray(u, float)
    n = u.shape[-1]
    fine = 16 * n
    uf = _refine(u, fine)
    If = op_I(uf)
    l1 = float(np.mean(np.abs(uf)))
    return {"sup": float(np.max(np.abs(If))), "L1": float(np.mean(np.abs(If))),
            "deriv_L1": l1, "u_L1": l1}


def _refine(u, m):
    n = u.shape[-1]
    c = np.fft.rfft(u)
    out = np.zeros(m // 2 + 1, dtype=complex)
    out[: c.size] = c
    if n % 2 == 0:
        out[n // 2] *= 0.5
    return np.fft.irfft(out, n=m) * (m / n)


def random_trig_fields(rng, n, count, modes=8, decay=1.0):
    """Seeded random real trigonometric polynomials sampled on ``n`` nodes."""
    x = np.arange(n) / n
    out = np.empty((count, n))
    for i in range(count):
        k = np.arange(modes + 1)
        amp = rng.normal(size=modes + 1) / (1.0 + k) ** decay
        ph = rng.uniform(0, 2 * np.pi, size=modes + 1)
        out[i] = np.sum(amp[:, None] * np.cos(2 * np.pi * np.outer(k, x) + ph[:, None]), axis=0)
    return out


# ---------------------------------------------------------------------------
# Gagliardo-Nirenberg


@dataclass
class GNResult:
    ratio: float
    ratio_tilde: float
    ratio_bar: float
    p: float

    def __float__(self):
        return self.ratio


def _l2_grad(f, gy):
    fx, fy = grid.ddx(f), grid.ddy(f, gy)
    return (math.sqrt(grid.integrate_xy(f**2, gy)),
            math.sqrt(grid.integrate_xy(fx**2 + fy**2, gy)))


def _denominators(f, gy, p):
    a, b = _l2_grad(f, gy)
    d2 = a ** (2.0 / p) * b ** (1.0 - 2.0 / p)
    d1 = a ** (0.5 + 1.0 / p) * b ** (0.5 - 1.0 / p)
    return a, b, d2, d1


def gn_check(f, gy: GridY, p) -> GNResult:
    """Gagliardo-Nirenberg ratio on the periodic box, with split branches.

    ``ratio = ||f||_p / (||f||^{2/p} ||grad f||^{1-2/p}
    + ||f||^{1/2+1/p} ||grad f||^{1/2-1/p})``.  The zero-mean part ``f~``
    is measured against the first (2D) term only and the x-average ``f_bar``
    against the second (1D) term only.
    """
    if p not in (3, 4, 6):
        raise ValueError("p must be 3, 4 or 6")
    f = np.asarray(f, float)
    _, _, d2, d1 = _denominators(f, gy, p)
    if d2 + d1 == 0.0:
        raise UndefinedRatio("f and grad f vanish; the ratio is undefined")
    ratio = grid.norm_lp(f, p, gy) / (d2 + d1)
    f_bar, f_tilde = grid.split_mean(f)
    f_bar2 = np.broadcast_to(f_bar[:, None], f.shape)
    # a branch at round-off level relative to f is treated as absent
    floor = 1e-13 * math.sqrt(grid.integrate_xy(f**2, gy))
    rt = _branch(f_tilde, gy, p, two_d=True, floor=floor)
    rb = _branch(f_bar2, gy, p, two_d=False, floor=floor)
    return GNResult(float(ratio), rt, rb, p)


def _branch(f, gy, p, two_d, floor=0.0):
    if math.sqrt(grid.integrate_xy(f**2, gy)) <= floor:
        return 0.0
    num = grid.norm_lp(f, p, gy)
    _, _, d2, d1 = _denominators(f, gy, p)
    den = d2 if two_d else d1
    if den == 0.0:
        raise UndefinedRatio("branch denominator vanishes")
    return float(num / den)


@dataclass
class GNField:
    """A smooth random field given analytically, sampled on any grid."""

    kx: np.ndarray
    ky: np.ndarray
    amp: np.ndarray
    phase: np.ndarray
    width: float
    mean_weight: float

    def __call__(self, X, Y):
        env = np.exp(-0.5 * (Y / self.width) ** 2)
        s = np.zeros(np.broadcast(X, Y).shape)
        for kx, ky, a, ph in zip(self.kx, self.ky, self.amp, self.phase):
            s = s + a * np.cos(2 * np.pi * kx * X + ky * Y + ph)
        bar = self.mean_weight * np.cos(0.7 * Y) * env
        return s * env + bar


def random_gn_fields(rng, count=200, max_kx=3, max_ky=2.0, half_length=8.0):
    """Seeded band-limited-in-x fields with a Gaussian envelope in y."""
    out = []
    for _ in range(count):
        m = int(rng.integers(1, 5))
        kx = rng.integers(0, max_kx + 1, size=m)
        ky = rng.uniform(-max_ky, max_ky, size=m)
        amp = rng.normal(size=m)
        ph = rng.uniform(0, 2 * np.pi, size=m)
        width = float(rng.uniform(0.6, half_length / 6.0))
        mw = float(rng.normal()) if rng.uniform() < 0.5 else 0.0
        out.append(GNField(kx, ky, amp, ph, width, mw))
    return out


def gn_max_ratio(fields, n_x, n_y, half_length, p) -> float:
    gy = GridY(n_y, half_length)
    X, Y = np.meshgrid(GridX(n_x).nodes, gy.nodes)
    best = 0.0
    for fld in fields:
        best = max(best, gn_check(fld(X, Y), gy, p).ratio)
    return best


def gn_quadrature_oracle(func, dfdx, dfdy, half_length, p) -> float:
    """GN ratio of an analytic field by adaptive quadrature (independent of the grids)."""
    opts = dict(epsabs=1e-13, epsrel=1e-11)
    dbl = lambda g: integrate.dblquad(lambda y, x: g(x, y), 0.0, 1.0,
                                      -half_length, half_length, **opts)[0]
    a = math.sqrt(dbl(lambda x, y: func(x, y) ** 2))
    b = math.sqrt(dbl(lambda x, y: dfdx(x, y) ** 2 + dfdy(x, y) ** 2))
    num = dbl(lambda x, y: abs(func(x, y)) ** p) ** (1.0 / p)
    return num / (a ** (2.0 / p) * b ** (1.0 - 2.0 / p) + a ** (0.5 + 1.0 / p) * b ** (0.5 - 1.0 / p))


# ---------------------------------------------------------------------------
# Poincare type inequalities


def weighted_poincare_check(eta, w, eta_bar, tol=1e-8):
    """``(int eta w^2, eta_bar^2 int w_x^2)`` on the torus."""
    eta = np.asarray(eta, float)
    w = np.asarray(w, float)
    if np.any(eta <= 0) or np.max(eta) > eta_bar * (1 + 1e-12):
        raise RejectedInput("need 0 < eta <= eta_bar")
    if abs(grid.integrate_x(eta) - 1.0) > tol:
        raise RejectedInput("need int eta = 1")
    if abs(grid.integrate_x(eta * w)) > tol:
        raise RejectedInput("need int eta w = 0")
    lhs = float(grid.integrate_x(eta * w**2))
    rhs = float(eta_bar**2 * grid.integrate_x(grid.ddx(w) ** 2))
    return lhs, rhs


def random_admissible_pair(rng, n=128, modes=6):
    """``(eta, w, eta_bar)`` with unit mean density and zero momentum."""
    dev = random_trig_fields(rng, n, 1, modes)[0]
    dev -= dev.mean()
    scale = float(rng.uniform(0.05, 0.95)) / max(np.max(np.abs(dev)), 1e-300)
    eta = 1.0 + scale * dev
    w = random_trig_fields(rng, n, 1, modes)[0]
    w = w - grid.integrate_x(eta * w)
    return eta, w, float(np.max(eta))


def density_weighted_poincare(rho, u, M, E0, q, gy: GridY | None = None, C=1.0):
    """``(||u||^2, C (||grad u||^2 + (int rho |u|)^2))``.

    The constant depends on ``(M, E0)`` only; it is not explicit and is
    calibrated empirically with :func:`calibrate_poincare_constant`.
    """
    rho = np.asarray(rho, float)
    u = np.asarray(u, float)
    if not q > 1:
        raise RejectedInput("need q > 1")
    if np.any(rho < 0):
        raise RejectedInput("rho must be non-negative")
    I = (lambda f: float(grid.integrate_x(f))) if gy is None else (
        lambda f: grid.integrate_xy(f, gy))
    if I(rho) < M * (1 - 1e-12):
        raise RejectedInput("need int rho >= M")
    if I(rho**q) > E0 * (1 + 1e-12):
        raise RejectedInput("need int rho^q <= E0")
    grad_sq = grid.ddx(u) ** 2 if gy is None else grid.ddx(u) ** 2 + grid.ddy(u, gy) ** 2
    lhs = I(u**2)
    base = I(grad_sq) + I(rho * np.abs(u)) ** 2
    return lhs, C * base


def calibrate_poincare_constant(rng, M, E0, q, cases=200, n=128):
    """Largest observed ``lhs / base`` over seeded admissible inputs on the torus."""
    worst = 0.0
    for _ in range(cases):
        for _try in range(100):
            eta, _, _ = random_admissible_pair(rng, n)
            rho = M * eta
            if grid.integrate_x(rho**q) <= E0:
                break
        else:
            raise RejectedInput("could not draw rho with int rho^q <= E0")
        u = random_trig_fields(rng, n, 1, 6)[0]
        lhs, base = density_weighted_poincare(rho, u, M, E0, q)
        if base > 0:
            worst = max(worst, lhs / base)
    return worst


# ---------------------------------------------------------------------------
# density bounds


@dataclass
class DensityBounds:
    eta_bar: float
    varsigma_bar1: float
    e00_bar: float
    varsigma_lower: float
    varsigma_upper: float
    nu: float
    a: float
    gamma: float

    def eta_lower_envelope(self, t):
        """``varsigma_lower exp(-2 E00^(1/2) / nu - (a eta_bar^gamma + gamma E00) t / nu)``."""
        t = np.asarray(t, float)
        rate = (self.a * self.eta_bar**self.gamma + self.gamma * self.e00_bar) / self.nu
        return self.varsigma_lower * np.exp(-2.0 * math.sqrt(self.e00_bar) / self.nu - rate * t)


def e00_profile(spec, params: FluidParams, gx: GridX, gy: GridY):
    """``E00(y) = int (varsigma0 w0^2 / 2 + P(varsigma0)) dx`` at the y nodes."""
    sig, w, _ = spec.sample(gx.nodes, gy.nodes)
    return grid.integrate_x(0.5 * sig * w**2 + pressure_potential(params, sig))


def density_bounds(spec, params: FluidParams, gx: GridX | None = None,
                   gy: GridY | None = None) -> DensityBounds:
    gx = gx or GridX(512)
    gy = gy or GridY(257, 8.0 * spec.y_width)
    e00 = float(np.max(e00_profile(spec, params, gx, gy)))
    sig, _, _ = spec.sample(gx.nodes, gy.nodes)
    upper = float(max(spec.upper_bound, sig.max()))
    lower = float(min(spec.lower_bound, sig.min()))
    s1 = (params.gamma * e00 / params.a) ** (1.0 / params.gamma)
    eta_bar = max(upper, s1) * math.exp(4.0 * math.sqrt(e00))
    return DensityBounds(eta_bar, s1, e00, lower, upper, params.nu, params.a, params.gamma)


# ---------------------------------------------------------------------------
# Lyapunov functionals


@dataclass(frozen=True)
class LyapunovConstants:
    A1: float
    A2: float
    A3: float
    A4: float
    A5: float
    A6: float


def default_constants(bounds: DensityBounds, params: FluidParams, A3=4.0, A5=2.0,
                      A6=1.0) -> LyapunovConstants:
    """Smallest constants meeting the sufficiency conditions for ``A1``, ``A2``, ``A4``.

    ``A3``, ``A5`` and ``A6`` only need to be large enough; they are taken
    from the arguments.
    """
    eb, a, g, nu = bounds.eta_bar, params.a, params.gamma, params.nu
    A1 = max(4.0, 2.0 / (a * g * (1.0 + eb) ** (g - 2.0)),
             (eb**2 + eb**3 + 2.0 * nu**2 / a + 1.0) / nu)
    A2 = (5.0 * eb + 1.0) / (6.0 * nu)
    A4 = max(4.0 + nu, 2.0 / a * (a**2 * g**2 * eb ** (2 * g - 2) + 1.0))
    return LyapunovConstants(A1, A2, A3, A4, A5, A6)


def _rel_P1(params, eta):
    return relative_potential(params, eta, np.ones_like(eta))


def lyapunov_values(state: State1D, params: FluidParams, c: LyapunovConstants, which: str):
    """Per-slice value of ``F2``, ``F3`` or ``F4``."""
    eta, w = state.eta, state.w
    a, g, nu = params.a, params.gamma, params.nu
    I = grid.integrate_x
    w_x = grid.ddx(w)
    Ieta = op_I(eta - 1.0)
    relP = _rel_P1(params, eta)

    def base(A):
        return I(0.5 * c.A1 * A * eta * w**2 + c.A1 * A * relP - A * eta * w * Ieta)

    if which == "F2":
        extra = I(c.A2 * eta * w**4 + nu * w_x**2
                  + a**2 / (2 * nu) * (np.expm1(2 * g * np.log(eta)) - 2 * g * (eta - 1.0))
                  - (pressure(params, eta) - a) * w_x)
        return base(c.A3) + extra
    zeta_x = grid.ddx(1.0 / eta)
    F3 = base(c.A4) + I(0.5 * eta * (w - nu * zeta_x) ** 2)
    if which == "F3":
        return F3
    if which == "F4":
        _, w_t, _ = time_derivatives(state, params)
        Dtw = w_t + w * w_x
        return c.A6 * F3 + I(c.A5 * w_x**2 + eta * Dtw**2)
    raise ValueError(f"unknown functional {which!r}")


def lyapunov_series(history: Sequence[State1D], params: FluidParams, which: str,
                    constants: LyapunovConstants | None) -> DiagnosticSeries:
    if constants is None:
        raise ValueError("Lyapunov constants A1..A6 are required")
    s = DiagnosticSeries()
    for st in history:
        s.append(st.t, {which: lyapunov_values(st, params, constants, which)})
    return s


def f2_comparison(state: State1D, params, c: LyapunovConstants):
    """``(base, F2)`` with ``base = int(eta w^2 + (eta-1)^2 + eta w^4 + w_x^2)``."""
    eta, w = state.eta, state.w
    base = grid.integrate_x(eta * w**2 + (eta - 1.0) ** 2 + eta * w**4 + grid.ddx(w) ** 2)
    return base, lyapunov_values(state, params, c, "F2")


def monotone_after(values, t, t_start=0.0, overshoot=0.01):
    """True when no later sample exceeds an earlier one by more than ``overshoot`` relative."""
    v = np.asarray(values, float)
    t = np.asarray(t, float)
    v = v[t >= t_start]
    if v.size < 2:
        return True
    run_min = np.minimum.accumulate(v, axis=0)
    scale = np.maximum(np.abs(run_min), 1e-300)
    return bool(np.all(v <= run_min + overshoot * scale))


# ---------------------------------------------------------------------------
# decay fitting


@dataclass
class DecayFit:
    C: float
    alpha: float
    r2: float
    window: tuple


def decay_fit(series, window=(2.0, None), name=None) -> DecayFit:
    """Least squares fit of ``log v = log C - alpha t`` on a time window.

    ``series`` is a :class:`DiagnosticSeries` (with ``name``) or a pair
    ``(t, values)``.
    """
    if isinstance(series, DiagnosticSeries):
        t, v = series.times, series[name]
    else:
        t, v = (np.asarray(a, float) for a in series)
    t0, t1 = window
    t1 = t[-1] if t1 is None else t1
    sel = (t >= t0 - 1e-12) & (t <= t1 + 1e-12)
    t, v = t[sel], v[sel]
    if t.size < 2:
        raise ValueError("fewer than two samples in the fit window")
    if np.any(~(v > 0)):
        raise ValueError("non-positive samples in the fit window")
    y = np.log(v)
    slope, icpt = np.polyfit(t, y, 1)
    resid = y - (slope * t + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(math.exp(icpt)), float(-slope), float(min(max(r2, 0.0), 1.0)),
                    (float(t0), float(t1)))


# ---------------------------------------------------------------------------
# slab history diagnostics


def _sup_hk(f, k):
    return float(np.max(grid.norm_hk(f, k)))


def slab_norms(state, params) -> dict:
    """Sup over slices of the norms monitored for decay."""
    eta, w, fw = state.eta, state.w, state.frakw
    return {
        "eta_dev_L2": _sup_hk(eta - 1.0, 0),
        "w_H1": _sup_hk(w, 1),
        "eta_x_L2": _sup_hk(grid.ddx(eta), 0),
        "frakw_H1": _sup_hk(fw, 1),
    }


def y_derivative_checks(history: Sequence, order: int) -> DiagnosticSeries:
    """Conservation of y-differentiated mass and momentum, and decaying norms.

    Norms are sup over slices; time derivatives use second-order differences
    of the stored history.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if len(history) < 3:
        raise ValueError("need at least three stored times to form time derivatives")
    gy = history[0].gy
    t = np.array([s.t for s in history])
    dy = lambda f: grid.ddy(f, gy, order)
    eta_y = np.stack([dy(s.eta) for s in history])
    w_y = np.stack([dy(s.w) for s in history])
    m_y = np.stack([dy(s.eta * s.w) for s in history])
    eta_yt = np.gradient(eta_y, t, axis=0, edge_order=2)
    w_yt = np.gradient(w_y, t, axis=0, edge_order=2)
    out = DiagnosticSeries()
    tag = "y" * order
    for i, ti in enumerate(t):
        vals = {
            f"int_eta_{tag}": float(np.max(np.abs(grid.integrate_x(eta_y[i])))),
            f"int_m_{tag}": float(np.max(np.abs(grid.integrate_x(m_y[i])))),
        }
        if order == 1:
            vals["eta_y_H2"] = _sup_hk(eta_y[i], 2)
            vals["w_y_H3"] = _sup_hk(w_y[i], 3)
            vals["t_y_H1"] = float(np.max(np.sqrt(grid.norm_hk(eta_yt[i], 1) ** 2
                                                  + grid.norm_hk(w_yt[i], 1) ** 2)))
        else:
            vals["eta_yy_H1"] = _sup_hk(eta_y[i], 1)
            vals["w_yy_H2"] = _sup_hk(w_y[i], 2)
            vals["t_yy_L2"] = float(np.max(np.sqrt(grid.norm_hk(eta_yt[i], 0) ** 2
                                                   + grid.norm_hk(w_yt[i], 0) ** 2)))
        out.append(ti, vals)
    return out


def passive_decay_check(history: Sequence, params: FluidParams, bounds: DensityBounds,
                        tol=0.05):
    """Per slice: ``int eta frakw^2 (t) <= exp(-mu t / eta_bar^2) int eta0 frakw0^2 (1 + tol)``.

    Returns ``(ok_per_slice, worst_margin)`` where the margin is the largest
    ``lhs / rhs`` observed (``<= 1`` passes).
    """
    first = history[0]
    e0 = np.atleast_1d(grid.integrate_x(first.eta * first.frakw**2))
    ok = np.ones(e0.shape, dtype=bool)
    worst = 0.0
    for s in history:
        lhs = np.atleast_1d(grid.integrate_x(s.eta * s.frakw**2))
        rhs = math.exp(-params.mu * (s.t - first.t) / bounds.eta_bar**2) * e0 * (1 + tol)
        good = lhs <= rhs
        ok &= good | (rhs == 0) & (lhs == 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(rhs > 0, lhs / rhs, 0.0)
        worst = max(worst, float(np.max(r)))
    return ok, worst


def density_bound_margins(history: Sequence, bounds: DensityBounds):
    """``(ceiling margin, floor margin)``: minima over samples of ``eta_bar - max eta`` and ``min eta - lower(t)``."""
    up = min(bounds.eta_bar - float(np.max(s.eta)) for s in history)
    lo = min(float(np.min(s.eta)) - float(bounds.eta_lower_envelope(s.t - history[0].t))
             for s in history)
    return up, lo


def energy_terms(state: State1D, params: FluidParams) -> dict:
    """Per-slice ``E0 = int(eta w^2 / 2 + P(eta))`` and dissipation ``nu int w_x^2``."""
    return {"E0": grid.integrate_x(0.5 * state.eta * state.w**2 + pressure_potential(params, state.eta)),
            "diss": params.nu * grid.integrate_x(grid.ddx(state.w) ** 2)}


def energy_identity_defect(t, E0, diss) -> float:
    """Largest ``|E0(t) - E0(0) + int_0^t diss|`` with trapezoid time integration."""
    t = np.asarray(t, float)
    E0 = np.asarray(E0, float)
    diss = np.asarray(diss, float)
    cum = np.concatenate([np.zeros((1,) + diss.shape[1:]),
                          np.cumsum(0.5 * np.diff(t)[(...,) + (None,) * (diss.ndim - 1)]
                                    * (diss[1:] + diss[:-1]), axis=0)])
    return float(np.max(np.abs(E0 - E0[0] + cum)))


# ---------------------------------------------------------------------------
# verdict tables


@dataclass
class Verdict:
    name: str
    lhs: float
    rhs: float
    passed: bool

    @property
    def margin(self):
        return self.rhs - self.lhs


def write_verdicts(path, verdicts: Sequence[Verdict]):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["name", "lhs", "rhs", "margin", "pass"])
        for v in verdicts:
            wr.writerow([v.name, f"{v.lhs:.17e}", f"{v.rhs:.17e}", f"{v.margin:.17e}",
                         "true" if v.passed else "false"])
