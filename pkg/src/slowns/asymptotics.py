"""Approximate solution, forcing, remainder and error functionals.

The approximate solution is the slow embedding of the slab solution,
``rho_a(x, y) = eta(x, eps y)`` and ``u_a = (w, frakw)(x, eps y)``.  It
satisfies the 2D system up to a continuity source ``eps [(eta frakw)_Y]`` and a
momentum forcing ``-G``.  Differences with a 2D run give the remainder
``(varrho, R)``, whose norms are collected into the error functional.

Slab quantities are differentiated in the slow variable ``Y`` spectrally on
the slab grid and then embedded (derivative first, then embed).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import grid
from .grid import Grid2D, GridY
from .model import (FluidParams, potential_derivative, potential_second_derivative,
                    pressure, pressure_unchecked, relative_potential)
from .solver1d import SlabState, time_derivatives
from .solver2d import BoxTooSmall, State2D, rhs_primitive


@dataclass(eq=False)
class ApproxSolution:
    rho_a: np.ndarray
    u_a: tuple
    eps: float
    t: float
    # time derivatives from the limit equations, embedded
    rho_a_t: np.ndarray | None = None
    u_a_t: tuple | None = None


@dataclass(eq=False)
class RemainderFields:
    varrho: np.ndarray
    R: tuple
    omega: np.ndarray
    DtR: tuple
    flux: np.ndarray
    t: float
    g2: Grid2D | None = field(default=None, repr=False)
    grad_R: tuple | None = field(default=None, repr=False)
    grad_DtR: tuple | None = field(default=None, repr=False)
    varrho_t: np.ndarray | None = field(default=None, repr=False)


@dataclass
class ErrorBudget:
    E_eps: float
    theta_eps: float
    breakdown: dict
    G_norms: dict = field(default_factory=dict)


def _embed_rows(f, gy_slab: GridY, eps: float, g2: Grid2D):
    return grid.trig_interpolate_y(f, gy_slab, eps * g2.y.nodes)


def _fits(gy_slab: GridY, eps: float, g2: Grid2D):
    if eps * g2.y.half_length < gy_slab.half_length * (1.0 - 1e-12):
        raise BoxTooSmall(f"eps*L2 = {eps * g2.y.half_length:g} < slab extent "
                          f"{gy_slab.half_length:g}")


def build_approx(slab: SlabState, eps: float, g2: Grid2D, params: FluidParams | None = None,
                 with_time_derivatives: bool = True) -> ApproxSolution:
    """Embed a slab state: ``(eta, w, frakw)(x, eps y)`` on the 2D grid.

    With ``params`` and ``with_time_derivatives`` the limit-equation time
    derivatives are embedded as well.
    """
    gy = slab.gy
    _fits(gy, eps, g2)
    if slab.eta.shape[-1] != g2.x.n:
        raise ValueError("slab and 2D grids must share n_x")
    emb = lambda f: _embed_rows(f, gy, eps, g2)
    out = ApproxSolution(emb(slab.eta), (emb(slab.w), emb(slab.frakw)), eps, slab.t)
    if params is not None and with_time_derivatives:
        eta_t, w_t, fw_t = time_derivatives(slab, params)
        out.rho_a_t = emb(eta_t)
        out.u_a_t = (emb(w_t), emb(fw_t))
    return out


def _check_y_resolution(f, gy, tol=1e-6):
    # energy in the top third of y-modes relative to the total
    c = np.abs(np.fft.rfft(f, axis=-2)) ** 2
    n = c.shape[-2]
    tail = c[2 * n // 3:].sum()
    total = c.sum()
    if total > 0 and tail > tol * total:
        warnings.warn("slab y-resolution is marginal for second y-derivatives", stacklevel=3)


def forcing_slab(slab: SlabState, eps: float, params: FluidParams):
    """``(G1, G2)`` on the slab grid, as functions of ``(x, Y)``."""
    gy = slab.gy
    eta, w, fw = slab.eta, slab.w, slab.frakw
    _check_y_resolution(fw, gy)
    dY = lambda f, o=1: grid.ddy(f, gy, o)
    w_Y, fw_Y = dY(w), dY(fw)
    p_Y = dY(pressure(params, eta))
    G1 = (-eps * eta * fw * w_Y + params.mu * eps**2 * dY(w, 2)
          + params.mu_prime * eps * grid.ddx(fw_Y))
    G2 = (-eps * eta * fw * fw_Y + params.nu * eps**2 * dY(fw, 2)
          + params.mu_prime * eps * grid.ddx(w_Y) - eps * p_Y)
    return G1, G2


def forcing_G(slab: SlabState, eps: float, params: FluidParams, g2: Grid2D | None = None):
    """Forcing ``G`` of the approximate system.

    Returned on the 2D grid when ``g2`` is given, otherwise on the slab grid.
    """
    G1, G2 = forcing_slab(slab, eps, params)
    if g2 is None:
        return G1, G2
    _fits(slab.gy, eps, g2)
    return _embed_rows(G1, slab.gy, eps, g2), _embed_rows(G2, slab.gy, eps, g2)


def continuity_source(slab: SlabState, eps: float, g2: Grid2D | None = None):
    """``eps [(eta frakw)_Y]``."""
    s = eps * grid.ddy(slab.eta * slab.frakw, slab.gy)
    return s if g2 is None else _embed_rows(s, slab.gy, eps, g2)


def forcing_norms(G, gy_slab: GridY, eps: float):
    """``(L2, Linf)`` norms over the 2D box of the slab-grid forcing.

    The 2D box is the slab box stretched by ``1/eps`` in y.
    """
    sq = G[0] ** 2 + G[1] ** 2
    l2 = math.sqrt(grid.integrate_xy(sq, gy_slab) / eps)
    return l2, float(np.sqrt(sq.max()))


def _grad(f, gy):
    return grid.ddx(f), grid.ddy(f, gy)


def remainder(full: State2D, approx: ApproxSolution, g2: Grid2D, params: FluidParams,
              prev_full: State2D | None = None) -> RemainderFields:
    """Remainder ``(varrho, R)`` and derived fields at one instant.

    ``D_t R = d_t R + u . grad R``.  The time derivative of the 2D solution
    comes from the PDE at the same instant, or, when ``prev_full`` is given,
    from a backward difference.  The approximate solution carries its own
    time derivatives from the limit equations.
    """
    if full.rho.shape != approx.rho_a.shape:
        raise ValueError("grid mismatch between full and approximate solution")
    if abs(full.t - approx.t) > 1e-9 * max(1.0, abs(full.t)):
        raise ValueError(f"time mismatch: {full.t} vs {approx.t}")
    gy = g2.y
    varrho = full.rho - approx.rho_a
    R1, R2 = full.u1 - approx.u_a[0], full.u2 - approx.u_a[1]
    gR1, gR2 = _grad(R1, gy), _grad(R2, gy)
    omega = gR1[1] - gR2[0]
    if prev_full is not None:
        dt = full.t - prev_full.t
        if not dt > 0:
            raise ValueError("prev_full must precede full")
        rho_t = (full.rho - prev_full.rho) / dt
        u1_t = (full.u1 - prev_full.u1) / dt
        u2_t = (full.u2 - prev_full.u2) / dt
    else:
        rho_t, u1_t, u2_t = rhs_primitive(full, g2, params)
    if approx.u_a_t is None:
        raise ValueError("approximate solution lacks time derivatives")
    R1_t = u1_t - approx.u_a_t[0]
    R2_t = u2_t - approx.u_a_t[1]
    D1 = R1_t + full.u1 * gR1[0] + full.u2 * gR1[1]
    D2 = R2_t + full.u1 * gR2[0] + full.u2 * gR2[1]
    flux = params.nu * (gR1[0] + gR2[1]) - (
        pressure_unchecked(params, full.rho) - pressure_unchecked(params, approx.rho_a))
    return RemainderFields(varrho, (R1, R2), omega, (D1, D2), flux, full.t, g2,
                           grad_R=(gR1, gR2),
                           grad_DtR=(_grad(D1, gy), _grad(D2, gy)),
                           varrho_t=rho_t - approx.rho_a_t)


SUP_TERMS = ("R_L2", "varrho_L2", "gradR_L2", "DtR_L2", "gradomega_L2")
INT_TERMS = ("gradR_L2", "DtR_L2", "gradomega_L2", "gradDtR_L2")
GRAD_POWERS = (3, 4, 6)


def snapshot_terms(rf: RemainderFields) -> dict:
    """Per-time integrals entering the error functional (squared L2 norms)."""
    gy = rf.g2.y
    I = lambda f: grid.integrate_xy(f, gy)
    gR1, gR2 = rf.grad_R
    gradR_sq = gR1[0] ** 2 + gR1[1] ** 2 + gR2[0] ** 2 + gR2[1] ** 2
    gw = _grad(rf.omega, gy)
    gd1, gd2 = rf.grad_DtR
    out = {
        "t": rf.t,
        "R_L2": I(rf.R[0] ** 2 + rf.R[1] ** 2),
        "varrho_L2": I(rf.varrho**2),
        "gradR_L2": I(gradR_sq),
        "DtR_L2": I(rf.DtR[0] ** 2 + rf.DtR[1] ** 2),
        "gradomega_L2": I(gw[0] ** 2 + gw[1] ** 2),
        "gradDtR_L2": I(gd1[0] ** 2 + gd1[1] ** 2 + gd2[0] ** 2 + gd2[1] ** 2),
        "varrho_inf": float(np.max(np.abs(rf.varrho))),
        "gradR_L6_max": float(np.max(gradR_sq)),
    }
    for p in GRAD_POWERS:
        out[f"gradR_p{p}"] = I(gradR_sq ** (p / 2.0))
    return out


def _as_terms(history):
    return [h if isinstance(h, dict) else snapshot_terms(h) for h in history]


def energy_budget(history: Sequence, G_norms: dict | None = None) -> ErrorBudget:
    """Error functional ``E_eps(T)`` and ``theta_eps(T)`` from a sampled history.

    ``history`` holds :class:`RemainderFields` or their :func:`snapshot_terms`.
    Time integrals use the trapezoid rule on the sample times.
    """
    terms = _as_terms(history)
    if not terms:
        raise ValueError("empty remainder history")
    t = np.array([h["t"] for h in terms])
    breakdown = {}
    for k in SUP_TERMS:
        breakdown[f"sup_{k}"] = max(h[k] for h in terms)
    for k in INT_TERMS:
        v = np.array([h[k] for h in terms])
        breakdown[f"int_{k}"] = float(np.trapezoid(v, t)) if len(t) > 1 else 0.0
    E = sum(breakdown[f"sup_{k}"] for k in SUP_TERMS) + sum(
        breakdown[f"int_{k}"] for k in INT_TERMS)
    theta = max(h["varrho_inf"] for h in terms)
    return ErrorBudget(float(E), float(theta), breakdown, dict(G_norms or {}))


def gradient_integrals(history: Sequence) -> dict:
    """``int_0^T int |grad R|^p`` for ``p`` in 3, 4, 6."""
    terms = _as_terms(history)
    if not terms:
        return {f"I{p}": 0.0 for p in GRAD_POWERS}
    t = np.array([h["t"] for h in terms])
    out = {}
    for p in GRAD_POWERS:
        v = np.array([h[f"gradR_p{p}"] for h in terms])
        out[f"I{p}"] = float(np.trapezoid(v, t)) if len(t) > 1 else 0.0
    return out


def holder_chain(rf: RemainderFields) -> tuple:
    """``(||grad R||_4^4, ||grad R||_2 ||grad R||_6^3)``; the first never exceeds the second."""
    s = snapshot_terms(rf)
    return s["gradR_p4"], math.sqrt(s["gradR_L2"]) * s["gradR_p6"] ** 0.5


# ---------------------------------------------------------------------------
# relative entropy


def relative_entropy(full: State2D, ref_rho, ref_u, params: FluidParams, gy: GridY) -> float:
    """``int (rho |u - u~|^2 / 2 + P(rho) - P(rho~) - P'(rho~)(rho - rho~))``."""
    d1, d2 = full.u1 - ref_u[0], full.u2 - ref_u[1]
    dens = 0.5 * full.rho * (d1**2 + d2**2) + relative_potential(params, full.rho, ref_rho)
    return grid.integrate_xy(dens, gy)


def entropy_lower_bound(rf: RemainderFields, eta_lower: float, eta_bar: float,
                        params: FluidParams, exact_constant: bool = False) -> float:
    """Lower bound for the relative entropy in terms of ``(R, varrho)``.

    The default uses the density coefficient ``gamma (2 eta_bar)^(gamma-2)``;
    the Taylor remainder actually gives ``a gamma (2 eta_bar)^(gamma-2) / 2``,
    selected with ``exact_constant``.
    """
    gy = rf.g2.y
    c = params.gamma * (2.0 * eta_bar) ** (params.gamma - 2.0)
    if exact_constant:
        c *= 0.5 * params.a
    return grid.integrate_xy(0.25 * eta_lower * (rf.R[0] ** 2 + rf.R[1] ** 2)
                             + c * rf.varrho**2, gy)


def entropy_rate_terms(full: State2D, ref, params: FluidParams, g2: Grid2D):
    """``(E1, D, Rcal)`` at one instant.

    ``ref = (rho~, u~1, u~2, rho~_t, u~1_t, u~2_t)``.  ``D`` is the dissipation
    ``int mu |grad(u - u~)|^2 + mu' (div(u - u~))^2`` and ``Rcal`` the
    right-hand side integrand of the relative entropy equality.
    """
    gy = g2.y
    rr, ru1, ru2, rr_t, ru1_t, ru2_t = ref
    rho, u1, u2 = full.rho, full.u1, full.u2
    I = lambda f: grid.integrate_xy(f, gy)
    E1 = relative_entropy(full, rr, (ru1, ru2), params, gy)
    g_u1, g_u2 = _grad(u1, gy), _grad(u2, gy)
    g_r1, g_r2 = _grad(ru1, gy), _grad(ru2, gy)
    e1 = (g_u1[0] - g_r1[0], g_u1[1] - g_r1[1])
    e2 = (g_u2[0] - g_r2[0], g_u2[1] - g_r2[1])
    mu, mup = params.mu, params.mu_prime
    div_e = e1[0] + e2[1]
    D = I(mu * (e1[0] ** 2 + e1[1] ** 2 + e2[0] ** 2 + e2[1] ** 2) + mup * div_e**2)
    d1, d2 = ru1 - u1, ru2 - u2
    mat1 = ru1_t + u1 * g_r1[0] + u2 * g_r1[1]
    mat2 = ru2_t + u1 * g_r2[0] + u2 * g_r2[1]
    div_r = g_r1[0] + g_r2[1]
    # grad u~ : grad (u~ - u) = grad u~ : (-e)
    visc = -mu * (g_r1[0] * e1[0] + g_r1[1] * e1[1] + g_r2[0] * e2[0] + g_r2[1] * e2[1]) \
        - mup * div_r * div_e
    dP = potential_derivative(params, rr)
    gP = _grad(dP, gy)
    dP_t = potential_second_derivative(params, rr) * rr_t
    integrand = (rho * (mat1 * d1 + mat2 * d2) + visc
                 + (rr - rho) * dP_t + (rr * ru1 - rho * u1) * gP[0] + (rr * ru2 - rho * u2) * gP[1]
                 - div_r * (pressure(params, rho) - pressure(params, rr)))
    return E1, D, I(integrand)


def entropy_identity_residual(states: Sequence[State2D], reference: Callable, params: FluidParams,
                              g2: Grid2D) -> float:
    """Largest defect of the relative entropy equality along a history.

    ``reference(t)`` returns the reference pair and its time derivatives as
    in :func:`entropy_rate_terms`.  Time integrals use the trapezoid rule, so
    with every solver step sampled the defect is second order in ``dt``.
    """
    if len(states) < 2:
        raise ValueError("need at least two states")
    vals = [entropy_rate_terms(s, reference(s.t), params, g2) for s in states]
    t = np.array([s.t for s in states])
    E1 = np.array([v[0] for v in vals])
    D = np.array([v[1] for v in vals])
    Rc = np.array([v[2] for v in vals])
    steps = np.diff(t)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * steps * ((D - Rc)[1:] + (D - Rc)[:-1]))])
    defect = E1 - E1[0] + cum
    return float(np.max(np.abs(defect)))


def manufactured_reference(g2: Grid2D, amp=0.1):
    """Smooth periodic reference pair with analytic time derivatives."""
    x = g2.x.nodes
    ky = 2.0 * np.pi / g2.y.length
    X, Y = np.meshgrid(x, g2.y.nodes)
    cx, sx = np.cos(2 * np.pi * X), np.sin(2 * np.pi * X)
    cy, sy = np.cos(ky * Y), np.sin(ky * Y)

    def ref(t):
        e, c, s = math.exp(-t), math.cos(t), math.sin(t)
        rho = 1.0 + amp * e * cx * cy
        u1 = amp * c * sx * cy
        u2 = amp * (0.5 + 0.5 * s) * cx * sy
        return (rho, u1, u2, -amp * e * cx * cy, -amp * s * sx * cy, 0.5 * amp * c * cx * sy)

    return ref


# ---------------------------------------------------------------------------
# perturbation system and bootstrap band


def perturbation_residual(full: State2D, approx: ApproxSolution, rf: RemainderFields, G,
                          source, params: FluidParams):
    """Field residuals of the two lines of the perturbation system.

    ``G`` is the forcing and ``source`` the continuity source
    ``eps [(eta frakw)_Y]``, both on the 2D grid.  Returns
    ``(r_cont, r_mom1, r_mom2)``.
    """
    gy = rf.g2.y
    rho, ua = full.rho, approx.u_a
    R1, R2 = rf.R
    div = lambda a, b: grid.ddx(a) + grid.ddy(b, gy)
    r_cont = rf.varrho_t + div(rho * R1, rho * R2) + div(rf.varrho * ua[0], rf.varrho * ua[1]) \
        + source
    (g11, g12), (g21, g22) = rf.grad_R
    div_R = g11 + g22
    dp = pressure_unchecked(params, rho) - pressure_unchecked(params, approx.rho_a)
    gdp = _grad(dp, gy)
    gdiv = _grad(div_R, gy)
    ga1, ga2 = _grad(ua[0], gy), _grad(ua[1], gy)
    lap = lambda f: grid.ddx(f, 2) + grid.ddy(f, gy, 2)
    acc1 = approx.u_a_t[0] + ua[0] * ga1[0] + ua[1] * ga1[1]
    acc2 = approx.u_a_t[1] + ua[0] * ga2[0] + ua[1] * ga2[1]
    r1 = (rho * rf.DtR[0] - params.mu * lap(R1) - params.mu_prime * gdiv[0] + gdp[0]
          + rho * (R1 * ga1[0] + R2 * ga1[1]) + rf.varrho * acc1 - G[0])
    r2 = (rho * rf.DtR[1] - params.mu * lap(R2) - params.mu_prime * gdiv[1] + gdp[1]
          + rho * (R1 * ga2[0] + R2 * ga2[1]) + rf.varrho * acc2 - G[1])
    return r_cont, r1, r2


def bootstrap_band(theta: float, eta_lower: float) -> dict:
    """Whether ``theta <= min(1, eta_lower) / 2``."""
    limit = 0.5 * min(1.0, eta_lower)
    return {"theta": theta, "limit": limit, "inside": bool(theta <= limit)}


def density_band(full: State2D, eta_lower: float, eta_bar: float) -> bool:
    """``eta_lower/2 <= rho <= eta_bar + eta_lower/2`` pointwise."""
    return bool(np.min(full.rho) >= 0.5 * eta_lower and np.max(full.rho) <= eta_bar + 0.5 * eta_lower)
