"""Time integration of the 2D isentropic system on the periodic box.

    rho_t + div(rho u) = 0
    (rho u)_t + div(rho u (x) u) + grad p(rho) = mu lap u + mu' grad div u

The box is ``T x [-L, L)``, periodic in both directions.  The scheme mirrors
:mod:`slowns.solver1d`: conservative variables ``(rho - 1, rho u)``, explicit
transport and pressure, and a constant-coefficient viscous operator
``kappa1 lap m + kappa2 grad div m`` taken implicitly.  The implicit solve is
diagonal per Fourier mode after splitting into the components along and
across the wave vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from . import grid
from .grid import Grid2D, GridY
from .model import FluidParams, pressure_unchecked
from .solver1d import (Blowup, DiagnosticSeries, PositivityLoss, SolverConfig,
                       _History, _check, step_schedule)


class BoxTooSmall(ValueError):
    """The slow embedding does not fit in the 2D box."""


@dataclass(eq=False)
class State2D:
    rho: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    t: float = 0.0
    _hist: _History | None = field(default=None, repr=False)

    def fresh(self):
        return replace(self, _hist=None)


@dataclass(frozen=True)
class EpsScaling:
    eps: float

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")


def equilibrium2d(g2: Grid2D, t=0.0) -> State2D:
    z = np.zeros(g2.shape)
    return State2D(z + 1.0, z.copy(), z.copy(), t)


# ---------------------------------------------------------------------------
# spectral operators


@lru_cache(maxsize=16)
def _wave(nx, ny, ly, dealias):
    kx = 2.0 * np.pi * np.fft.rfftfreq(nx, d=1.0 / nx)
    ky = 2.0 * np.pi * np.fft.fftfreq(ny, d=ly / ny)
    KX, KY = np.meshgrid(kx, ky)
    k2 = KX**2 + KY**2
    kxo, kyo = KX.copy(), KY.copy()
    if nx % 2 == 0:
        kxo[:, -1] = 0.0
    if ny % 2 == 0:
        kyo[ny // 2, :] = 0.0
    mx = np.arange(kx.size) <= nx // 3
    my = np.abs(np.fft.fftfreq(ny, d=1.0 / ny)) <= ny // 3
    mask = (my[:, None] & mx[None, :]).astype(float) if dealias else np.ones_like(k2)
    ko2 = kxo**2 + kyo**2
    out = dict(k2=k2, kx=kxo, ky=kyo, ko2=ko2, mask=mask)
    for v in out.values():
        v.setflags(write=False)
    return out


def _fft2(a):
    return sfft.rfft2(a, axes=(-2, -1), workers=grid._workers())


def _ifft2(a, shape):
    return sfft.irfft2(a, s=shape, axes=(-2, -1), workers=grid._workers())


def grad_eps(f, gy: GridY, eps: float):
    """``(d_x f, eps d_y f)``."""
    fx = grid.ddx(f)
    if eps == 0:
        return fx, np.zeros_like(fx)
    return fx, eps * grid.ddy(f, gy)


def div_eps(v1, v2, gy: GridY, eps: float):
    out = grid.ddx(v1)
    if eps != 0:
        out = out + eps * grid.ddy(v2, gy)
    return out


def laplace_eps(f, gy: GridY, eps: float):
    """``d_xx f + eps^2 d_yy f``."""
    out = grid.ddx(f, 2)
    if eps != 0:
        out = out + eps**2 * grid.ddy(f, gy, 2)
    return out


# ---------------------------------------------------------------------------
# stepping


def _kappas(rho, params):
    inv = 1.0 / float(np.min(rho))
    return {"k1": params.mu * inv, "k2": params.mu_prime * inv}


def _explicit(state: State2D, g2: Grid2D, params, kappa, dealias):
    W = _wave(g2.x.n, g2.y.n, g2.y.length, dealias)
    kx, ky, k2, mask = W["kx"], W["ky"], W["k2"], W["mask"]
    rho, u1, u2 = state.rho, state.u1, state.u2
    m1, m2 = rho * u1, rho * u2
    dp = pressure_unchecked(params, rho) - params.a
    m1h, m2h = _fft2(m1), _fft2(m2)
    u1h, u2h = _fft2(u1), _fft2(u2)
    f11, f12, f22 = _fft2(m1 * u1 + dp), _fft2(m1 * u2), _fft2(m2 * u2 + dp)
    n_r = -1j * (kx * m1h + ky * m2h) * mask
    div_u = kx * u1h + ky * u2h
    div_m = kx * m1h + ky * m2h
    mu, mup = params.mu, params.mu_prime
    k1c, k2c = kappa["k1"], kappa["k2"]
    n_m1 = (-1j * (kx * f11 + ky * f12) - mu * k2 * u1h - mup * kx * div_u
            + k1c * k2 * m1h + k2c * kx * div_m) * mask
    n_m2 = (-1j * (kx * f12 + ky * f22) - mu * k2 * u2h - mup * ky * div_u
            + k1c * k2 * m2h + k2c * ky * div_m) * mask
    return ({"r": n_r, "m1": n_m1, "m2": n_m2},
            {"r": _fft2(rho - 1.0), "m1": m1h, "m2": m2h})


def _solve_momentum(b1, b2, W, kappa, c0, c1):
    """Solve ``(c0 + c1 (kappa1 |k|^2 + kappa2 k k^T)) m = b`` per mode."""
    kx, ky, k2, ko2 = W["kx"], W["ky"], W["k2"], W["ko2"]
    dt_ = c0 + c1 * kappa["k1"] * k2
    dl = dt_ + c1 * kappa["k2"] * ko2
    with np.errstate(invalid="ignore", divide="ignore"):
        proj = np.where(ko2 > 0, (kx * b1 + ky * b2) / np.where(ko2 > 0, ko2, 1.0), 0.0)
    l1, l2 = kx * proj, ky * proj
    return (b1 - l1) / dt_ + l1 / dl, (b2 - l2) / dt_ + l2 / dl


def step_full(state: State2D, g2: Grid2D, params: FluidParams, cfg: SolverConfig,
              dt=None) -> State2D:
    """One IMEX step of the 2D system."""
    dt = cfg.dt if dt is None else dt
    if cfg.scheme == "rk4_explicit":
        return _rk4_step(state, g2, params, dt, cfg)
    hist = state._hist
    if hist is not None and hist.dt != dt:
        hist = None
    kappa = hist.kappa if hist is not None else _kappas(state.rho, params)
    W = _wave(g2.x.n, g2.y.n, g2.y.length, cfg.dealias)
    n_hat, u_hat = _explicit(state, g2, params, kappa, cfg.dealias)
    if hist is None:
        r_new = u_hat["r"] + dt * n_hat["r"]
        b1 = u_hat["m1"] + dt * n_hat["m1"]
        b2 = u_hat["m2"] + dt * n_hat["m2"]
        m1_new, m2_new = _solve_momentum(b1, b2, W, kappa, 1.0, dt)
    else:
        def bdf(key):
            return 4.0 * u_hat[key] - hist.u_hat[key] + 2.0 * dt * (
                2.0 * n_hat[key] - hist.n_hat[key])

        r_new = bdf("r") / 3.0
        m1_new, m2_new = _solve_momentum(bdf("m1"), bdf("m2"), W, kappa, 3.0, 2.0 * dt)
    shape = g2.shape
    rho = 1.0 + _ifft2(r_new, shape)
    m1, m2 = _ifft2(m1_new, shape), _ifft2(m2_new, shape)
    t_new = state.t + dt
    _check(rho, (rho, m1, m2), t_new, cfg.positivity_floor)
    return State2D(rho, m1 / rho, m2 / rho, t_new,
                   _History(dt=dt, kappa=kappa, u_hat=u_hat, n_hat=n_hat))


def rhs_primitive(state: State2D, g2: Grid2D, params: FluidParams, dealias=False):
    """``(rho_t, u1_t, u2_t)`` from the PDE at one instant."""
    gy = g2.y
    rho, u1, u2 = state.rho, state.u1, state.u2
    dx = lambda f, o=1: grid.ddx(f, o, dealias)
    dy = lambda f, o=1: grid.ddy(f, gy, o, dealias)
    rho_t = -(dx(rho * u1) + dy(rho * u2))
    p = pressure_unchecked(params, rho)
    div_u = dx(u1) + dy(u2)
    u1x, u1y, u2x, u2y = dx(u1), dy(u1), dx(u2), dy(u2)
    lap1 = dx(u1, 2) + dy(u1, 2)
    lap2 = dx(u2, 2) + dy(u2, 2)
    u1_t = -(u1 * u1x + u2 * u1y) + (params.mu * lap1 + params.mu_prime * dx(div_u) - dx(p)) / rho
    u2_t = -(u1 * u2x + u2 * u2y) + (params.mu * lap2 + params.mu_prime * dy(div_u) - dy(p)) / rho
    return rho_t, u1_t, u2_t


def _rk4_step(state, g2, params, dt, cfg):
    def f(y):
        s = State2D(y[0], y[1] / y[0], y[2] / y[0])
        r_t, u1_t, u2_t = rhs_primitive(s, g2, params, cfg.dealias)
        # conservative tendencies from primitive ones
        return r_t, r_t * s.u1 + s.rho * u1_t, r_t * s.u2 + s.rho * u2_t

    y0 = (state.rho, state.rho * state.u1, state.rho * state.u2)
    k1 = f(y0)
    k2 = f(tuple(a + 0.5 * dt * b for a, b in zip(y0, k1)))
    k3 = f(tuple(a + 0.5 * dt * b for a, b in zip(y0, k2)))
    k4 = f(tuple(a + dt * b for a, b in zip(y0, k3)))
    y = tuple(a + dt / 6.0 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(y0, k1, k2, k3, k4))
    t_new = state.t + dt
    _check(y[0], y, t_new, cfg.positivity_floor)
    return State2D(y[0], y[1] / y[0], y[2] / y[0], t_new)


def cfl_dt2d(state: State2D, g2: Grid2D, params: FluidParams, safety: float) -> float:
    c = float(params.sound_speed(np.max(state.rho)))
    vmax = float(np.max(np.sqrt(state.u1**2 + state.u2**2)))
    return safety * min(g2.x.h, g2.y.h) / (vmax + c)


def advance2d(state, g2, params, cfg, dt):
    try:
        return step_full(state, g2, params, cfg, dt)
    except PositivityLoss as err:
        last = err
    for k in range(1, cfg.max_halvings + 1):
        sub = 2**k
        s = state.fresh()
        try:
            for _ in range(sub):
                s = step_full(s, g2, params, cfg, dt / sub)
        except PositivityLoss as err:
            last = err
            continue
        return s.fresh()
    raise PositivityLoss(str(last).split(" (")[0], t=last.t)


def run_full(initial: State2D, g2: Grid2D, params: FluidParams, cfg: SolverConfig,
             t_end: float, observers=(), sample_stride=1, record=False, on_sample=None):
    """Advance a 2D state to ``t_end`` sampling observers on a fixed stride.

    ``on_sample(state)`` is called at every sampled state (after observers)
    so that callers can build histories without storing every state.
    """
    observers = list(observers)
    n_steps, dt = step_schedule(initial.t, t_end, cfg.dt)
    series = DiagnosticSeries()

    def sample(s):
        vals = {}
        for obs in observers:
            vals.update(obs(s))
        series.append(s.t, vals)
        if record:
            series.states.append(s.fresh())
        if on_sample is not None:
            on_sample(s)

    state = initial
    sample(state)
    for i in range(1, n_steps + 1):
        state = advance2d(state, g2, params, cfg, dt)
        if i == n_steps:
            state = replace(state, t=float(t_end))
        if i % sample_stride == 0 or i == n_steps:
            sample(state)
    return state, series


# ---------------------------------------------------------------------------
# slow embedding


def y_extent(spec, floor=1e-10) -> float:
    """Half-width in the slow variable beyond which the data deviate < floor."""
    return spec.y_width * float(np.sqrt(2.0 * np.log(1.0 / floor)))


def default_ny2d(n_slab: int, eps: float, cap: int = 512) -> int:
    n = int(np.ceil(n_slab / eps))
    n = sfft.next_fast_len(n, real=True)
    if n % 2:
        n += 1
    return int(min(n, cap))


def slow_embed(spec, eps, g2: Grid2D, slab_half_length: float | None = None) -> State2D:
    """2D initial state ``(varsigma0, w0, frakw0)(x, eps y)``.

    ``spec`` is an :class:`~slowns.model.InitialDataSpec` (evaluated exactly)
    or a :class:`~slowns.solver1d.SlabState` (trigonometric interpolation of
    its rows).
    """
    eps = eps.eps if isinstance(eps, EpsScaling) else float(eps)
    EpsScaling(eps)
    from .solver1d import SlabState

    if isinstance(spec, SlabState):
        L1 = spec.gy.half_length
    else:
        L1 = y_extent(spec) if slab_half_length is None else slab_half_length
    if eps * g2.y.half_length < L1 * (1.0 - 1e-12):
        raise BoxTooSmall(
            f"eps*L2 = {eps * g2.y.half_length:g} < slab extent {L1:g}")
    Y = eps * g2.y.nodes
    if isinstance(spec, SlabState):
        rho = grid.trig_interpolate_y(spec.eta, spec.gy, Y)
        u1 = grid.trig_interpolate_y(spec.w, spec.gy, Y)
        u2 = grid.trig_interpolate_y(spec.frakw, spec.gy, Y)
        return State2D(rho, u1, u2, spec.t)
    rho, u1, u2 = spec.sample(g2.x.nodes, Y)
    return State2D(rho, u1, u2, 0.0)


def residual_eps_system(xi, v1, v2, xi_t, v1_t, v2_t, gy: GridY, eps, params: FluidParams):
    """Residual of the eps-scaled system for fields given in unscaled ``(x, Y)``.

    Time derivatives are supplied (primitive form).  Returns the field
    residuals ``(r_mass, r_mom1, r_mom2)`` of the conservative equations.
    """
    e = float(eps)
    m1, m2 = xi * v1, xi * v2
    r_mass = xi_t + div_eps(m1, m2, gy, e)
    p = pressure_unchecked(params, xi)
    d = div_eps(v1, v2, gy, e)
    gx1, gy1 = grad_eps(d, gy, e)
    gp1, gp2 = grad_eps(p, gy, e)
    r1 = (xi_t * v1 + xi * v1_t + div_eps(m1 * v1, m1 * v2, gy, e)
          - params.mu * laplace_eps(v1, gy, e) - params.mu_prime * gx1 + gp1)
    r2 = (xi_t * v2 + xi * v2_t + div_eps(m2 * v1, m2 * v2, gy, e)
          - params.mu * laplace_eps(v2, gy, e) - params.mu_prime * gy1 + gp2)
    return r_mass, r1, r2


def residual_norms(fields, gy: GridY):
    return {name: grid.norm_lp(f, 2, gy) for name, f in zip(("mass", "mom1", "mom2"), fields)}
