"""Time integration of the parameterized 1D limit system.

On every y-slice ``(eta, w)`` solve the 1D compressible Navier-Stokes
equations and ``frakw`` the passive parabolic equation

    eta_t + (eta w)_x = 0
    (eta w)_t + (eta w^2 + p(eta))_x = nu w_xx
    (eta frakw)_t + (eta w frakw)_x = mu frakw_xx

A slab is advanced as one ``(n_y, n_x)`` array: slices never interact, so
the vectorized update is the same as a per-slice loop.

The IMEX scheme works on the conservative variables ``(eta - 1, eta w,
eta frakw)``.  Diffusion is split as ``kappa * d_xx(m)`` (implicit, constant
coefficient, diagonal in Fourier space) plus ``nu * d_xx(w) - kappa *
d_xx(m)`` (explicit).  Every explicit term is an x-derivative, so the
discrete x-means of mass and both momenta are preserved up to round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np
import scipy.fft as sfft

from . import grid
from .model import FluidParams, pressure_unchecked


class SolverError(RuntimeError):
    """Base class for solver failures; carries time and slice index."""

    def __init__(self, msg, t=None, index=None):
        self.t = t
        self.index = index
        where = []
        if t is not None:
            where.append(f"t={t:.6g}")
        if index is not None:
            where.append(f"slice={index}")
        super().__init__(msg + (f" ({', '.join(where)})" if where else ""))


class PositivityLoss(SolverError):
    pass


class Blowup(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 2e-3
    scheme: str = "imex_bdf2"
    cfl_safety: float = 0.5
    dealias: bool = True
    positivity_floor: float = 1e-8
    max_halvings: int = 10

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0 < self.cfl_safety < 1:
            raise ValueError("cfl_safety must lie in (0, 1)")
        if self.scheme not in ("imex_bdf2", "rk4_explicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


SolverConfig1D = SolverConfig


@dataclass
class _History:
    # previous-level spectral states and explicit right-hand sides
    dt: float
    kappa: dict
    u_hat: dict = field(default_factory=dict)
    n_hat: dict = field(default_factory=dict)


@dataclass(eq=False)
class State1D:
    """``(eta, w, frakw)`` at time ``t``; arrays share shape ``(..., n_x)``."""

    eta: np.ndarray
    w: np.ndarray
    frakw: np.ndarray
    t: float = 0.0
    _hist: _History | None = field(default=None, repr=False)
    _pending: "State1D | None" = field(default=None, repr=False)

    @property
    def n_x(self) -> int:
        return self.eta.shape[-1]

    def fields(self):
        return self.eta, self.w, self.frakw

    def fresh(self):
        """Copy without multistep history (forces a one-step start)."""
        return replace(self, _hist=None, _pending=None)


@dataclass(eq=False)
class SlabState(State1D):
    """Family of 1D states indexed by the nodes of ``gy`` (rows)."""

    gy: grid.GridY | None = None

    @property
    def n_slices(self) -> int:
        return self.eta.shape[0]


def equilibrium(n_x: int, gy: grid.GridY | None = None, t: float = 0.0):
    if gy is None:
        z = np.zeros(n_x)
        return State1D(z + 1.0, z.copy(), z.copy(), t)
    z = np.zeros((gy.n, n_x))
    return SlabState(z + 1.0, z.copy(), z.copy(), t, gy=gy)


def slab_from_spec(spec, gx: grid.GridX, gy: grid.GridY, t=0.0) -> SlabState:
    sig, w, fw = spec.sample(gx.nodes, gy.nodes)
    return SlabState(sig, w, fw, t, gy=gy)


# ---------------------------------------------------------------------------
# spectral helpers


def _k2(n):
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=1.0 / n)
    return k * k


def _dx_factor(n, dealias):
    f = 1j * 2.0 * np.pi * np.fft.rfftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        f[-1] = 0.0
    if dealias:
        f = np.where(grid.dealias_mask(n), f, 0.0)
    return f


def _rfft(a):
    return sfft.rfft(a, axis=-1, workers=grid._workers())


def _irfft(a, n):
    return sfft.irfft(a, n=n, axis=-1, workers=grid._workers())


def _kappas(eta, params: FluidParams):
    # implicit diffusivities must dominate half the explicit ones: use the max
    inv = 1.0 / np.min(eta, axis=-1, keepdims=True)
    return {"m": params.nu * inv, "q": params.mu * inv}


def _explicit_limit(state: State1D, params, kappa, dealias):
    n = state.n_x
    D1 = _dx_factor(n, dealias)
    k2 = _k2(n)
    mask = grid.dealias_mask(n) if dealias else 1.0
    eta, w = state.eta, state.w
    m = eta * w
    flux = m * w + (pressure_unchecked(params, eta) - params.a)
    m_hat = _rfft(m)
    n_r = -D1 * m_hat
    n_m = -D1 * _rfft(flux) + mask * (-params.nu * k2 * _rfft(w) + kappa["m"] * k2 * m_hat)
    return {"r": n_r, "m": n_m}, {"r": _rfft(eta - 1.0), "m": m_hat}


def _explicit_passive(state: State1D, params, kappa, dealias):
    n = state.n_x
    D1 = _dx_factor(n, dealias)
    k2 = _k2(n)
    mask = grid.dealias_mask(n) if dealias else 1.0
    q = state.eta * state.frakw
    q_hat = _rfft(q)
    n_q = -D1 * _rfft(q * state.w) + mask * (-params.mu * k2 * _rfft(state.frakw)
                                            + kappa["q"] * k2 * q_hat)
    return n_q, q_hat


def _imex_update(u_hat, n_hat, kappa, k2, dt, hist: _History | None, key):
    """One SBDF2 (or IMEX Euler start) update of a single variable."""
    if hist is None or key not in hist.u_hat:
        return (u_hat + dt * n_hat) / (1.0 + dt * kappa * k2)
    return (4.0 * u_hat - hist.u_hat[key] + 2.0 * dt * (2.0 * n_hat - hist.n_hat[key])) / (
        3.0 + 2.0 * dt * kappa * k2)


def _check(eta, fields, t, floor):
    for f in fields:
        if not np.all(np.isfinite(f)):
            bad = np.argwhere(~np.isfinite(f))
            idx = int(bad[0][0]) if f.ndim > 1 else None
            raise Blowup("non-finite value", t=t, index=idx)
    if np.min(eta) <= floor:
        idx = int(np.argmin(np.min(eta, axis=-1))) if eta.ndim > 1 else None
        raise PositivityLoss(f"density fell to {np.min(eta):.3g}", t=t, index=idx)


def step_limit(state: State1D, params: FluidParams, cfg: SolverConfig, dt=None) -> State1D:
    """Advance ``(eta, w)`` by one step; ``frakw`` is left for :func:`step_passive`."""
    if state._pending is not None:
        raise RuntimeError("passive update pending; call step_passive first")
    dt = cfg.dt if dt is None else dt
    if cfg.scheme == "rk4_explicit":
        return _rk4_step(state, params, dt, cfg, passive=False)
    hist = state._hist
    if hist is not None and hist.dt != dt:
        hist = None
    kappa = hist.kappa if hist is not None else _kappas(state.eta, params)
    n = state.n_x
    k2 = _k2(n)
    n_hat, u_hat = _explicit_limit(state, params, kappa, cfg.dealias)
    r_new = _imex_update(u_hat["r"], n_hat["r"], 0.0, k2, dt, hist, "r")
    m_new = _imex_update(u_hat["m"], n_hat["m"], kappa["m"], k2, dt, hist, "m")
    eta = 1.0 + _irfft(r_new, n)
    m = _irfft(m_new, n)
    t_new = state.t + dt
    _check(eta, (eta, m), t_new, cfg.positivity_floor)
    new_hist = _History(dt=dt, kappa=kappa, u_hat=dict(u_hat), n_hat=dict(n_hat))
    return replace(state, eta=eta, w=m / eta, t=t_new, _hist=new_hist, _pending=state)


def step_passive(state: State1D, params: FluidParams, cfg: SolverConfig) -> State1D:
    """Advance ``frakw`` across the step just taken by :func:`step_limit`.

    Uses the end-of-step density to recover ``frakw`` from ``eta * frakw``.
    """
    old = state._pending
    if old is None:
        raise RuntimeError("step_passive requires a state produced by step_limit")
    if cfg.scheme == "rk4_explicit":
        return _rk4_step(old, params, state._hist.dt, cfg, passive=True, limit_state=state)
    hist_new = state._hist
    hist_old = old._hist
    if hist_old is not None and hist_old.dt != hist_new.dt:
        hist_old = None
    dt = hist_new.dt
    n = state.n_x
    n_q, q_hat = _explicit_passive(old, params, hist_new.kappa, cfg.dealias)
    q_new = _imex_update(q_hat, n_q, hist_new.kappa["q"], _k2(n), dt, hist_old, "q")
    q = _irfft(q_new, n)
    _check(state.eta, (q,), state.t, -np.inf)
    hist_new.u_hat["q"] = q_hat
    hist_new.n_hat["q"] = n_q
    return replace(state, frakw=q / state.eta, _pending=None)


def step(state: State1D, params: FluidParams, cfg: SolverConfig, dt=None) -> State1D:
    return step_passive(step_limit(state, params, cfg, dt), params, cfg)


# ---------------------------------------------------------------------------
# explicit RK4 (reference scheme; needs the diffusive step limit)


def _rhs_phys(eta, m, q, params, dealias):
    w = m / eta
    fw = q / eta
    d = lambda f, o: grid.ddx(f, o, dealias)
    r_t = -d(m, 1)
    m_t = -d(m * w + pressure_unchecked(params, eta) - params.a, 1) + params.nu * d(w, 2)
    q_t = -d(q * w, 1) + params.mu * d(fw, 2)
    return r_t, m_t, q_t


def _rk4_step(state, params, dt, cfg, passive, limit_state=None):
    if passive:
        # the RK4 path advances all fields together inside step_limit
        return replace(limit_state, frakw=limit_state._hist.u_hat["fw"], _pending=None)
    y0 = (state.eta, state.eta * state.w, state.eta * state.frakw)

    def f(y):
        return _rhs_phys(y[0], y[1], y[2], params, cfg.dealias)

    k1 = f(y0)
    k2 = f(tuple(a + 0.5 * dt * b for a, b in zip(y0, k1)))
    k3 = f(tuple(a + 0.5 * dt * b for a, b in zip(y0, k2)))
    k4 = f(tuple(a + dt * b for a, b in zip(y0, k3)))
    y = tuple(a + dt / 6.0 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(y0, k1, k2, k3, k4))
    t_new = state.t + dt
    _check(y[0], y, t_new, cfg.positivity_floor)
    hist = _History(dt=dt, kappa={}, u_hat={"fw": y[2] / y[0]})
    return replace(state, eta=y[0], w=y[1] / y[0], t=t_new, _hist=hist, _pending=state)


# ---------------------------------------------------------------------------
# driving a slab


@dataclass
class DiagnosticSeries:
    """Named scalar (or per-slice) time series sampled on a common schedule."""

    t: list = field(default_factory=list)
    columns: dict = field(default_factory=dict)
    states: list = field(default_factory=list)

    def append(self, t, values: dict):
        self.t.append(float(t))
        for k, v in values.items():
            self.columns.setdefault(k, []).append(v)

    def __getitem__(self, name):
        return np.asarray(self.columns[name])

    @property
    def times(self):
        return np.asarray(self.t)

    def names(self):
        return list(self.columns)


def cfl_dt(eta, w, params: FluidParams, h: float, safety: float) -> float:
    c_max = float(np.max(params.sound_speed(np.max(eta))))
    return safety * h / (float(np.max(np.abs(w))) + c_max)


def advance(state, params, cfg, dt, stepper=step):
    """Take one step of size ``dt``; on positivity loss retry with halved substeps."""
    try:
        return stepper(state, params, cfg, dt)
    except PositivityLoss as err:
        last = err
    for k in range(1, cfg.max_halvings + 1):
        sub = 2**k
        h = dt / sub
        s = state.fresh()
        try:
            for _ in range(sub):
                s = stepper(s, params, cfg, h)
        except PositivityLoss as err:
            last = err
            continue
        # next outer step restarts the multistep history at size dt
        return s.fresh()
    raise PositivityLoss(str(last).split(" (")[0], t=last.t, index=last.index)


def step_schedule(t0: float, t_end: float, dt: float):
    n = max(1, int(math.ceil((t_end - t0) / dt - 1e-9)))
    return n, (t_end - t0) / n


def run_slab(initial: State1D, params: FluidParams, cfg: SolverConfig, t_end: float,
             observers: Iterable[Callable] = (), sample_stride: int = 1,
             record: bool = False):
    """Advance every slice to ``t_end``.

    ``observers`` are callables ``obs(state) -> dict`` evaluated at the initial
    time, every ``sample_stride`` steps and at ``t_end``.  With ``record`` the
    sampled states are kept in ``series.states``.
    """
    if not t_end > initial.t:
        raise ValueError("t_end must exceed the initial time")
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

    state = initial
    sample(state)
    for i in range(1, n_steps + 1):
        state = advance(state, params, cfg, dt)
        if i == n_steps:
            state = replace(state, t=float(t_end))
        if i % sample_stride == 0 or i == n_steps:
            sample(state)
    return state, series


def residual_limit(state: State1D, state_prev: State1D, params: FluidParams, dealias=False):
    """Centered-in-time residual of the limit system between two states.

    Returns ``(r_mass, r_mom)`` at the midpoint; space derivatives are
    spectral, time difference and spatial terms are centered (second order).
    """
    dt = state.t - state_prev.t
    if not dt > 0:
        raise ValueError("states must be ordered in time")

    def spatial(s):
        m = s.eta * s.w
        f_mass = grid.ddx(m, 1, dealias)
        f_mom = grid.ddx(m * s.w + pressure_unchecked(params, s.eta), 1, dealias) \
            - params.nu * grid.ddx(s.w, 2, dealias)
        return f_mass, f_mom

    a0, b0 = spatial(state_prev)
    a1, b1 = spatial(state)
    r_mass = (state.eta - state_prev.eta) / dt + 0.5 * (a0 + a1)
    r_mom = (state.eta * state.w - state_prev.eta * state_prev.w) / dt + 0.5 * (b0 + b1)
    return r_mass, r_mom


def time_derivatives(state: State1D, params: FluidParams):
    """Instantaneous ``(eta_t, w_t, frakw_t)`` from the limit equations."""
    eta, w, fw = state.eta, state.w, state.frakw
    eta_t = -grid.ddx(eta * w)
    w_x = grid.ddx(w)
    w_t = -w * w_x + (params.nu * grid.ddx(w, 2) - grid.ddx(pressure_unchecked(params, eta))) / eta
    fw_t = -w * grid.ddx(fw) + params.mu * grid.ddx(fw, 2) / eta
    return eta_t, w_t, fw_t
