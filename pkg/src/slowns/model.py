"""Physical parameters, pressure law and admissible initial data.

The pressure is the power law ``p(rho) = a * rho**gamma`` with ``gamma`` in
``[1, 2]``.  The pressure potential ``P`` satisfies ``rho P'(rho) - P(rho) =
p(rho)`` for ``gamma > 1``; for ``gamma == 1`` the convention
``P = a (rho log rho + 1)`` is kept, which shifts that relation by ``-a``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import i0

ArrayFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]


class DomainError(ValueError):
    """Raised when a density argument is not strictly positive."""


class ConstructionError(ValueError):
    """Raised when initial data cannot satisfy the admissibility conditions."""


@dataclass(frozen=True)
class FluidParams:
    a: float = 1.0
    gamma: float = 1.4
    mu: float = 0.05
    mu_prime: float = 0.95

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"pressure coefficient a must be positive, got {self.a}")
        if not 1.0 <= self.gamma <= 2.0:
            raise ValueError(f"gamma must lie in [1, 2], got {self.gamma}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.mu + self.mu_prime > 0:
            raise ValueError("mu + mu_prime must be positive")

    @property
    def nu(self) -> float:
        return self.mu + self.mu_prime

    def sound_speed(self, rho):
        """``sqrt(p'(rho))``."""
        return np.sqrt(self.a * self.gamma * np.asarray(rho, dtype=float) ** (self.gamma - 1.0))

    def check_normalization(self) -> bool:
        """Warn when ``p'(1) = a*gamma`` differs from 1.

        Some estimates assume that normalization; the solvers do not.
        """
        ok = abs(self.a * self.gamma - 1.0) < 1e-12
        if not ok:
            warnings.warn(f"p'(1) = a*gamma = {self.a * self.gamma:g} != 1", stacklevel=2)
        return ok


def _positive(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(~(rho > 0)):
        raise DomainError("density must be strictly positive")
    return rho


def pressure(params: FluidParams, rho):
    rho = _positive(rho)
    return params.a * rho**params.gamma


def pressure_unchecked(params: FluidParams, rho):
    # hot path inside the solvers; positivity is enforced by the step guard
    return params.a * rho**params.gamma


def pressure_potential(params: FluidParams, rho):
    rho = _positive(rho)
    return _potential(params, rho)


def _potential(params, rho):
    g = params.gamma
    if g == 1.0:
        return params.a * (rho * np.log(rho) + 1.0)
    return params.a * rho**g / (g - 1.0)


def potential_derivative(params: FluidParams, rho):
    """``P'(rho)``."""
    rho = _positive(rho)
    g = params.gamma
    if g == 1.0:
        return params.a * (np.log(rho) + 1.0)
    return params.a * g / (g - 1.0) * rho ** (g - 1.0)


def potential_second_derivative(params: FluidParams, rho):
    """``P''(rho) = p'(rho) / rho``."""
    rho = _positive(rho)
    return params.a * params.gamma * rho ** (params.gamma - 2.0)


def relative_potential(params: FluidParams, rho, rho_ref):
    """Convexity gap ``P(rho) - P(rho_ref) - P'(rho_ref) (rho - rho_ref)``.

    Evaluated in a cancellation-free form so that the result is exactly
    non-negative and vanishes at ``rho == rho_ref``.
    """
    rho = _positive(rho)
    rho_ref = _positive(rho_ref)
    g = params.gamma
    s = rho / rho_ref
    if g == 1.0:
        # rho log(rho/rho_ref) - (rho - rho_ref)
        val = rho_ref * (s * np.log(s) - s + 1.0)
    else:
        # rho_ref^g/(g-1) * (s^g - 1 - g (s - 1))
        val = rho_ref**g / (g - 1.0) * (np.expm1(g * np.log(s)) - g * (s - 1.0))
    return np.maximum(params.a * val, 0.0)


# ---------------------------------------------------------------------------
# initial data


@dataclass
class InitialDataSpec:
    """Profiles ``(varsigma0, w0, frakw0)`` as functions of ``(x, Y)``.

    ``Y`` is the unscaled slow variable.  The callables broadcast over array
    arguments.  Admissibility (positive density, unit x-mean of density, zero
    x-momentum of both velocity components) holds by construction.
    """

    varsigma0: ArrayFunc
    w0: ArrayFunc
    frakw0: ArrayFunc
    lower_bound: float
    upper_bound: float
    family: str = "custom"
    amplitude: float = 0.0
    y_width: float = 1.0

    def sample(self, x, y):
        """Evaluate ``(varsigma0, w0, frakw0)`` on the tensor grid ``y x x``."""
        X, Y = np.meshgrid(np.asarray(x, float), np.asarray(y, float))
        return self.varsigma0(X, Y), self.w0(X, Y), self.frakw0(X, Y)

    def a_k(self, k: int, gx, gy) -> np.ndarray:
        """``A_k(y) = sum_{j<=2} ||d_y^j (varsigma0 - 1, w0, frakw0)||^2_{H^k}``."""
        from . import grid

        sig, w, fw = self.sample(gx.nodes, gy.nodes)
        out = np.zeros(gy.n)
        for f in (sig - 1.0, w, fw):
            for j in range(3):
                g = grid.ddy(f, gy, order=j) if j else f
                out += grid.norm_hk(g, k) ** 2
        return out


def _envelope(y_width):
    def g(Y):
        return np.exp(-0.5 * (Y / y_width) ** 2)

    return g


def _project_momentum(rho, v, n_quad=512):
    """Return ``v - <rho v>`` evaluated with a fine x-quadrature per ``Y``.

    ``rho`` and ``v`` are callables; the correction depends on ``Y`` only.
    """
    xq = np.arange(n_quad) / n_quad

    def corrected(X, Y):
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        Xb, Yb = np.broadcast_arrays(X, Y)
        flatY = Yb.reshape(-1)
        uniq, inv = np.unique(flatY, return_inverse=True)
        XX, YY = np.meshgrid(xq, uniq)
        mean = np.mean(rho(XX, YY) * v(XX, YY), axis=1)
        return v(Xb, Yb) - mean[inv].reshape(Yb.shape)

    return corrected


def _phase(y_width):
    # slice-dependent shift so that profiles differ in shape across y
    def phi(Y):
        return 0.15 * np.tanh(Y / y_width)

    return phi


def make_initial_data(family: str = "gaussian_bump", amplitude: float = 0.3,
                      y_width: float = 1.0, table=None) -> InitialDataSpec:
    """Build admissible initial data.

    Parameters
    ----------
    family : {"gaussian_bump", "fourier_modes", "custom_table"}
    amplitude : float
        Peak size of the deviations from ``(1, 0, 0)``.
    y_width : float
        Width of the Gaussian envelope in the slow variable.
    table : tuple of three 1D arrays, optional
        For ``custom_table``: samples of the x-profiles of density deviation,
        horizontal and vertical velocity on a uniform grid of ``[0, 1)``.
        They are extended by trigonometric interpolation.
    """
    A = float(amplitude)
    env = _envelope(y_width)
    phi = _phase(y_width)
    two_pi = 2.0 * np.pi

    if family == "gaussian_bump":
        kappa = 1.0
        mean_b = i0(kappa)
        lo_b, hi_b = np.exp(-kappa) / mean_b - 1.0, np.exp(kappa) / mean_b - 1.0

        def dens_dev(X, Y):
            return env(Y) * (np.exp(kappa * np.cos(two_pi * (X - 0.5 - phi(Y)))) / mean_b - 1.0)

        def v1(X, Y):
            return A * env(Y) * np.sin(two_pi * (X - phi(Y)))

        def v2(X, Y):
            return A * env(Y) * np.cos(two_pi * (X + 0.25 * phi(Y)) + 0.4)

    elif family == "fourier_modes":
        coef = ((1, 0.6, 0.3), (2, 0.3, 1.1), (3, 0.1, -0.7))
        lo_b = -sum(c for _, c, _ in coef)
        hi_b = -lo_b

        def dens_dev(X, Y):
            s = sum(c * np.cos(two_pi * k * (X - phi(Y)) + ph) for k, c, ph in coef)
            return env(Y) * s

        def v1(X, Y):
            return A * env(Y) * (np.sin(two_pi * X) + 0.4 * np.cos(4 * np.pi * (X + phi(Y))))

        def v2(X, Y):
            return A * env(Y) * (0.7 * np.cos(two_pi * X - phi(Y)) - 0.2 * np.sin(6 * np.pi * X))

    elif family == "custom_table":
        if table is None:
            raise ConstructionError("custom_table requires a table of three profiles")
        prof = [np.asarray(t, float) for t in table]
        n = prof[0].size
        if any(p.shape != (n,) for p in prof):
            raise ConstructionError("custom_table profiles must share one 1D shape")
        coeffs = [np.fft.rfft(p) / n for p in prof]
        coeffs[0][0] = 0.0  # zero x-mean density deviation
        kk = np.arange(coeffs[0].size)

        def trig(c):
            def f(X):
                X = np.asarray(X, float)
                ph = np.exp(1j * two_pi * X[..., None] * kk)
                w = np.full(kk.shape, 2.0)
                w[0] = 1.0
                if n % 2 == 0:
                    w[-1] = 1.0
                return np.real(ph @ (w * c))

            return f

        f0, f1, f2 = (trig(c) for c in coeffs)
        xs = np.arange(2048) / 2048
        vals = f0(xs)
        lo_b, hi_b = float(vals.min()), float(vals.max())

        def dens_dev(X, Y):
            return env(Y) * f0(X - phi(Y))

        def v1(X, Y):
            return A * env(Y) * f1(X - phi(Y))

        def v2(X, Y):
            return A * env(Y) * f2(X - phi(Y))

    else:
        raise ConstructionError(f"unknown initial-data family {family!r}")

    lower = 1.0 + A * min(lo_b, 0.0)
    upper = 1.0 + A * max(hi_b, 0.0)
    if lower <= 0.0:
        raise ConstructionError(
            f"amplitude {A} makes the density non-positive (lower bound {lower:g})")

    def varsigma0(X, Y):
        return 1.0 + A * dens_dev(np.asarray(X, float), np.asarray(Y, float))

    if A == 0.0:
        def zero(X, Y):
            return np.zeros(np.broadcast(np.asarray(X), np.asarray(Y)).shape)

        return InitialDataSpec(varsigma0, zero, zero, 1.0, 1.0, family, A, y_width)

    return InitialDataSpec(
        varsigma0=varsigma0,
        w0=_project_momentum(varsigma0, v1),
        frakw0=_project_momentum(varsigma0, v2),
        lower_bound=lower,
        upper_bound=upper,
        family=family,
        amplitude=A,
        y_width=y_width,
    )


def x_independent_data(amplitude: float = 0.2):
    """Profiles depending on one coordinate only, on a unit period.

    Used for the dimensional-reduction comparison: returned callables take the
    single coordinate ``s`` in ``[0, 1)`` and give ``(rho, u_along, u_across)``
    with unit mean density and zero mean momentum.
    """
    A = float(amplitude)
    two_pi = 2.0 * np.pi
    rho = lambda s: 1.0 + A * (0.8 * np.cos(two_pi * s) + 0.3 * np.sin(4 * np.pi * s))
    v_al = lambda s: A * np.sin(two_pi * s + 0.3)
    v_ac = lambda s: A * np.cos(two_pi * s - 0.5)
    xq = np.arange(512) / 512

    def proj(v):
        m = np.mean(rho(xq) * v(xq))
        return lambda s: v(s) - m

    return rho, proj(v_al), proj(v_ac)
