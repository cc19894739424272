"""Periodic grids, spectral differentiation, quadrature and norms.

Fields are plain float64 arrays.  A 1D field on the unit torus has shape
``(n_x,)``; a 2D field (or a slab of 1D slices) has shape ``(n_y, n_x)``, so
the x-direction is always the last axis and y the one before it.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

MAGIC = b"SLOWNS01"
ROLE_TAGS = {"density": 0, "velocity": 1, "derived": 2}
_ROLE_NAMES = {v: k for k, v in ROLE_TAGS.items()}


def _workers():
    n = os.environ.get("SLOWNS_THREADS")
    return int(n) if n else None


@dataclass(frozen=True)
class GridX:
    """Uniform grid on the unit torus, ``x_j = j / n``."""

    n: int

    def __post_init__(self):
        if self.n < 16 or self.n % 2:
            raise ValueError(f"n_x must be even and >= 16, got {self.n}")

    @property
    def length(self) -> float:
        return 1.0

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) / self.n


@dataclass(frozen=True)
class GridY:
    """Uniform periodic grid on ``[-L, L)``."""

    n: int
    half_length: float

    def __post_init__(self):
        if self.n < 16:
            raise ValueError(f"n_y must be >= 16, got {self.n}")
        if not self.half_length > 0:
            raise ValueError("half_length must be positive")

    @property
    def length(self) -> float:
        return 2.0 * self.half_length

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def nodes(self) -> np.ndarray:
        return -self.half_length + self.h * np.arange(self.n)

    def scaled(self, eps: float) -> "GridY":
        """Grid whose nodes are ``nodes / eps`` (same index set)."""
        return GridY(self.n, self.half_length / eps)


@dataclass(frozen=True)
class Grid2D:
    x: GridX
    y: GridY

    @property
    def shape(self):
        return (self.y.n, self.x.n)

    @property
    def cell_area(self) -> float:
        return self.x.h * self.y.h


@lru_cache(maxsize=64)
def _wavenumbers(n: int, length: float, order: int, dealias: bool):
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=length / n)
    m = np.arange(k.size)
    factor = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        factor[-1] = 0.0  # Nyquist mode has no odd derivative
    if dealias:
        factor = np.where(m <= n // 3, factor, 0.0)
    factor.setflags(write=False)
    return factor


def dealias_mask(n: int) -> np.ndarray:
    """Boolean mask over rfft modes kept by the two-thirds rule."""
    return np.arange(n // 2 + 1) <= n // 3


def spectral_derivative(f, axis=-1, length=1.0, order=1, dealias=False):
    f = np.asarray(f, dtype=float)
    if order == 0 and not dealias:
        return f.copy()
    n = f.shape[axis]
    fac = _wavenumbers(n, float(length), order, dealias)
    shape = [1] * f.ndim
    shape[axis] = fac.size
    fh = sfft.rfft(f, axis=axis, workers=_workers())
    return sfft.irfft(fh * fac.reshape(shape), n=n, axis=axis, workers=_workers())


def ddx(f, order=1, dealias=False):
    """Derivative in x of the trigonometric interpolant on the unit torus."""
    return spectral_derivative(f, axis=-1, length=1.0, order=order, dealias=dealias)


def ddy(f, gy: GridY, order=1, dealias=False):
    """Derivative in y (axis ``-2``) on the periodic box ``[-L, L)``."""
    return spectral_derivative(f, axis=-2, length=gy.length, order=order, dealias=dealias)


def filter23(f, axes=(-1,)):
    """Zero the modes removed by the two-thirds rule along ``axes``."""
    out = np.asarray(f, float)
    for ax in axes:
        n = out.shape[ax]
        fh = sfft.rfft(out, axis=ax, workers=_workers())
        shape = [1] * out.ndim
        shape[ax] = fh.shape[ax]
        fh *= dealias_mask(n).reshape(shape)
        out = sfft.irfft(fh, n=n, axis=ax, workers=_workers())
    return out


def integrate_x(f):
    """``int_T f dx`` along the last axis (rectangle rule)."""
    f = np.asarray(f, dtype=float)
    return f.sum(axis=-1) / f.shape[-1]


def integrate_xy(f, gy: GridY) -> float:
    """``int int f dx dy`` over the box."""
    return float(np.sum(integrate_x(f)) * gy.h)


def norm_hk(f, k: int):
    """``(sum_{j<=k} ||d_x^j f||_{L^2(T)}^2)^{1/2}`` along the last axis."""
    if not 0 <= k <= 5:
        raise ValueError("k must be in 0..5")
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    c = sfft.rfft(f, axis=-1) / n
    kk = 2.0 * np.pi * np.arange(c.shape[-1])
    w = np.full(c.shape[-1], 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    weight = np.zeros_like(kk)
    for j in range(k + 1):
        term = kk ** (2 * j)
        if j % 2 == 1 and n % 2 == 0:
            term = term.copy()
            term[-1] = 0.0
        weight = weight + term
    return np.sqrt(np.sum(w * weight * np.abs(c) ** 2, axis=-1))


def norm_lp(f, p, gy: GridY | None = None):
    """Quadrature ``L^p`` norm on T (1D) or on the box (2D when ``gy`` given)."""
    f = np.abs(np.asarray(f, dtype=float))
    if p == np.inf or p == "inf":
        return float(f.max()) if f.size else 0.0
    p = float(p)
    if p not in (2.0, 3.0, 4.0, 6.0):
        raise ValueError(f"unsupported p={p}")
    if gy is None:
        return integrate_x(f**p) ** (1.0 / p)
    return integrate_xy(f**p, gy) ** (1.0 / p)


def split_mean(f):
    """Split ``f = f_bar(y) + f_tilde(x, y)`` with ``f_bar`` the x-average."""
    f = np.asarray(f, dtype=float)
    f_bar = integrate_x(f)
    return f_bar, f - f_bar[..., None]


def trig_interpolate_y(f, gy: GridY, y_new):
    """Evaluate the y-trigonometric interpolant of ``f`` (rows) at ``y_new``.

    Exact for band-limited data.  Used to embed slab profiles at scaled
    coordinates.
    """
    f = np.asarray(f, dtype=float)
    y_new = np.asarray(y_new, dtype=float)
    n = gy.n
    ref = gy.nodes
    # fast path: the requested points are grid nodes
    pos = (y_new + gy.half_length) / gy.h
    idx = np.rint(pos)
    if np.all(np.abs(pos - idx) < 1e-10):
        return f[np.mod(idx.astype(int), n)]
    c = np.fft.fft(f, axis=0) / n
    m = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        # split the Nyquist mode symmetrically to keep the interpolant real
        c = np.concatenate([c, c[n // 2: n // 2 + 1]], axis=0)
        c[n // 2] *= 0.5
        c[-1] *= 0.5
        m = np.concatenate([m, [n / 2]])
    kk = 2.0 * np.pi * m / gy.length
    E = np.exp(1j * np.outer(y_new - ref[0], kk))
    return np.real(E @ c)


def save_field(path, data, role="derived"):
    """Write a field as a 32-byte header plus little-endian float64 samples."""
    data = np.ascontiguousarray(np.asarray(data, dtype="<f8"))
    if data.ndim == 1:
        n_y, n_x = 1, data.shape[0]
    elif data.ndim == 2:
        n_y, n_x = data.shape
    else:
        raise ValueError("only 1D and 2D fields can be checkpointed")
    header = MAGIC + struct.pack("<QQQ", n_x, n_y, ROLE_TAGS[role])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes(order="C"))


def load_field(path):
    """Inverse of :func:`save_field`; returns ``(data, role)``."""
    with open(path, "rb") as fh:
        header = fh.read(32)
        if len(header) != 32 or header[:8] != MAGIC:
            raise ValueError(f"{path}: not a field checkpoint")
        n_x, n_y, tag = struct.unpack("<QQQ", header[8:])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n_x * n_y:
        raise ValueError(f"{path}: truncated payload")
    data = data.reshape(n_y, n_x).astype(float)
    if n_y == 1:
        data = data[0]
    return data, _ROLE_NAMES[tag]
