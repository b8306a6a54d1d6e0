"""Closed-form kernels of the Neumann and Green potentials on the half-space.

    K(x, t)  = beta_n (|x|^2 + t^2)^{-(n-1)/2}
    Gamma(Z) = gamma_n |Z|^{1-n},          gamma_n = 1 / ((n-1) sigma_{n+1})
    G(X, Y)  = Gamma(X - Y) + Gamma(X - Y*),   Y* = reflection of Y across t = 0

sigma_{n+1} = 2 pi^{(n+1)/2} / Gamma((n+1)/2) is the area of the unit sphere in
R^{n+1}.  With beta_n = Gamma((n-1)/2) / (2 pi^{(n+1)/2}) = 2 gamma_n, the
function N f = K(., t) * f satisfies -d_t N f -> f as t -> 0+, and
Delta G F = -F.  The sign fields of KernelConstants record what was measured
on the grid (see potentials.calibrate).
"""

from dataclasses import dataclass, replace
from math import gamma as _gamma, pi

import numpy as np


def sphere_area(d):
    """Surface area of the unit sphere in R^d."""
    return 2 * pi ** (d / 2) / _gamma(d / 2)


@dataclass(frozen=True)
class KernelConstants:
    n: int
    beta: float
    gamma: float
    sigma: float
    normalization: str = "derived"
    orientation_sign: int | None = None
    green_sign: int | None = None

    @classmethod
    def derived(cls, n):
        if int(n) != n or n < 2:
            raise ValueError(f"n must be an integer >= 2, got {n}")
        n = int(n)
        sigma = sphere_area(n + 1)
        gam = 1 / ((n - 1) * sigma)
        beta = _gamma((n - 1) / 2) / (2 * pi ** ((n + 1) / 2))
        return cls(n, beta, gam, sigma, "derived")

    @classmethod
    def alternate(cls, n):
        """beta_n = pi^{(n+1)/2} Gamma((n-1)/2); fails delta recovery, kept for comparison."""
        c = cls.derived(n)
        return replace(c, beta=pi ** ((n + 1) / 2) * _gamma((n - 1) / 2),
                       normalization="alternate")

    @property
    def neumann_gradient_bound(self):
        """C with |grad K(x,t)| <= C (|x|^2+t^2)^{-n/2}."""
        return (self.n - 1) * self.beta

    @property
    def green_gradient_bound(self):
        """C with |grad_X G(X,Y)| <= C |X-Y|^{-n}."""
        return self.n * 2 * self.gamma

    def with_signs(self, orientation_sign, green_sign):
        return replace(self, orientation_sign=int(orientation_sign), green_sign=int(green_sign))

    def to_dict(self):
        return dict(self.__dict__)


def _split(X, n):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != n + 1:
        raise ValueError(f"points must have trailing dimension {n + 1}")
    return X


def neumann_kernel(x, t, consts):
    """K(x, t) for x of shape (..., n) and t broadcastable to (...); requires t > 0."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("the Neumann kernel is evaluated only at t > 0")
    r2 = np.sum(x ** 2, axis=-1) + t ** 2
    return consts.beta * r2 ** (-(consts.n - 1) / 2)


def neumann_kernel_gradient(x, t, consts):
    """(d_x1 K, ..., d_xn K, d_t K) stacked on the last axis."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("the Neumann kernel is evaluated only at t > 0")
    r2 = np.sum(x ** 2, axis=-1) + t ** 2
    c = -(consts.n - 1) * consts.beta * r2 ** (-(consts.n + 1) / 2)
    t = np.broadcast_to(t, r2.shape)
    return np.concatenate([c[..., None] * x, (c * t)[..., None]], axis=-1)


def reflect(Y):
    Y = np.array(Y, dtype=float)
    Y[..., -1] *= -1
    return Y


def riesz_kernel(Z, consts):
    """Gamma(Z) = gamma_n |Z|^{1-n}; requires Z != 0."""
    Z = _split(Z, consts.n)
    r = np.linalg.norm(Z, axis=-1)
    if np.any(r == 0):
        raise ValueError("the Riesz kernel is singular at Z = 0")
    return consts.gamma * r ** (1 - consts.n)


def riesz_kernel_gradient(Z, consts):
    Z = _split(Z, consts.n)
    r = np.linalg.norm(Z, axis=-1)
    if np.any(r == 0):
        raise ValueError("the Riesz kernel is singular at Z = 0")
    return (-(consts.n - 1) * consts.gamma * r ** (-consts.n - 1))[..., None] * Z


def green_kernel(X, Y, consts):
    """G(X, Y) = Gamma(X - Y) + Gamma(X - Y*); requires X != Y."""
    X = _split(X, consts.n)
    Y = _split(Y, consts.n)
    if np.any(np.all(X == Y, axis=-1)):
        raise ValueError("the Green kernel is singular at X = Y")
    return riesz_kernel(X - Y, consts) + riesz_kernel(X - reflect(Y), consts)


def green_kernel_gradient(X, Y, consts):
    """grad_X G(X, Y)."""
    X = _split(X, consts.n)
    Y = _split(Y, consts.n)
    if np.any(np.all(X == Y, axis=-1)):
        raise ValueError("the Green kernel is singular at X = Y")
    return riesz_kernel_gradient(X - Y, consts) + riesz_kernel_gradient(X - reflect(Y), consts)
