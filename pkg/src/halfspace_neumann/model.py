"""Problem parameters, exponent bookkeeping, scaling maps and boundary-data families.

The integral equation is

    u = N(b |u|^{eta-1} u) + G(a |u|^{m-1} u) + N f,     eta = (m+1)/2,

on the half-space R^{n+1}_+, where N is the Neumann (Poisson-type) potential of
boundary data and G the Green potential of bulk sources.
"""

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import grid as _grid
from ._quad import box_integrals, corner_box_power_integral


def as_fraction(value):
    """Exact rational form of an exponent given as int, str ('7/3'), float or Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("exponent cannot be a bool")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("exponent must be finite")
        return Fraction(repr(value))
    raise TypeError(f"cannot interpret {value!r} as an exponent")


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    m: Fraction
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", as_fraction(self.m))
        if self.m <= 1:
            raise ValueError(f"m must exceed 1, got {self.m}")
        for name in ("a", "b"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    @property
    def eta(self):
        return (self.m + 1) / 2

    def to_dict(self):
        return {"n": self.n, "m": str(self.m), "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Exponents:
    eta: Fraction
    q: Fraction
    q_star: Fraction
    p_data: Fraction
    m_c: Fraction
    M_c: Fraction
    decay_rate: Fraction
    data_decay: Fraction
    supercritical: bool

    def to_dict(self):
        out = {k: str(v) for k, v in self.__dict__.items() if k != "supercritical"}
        out["supercritical"] = self.supercritical
        return out


def derive_exponents(spec):
    n, m = spec.n, spec.m
    q = Fraction(n + 1) * (m - 1) / (m + 1)
    # q < (n+1) always holds since (m-1)/(m+1) < 1
    q_star = (n + 1) * q / (n + 1 - q)
    m_c = Fraction(n + 1, n - 1)
    return Exponents(
        eta=(m + 1) / 2,
        q=q,
        q_star=q_star,
        p_data=n * q / (n + 1),
        m_c=m_c,
        M_c=Fraction(n + 3, n - 1),
        decay_rate=2 / (m - 1),
        data_decay=(m + 1) / (m - 1),
        supercritical=m > m_c,
    )


def validate_supercritical(spec):
    """True iff m > (n+1)/(n-1), the range where the well-posedness theory applies."""
    return spec.m > Fraction(spec.n + 1, spec.n - 1)


def critical_curves(n_values):
    """Rows (n, m_c, M_c) for each n >= 2."""
    rows = []
    for n in n_values:
        if int(n) != n or n < 2:
            raise ValueError(f"n must be an integer >= 2, got {n}")
        rows.append((int(n), Fraction(n + 1, n - 1), Fraction(n + 3, n - 1)))
    return rows


# -------------------------------------------------------------- data families

FAMILY_KINDS = ("gaussian", "indicator-ball", "power-decay", "pure-homogeneous",
                "radial-step", "custom-table")


@dataclass(frozen=True)
class BoundaryDataFamily:
    """Parametrized boundary data f(x).

    gaussian          A exp(-|x - c|^2 / width^2)
    indicator-ball    A 1{|x - c| < radius}
    power-decay       A (1 + |x - c|^2)^{-k/2}
    pure-homogeneous  A |x|^{-decay}
    radial-step       A * table_values[i] on table_radii[i-1] <= |x| < table_radii[i]
    custom-table      A * piecewise-linear interpolation of (table_radii, table_values)
    """

    kind: str
    amplitude: float = 1.0
    width: float = 1.0
    radius: float = 1.0
    k: float = 1.0
    decay: float = 0.0
    center: tuple = ()
    table_radii: tuple = ()
    table_values: tuple = ()

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}; expected one of {FAMILY_KINDS}")
        for name in ("amplitude", "width", "radius", "k", "decay"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "table_radii", tuple(float(r) for r in self.table_radii))
        object.__setattr__(self, "table_values", tuple(float(v) for v in self.table_values))
        if self.kind == "gaussian" and self.width <= 0:
            raise ValueError("gaussian width must be positive")
        if self.kind == "indicator-ball" and self.radius <= 0:
            raise ValueError("indicator radius must be positive")
        if self.kind == "pure-homogeneous" and self.decay <= 0:
            raise ValueError("pure-homogeneous data need a positive decay exponent")
        if self.kind in ("radial-step", "custom-table"):
            r = np.asarray(self.table_radii)
            if len(r) == 0 or len(r) != len(self.table_values) or np.any(np.diff(r) <= 0):
                raise ValueError("tables need matching, strictly increasing radii")

    @classmethod
    def homogeneous(cls, spec, amplitude=1.0):
        """|x|^{-(m+1)/(m-1)}, the scale-invariant data for exponent m."""
        return cls("pure-homogeneous", amplitude=amplitude,
                   decay=float(derive_exponents(spec).data_decay))

    def with_amplitude(self, amplitude):
        return replace(self, amplitude=float(amplitude))

    def to_dict(self):
        out = {"kind": self.kind, "amplitude": self.amplitude}
        keys = {"gaussian": ("width", "center"), "indicator-ball": ("radius", "center"),
                "power-decay": ("k", "center"), "pure-homogeneous": ("decay",),
                "radial-step": ("table_radii", "table_values"),
                "custom-table": ("table_radii", "table_values")}[self.kind]
        for key in keys:
            v = getattr(self, key)
            out[key] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("center", "table_radii", "table_values"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    # -- properties used by the analysis checks

    @property
    def is_radial(self):
        return not any(self.center)

    @property
    def is_nonnegative(self):
        if self.kind in ("radial-step", "custom-table"):
            return self.amplitude * min(self.table_values) >= 0 and \
                self.amplitude * max(self.table_values) >= 0
        return self.amplitude >= 0

    @property
    def support_radius(self):
        """Radius of the support about the centre, or None if unbounded."""
        if self.kind == "indicator-ball":
            return self.radius
        if self.kind in ("radial-step", "custom-table"):
            return self.table_radii[-1]
        return None

    # -- evaluation

    def profile(self, r):
        """Radial profile about the centre."""
        r = np.asarray(r, dtype=float)
        A = self.amplitude
        if self.kind == "gaussian":
            return A * np.exp(-(r / self.width) ** 2)
        if self.kind == "indicator-ball":
            return np.where(r < self.radius, A, 0.0)
        if self.kind == "power-decay":
            return A * (1 + r ** 2) ** (-self.k / 2)
        if self.kind == "pure-homogeneous":
            with np.errstate(divide="ignore"):
                return A * r ** (-self.decay)
        radii = np.asarray(self.table_radii)
        vals = np.asarray(self.table_values)
        if self.kind == "radial-step":
            idx = np.searchsorted(radii, r, side="right")
            return np.where(idx < len(radii), A * vals[np.minimum(idx, len(vals) - 1)], 0.0)
        return np.where(r <= radii[-1], A * np.interp(r, radii, vals), 0.0)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        if self.center:
            pts = pts - np.asarray(self.center)
        return self.profile(np.linalg.norm(pts, axis=-1))

    def sample(self, grid, quadrature="auto"):
        """Boundary field on ``grid``.

        ``midpoint`` samples at cell centres.  ``cell`` takes cell averages by
        4-point Gauss rules.  For pure-homogeneous data the cells touching the
        origin use the exact self-similar integral.  ``auto`` means ``cell`` for
        pure-homogeneous and discontinuous data and ``midpoint`` otherwise.
        """
        if quadrature == "auto":
            quadrature = "cell" if self.kind in ("pure-homogeneous", "indicator-ball",
                                                 "radial-step") else "midpoint"
        pts = grid.boundary_points()
        if quadrature == "midpoint":
            if self.kind == "pure-homogeneous":
                raise ValueError("pure-homogeneous data are singular at a cell corner; "
                                 "use cell quadrature")
            return _grid.BoundaryField(grid, self(pts))
        if quadrature != "cell":
            raise ValueError(f"unknown quadrature {quadrature!r}")
        h = grid.hx
        centers = pts.reshape(-1, grid.n)
        with np.errstate(divide="ignore"):
            avg = box_integrals(self, centers, h / 2, order=4) / h ** grid.n
        if self.kind == "pure-homogeneous":
            corner = np.all(np.abs(centers) < h, axis=1)
            exact = self.amplitude * corner_box_power_integral([h] * grid.n, self.decay) / h ** grid.n
            avg[corner] = exact
        return _grid.BoundaryField(grid, avg.reshape(grid.boundary_shape))


def family_scaled(family, lam, spec):
    """Analytic image of a family under f -> lam^{(m+1)/(m-1)} f(lam x)."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    s = float(derive_exponents(spec).data_decay)
    c = lam ** s
    center = tuple(x / lam for x in family.center)
    if family.kind == "gaussian":
        return replace(family, amplitude=family.amplitude * c, width=family.width / lam,
                       center=center)
    if family.kind == "indicator-ball":
        return replace(family, amplitude=family.amplitude * c, radius=family.radius / lam,
                       center=center)
    if family.kind == "pure-homogeneous":
        return replace(family, amplitude=family.amplitude * c * lam ** (-family.decay))
    if family.kind in ("radial-step", "custom-table"):
        return replace(family, amplitude=family.amplitude * c,
                       table_radii=tuple(r / lam for r in family.table_radii))
    raise ValueError(f"{family.kind} data are not closed under dilation")


# -------------------------------------------------------------------- scaling

def scale_boundary_data(f, lam, spec):
    """f_lam(x) = lam^{(m+1)/(m-1)} f(lam x) on the same grid.

    ``f`` is a BoundaryField (sampled by interpolation; points leaving the box
    set the clipped flag) or a BoundaryDataFamily (exact).
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if isinstance(f, BoundaryDataFamily):
        return family_scaled(f, lam, spec)
    s = float(derive_exponents(spec).data_decay)
    vals, clipped = _grid.interpolate(f, lam * f.grid.boundary_points())
    return _grid.BoundaryField(f.grid, lam ** s * vals, clipped=f.clipped or clipped)


def scale_solution(u, lam, spec):
    """u_lam(x, t) = lam^{2/(m-1)} u(lam x, lam t) on the same grid."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    g = u.grid
    r = float(derive_exponents(spec).decay_rate)
    X = scaled_points(g, lam)
    vals, clipped = _grid.interpolate(u, X)
    return _grid.HalfSpaceField(g, lam ** r * vals, clipped=u.clipped or clipped)


def scaled_points(grid, lam):
    """The points lam * X for every cell centre X, shape grid.shape + (n+1,)."""
    axes = [grid.x] * grid.n + [grid.t]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return lam * X


def scaled_valid_mask(grid, lam):
    """Cells whose dilated image lam*X lies inside the hull of cell centres."""
    X = scaled_points(grid, lam)
    ok = np.all(np.abs(X[..., :grid.n]) <= grid.x[-1] + 1e-12, axis=-1)
    return ok & (X[..., grid.n] >= grid.t[0] - 1e-12) & (X[..., grid.n] <= grid.t[-1] + 1e-12)


def nonlinearity(v, power):
    """|v|^{power-1} v."""
    v = np.asarray(v, dtype=float)
    p = float(power)
    if p == 1.0:
        return v.copy()
    return np.abs(v) ** (p - 1) * v
