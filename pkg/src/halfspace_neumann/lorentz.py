"""Rearrangements and Lorentz-space norms of grid fields.

A grid field is a step function: the value on each cell is constant over a set
of measure ``mu``.  Its decreasing rearrangement is therefore the step function
taking the k-th largest |value| on [k mu, (k+1) mu), and every quantity below is
computed on these breakpoints without further discretization.
"""

from dataclasses import dataclass

import numpy as np

from . import grid as _grid


def _values_and_measure(field, measure=None):
    if hasattr(field, "values") and hasattr(field, "cell_measure"):
        return np.asarray(field.values, dtype=float), field.cell_measure
    if measure is None:
        raise ValueError("raw arrays need an explicit cell measure")
    return np.asarray(field, dtype=float), float(measure)


@dataclass(frozen=True, eq=False)
class Rearrangement:
    """Non-increasing step function: value ``values[k]`` on [breakpoints[k], breakpoints[k+1])."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.searchsorted(self.breakpoints, s, side="right") - 1
        out = np.where(idx < len(self.values), self.values[np.clip(idx, 0, len(self.values) - 1)],
                       0.0)
        return np.where(s < 0, np.nan, out)

    @property
    def total_measure(self):
        return float(self.breakpoints[-1])


def decreasing_rearrangement(field, measure=None, mask=None):
    vals, mu = _values_and_measure(field, measure)
    a = np.abs(vals if mask is None else vals[mask]).ravel()
    a = np.sort(a)[::-1]
    return Rearrangement(np.arange(len(a) + 1) * mu, a)


def distribution_function(field, tau, measure=None, mask=None):
    """d_f(tau) = |{|f| > tau}|."""
    vals, mu = _values_and_measure(field, measure)
    a = np.abs(vals if mask is None else vals[mask]).ravel()
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    a = np.sort(a)
    return mu * (len(a) - np.searchsorted(a, tau, side="right"))


def maximal_rearrangement(rearr, s):
    """f**(s) = (1/s) int_0^s f*(r) dr, exact for the step function; f**(0) = f*(0)."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    b, v = rearr.breakpoints, rearr.values
    if len(v) == 0:
        return np.zeros_like(s)
    cum = np.concatenate([[0.0], np.cumsum(v * np.diff(b))])
    idx = np.clip(np.searchsorted(b, s, side="right") - 1, 0, len(v))
    integral = cum[idx] + np.where(idx < len(v), v[np.minimum(idx, len(v) - 1)], 0.0) \
        * (s - b[np.minimum(idx, len(b) - 1)])
    integral = np.where(s >= b[-1], cum[-1], integral)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = integral / s
    return np.where(s == 0, v[0], out)


def _check_p(p):
    p = float(p)
    if not p > 1:
        raise ValueError(f"Lorentz norms here are defined for p > 1, got p = {p}")
    return p


def _weak_from_sorted(a, mu, p):
    if len(a) == 0 or a[0] == 0:
        return 0.0
    k = np.arange(1, len(a) + 1)
    s = k * mu
    # s^{1/p-1} int_0^s f* is increasing on each piece (p > 1 and f* constant),
    # so the supremum is attained at a right endpoint
    return float(np.max(s ** (1 / p - 1) * np.cumsum(a) * mu))


def lorentz_norm(field, p, q=np.inf, measure=None, mask=None, order=8):
    """||f||_{L^{p,q}} = (int_0^inf (s^{1/p} f**(s))^q ds/s)^{1/q}, sup for q = inf."""
    p = _check_p(p)
    vals, mu = _values_and_measure(field, measure)
    a = np.sort(np.abs(vals if mask is None else vals[mask]).ravel())[::-1]
    if q == np.inf:
        return _weak_from_sorted(a, mu, p)
    q = float(q)
    if not q >= 1:
        raise ValueError("q must be >= 1")
    if len(a) == 0 or a[0] == 0:
        return 0.0
    N = len(a)
    cum = np.concatenate([[0.0], np.cumsum(a) * mu])
    # first piece: f** = a_0, integral of s^{q/p - 1} a_0^q over [0, mu]
    total = a[0] ** q * mu ** (q / p) / (q / p)
    # pieces k >= 1: s^{q/p - 1 - q} (C_k + a_k (s - k mu))^q on [k mu, (k+1) mu]
    if N > 1:
        x, w = np.polynomial.legendre.leggauss(order)
        k = np.arange(1, N)
        s = (k[:, None] + 0.5 + 0.5 * x[None, :]) * mu
        inner = cum[k][:, None] + a[k][:, None] * (s - k[:, None] * mu)
        total += float(np.sum(0.5 * mu * w * s ** (q / p - 1 - q) * inner ** q))
    # tail s > N mu: f** = C_N / s
    total += cum[N] ** q * (N * mu) ** (q / p - q) / (q - q / p)
    return float(total ** (1 / q))


def quasi_norm(field, p, q=np.inf, measure=None, mask=None):
    """|||f|||_{L^{p,q}} = p^{1/q} (int_0^inf (tau d_f(tau)^{1/p})^q dtau/tau)^{1/q}."""
    p = float(p)
    if not p > 0:
        raise ValueError("p must be positive")
    vals, mu = _values_and_measure(field, measure)
    a = np.sort(np.abs(vals if mask is None else vals[mask]).ravel())[::-1]
    if len(a) == 0 or a[0] == 0:
        return 0.0
    d = np.arange(1, len(a) + 1) * mu          # d_f = d[k] on [a[k+1], a[k])
    if q == np.inf:
        return float(np.max(a * d ** (1 / p)))
    q = float(q)
    upper = a
    lower = np.concatenate([a[1:], [0.0]])
    total = np.sum(d ** (q / p) * (upper ** q - lower ** q) / q)
    return float(p ** (1 / q) * total ** (1 / q))


def superlevel_norm(field, p, measure=None, mask=None):
    """sup over open sets E of |E|^{1/p - 1} int_E |f|.

    For a step function the optimal E are the super-level sets, which gives
    the same breakpoint formula as the weak norm.
    """
    p = _check_p(p)
    vals, mu = _values_and_measure(field, measure)
    a = np.sort(np.abs(vals if mask is None else vals[mask]).ravel())[::-1]
    return _weak_from_sorted(a, mu, p)


def lebesgue_norm(field, p, measure=None, mask=None):
    vals, mu = _values_and_measure(field, measure)
    a = np.abs(vals if mask is None else vals[mask])
    if p == np.inf:
        return float(a.max(initial=0.0))
    return float((np.sum(a ** p) * mu) ** (1 / p))


def holder_check(f, g, p1, p2, measure_f=None, measure_g=None):
    """Ratio ||fg||_{L^{p,inf}} / (||f||_{L^{p1,inf}} ||g||_{L^{p2,inf}}) with 1/p = 1/p1 + 1/p2."""
    fv, mu = _values_and_measure(f, measure_f)
    gv, mu2 = _values_and_measure(g, measure_g)
    if fv.shape != gv.shape or not np.isclose(mu, mu2):
        raise ValueError("fields must live on the same grid")
    p = 1 / (1 / p1 + 1 / p2)
    num = lorentz_norm(fv * gv, p, measure=mu)
    den = lorentz_norm(fv, p1, measure=mu) * lorentz_norm(gv, p2, measure=mu)
    return num / den if den > 0 else 0.0


# ------------------------------------------------------------ solution norms

@dataclass(frozen=True)
class NormReport:
    q: float
    weighted_sup: float
    weak_qstar: float
    grad_weak_q: float
    x_norm: float
    kind: str = "weak"

    def to_dict(self):
        return dict(self.__dict__)


def _levelwise_sup(values, mask):
    a = np.abs(values)
    if mask is not None:
        a = np.where(mask, a, 0.0)
    return a.reshape(-1, a.shape[-1]).max(axis=0)


def x_norm(u, grad_u=None, q=None, mask=None, kind="weak"):
    """The solution-space norm

        sup_t t^{(n+1)/q - 1} ||u(., t)||_inf + ||u||_{L^{q*,inf}} + ||grad u||_{L^{q,inf}}

    with q* = (n+1) q / (n+1-q).  ``grad_u`` defaults to finite differences.
    ``kind='lebesgue'`` replaces the weak norms by Lebesgue norms.
    """
    g = u.grid
    if q is None:
        raise ValueError("q is required")
    q = float(q)
    if not 1 < q < g.n + 1:
        raise ValueError(f"q must lie in (1, n+1), got {q}")
    if grad_u is None:
        grad_u = _grid.gradient(u)
    q_star = (g.n + 1) * q / (g.n + 1 - q)
    sups = _levelwise_sup(u.values, mask)
    wsup = float(np.max(g.t ** ((g.n + 1) / q - 1) * sups))
    gm = _grid.gradient_magnitude(grad_u)
    mu = g.cell_volume
    if kind == "weak":
        w1 = lorentz_norm(u.values, q_star, measure=mu, mask=mask)
        w2 = lorentz_norm(gm, q, measure=mu, mask=mask)
    elif kind == "lebesgue":
        w1 = lebesgue_norm(u.values, q_star, measure=mu, mask=mask)
        w2 = lebesgue_norm(gm, q, measure=mu, mask=mask)
    else:
        raise ValueError(f"unknown norm kind {kind!r}")
    return NormReport(q, wsup, w1, w2, wsup + w1 + w2, kind)


def y_norm(F, p, mask=None):
    """sup_t t^{(n+1)/p} ||F(., t)||_inf + ||F||_{L^{p,inf}}."""
    g = F.grid
    p = _check_p(p)
    sups = _levelwise_sup(F.values, mask)
    wsup = float(np.max(g.t ** ((g.n + 1) / p) * sups))
    return wsup + lorentz_norm(F.values, p, measure=g.cell_volume, mask=mask)
