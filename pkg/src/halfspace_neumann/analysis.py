"""Checks of qualitative properties, energy inequalities and the nonexistence mechanisms."""

from dataclasses import dataclass, field
from fractions import Fraction
from math import gamma as _gamma, pi

import numpy as np
from scipy import integrate

from . import grid as _grid
from .kernels import sphere_area
from .lorentz import lebesgue_norm, x_norm
from .model import BoundaryDataFamily, derive_exponents, nonlinearity, scale_solution, \
    scaled_valid_mask


@dataclass
class PropertyReport:
    name: str
    value: float
    passed: bool
    baseline: float | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self):
        passed = None if self.passed is None else bool(self.passed)
        return {"name": self.name, "value": self.value, "passed": passed,
                "baseline": self.baseline, "details": self.details}


# ------------------------------------------------------------ qualitative

def check_positivity(u, f=None):
    """min u > 0.  Skipped (passed=None) when the boundary data change sign."""
    v = float(u.values.min())
    if f is not None and np.min(f.values) < 0 < np.max(f.values):
        return PropertyReport("positivity", v, None, details={"skipped": "sign-changing data"})
    return PropertyReport("positivity", v, v > 0)


def _ball_mask(grid, frac):
    return grid.radius() <= frac * (grid.L - grid.hx / 2)


def symmetry_defect(u, R, frac=1.0):
    """max |u(x,t) - u(Rx,t)| over |x| <= frac (L - hx/2), relative to max |u|."""
    rot = _grid.rotate_field(u, R)
    mask = _ball_mask(u.grid, frac)[..., None]
    scale = np.max(np.abs(u.values))
    if scale == 0:
        return 0.0
    return float(np.max(np.where(mask, np.abs(rot.values - u.values), 0.0)) / scale)


def is_lattice_rotation(R):
    R = np.asarray(R, dtype=float)
    return bool(np.all(np.isin(R, (-1.0, 0.0, 1.0))))


def check_rotational_symmetry(u, rotations, baseline=None, factor=1.1, roundoff=1e-12):
    """Worst symmetry defect over ``rotations``.

    Lattice rotations (signed permutations) act exactly on the grid, so their
    defect must vanish up to floating-point round-off.  Other rotations are
    compared with the defect of ``baseline`` (typically N f).
    """
    lattice = [R for R in rotations if is_lattice_rotation(R)]
    general = [R for R in rotations if not is_lattice_rotation(R)]
    d_lat = max((symmetry_defect(u, R) for R in lattice), default=0.0)
    d_gen = max((symmetry_defect(u, R) for R in general), default=0.0)
    base = None
    ok = d_lat <= roundoff
    if general:
        if baseline is None:
            raise ValueError("a baseline field is needed for non-lattice rotations")
        base = max(symmetry_defect(baseline, R) for R in general)
        ok = ok and d_gen <= factor * base
    return PropertyReport("rotational-symmetry", max(d_lat, d_gen), ok, base,
                          {"lattice_defect": d_lat, "general_defect": d_gen,
                           "factor": factor})


def monotonicity_defect(u):
    """Largest increase of the shell means of u(., t) between consecutive shells, over all t.

    Shells have width hx (see grid.radial_profile); relative to max |u|.
    """
    g = u.grid
    scale = np.max(np.abs(u.values))
    if scale == 0:
        return 0.0
    worst = 0.0
    for j in range(g.nt):
        prof = _grid.radial_profile(u, level=j)
        worst = max(worst, float(np.max(np.diff(prof.mean), initial=0.0)))
    return worst / scale


def axis_monotonicity_defect(u):
    """Largest outward increment u(x + h e_a, t) - u(x, t) over x_a > 0, relative to max |u|.

    A pointwise companion of the shell-mean defect: for a radially nonincreasing
    function every such increment is <= 0.
    """
    g = u.grid
    v = u.values
    half = g.nx // 2
    worst = 0.0
    for a in range(g.n):
        lo = [slice(None)] * v.ndim
        hi = [slice(None)] * v.ndim
        lo[a] = slice(half, -1)
        hi[a] = slice(half + 1, None)
        worst = max(worst, float(np.max(v[tuple(hi)] - v[tuple(lo)])))
    scale = np.max(np.abs(v))
    return max(worst, 0.0) / scale if scale > 0 else 0.0


def check_radial_monotonicity(u, baseline=None):
    d = monotonicity_defect(u)
    base = monotonicity_defect(baseline) if baseline is not None else None
    ok = d <= (base if base is not None else 0.0) + 1e-14
    return PropertyReport("radial-monotonicity", d, ok, base,
                          {"axis_defect": axis_monotonicity_defect(u)})


def annulus_mask(grid, r_in, r_out):
    """Cells with r_in <= |X| <= r_out, X = (x, t)."""
    R = np.sqrt(grid.radius()[..., None] ** 2 + grid.t_axis() ** 2)
    return (R >= r_in) & (R <= r_out)


def check_homogeneity(u, spec, lambdas=(0.5, 2.0), r_in=None, r_out=None, tol=0.1):
    """Pointwise relative defect max |u - u_lam| / |u| on an annulus.

    Defaults: the annulus excludes three cells around the origin and the outer
    10% of the box; cells whose dilated image leaves the grid are skipped.
    """
    g = u.grid
    r_in = 3 * max(g.hx, g.ht) if r_in is None else r_in
    r_out = 0.9 * min(g.L, g.T) if r_out is None else r_out
    worst = 0.0
    per = {}
    for lam in lambdas:
        ul = scale_solution(u, lam, spec)
        mask = annulus_mask(g, r_in, r_out) & scaled_valid_mask(g, lam)
        mask &= annulus_mask(g, r_in / lam, r_out / lam)
        if not mask.any():
            raise ValueError(f"no resolved cells for lambda = {lam}")
        rel = np.abs(u.values - ul.values)[mask] / np.abs(u.values)[mask]
        per[str(lam)] = float(rel.max())
        worst = max(worst, per[str(lam)])
    return PropertyReport("homogeneity", worst, worst < tol, None,
                          {"per_lambda": per, "r_in": r_in, "r_out": r_out})


@dataclass
class DecayFit:
    kappa: int
    slope: float
    target: float
    t: list
    sup: list

    @property
    def relative_error(self):
        return abs(self.slope - self.target) / abs(self.target)

    def to_dict(self):
        return {"kappa": self.kappa, "slope": self.slope, "target": self.target,
                "relative_error": self.relative_error}


def fit_decay(u, spec, kappa=0, t_min=None, t_max=None, x_frac=0.9):
    """Log-log slope of sup_{|x| <= x_frac L} |grad^kappa u(., t)| over t-levels in [t_min, t_max]."""
    g = u.grid
    if kappa not in (0, 1):
        raise ValueError("kappa must be 0 or 1")
    t_min = 4 * g.ht if t_min is None else t_min
    t_max = 0.9 * g.T if t_max is None else t_max
    field = np.abs(u.values) if kappa == 0 else _grid.gradient_magnitude(_grid.gradient(u))
    mask = (g.radius() <= x_frac * g.L)[..., None]
    sup = np.where(mask, field, 0.0).reshape(-1, g.nt).max(axis=0)
    sel = (g.t >= t_min) & (g.t <= t_max)
    if sel.sum() < 4:
        raise ValueError("need at least four t-levels in the fitting window")
    slope = np.polyfit(np.log(g.t[sel]), np.log(sup[sel]), 1)[0]
    target = -float(derive_exponents(spec).decay_rate) - kappa
    return DecayFit(kappa, float(slope), target, g.t[sel].tolist(), sup[sel].tolist())


# ------------------------------------------------------------------ energy

@dataclass
class EnergyReport:
    case: str
    lhs: float
    rhs_terms: dict
    ratio: float

    def to_dict(self):
        return {"case": self.case, "lhs": self.lhs, "rhs_terms": self.rhs_terms,
                "ratio": self.ratio}


def energy_check(u, f, spec):
    """lhs / rhs of the energy inequalities (constant C = 1).

    m = 1 + 4/n:      (int t |grad u|^2)^{1/2}  vs ||f||_{2n/(n+2)} + ||u||_X^eta + ||u||_X^m
    m = (n+3)/(n-1):  ||grad u||_2              vs ||f||_{2n/(n+1)} + ||u||_X^eta + ||u||_X^m

    ||.||_X is the Lebesgue-type solution norm with q = (n+1)(m-1)/(m+1).
    """
    n, m = spec.n, spec.m
    weighted = n > 2 and m == 1 + Fraction(4, n)
    dirichlet = m == Fraction(n + 3, n - 1)
    if not (weighted or dirichlet):
        allowed = [str(Fraction(n + 3, n - 1))] + ([str(1 + Fraction(4, n))] if n > 2 else [])
        raise ValueError(f"energy estimates hold for m in {allowed} at n = {n}, got m = {m}")
    g = u.grid
    grad = _grid.gradient(u)
    g2 = np.sum(grad ** 2, axis=0)
    ex = derive_exponents(spec)
    xn = x_norm(u, grad, q=float(ex.q), kind="lebesgue").x_norm
    if weighted:
        lhs = float(np.sqrt(np.sum(g.t_axis() * g2) * g.cell_volume))
        pf = 2 * n / (n + 2)
        case = "weighted"
    else:
        lhs = float(np.sqrt(np.sum(g2) * g.cell_volume))
        pf = 2 * n / (n + 1)
        case = "dirichlet"
    terms = {"data": lebesgue_norm(f, pf), "eta": xn ** float(ex.eta), "m": xn ** float(m)}
    rhs = sum(terms.values())
    return EnergyReport(case, lhs, terms, lhs / rhs if rhs > 0 else 0.0)


# ------------------------------------------------------- distributional form

@dataclass(frozen=True)
class BumpTestFunction:
    """phi(x, t) = (1 - |x - c|^2 / r^2)_+^4 (1 - (t - s)^2 / tau^2)_+^4.

    With the default shift s = 0 the t-profile is even, so d_t phi = 0 at t = 0.
    """

    center: tuple
    r: float
    tau: float
    shift: float = 0.0

    @staticmethod
    def _profile(rho2, r, dim):
        s = np.clip(1 - rho2 / r ** 2, 0.0, None)
        val = s ** 4
        lap = 48 * rho2 * s ** 2 / r ** 4 - 8 * dim * s ** 3 / r ** 2
        return val, lap

    def values(self, grid, t=None):
        x2 = sum((c - x0) ** 2 for c, x0 in zip(grid.x_axes(), self.center))
        gx, lx = self._profile(x2, self.r, grid.n)
        if t is None:
            return gx
        gt, lt = self._profile((t - self.shift) ** 2, self.tau, 1)
        return gx[..., None] * gt, lx[..., None] * gt + gx[..., None] * lt

    def dt_at_boundary(self):
        """max_x |d_t phi(x, 0)|, analytic."""
        s = np.clip(1 - self.shift ** 2 / self.tau ** 2, 0.0, None)
        return abs(8 * self.shift / self.tau ** 2 * s ** 3)

    def fits(self, grid):
        return (all(abs(c) + self.r <= grid.L for c in self.center)
                and self.shift + self.tau <= grid.T)


def distributional_residual(u, f, spec, consts, test_functions):
    """Normalized defect of

        int u Delta phi = s_G a int N_m(u) phi + s_N int (b N_eta(u|_{t=0}) + f) phi(., 0)

    for each test function, with s_N, s_G the measured orientation and Green signs.
    Each defect is divided by the sum of the absolute values of the three terms.
    """
    if consts.orientation_sign is None or consts.green_sign is None:
        raise ValueError("kernel constants must be calibrated")
    g = u.grid
    if f.grid != g:
        raise ValueError("boundary data must live on the solution grid")
    tr = _grid.boundary_trace(u).values
    bdry = spec.b * nonlinearity(tr, spec.eta) + f.values
    bulk = spec.a * nonlinearity(u.values, spec.m)
    out = []
    for phi in test_functions:
        if not phi.fits(g):
            raise ValueError("test function support leaves the box")
        if phi.dt_at_boundary() > 1e-12:
            raise ValueError("test function must satisfy d_t phi = 0 at t = 0")
        val, lap = phi.values(g, g.t_axis())
        i1 = np.sum(u.values * lap) * g.cell_volume
        i2 = consts.green_sign * np.sum(bulk * val) * g.cell_volume
        i3 = consts.orientation_sign * np.sum(bdry * phi.values(g)) * g.boundary_cell
        scale = abs(i1) + abs(i2) + abs(i3)
        out.append(abs(i1 - i2 - i3) / scale if scale > 0 else 0.0)
    return np.array(out)


# ------------------------------------------------------- test-function probe

def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10 - 15 * s + 6 * s ** 2)


def _cutoff(sigma):
    """zeta(sigma) = 1 on [0, 1], 0 on [2, inf), quintic smoothstep in between; with derivatives."""
    s = np.clip(sigma - 1, 0.0, 1.0)
    z = 1 - smoothstep(s)
    inside = (sigma > 1) & (sigma < 2)
    z1 = np.where(inside, -30 * s ** 2 * (1 - s) ** 2, 0.0)
    z2 = np.where(inside, -60 * s * (1 - s) * (1 - 2 * s), 0.0)
    return z, z1, z2


def _powered(sigma, p):
    """a = zeta^p and its sigma-derivatives."""
    z, z1, z2 = _cutoff(sigma)
    a = z ** p
    with np.errstate(divide="ignore", invalid="ignore"):
        a1 = np.where(z > 0, p * z ** (p - 1) * z1, 0.0)
        a2 = np.where(z > 0, p * (p - 1) * z ** np.maximum(p - 2, 0) * z1 ** 2
                      + p * z ** (p - 1) * z2, 0.0)
    return a, a1, a2


def probe_cutoff(rho, t, m, n):
    """zeta_1(x, t) = A(|x|^2) B(t^2) with A = B = zeta^{2m/(m-1)}, and its Laplacian."""
    p = 2 * float(m) / (float(m) - 1)
    s, t2 = rho ** 2, t ** 2
    A, A1, A2 = _powered(s, p)
    B, B1, B2 = _powered(t2, p)
    lapA = 4 * s * A2 + 2 * n * A1
    lapB = 4 * t2 * B2 + 2 * B1
    return A * B, B * lapA + A * lapB


def probe_rhs_unit(m, n, panels=48, order=8):
    """int_{R^{n+1}_+} zeta_1^{-1/(m-1)} |Delta zeta_1|^{m'} dX."""
    m = float(m)
    mp = m / (m - 1)
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.concatenate([np.linspace(0, 1, panels + 1), np.linspace(1, np.sqrt(2), panels + 1)[1:]])
    a, b = edges[:-1], edges[1:]
    nodes = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * x).ravel()
    weights = (0.5 * (b - a)[:, None] * w).ravel()
    rho, t = np.meshgrid(nodes, nodes, indexing="ij")
    Z, L = probe_cutoff(rho, t, m, n)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(Z > 0, Z ** (-1 / (m - 1)) * np.abs(L) ** mp, 0.0)
    radial = sphere_area(n) * rho ** (n - 1)
    return float(np.einsum("i,j,ij->", weights, weights, integrand * radial))


def probe_lhs(f, R, m, n=None):
    """int f(x) zeta_R^1(x) dx for a radial family (quadrature) or a BoundaryField (grid sum)."""
    p = 2 * float(m) / (float(m) - 1)
    if isinstance(f, BoundaryDataFamily):
        if n is None:
            raise ValueError("the boundary dimension n is required for data families")
        return _radial_lhs(f, R, p, n)
    g = f.grid
    if np.sqrt(2 * R) > g.L:
        raise ValueError(f"probe radius sqrt(2R) = {np.sqrt(2 * R):.3g} exceeds the box L = {g.L}")
    A, _, _ = _powered(g.radius() ** 2 / R, p)
    return float(np.sum(f.values * A) * g.boundary_cell)


def _radial_lhs(family, R, p, n):
    if not family.is_radial:
        raise ValueError("family must be radial about the origin")
    sr = np.sqrt(R)
    prof = family.profile
    # zeta = 1 on |x| < sqrt(R); beyond |x| = 1 integrate in log-radius
    inner = integrate.quad(lambda r: prof(r) * r ** (n - 1), 0, min(1.0, sr), limit=200)[0]
    if sr > 1:
        inner += integrate.quad(lambda v: prof(np.exp(v)) * np.exp(n * v), 0.0, np.log(sr),
                                limit=400)[0]
    outer = integrate.quad(lambda r: prof(r) * _powered(r ** 2 / R, p)[0] * r ** (n - 1),
                           sr, np.sqrt(2) * sr, limit=200)[0]
    return sphere_area(n) * (inner + outer)


@dataclass
class ProbeReport:
    kind: str
    R: list
    lhs: list
    rhs: list
    fitted_exponent: float
    target_exponent: float | None
    extra: dict = field(default_factory=dict)

    @property
    def signal(self):
        """True when the fitted growth exponent is positive."""
        return self.fitted_exponent > 0

    @property
    def relative_error(self):
        if self.target_exponent in (None, 0):
            return None
        return abs(self.fitted_exponent - self.target_exponent) / abs(self.target_exponent)

    def to_dict(self):
        return {"kind": self.kind, "R": self.R, "lhs": self.lhs, "rhs": self.rhs,
                "fitted_exponent": self.fitted_exponent,
                "target_exponent": self.target_exponent, "signal": self.signal,
                "relative_error": self.relative_error, **self.extra}


def _fit(R, y):
    return float(np.polyfit(np.log(R), np.log(y), 1)[0])


def testfunction_probe(f, spec, R_values):
    """Growth of int f zeta_R^1 against int zeta_R^{-1/(m-1)} |Delta zeta_R|^{m'}.

    The right side scales exactly as R^{-m' + (n+1)/2} by dilation.  A positive
    fitted exponent of lhs/rhs signals that no solution can exist for these data.
    For power-decay data with rate k the predicted exponent is
    (n-k)/2 + m' - (n+1)/2 when k < n.
    """
    n, m = spec.n, spec.m
    mp = float(m / (m - 1))
    R = np.asarray(R_values, dtype=float)
    if np.any(R <= 0) or len(R) < 2:
        raise ValueError("need at least two positive R values")
    rhs1 = probe_rhs_unit(m, n)
    rhs = rhs1 * R ** (-mp + (n + 1) / 2)
    if isinstance(f, BoundaryDataFamily):
        lhs = np.array([probe_lhs(f, r, m, n) for r in R])
    else:
        lhs = np.array([probe_lhs(f, r, m) for r in R])
    if np.any(lhs <= 0):
        raise ValueError("probe lhs must be positive (use positive data)")
    target = None
    if isinstance(f, BoundaryDataFamily) and f.kind == "power-decay" and f.k < n:
        target = (n - f.k) / 2 + mp - (n + 1) / 2
    return ProbeReport("test-function", R.tolist(), lhs.tolist(), rhs.tolist(),
                       _fit(R, lhs / rhs), target,
                       {"rhs_unit": rhs1, "rhs_exponent": -mp + (n + 1) / 2,
                        "threshold_k": float((m + 1) / (m - 1))})


# ----------------------------------------------------------- half-ball probe

def half_ball_volume(n, R):
    """|B_R^+| in R^{n+1}."""
    d = n + 1
    return pi ** (d / 2) / _gamma(d / 2 + 1) * R ** d / 2


def half_ball_integral(u, R):
    """int over B_R^+ of u, with a linear ramp of cell inclusion across |X| = R."""
    g = u.grid
    if R > min(g.L, g.T):
        raise ValueError("half-ball leaves the box")
    X = np.sqrt(g.radius()[..., None] ** 2 + g.t_axis() ** 2)
    h = g.cell_volume ** (1 / (g.n + 1))
    frac = np.clip((R - X) / h + 0.5, 0.0, 1.0)
    return float(np.sum(u.values * frac) * g.cell_volume)


def critical_lower_bound(n, m, R):
    """R^{n + 2/(m-1) - (n+1)} int_{B_R^+} (|X| + R)^{-(n-1)} dX, which is ~ R^n at m = m_c."""
    m = float(m)
    c = integrate.quad(lambda s: (1 + s) ** (1 - n) * s ** n, 0, 1)[0] * sphere_area(n + 1) / 2
    R = np.asarray(R, dtype=float)
    return R ** (n + 2 / (m - 1) - (n + 1)) * c * R ** 2


def halfball_probe(u, spec, R_values):
    """Q(R) = |B_R^+|^{2/((n+1)(m-1)) - 1} int_{B_R^+} u and its fitted growth exponent.

    For a positive solution decaying like |X|^{1-n}, Q grows like R^{-(n-1) + 2/(m-1)};
    growth means the weak-L^{q*} norm of u cannot be finite.
    """
    n, m = spec.n, float(spec.m)
    R = np.asarray(R_values, dtype=float)
    e = 2 / ((n + 1) * (m - 1)) - 1
    Q = np.array([half_ball_volume(n, r) ** e * half_ball_integral(u, r) for r in R])
    target = -(n - 1) + 2 / (m - 1)
    return ProbeReport("half-ball", R.tolist(), Q.tolist(), (R ** target).tolist(),
                       _fit(R, Q), target,
                       {"critical_curve": critical_lower_bound(n, m, R).tolist()})
