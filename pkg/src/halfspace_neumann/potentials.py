"""Discrete Neumann and Green potentials on the truncated half-space.

Both potentials are discrete convolutions with cell-integrated kernel weights:

    (N f)(x_i, t)  = sum_j W_t(x_i - y_j) f_j,        W_t(z) ~ int_cell K(z + y, t) dy
    (G F)(X_i)     = sum_j V(X_i - Y_j) F~_j,         V(Z)   ~ int_cell Gamma(Z + Y) dY

where F~ is the even extension of F across t = 0 (the image term of G).  Far
from the singularity the weights are midpoint values.  Near it they are
composite Gauss averages, and the singular Riesz cell uses the exact
self-similar integral.  The FFT path and the direct-sum oracle use the same
weights, so they differ only by round-off.
"""

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from . import grid as _grid
from ._quad import box_integrals, corner_box_power_integral, graded_cell_integral
from .kernels import KernelConstants, neumann_kernel, neumann_kernel_gradient, riesz_kernel


@dataclass(frozen=True)
class OperatorConfig:
    path: str = "fft"
    padding: int = 2
    near_radius: int = 3          # Neumann weights with |lag|_inf <= near_radius get cell averages
    green_near_radius: int = 2
    quad_order: int = 4
    singular_cell: str = "exact"  # or "zero"

    def __post_init__(self):
        if self.path not in ("fft", "direct"):
            raise ValueError(f"unknown operator path {self.path!r}")
        if int(self.padding) != self.padding or self.padding < 2:
            raise ValueError("padding must be an integer >= 2 (smaller pads wrap around)")
        if self.singular_cell not in ("exact", "zero"):
            raise ValueError(f"unknown singular-cell rule {self.singular_cell!r}")
        if self.near_radius < 0 or self.green_near_radius < 0:
            raise ValueError("near-field radii must be nonnegative")


DEFAULT_CONFIG = OperatorConfig()


# ------------------------------------------------------------ lag bookkeeping

def _lag_axis(n_in, n_out, offset, padding):
    """FFT length and the lag represented by each FFT index along one axis.

    Output index i and input index j interact through lag i + offset - j.
    """
    need = n_in + n_out - 1
    P = max(padding * n_out, sfft.next_fast_len(need))
    k = np.arange(offset - (n_in - 1), offset + n_out)
    lags = np.zeros(P, dtype=int)
    valid = np.zeros(P, dtype=bool)
    lags[k % P] = k
    valid[k % P] = True
    return P, lags, valid


def _check_data_grid(data_grid, grid):
    if data_grid.n != grid.n or not np.isclose(data_grid.hx, grid.hx):
        raise ValueError("data grid must share dimension and spacing with the solution grid")
    off = (data_grid.L - grid.L) / grid.hx
    if off < -1e-9 or abs(off - round(off)) > 1e-9:
        raise ValueError("data grid must be a concentric extension of the solution grid")
    return int(round(off))


def _mesh(arrays):
    return np.meshgrid(*arrays, indexing="ij", sparse=True)


# ------------------------------------------------------------ Neumann weights

def _neumann_eval(component, consts):
    n = consts.n
    if component is None:
        return lambda y, t: neumann_kernel(y, t, consts)
    if not 0 <= component <= n:
        raise ValueError(f"gradient component must lie in 0..{n}")
    return lambda y, t: neumann_kernel_gradient(y, t, consts)[..., component]


def neumann_weights(data_grid, grid, consts, t, component=None, cfg=DEFAULT_CONFIG):
    """Lag weights at level t laid out for an FFT of the padded data grid."""
    n, h = grid.n, grid.hx
    o = _check_data_grid(data_grid, grid)
    P, lags, valid = _lag_axis(data_grid.nx, grid.nx, o, cfg.padding)
    kern = _neumann_eval(component, consts)
    ys = _mesh([lags * h] * n)
    y = np.stack(np.broadcast_arrays(*ys), axis=-1)
    W = h ** n * kern(y, t)
    mask = np.ones((P,) * n, dtype=bool)
    for a, v in enumerate(_mesh([valid] * n)):
        mask = mask & v
    W = np.where(mask, W, 0.0)
    r = cfg.near_radius
    if r > 0:
        # the kernel peaks at the origin with width t: the central cell is refined
        # geometrically down to that width, its neighbours get a finer fixed rule
        near = np.arange(-r, r + 1)
        cells = np.array([c for c in itertools.product(near, repeat=n) if any(c)], dtype=float)
        ring = np.max(np.abs(cells), axis=1)
        for sel, subdiv in ((ring == 1, 4), (ring > 1, 2)):
            vals = box_integrals(lambda p: kern(p, t), cells[sel] * h, h / 2,
                                 order=cfg.quad_order, subdiv=subdiv)
            W[tuple((cells[sel].astype(int) % P).T)] = vals
        W[(0,) * n] = graded_cell_integral(lambda p: kern(p, t), h / 2, n, t)
    return W


@lru_cache(maxsize=6)
def _neumann_spectra(data_grid, grid, consts, cfg, component, levels):
    n = grid.n
    o = _check_data_grid(data_grid, grid)
    P, _, _ = _lag_axis(data_grid.nx, grid.nx, o, cfg.padding)
    spec = [sfft.rfftn(neumann_weights(data_grid, grid, consts, grid.t[j], component, cfg))
            for j in levels]
    out_idx = (np.arange(grid.nx) + o) % P
    return P, np.stack(spec), out_idx


def _levels(grid, levels):
    if levels is None:
        return tuple(range(grid.nt))
    levels = tuple(int(j) for j in np.atleast_1d(levels))
    if any(not 0 <= j < grid.nt for j in levels):
        raise ValueError("level index out of range")
    return levels


def neumann_potential(f, grid=None, consts=None, cfg=DEFAULT_CONFIG, levels=None,
                      component=None):
    """N f (or one component of grad N f) on ``grid``.

    ``f`` may live on a concentric extension of ``grid`` with the same spacing.
    Returns a HalfSpaceField when all levels are requested, otherwise an array
    of shape (nx,)*n + (len(levels),).
    """
    grid = f.grid if grid is None else grid
    consts = KernelConstants.derived(grid.n) if consts is None else consts
    lv = _levels(grid, levels)
    if cfg.path == "direct":
        vals = _neumann_direct(f, grid, consts, cfg, lv, component)
    else:
        P, spec, out_idx = _neumann_spectra(f.grid, grid, consts, cfg, component, lv)
        F = sfft.rfftn(f.values, s=(P,) * grid.n)
        vals = np.empty(grid.boundary_shape + (len(lv),))
        ix = np.ix_(*([out_idx] * grid.n))
        for k in range(len(lv)):
            vals[..., k] = sfft.irfftn(F * spec[k], s=(P,) * grid.n)[ix]
    if levels is None:
        return _grid.HalfSpaceField(grid, vals)
    return vals


def _neumann_direct(f, grid, consts, cfg, levels, component, targets=None):
    n = grid.n
    o = _check_data_grid(f.grid, grid)
    P, _, _ = _lag_axis(f.grid.nx, grid.nx, o, cfg.padding)
    jj = np.arange(f.grid.nx)
    if targets is None:
        targets = list(itertools.product(range(grid.nx), repeat=n))
    out = np.empty((len(targets), len(levels)))
    for k, j in enumerate(levels):
        W = neumann_weights(f.grid, grid, consts, grid.t[j], component, cfg)
        for s, i in enumerate(targets):
            idx = np.ix_(*[(ia + o - jj) % P for ia in i])
            out[s, k] = np.sum(W[idx] * f.values)
    if len(targets) == grid.nx ** n:
        return out.reshape(grid.boundary_shape + (len(levels),))
    return out


def neumann_direct(f, grid, consts, targets, levels=None, component=None, cfg=DEFAULT_CONFIG):
    """Direct-sum oracle for N f at the listed target indices (tuples of x-indices)."""
    return _neumann_direct(f, grid, consts, cfg, _levels(grid, levels), component,
                           [tuple(t) for t in targets])


def neumann_potential_gradient(f, grid=None, consts=None, cfg=DEFAULT_CONFIG):
    """grad N f from the differentiated kernel, shape (n+1,) + grid.shape."""
    grid = f.grid if grid is None else grid
    return np.stack([neumann_potential(f, grid, consts, cfg, levels=range(grid.nt), component=c)
                     for c in range(grid.n + 1)])


# -------------------------------------------------------------- Green weights

def singular_cell_integral(grid):
    """int over the cell [-hx/2, hx/2]^n x [-ht/2, ht/2] of |Z|^{1-n}."""
    widths = [grid.hx / 2] * grid.n + [grid.ht / 2]
    return 2 ** (grid.n + 1) * corner_box_power_integral(widths, grid.n - 1)


def green_weights(grid, consts, cfg=DEFAULT_CONFIG):
    n = grid.n
    Px, lx, vx = _lag_axis(grid.nx, grid.nx, 0, cfg.padding)
    Pt, lt, vt = _lag_axis(2 * grid.nt, grid.nt, grid.nt, cfg.padding)
    coords = _mesh([lx * grid.hx] * n + [lt * grid.ht])
    r2 = sum(c ** 2 for c in coords)
    with np.errstate(divide="ignore"):
        W = grid.cell_volume * consts.gamma * r2 ** ((1 - n) / 2)
    mask = np.ones(W.shape, dtype=bool)
    for v in _mesh([vx] * n + [vt]):
        mask = mask & v
    W = np.where(mask, W, 0.0)
    hw = np.array([grid.hx / 2] * n + [grid.ht / 2])
    r = cfg.green_near_radius
    if r > 0:
        near = np.arange(-r, r + 1)
        cells = np.array([c for c in itertools.product(near, repeat=n + 1) if any(c)], dtype=float)
        vals = box_integrals(lambda p: riesz_kernel(p, consts), cells * 2 * hw, hw,
                             order=cfg.quad_order, subdiv=2)
        idx = tuple((cells.astype(int) % np.array([Px] * n + [Pt])).T)
        W[idx] = vals
    W[(0,) * (n + 1)] = (consts.gamma * singular_cell_integral(grid)
                         if cfg.singular_cell == "exact" else 0.0)
    return W


@lru_cache(maxsize=4)
def _green_spectrum(grid, consts, cfg):
    Px, _, _ = _lag_axis(grid.nx, grid.nx, 0, cfg.padding)
    Pt, _, _ = _lag_axis(2 * grid.nt, grid.nt, grid.nt, cfg.padding)
    return (Px, Pt), sfft.rfftn(green_weights(grid, consts, cfg))


def green_potential(F, consts=None, cfg=DEFAULT_CONFIG):
    """G F on the grid of F, via the even extension of F across t = 0."""
    grid = F.grid
    consts = KernelConstants.derived(grid.n) if consts is None else consts
    if cfg.path == "direct":
        return _grid.HalfSpaceField(grid, _green_direct(F, consts, cfg))
    (Px, Pt), spec = _green_spectrum(grid, consts, cfg)
    full, _ = _grid.even_extension(F)
    shape = (Px,) * grid.n + (Pt,)
    out = sfft.irfftn(sfft.rfftn(full, s=shape) * spec, s=shape)
    ix = np.ix_(*([np.arange(grid.nx)] * grid.n + [(np.arange(grid.nt) + grid.nt) % Pt]))
    return _grid.HalfSpaceField(grid, out[ix])


def _green_direct(F, consts, cfg, targets=None):
    grid = F.grid
    n = grid.n
    W = green_weights(grid, consts, cfg)
    Px = W.shape[0]
    Pt = W.shape[-1]
    full, _ = _grid.even_extension(F)
    jx = np.arange(grid.nx)
    jt = np.arange(2 * grid.nt)
    if targets is None:
        targets = list(itertools.product(range(grid.nx), repeat=n))
        targets = [i + (k,) for i in targets for k in range(grid.nt)]
        full_out = True
    else:
        full_out = False
    out = np.empty(len(targets))
    for s, i in enumerate(targets):
        idx = np.ix_(*[(ia - jx) % Px for ia in i[:n]], (i[n] + grid.nt - jt) % Pt)
        out[s] = np.sum(W[idx] * full)
    return out.reshape(grid.shape) if full_out else out


def green_direct(F, consts, targets, cfg=DEFAULT_CONFIG):
    """Direct-sum oracle for G F at the listed target indices (tuples of n+1 indices)."""
    return _green_direct(F, consts, cfg, [tuple(t) for t in targets])


def green_potential_gradient(GF):
    """Finite-difference gradient of a Green potential, shape (n+1,) + grid.shape.

    d_t uses the even ghost level below t = 0, so d_t GF(x, t_1) = (GF_2 - GF_1) / (2 ht).
    """
    g = GF.grid
    out = _grid.gradient(GF)
    v = GF.values
    out[g.n][..., 0] = (v[..., 1] - v[..., 0]) / (2 * g.ht)
    return out


def green_gradient_direct(F, consts, targets):
    """Oracle for grad G F at target indices by midpoint sums of the analytic kernel gradient.

    The source cell containing the target contributes nothing by oddness of grad Gamma.
    """
    grid = F.grid
    n = grid.n
    full, tfull = _grid.even_extension(F)
    axes = [grid.x] * n + [tfull]
    Y = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n + 1)
    vals = full.ravel()
    out = np.empty((len(targets), n + 1))
    for s, i in enumerate(targets):
        X = np.array([grid.x[a] for a in i[:n]] + [grid.t[i[n]]])
        Z = X - Y
        r = np.linalg.norm(Z, axis=-1)
        keep = r > 1e-12 * grid.hx
        g = np.zeros_like(Z)
        g[keep] = -(n - 1) * consts.gamma * (r[keep] ** (-n - 1))[:, None] * Z[keep]
        out[s] = grid.cell_volume * (vals[:, None] * g).sum(axis=0)
    return out


# ------------------------------------------------------------- exterior tail

def _shell_moment(func, L, n, order=10):
    """int over [-2L, 2L]^n minus [-L, L]^n of func(y) dy."""
    offsets = np.array([c for c in itertools.product(range(4), repeat=n)
                        if not all(k in (1, 2) for k in c)], dtype=float)
    centers = (offsets - 1.5) * L
    return box_integrals(func, centers, L / 2, order=order, subdiv=2).sum()


def exterior_moments(family, L, n, max_shells=80, rtol=1e-13):
    """(M0, M2) = int_{|y|_inf > L} |y|^{1-n} f,  int |y|^{-1-n} f for radial data."""
    if not family.is_radial:
        raise ValueError("exterior tail needs data radial about the origin")
    supp = family.support_radius
    if supp is not None and supp <= L:
        return 0.0, 0.0
    out = []
    for p in (n - 1, n + 1):
        if family.kind == "pure-homogeneous":
            s = family.decay + p
            if s <= n:
                raise ValueError("data decay too slowly for a finite exterior tail")
            D = _shell_moment(lambda y: family(y) * np.linalg.norm(y, axis=-1) ** (-p), L, n)
            out.append(D / (1 - 2.0 ** (n - s)))
            continue
        total = 0.0
        for k in range(max_shells):
            Lk = L * 2 ** k
            D = _shell_moment(lambda y: family(y) * np.linalg.norm(y, axis=-1) ** (-p), Lk, n)
            total += D
            if abs(D) <= rtol * abs(total) and k > 2:
                break
        out.append(total)
    return tuple(out)


def exterior_tail(family, data_grid, grid, consts):
    """Contribution to N f of the data outside the data box, for radial data.

    Second-order multipole expansion of K(x - y, t) in |X| / |y|:

        beta [M0 + (2a(a+1)/n - a) |x|^2 M2 - a t^2 M2],   a = (n-1)/2,

    a harmonic quadratic; the error is O((|X| / L_data)^4) relative to the tail.
    """
    n = grid.n
    M0, M2 = exterior_moments(family, data_grid.L, n)
    a = (n - 1) / 2
    r2 = grid.radius()[..., None] ** 2
    t2 = grid.t_axis() ** 2
    vals = consts.beta * (M0 + (2 * a * (a + 1) / n - a) * r2 * M2 - a * t2 * M2)
    return _grid.HalfSpaceField(grid, np.broadcast_to(vals, grid.shape))


def linear_part(family, grid, consts, cfg=DEFAULT_CONFIG, extension=1, tail=False):
    """N f for a data family, optionally with data sampled on an extended box and the
    exterior tail added."""
    data_grid = grid.extended(extension)
    f = family.sample(data_grid)
    u1 = neumann_potential(f, grid, consts, cfg)
    if tail:
        u1 = u1.with_values(u1.values + exterior_tail(family, data_grid, grid, consts).values)
    return u1


# ------------------------------------------------------------------- checks

def calibrate(consts, cfg=DEFAULT_CONFIG):
    """Measure the orientation of d_t N and the sign of Delta G on a small grid.

    orientation_sign s satisfies s d_t N f -> f as t -> 0; green_sign s_G satisfies
    Delta G F = s_G F.
    """
    n = consts.n
    g = _grid.GridSpec(n, 4.0, 16, 4.0, 8)
    x2 = g.radius() ** 2
    f = _grid.BoundaryField(g, np.exp(-x2))
    dt = neumann_potential(f, g, consts, cfg, levels=[0], component=n)[..., 0]
    orientation = int(np.sign(np.sum(dt * f.values)))
    F = _grid.HalfSpaceField(g, np.exp(-x2[..., None] - (g.t_axis() - 2.0) ** 2))
    lap = _grid.laplacian(green_potential(F, consts, cfg))
    inner = F.values[(slice(1, -1),) * (n + 1)]
    green = int(np.sign(np.sum(lap * inner)))
    return consts.with_signs(orientation, green)


@lru_cache(maxsize=None)
def calibrated_constants(n, normalization="derived"):
    if normalization not in ("derived", "alternate"):
        raise ValueError(f"unknown normalization {normalization!r}")
    base = KernelConstants.derived(n) if normalization == "derived" else KernelConstants.alternate(n)
    return calibrate(base)


def delta_recovery_error(f, consts, cfg=DEFAULT_CONFIG, level=0):
    """sup_x |s d_t N f(x, t_level) - f(x)| with s the measured orientation."""
    if consts.orientation_sign is None:
        consts = calibrate(consts, cfg)
    dt = neumann_potential(f, f.grid, consts, cfg, levels=[level], component=f.grid.n)[..., 0]
    return float(np.max(np.abs(consts.orientation_sign * dt - f.values)))


def harmonicity_residual(f, consts, cfg=DEFAULT_CONFIG, frac_x=0.5, t_range=(0.25, 0.75)):
    """max |Delta_h N f| over a fixed interior sub-box."""
    lap = _grid.laplacian(neumann_potential(f, f.grid, consts, cfg))
    return float(np.max(np.abs(lap[_grid.interior_mask(f.grid, frac_x, t_range)])))


def green_identity_residual(F, consts, cfg=DEFAULT_CONFIG, frac_x=0.5, t_range=(0.25, 0.75)):
    """max |Delta_h G F - s_G F| over a fixed interior sub-box."""
    if consts.green_sign is None:
        consts = calibrate(consts, cfg)
    lap = _grid.laplacian(green_potential(F, consts, cfg))
    inner = F.values[(slice(1, -1),) * (F.grid.n + 1)]
    res = lap - consts.green_sign * inner
    return float(np.max(np.abs(res[_grid.interior_mask(F.grid, frac_x, t_range)])))


@dataclass(frozen=True)
class BoundRow:
    estimate: str
    p: float
    q: float
    ratio: float

    def to_dict(self):
        return dict(self.__dict__)


def verify_linear_bounds(corpus, consts, p=None, cfg=DEFAULT_CONFIG, r1=None, r2=None):
    """Empirical constants of the linear estimates for N over a corpus of BoundaryFields.

    slice   sup_t t^{n/p - 1}  ||N f(., t)||_inf       / ||f||_{L^{p,inf}}
    slice'  sup_t t^{n/p}      ||grad N f(., t)||_inf  / ||f||_{L^{p,inf}}
    bulk    ||N g||_{L^{r1,inf}}      / ||g||_{L^{l1,inf}},  l1 = n r1 / (n + 1 + r1)
    grad    ||grad N g||_{L^{r2,inf}} / ||g||_{L^{l2,inf}},  l2 = n r2 / (n + 1)

    Returns the worst ratio of each estimate over the corpus.
    """
    from .lorentz import lorentz_norm

    if not corpus:
        raise ValueError("empty corpus")
    n = corpus[0].grid.n
    p = float(p) if p is not None else 1.5
    if not 1 < p < n:
        raise ValueError(f"slice estimates need 1 < p < n, got {p}")
    r1 = float(r1) if r1 is not None else n * p / (n - p) * (n + 1) / n
    l1 = n * r1 / (n + 1 + r1)
    r2 = float(r2) if r2 is not None else (n + 1) * p / n
    l2 = n * r2 / (n + 1)
    for ell in (l1, l2):
        if not ell > 1:
            raise ValueError("data exponent must exceed 1")
    worst = {"slice": 0.0, "slice-gradient": 0.0, "bulk": 0.0, "gradient": 0.0}
    for f in corpus:
        g = f.grid
        mu = g.boundary_cell
        u = neumann_potential(f, g, consts, cfg)
        grad = neumann_potential_gradient(f, g, consts, cfg)
        gm = _grid.gradient_magnitude(grad)
        t = g.t
        fp = lorentz_norm(f.values, p, measure=mu)
        sl = np.max(t ** (n / p - 1) * np.abs(u.values).reshape(-1, g.nt).max(axis=0)) / fp
        sg = np.max(t ** (n / p) * gm.reshape(-1, g.nt).max(axis=0)) / fp
        bk = lorentz_norm(u.values, r1, measure=g.cell_volume) / lorentz_norm(f.values, l1,
                                                                             measure=mu)
        gr = lorentz_norm(gm, r2, measure=g.cell_volume) / lorentz_norm(f.values, l2, measure=mu)
        for key, v in zip(worst, (sl, sg, bk, gr)):
            worst[key] = max(worst[key], float(v))
    return [BoundRow("slice", p, np.inf, worst["slice"]),
            BoundRow("slice-gradient", p, np.inf, worst["slice-gradient"]),
            BoundRow("bulk", l1, r1, worst["bulk"]),
            BoundRow("gradient", l2, r2, worst["gradient"])]
