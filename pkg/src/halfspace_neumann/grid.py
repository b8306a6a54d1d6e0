"""Cell-centred grids on the truncated half-space and the fields living on them.

The truncation box is [-L, L]^n x (0, T].  Boundary fields carry one value per
x-cell, half-space fields one value per (x, t) cell.  Array axes are
(x_1, ..., x_n) for boundary fields and (x_1, ..., x_n, t) for half-space fields.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

# quadratic extrapolation to t = 0 from the levels t_1, t_2, t_3 = h/2, 3h/2, 5h/2
TRACE_WEIGHTS = (15 / 8, -5 / 4, 3 / 8)


@dataclass(frozen=True)
class GridSpec:
    n: int
    L: float
    nx: int
    T: float
    nt: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if self.L <= 0 or self.T <= 0:
            raise ValueError("box extents L and T must be positive")
        if self.nx < 2 or self.nx % 2:
            raise ValueError(f"nx must be even and >= 2, got {self.nx}")
        if self.nt < 3:
            raise ValueError(f"nt must be >= 3 for the boundary trace, got {self.nt}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "nt", int(self.nt))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "T", float(self.T))

    @property
    def hx(self):
        return 2 * self.L / self.nx

    @property
    def ht(self):
        return self.T / self.nt

    @property
    def x(self):
        return -self.L + (np.arange(self.nx) + 0.5) * self.hx

    @property
    def t(self):
        return (np.arange(self.nt) + 0.5) * self.ht

    @property
    def boundary_shape(self):
        return (self.nx,) * self.n

    @property
    def shape(self):
        return (self.nx,) * self.n + (self.nt,)

    @property
    def boundary_cell(self):
        return self.hx ** self.n

    @property
    def cell_volume(self):
        return self.hx ** self.n * self.ht

    def x_axes(self):
        """Broadcastable coordinate arrays for the n boundary axes."""
        out = []
        for a in range(self.n):
            shape = [1] * self.n
            shape[a] = self.nx
            out.append(self.x.reshape(shape))
        return out

    def radius(self):
        """|x| on the boundary grid."""
        return np.sqrt(sum(c ** 2 for c in self.x_axes()))

    def boundary_points(self):
        """Boundary cell centres as an array of shape (nx,)*n + (n,)."""
        return np.stack(np.meshgrid(*([self.x] * self.n), indexing="ij"), axis=-1)

    def t_axis(self):
        return self.t.reshape((1,) * self.n + (self.nt,))

    def refined(self, factor=2):
        return GridSpec(self.n, self.L, self.nx * factor, self.T, self.nt * factor)

    def extended(self, factor):
        """Concentric grid with the same spacing and a box `factor` times wider."""
        factor = int(factor)
        if factor < 1:
            raise ValueError("extension factor must be >= 1")
        return GridSpec(self.n, self.L * factor, self.nx * factor, self.T, self.nt)

    def to_dict(self):
        return {"n": self.n, "L": self.L, "nx": self.nx, "T": self.T, "nt": self.nt}


def _frozen_copy(values, shape, what):
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{what} values have shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} values must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BoundaryField:
    grid: GridSpec
    values: np.ndarray
    clipped: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values",
                           _frozen_copy(self.values, self.grid.boundary_shape, "boundary field"))

    @property
    def cell_measure(self):
        return self.grid.boundary_cell

    def with_values(self, values, clipped=None):
        return BoundaryField(self.grid, values, self.clipped if clipped is None else clipped)


@dataclass(frozen=True, eq=False)
class HalfSpaceField:
    grid: GridSpec
    values: np.ndarray
    clipped: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values",
                           _frozen_copy(self.values, self.grid.shape, "half-space field"))

    @property
    def cell_measure(self):
        return self.grid.cell_volume

    def with_values(self, values, clipped=None):
        return HalfSpaceField(self.grid, values, self.clipped if clipped is None else clipped)

    def level(self, j):
        return BoundaryField(self.grid, self.values[..., j])


def zeros_boundary(grid):
    return BoundaryField(grid, np.zeros(grid.boundary_shape))


def zeros_halfspace(grid):
    return HalfSpaceField(grid, np.zeros(grid.shape))


# ---------------------------------------------------------------- reflection

def even_extension(field):
    """Even reflection across t = 0.

    Returns the values on 2*nt levels ordered by increasing t and the matching
    t-coordinates (-t_nt, ..., -t_1, t_1, ..., t_nt).
    """
    v = field.values
    full = np.concatenate([v[..., ::-1], v], axis=-1)
    t = field.grid.t
    return full, np.concatenate([-t[::-1], t])


def boundary_trace(u):
    """Trace at t = 0 by quadratic extrapolation from the first three levels."""
    v = u.values
    w0, w1, w2 = TRACE_WEIGHTS
    return BoundaryField(u.grid, w0 * v[..., 0] + w1 * v[..., 1] + w2 * v[..., 2])


# ------------------------------------------------------------- interpolation

def _fractional_index(coord, lo, h, count):
    return np.clip((coord - lo) / h - 0.5, 0.0, count - 1.0)


def interpolate(field, points):
    """Multilinear interpolation of a field at physical points.

    ``points`` has shape (..., n) for a boundary field and (..., n+1) for a
    half-space field.  Points inside the box but outside the hull of cell
    centres use the nearest centre value; points outside the box give 0.
    Returns ``(values, clipped)``, ``clipped`` being True when any point fell
    outside the box.
    """
    g = field.grid
    pts = np.asarray(points, dtype=float)
    half = isinstance(field, HalfSpaceField)
    dim = g.n + 1 if half else g.n
    if pts.shape[-1] != dim:
        raise ValueError(f"points must have trailing dimension {dim}")
    flat = pts.reshape(-1, dim)
    inside = np.all(np.abs(flat[:, :g.n]) <= g.L * (1 + 1e-12), axis=1)
    if half:
        inside &= (flat[:, g.n] > 0) & (flat[:, g.n] <= g.T * (1 + 1e-12))
    coords = [_fractional_index(flat[:, a], -g.L, g.hx, g.nx) for a in range(g.n)]
    if half:
        coords.append(_fractional_index(flat[:, g.n], 0.0, g.ht, g.nt))
    vals = ndimage.map_coordinates(field.values, np.array(coords), order=1, mode="nearest")
    vals = np.where(inside, vals, 0.0)
    return vals.reshape(pts.shape[:-1]), bool(not inside.all())


def _signed_permutation(R):
    if not np.all(np.isin(R, (-1.0, 0.0, 1.0))):
        return None
    if not (np.all(np.abs(R).sum(axis=0) == 1) and np.all(np.abs(R).sum(axis=1) == 1)):
        return None
    perm = np.argmax(np.abs(R), axis=1)
    signs = R[np.arange(len(R)), perm]
    return perm, signs


def _rotate_array(values, R, grid, extra_axes):
    n = grid.n
    sp = _signed_permutation(R)
    if sp is not None:
        # (Rx)_a = s_a x_{perm[a]}; on the symmetric grid this permutes samples
        perm, signs = sp
        out = values
        flip = tuple(a for a in range(n) if signs[a] < 0)
        # out[i] = f[j] with j_a = i_{perm[a]} (flipped when s_a < 0)
        inv = np.argsort(perm)
        out = np.transpose(out, tuple(inv) + tuple(range(n, n + extra_axes)))
        if flip:
            # flip the output axes b = perm[a] for negative s_a
            out = np.flip(out, axis=tuple(perm[a] for a in flip))
        return np.ascontiguousarray(out), False
    pts = grid.boundary_points() @ R.T
    inside = np.all(np.abs(pts) <= grid.L * (1 + 1e-12), axis=-1)
    coords = [_fractional_index(pts[..., a], -grid.L, grid.hx, grid.nx) for a in range(n)]
    if extra_axes == 0:
        out = ndimage.map_coordinates(values, np.array(coords), order=1, mode="nearest")
        return np.where(inside, out, 0.0), bool(not inside.all())
    out = np.empty_like(values)
    for j in range(values.shape[-1]):
        out[..., j] = ndimage.map_coordinates(values[..., j], np.array(coords), order=1,
                                              mode="nearest")
    return np.where(inside[..., None], out, 0.0), bool(not inside.all())


def rotate_field(field, R):
    """Return x -> field(R x) (rotating only the boundary variables).

    Signed permutation matrices act by exact sample permutation; any other
    orthogonal matrix goes through multilinear interpolation.
    """
    R = np.asarray(R, dtype=float)
    g = field.grid
    if R.shape != (g.n, g.n):
        raise ValueError(f"rotation must be {g.n}x{g.n}")
    if np.max(np.abs(R @ R.T - np.eye(g.n))) > 1e-12:
        raise ValueError("matrix is not orthogonal")
    if np.array_equal(R, np.eye(g.n)):
        return field.with_values(field.values)
    extra = 1 if isinstance(field, HalfSpaceField) else 0
    values, clipped = _rotate_array(field.values, R, g, extra)
    return field.with_values(values, clipped=field.clipped or clipped)


# ------------------------------------------------------------------ profiles

@dataclass(frozen=True, eq=False)
class RadialProfile:
    radius: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray
    mean: np.ndarray
    count: np.ndarray


def radial_profile(field, level=None):
    """Shell statistics over |x| in shells of width hx.

    For half-space fields ``level`` selects the t-level.
    """
    g = field.grid
    v = field.values if level is None else field.values[..., level]
    if v.shape != g.boundary_shape:
        raise ValueError("select a t-level for half-space fields")
    k = np.floor(g.radius() / g.hx).astype(int).ravel()
    vals = v.ravel()
    nshell = k.max() + 1
    count = np.bincount(k, minlength=nshell)
    keep = count > 0
    mean = np.bincount(k, weights=vals, minlength=nshell)[keep] / count[keep]
    mn = np.full(nshell, np.inf)
    mx = np.full(nshell, -np.inf)
    np.minimum.at(mn, k, vals)
    np.maximum.at(mx, k, vals)
    radius = (np.arange(nshell) + 0.5) * g.hx
    return RadialProfile(radius[keep], mn[keep], mx[keep], mean, count[keep])


# --------------------------------------------------------- finite differences

def gradient(u):
    """Second-order finite-difference gradient of a half-space field.

    Returns an array of shape (n+1,) + grid.shape, the last component being d/dt.
    """
    g = u.grid
    spacings = [g.hx] * g.n + [g.ht]
    return np.stack(np.gradient(u.values, *spacings, edge_order=2), axis=0)


def gradient_magnitude(grad):
    return np.sqrt(np.sum(np.asarray(grad) ** 2, axis=0))


def laplacian(u):
    """Standard (2(n+1)+1)-point Laplacian at strictly interior cells.

    Returns an array of shape (nx-2,)*n + (nt-2,).
    """
    v = u.values
    g = u.grid
    inner = (slice(1, -1),) * (g.n + 1)
    out = np.zeros(tuple(s - 2 for s in v.shape))
    for a in range(g.n + 1):
        h = g.hx if a < g.n else g.ht
        lo = list(inner)
        hi = list(inner)
        lo[a] = slice(0, -2)
        hi[a] = slice(2, None)
        out += (v[tuple(lo)] - 2 * v[inner] + v[tuple(hi)]) / h ** 2
    return out


def interior_mask(grid, frac_x=0.5, t_range=(0.25, 0.75)):
    """Mask of strictly interior cells inside a fixed physical sub-box.

    The mask has the shape returned by ``laplacian``.
    """
    x = grid.x[1:-1]
    t = grid.t[1:-1]
    mx = np.abs(x) <= frac_x * grid.L
    mt = (t >= t_range[0] * grid.T) & (t <= t_range[1] * grid.T)
    mask = np.ones((len(x),) * grid.n + (len(t),), dtype=bool)
    for a in range(grid.n):
        shape = [1] * (grid.n + 1)
        shape[a] = len(x)
        mask &= mx.reshape(shape)
    return mask & mt.reshape((1,) * grid.n + (len(t),))


# ------------------------------------------------------------- serialization

def _to_flat(values):
    # flat index runs over x_1 fastest, then x_2, ..., then t
    return np.ascontiguousarray(np.transpose(values)).ravel()


def _from_flat(flat, shape):
    return np.transpose(np.asarray(flat, dtype=float).reshape(tuple(reversed(shape))))


def save_field(field, path, fmt="binary"):
    """Write a JSON header ``<path>.json`` plus ``<path>.bin`` (float64 LE) or ``<path>.csv``."""
    path = Path(path)
    kind = "halfspace" if isinstance(field, HalfSpaceField) else "boundary"
    header = {"kind": kind, "grid": field.grid.to_dict(), "shape": list(field.values.shape),
              "ordering": "row-major, x_1 fastest, then x_2..x_n, then t",
              "dtype": "float64-le", "format": fmt, "clipped": bool(field.clipped)}
    flat = _to_flat(field.values)
    if fmt == "binary":
        data_path = path.with_suffix(".bin")
        data_path.write_bytes(flat.astype("<f8").tobytes())
    elif fmt == "csv":
        data_path = path.with_suffix(".csv")
        data_path.write_text("\n".join(repr(float(v)) for v in flat) + "\n")
    else:
        raise ValueError(f"unknown field format {fmt!r}")
    header["data"] = data_path.name
    path.with_suffix(".json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return path.with_suffix(".json")


def load_field(path):
    path = Path(path).with_suffix(".json")
    header = json.loads(path.read_text())
    grid = GridSpec(**header["grid"])
    data_path = path.parent / header["data"]
    if header["format"] == "binary":
        flat = np.frombuffer(data_path.read_bytes(), dtype="<f8")
    else:
        flat = np.array([float(s) for s in data_path.read_text().split()])
    values = _from_flat(flat, header["shape"])
    cls = HalfSpaceField if header["kind"] == "halfspace" else BoundaryField
    return cls(grid, values, clipped=header.get("clipped", False))
