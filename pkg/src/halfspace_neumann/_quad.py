"""Tensor Gauss-Legendre rules on boxes, used for near-field cell averages."""

import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gauss_box_rule(dim, order, subdiv=1):
    """Composite tensor Gauss rule on [-1, 1]^dim.

    Returns nodes of shape (G, dim) and weights of shape (G,) summing to 2**dim.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-1.0, 1.0, subdiv + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    xs = (mids[:, None] + x[None, :] / subdiv).ravel()
    ws = np.tile(w / subdiv, subdiv)
    grids = np.meshgrid(*([xs] * dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.ones(1)
    for _ in range(dim):
        weights = np.multiply.outer(weights, ws).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def box_integrals(func, centers, half_widths, order=4, subdiv=1, max_points=2_000_000):
    """Integrate ``func`` over the boxes ``centers[i] +- half_widths``.

    ``func`` maps an array of points (..., d) to values (...). Evaluation is
    chunked so that at most ``max_points`` points are live at once.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    hw = np.broadcast_to(np.asarray(half_widths, dtype=float), (centers.shape[1],))
    nodes, weights = gauss_box_rule(centers.shape[1], order, subdiv)
    jac = float(np.prod(hw))
    out = np.empty(len(centers))
    step = max(1, max_points // len(nodes))
    for s in range(0, len(centers), step):
        pts = centers[s:s + step, None, :] + nodes[None, :, :] * hw
        out[s:s + step] = func(pts) @ weights
    return out * jac


def corner_box_power_integral(widths, s, order=8, subdiv=2):
    """Integral of |y|^{-s} over the box prod_i [0, widths_i] (requires s < dim).

    The box minus its half-size copy is a shell free of the singularity; by
    homogeneity I(B/2) = 2^{s-d} I(B), so I(B) = shell / (1 - 2^{s-d}).
    """
    c = np.asarray(widths, dtype=float)
    d = len(c)
    if not s < d:
        raise ValueError(f"|y|^-{s} is not integrable near 0 in dimension {d}")
    offsets = np.array([o for o in itertools.product((0, 1), repeat=d) if any(o)], dtype=float)
    centers = (offsets + 0.5) * c / 2
    shell = box_integrals(lambda p: np.linalg.norm(p, axis=-1) ** (-s),
                          centers, c / 4, order=order, subdiv=subdiv).sum()
    return shell / (1.0 - 2.0 ** (s - d))


def graded_cell_integral(func, half_width, dim, scale, order=6, subdiv=1):
    """Integral of ``func`` over [-c, c]^dim for an integrand peaked at the origin.

    Each orthant [0, c]^dim is split into its half-size corner box plus a shell
    of 2^dim - 1 boxes; the corner box is split again until its width drops
    below ``scale`` (the peak width), then integrated directly.
    """
    c0 = float(half_width)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=dim)))
    offsets = np.array([o for o in itertools.product((0, 1), repeat=dim) if any(o)], dtype=float)
    centers, widths = [], []
    c = c0
    while c > scale and c > c0 * 2.0 ** -40:
        centers.append((offsets + 0.5) * c / 2)
        widths.append(np.full(len(offsets), c / 4))
        c /= 2
    centers.append(np.full((1, dim), c / 2))
    widths.append(np.array([c / 2]))
    centers = np.concatenate(centers)
    widths = np.concatenate(widths)
    total = 0.0
    for w in np.unique(widths):
        sel = widths == w
        for s in signs:
            total += box_integrals(lambda p: func(p * s), centers[sel], w, order=order,
                                   subdiv=subdiv).sum()
    return total
