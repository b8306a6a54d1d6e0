"""Picard iteration for u = N(b N_eta(u|_{t=0})) + G(a N_m(u)) + N f."""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import grid as _grid
from .lorentz import x_norm
from .model import derive_exponents, nonlinearity
from .potentials import DEFAULT_CONFIG, green_potential, linear_part, neumann_potential


class PicardError(RuntimeError):
    """Raised when an iterate stops being finite."""


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-6
    max_iter: int = 100
    divergence_factor: float = 1e6
    growth_patience: int = 5

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.divergence_factor > 1:
            raise ValueError("divergence_factor must exceed 1")


@dataclass
class IterationTrace:
    x_norms: list = field(default_factory=list)
    diff_norms: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    secondary_norms: list = field(default_factory=list)
    verdict: str = "max_iter"
    residual: float = float("nan")

    @property
    def iterations(self):
        return len(self.diff_norms)

    def rows(self):
        out = []
        for j in range(self.iterations):
            out.append({
                "iteration": j + 1,
                "x_norm": self.x_norms[j],
                "diff_norm": self.diff_norms[j],
                "ratio": self.ratios[j - 1] if j >= 1 else float("nan"),
                "secondary_norm": self.secondary_norms[j] if self.secondary_norms else float("nan"),
            })
        return out

    def to_csv(self):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["iteration", "x_norm", "diff_norm", "ratio",
                                            "secondary_norm"], lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: repr(float(v)) if k != "iteration" else v for k, v in row.items()})
        return buf.getvalue()

    def summary(self):
        return {"verdict": self.verdict, "iterations": self.iterations,
                "residual": self.residual,
                "final_x_norm": self.x_norms[-1] if self.x_norms else None,
                "max_ratio_from_2": max(self.ratios[1:]) if len(self.ratios) > 1 else None}

    def to_json(self):
        return json.dumps(self.summary(), sort_keys=True)


def _x(u, q):
    return x_norm(u, q=q).x_norm


def _source(c, v, p):
    with np.errstate(over="ignore", invalid="ignore"):
        w = c * nonlinearity(v, p)
    if not np.all(np.isfinite(w)):
        raise PicardError("nonlinearity overflowed")
    return w


def picard_map(u, f, spec, consts, cfg=DEFAULT_CONFIG, linear=None):
    """P u = N[b N_eta(trace u)] + G[a N_m(u)] + N f.

    ``f`` is a BoundaryField on u's grid (or a concentric extension); ``linear``
    may carry a precomputed N f, e.g. including an exterior tail.
    """
    g = u.grid
    out = np.array(neumann_potential(f, g, consts, cfg).values if linear is None
                   else linear.values)
    if spec.b != 0:
        tr = _grid.boundary_trace(u)
        bd = tr.with_values(_source(spec.b, tr.values, spec.eta))
        out += neumann_potential(bd, g, consts, cfg).values
    if spec.a != 0:
        src = u.with_values(_source(spec.a, u.values, spec.m))
        out += green_potential(src, consts, cfg).values
    if not np.all(np.isfinite(out)):
        raise PicardError("non-finite values in Picard map")
    return _grid.HalfSpaceField(g, out)


def residual(u, f, spec, consts, cfg=DEFAULT_CONFIG, linear=None):
    """||u - P u||_X / ||u||_X."""
    q = float(derive_exponents(spec).q)
    Pu = picard_map(u, f, spec, consts, cfg, linear)
    d = _x(u.with_values(u.values - Pu.values), q)
    nu = _x(u, q)
    return d / nu if nu > 0 else d


def picard_solve(f, spec, grid, consts, cfg=DEFAULT_CONFIG, solver=SolverConfig(),
                 linear=None, initial=None, secondary_q=None):
    """Iterate u_{j+1} = P u_j from u_1 = N f (or from ``initial``).

    The loop stops when ||u_{j+1} - u_j||_X <= tol ||u_{j+1}||_X.  It declares
    divergence when ||u_j||_X exceeds divergence_factor * ||u_1||_X, when the
    successive differences grow ``growth_patience`` times in a row, or when an
    iterate is not finite.
    """
    q = float(derive_exponents(spec).q)
    if linear is None:
        linear = neumann_potential(f, grid, consts, cfg)
    u = linear if initial is None else initial
    trace = IterationTrace()
    ref = _x(linear, q)
    growth = 0
    for j in range(solver.max_iter):
        try:
            new = picard_map(u, f, spec, consts, cfg, linear)
        except PicardError:
            trace.verdict = "diverged"
            return u, trace
        w = new.with_values(new.values - u.values)
        nu = _x(new, q)
        dw = _x(w, q)
        trace.x_norms.append(nu)
        trace.diff_norms.append(dw)
        if secondary_q is not None:
            trace.secondary_norms.append(x_norm(new, q=secondary_q).x_norm)
        if j >= 1:
            prev = trace.diff_norms[-2]
            trace.ratios.append(dw / prev if prev > 0 else 0.0)
            growth = growth + 1 if dw > prev else 0
        u = new
        if dw <= solver.tol * nu or nu == 0:
            trace.verdict = "converged"
            break
        if nu > solver.divergence_factor * max(ref, np.finfo(float).tiny) or \
                growth >= solver.growth_patience:
            trace.verdict = "diverged"
            break
    if trace.verdict == "converged":
        trace.residual = residual(u, f, spec, consts, cfg, linear)
    return u, trace


# -------------------------------------------------------------- thresholds

@dataclass(frozen=True)
class ThresholdResult:
    low: float | None
    high: float | None
    evaluations: int

    @property
    def bracket_ratio(self):
        if self.low is None or self.high is None:
            return float("inf")
        return self.high / self.low

    def to_dict(self):
        return {"eps_star_low": self.low, "eps_star_high": self.high,
                "bracket_ratio": self.bracket_ratio, "evaluations": self.evaluations}


def converges(family, amplitude, spec, grid, consts, cfg=DEFAULT_CONFIG, solver=SolverConfig()):
    f = family.with_amplitude(amplitude).sample(grid)
    _, tr = picard_solve(f, spec, grid, consts, cfg, solver)
    return tr.verdict == "converged"


def threshold_search(family, spec, grid, consts, cfg=DEFAULT_CONFIG, solver=SolverConfig(),
                     ratio=1.1, start=1.0, max_amplitude=1e6, min_amplitude=1e-8):
    """Bracket the largest amplitude for which the Picard iteration converges.

    Returns low (converged) and high (not converged) with high / low <= ratio.
    If no failure is found up to ``max_amplitude`` the bracket is open (high None).
    """
    calls = 0

    def ok(A):
        nonlocal calls
        calls += 1
        return converges(family, A, spec, grid, consts, cfg, solver)

    A = float(start)
    if ok(A):
        low = A
        while True:
            A *= 4
            if A > max_amplitude:
                return ThresholdResult(low, None, calls)
            if not ok(A):
                high = A
                break
            low = A
    else:
        high = A
        while True:
            A /= 4
            if A < min_amplitude:
                return ThresholdResult(None, high, calls)
            if ok(A):
                low = A
                break
            high = A
    while high / low > ratio:
        mid = np.sqrt(low * high)
        if ok(mid):
            low = mid
        else:
            high = mid
    return ThresholdResult(low, high, calls)


def higher_integrability_trace(f, p0, spec, grid, consts, cfg=DEFAULT_CONFIG,
                               solver=SolverConfig(), linear=None):
    """Picard trace with the secondary norm X^{(n+1) p0 / n} recorded per iterate."""
    n = grid.n
    p_data = float(derive_exponents(spec).p_data)
    if not p_data <= p0 < n:
        raise ValueError(f"p0 must lie in [{p_data}, {n})")
    return picard_solve(f, spec, grid, consts, cfg, solver, linear=linear,
                        secondary_q=(n + 1) * p0 / n)


def geometric_rate(norms):
    """Fitted per-iteration factor of a geometrically decaying sequence."""
    v = np.asarray([x for x in norms if x > 0], dtype=float)
    if len(v) < 3:
        return float("nan")
    k = np.arange(len(v))
    slope = np.polyfit(k, np.log(v), 1)[0]
    return float(np.exp(slope))


def solve_family(family, spec, grid, consts, cfg=DEFAULT_CONFIG, solver=SolverConfig(),
                 extension=1, tail=False, initial=None):
    """Convenience: linear part from a data family (optionally extended + tail), then solve.

    The boundary nonlinearity and the Green term act on the solution box only.
    """
    data_grid = grid.extended(extension)
    f = family.sample(data_grid)
    lin = linear_part(family, grid, consts, cfg, extension, tail)
    u, tr = picard_solve(f, spec, grid, consts, cfg, solver, linear=lin, initial=initial)
    return u, tr, lin
