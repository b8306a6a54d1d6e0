import csv
import io

import numpy as np
import pytest

from halfspace_neumann import grid as G
from halfspace_neumann.grid import GridSpec, HalfSpaceField
from halfspace_neumann.model import BoundaryDataFamily, ProblemSpec
from halfspace_neumann.potentials import neumann_potential
from halfspace_neumann.solver import (IterationTrace, PicardError, SolverConfig, geometric_rate,
                                      higher_integrability_trace, picard_map, picard_solve,
                                      residual, solve_family, threshold_search)

SPEC = ProblemSpec(3, 3)
GRID = GridSpec(3, 4.0, 8, 2.0, 4)


def _data(amp):
    return BoundaryDataFamily("gaussian", amp, width=1.0).sample(GRID)


def test_solver_config_errors():
    with pytest.raises(ValueError):
        SolverConfig(tol=0)
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)
    with pytest.raises(ValueError):
        SolverConfig(divergence_factor=1.0)


def test_zero_data_gives_zero(consts3):
    u, tr = picard_solve(G.zeros_boundary(GRID), SPEC, GRID, consts3)
    assert tr.verdict == "converged" and tr.iterations == 1
    assert np.all(u.values == 0)


def test_linear_problem_one_step(consts3):
    spec = ProblemSpec(3, 3, a=0.0, b=0.0)
    f = _data(1.0)
    u, tr = picard_solve(f, spec, GRID, consts3)
    assert tr.verdict == "converged" and tr.iterations == 1
    np.testing.assert_array_equal(u.values, neumann_potential(f, GRID, consts3).values)
    assert tr.residual == 0.0


def test_small_data_contracts(consts3):
    f = _data(0.25)
    u, tr = picard_solve(f, SPEC, GRID, consts3)
    assert tr.verdict == "converged"
    assert max(tr.ratios[1:]) < 0.5
    assert tr.residual < 1e-5
    assert residual(u, f, SPEC, consts3) == pytest.approx(tr.residual)
    # a fixed point of P: one more application barely moves it
    Pu = picard_map(u, f, SPEC, consts3)
    assert np.max(np.abs(Pu.values - u.values)) <= 1e-5 * np.max(np.abs(u.values))


def test_trace_csv_and_json(consts3):
    _, tr = picard_solve(_data(0.25), SPEC, GRID, consts3)
    rows = list(csv.DictReader(io.StringIO(tr.to_csv())))
    assert len(rows) == tr.iterations
    assert [int(r["iteration"]) for r in rows] == list(range(1, tr.iterations + 1))
    assert rows[0]["ratio"] == "nan"
    assert float(rows[-1]["diff_norm"]) == tr.diff_norms[-1]
    assert '"verdict": "converged"' in tr.to_json()
    assert IterationTrace().summary()["final_x_norm"] is None


def test_large_data_diverges(consts3):
    _, tr = picard_solve(_data(25.0), SPEC, GRID, consts3, solver=SolverConfig(max_iter=200))
    assert tr.verdict == "diverged"


def test_nonfinite_iterate_raises_and_is_reported(consts3):
    f = _data(0.25)
    huge = HalfSpaceField(GRID, np.full(GRID.shape, 1e200))
    with pytest.raises(PicardError):
        picard_map(huge, f, SPEC, consts3)
    _, tr = picard_solve(f, SPEC, GRID, consts3, initial=huge)
    assert tr.verdict == "diverged"


def test_threshold_open_for_linear_problem(consts3):
    spec = ProblemSpec(3, 3, a=0.0, b=0.0)
    fam = BoundaryDataFamily("gaussian", 1.0, width=1.0)
    res = threshold_search(fam, spec, GRID, consts3, max_amplitude=1e3)
    assert res.high is None and res.low is not None
    assert res.bracket_ratio == float("inf")


def test_threshold_bracket(consts3):
    fam = BoundaryDataFamily("gaussian", 1.0, width=1.0)
    res = threshold_search(fam, SPEC, GRID, consts3, ratio=1.1, start=0.25)
    assert res.low < res.high <= 1.1 * res.low
    assert res.to_dict()["bracket_ratio"] == pytest.approx(res.high / res.low)


def test_geometric_rate():
    assert geometric_rate([1.0, 0.5, 0.25, 0.125]) == pytest.approx(0.5, rel=1e-12)
    assert np.isnan(geometric_rate([1.0, 0.5]))


def test_higher_integrability_trace(consts3):
    f = _data(0.25)
    _, tr = higher_integrability_trace(f, 2.0, SPEC, GRID, consts3)
    assert len(tr.secondary_norms) == tr.iterations
    assert all(np.isfinite(tr.secondary_norms))
    with pytest.raises(ValueError):
        higher_integrability_trace(f, 1.0, SPEC, GRID, consts3)
    with pytest.raises(ValueError):
        higher_integrability_trace(f, 3.0, SPEC, GRID, consts3)


def test_solve_family_matches_direct(consts3):
    fam = BoundaryDataFamily("gaussian", 0.25, width=1.0)
    u1, tr1, lin = solve_family(fam, SPEC, GRID, consts3)
    u2, tr2 = picard_solve(fam.sample(GRID), SPEC, GRID, consts3)
    np.testing.assert_allclose(u1.values, u2.values, rtol=1e-12)
    assert tr1.iterations == tr2.iterations
