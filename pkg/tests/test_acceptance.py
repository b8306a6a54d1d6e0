"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they are
also collected in the "acceptance criteria" section of the terminal summary.
"""

import itertools
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from halfspace_neumann.analysis import (BumpTestFunction, check_homogeneity, check_positivity,
                                        check_radial_monotonicity, check_rotational_symmetry,
                                        distributional_residual, energy_check, fit_decay,
                                        halfball_probe)
from halfspace_neumann.analysis import testfunction_probe as tf_probe
from halfspace_neumann.grid import BoundaryField, GridSpec, HalfSpaceField
from halfspace_neumann.lorentz import (decreasing_rearrangement, holder_check, lorentz_norm,
                                       x_norm)
from halfspace_neumann.model import (BoundaryDataFamily, ProblemSpec, family_scaled,
                                     scale_solution, scaled_valid_mask)
from halfspace_neumann.potentials import (OperatorConfig, calibrated_constants,
                                          delta_recovery_error, green_identity_residual,
                                          green_potential, harmonicity_residual, neumann_potential)
from halfspace_neumann.solver import SolverConfig, picard_solve, solve_family, threshold_search

ROOT = Path(__file__).resolve().parents[1]
CANON = ProblemSpec(3, 3, 1.0, 1.0)
CANON_GRID = GridSpec(3, 4.0, 32, 2.0, 8)
CANON_DATA = BoundaryDataFamily("gaussian", 0.25, width=1.0)
DIRECT = OperatorConfig(path="direct")


def _halving(ratio):
    return 1.7 <= ratio <= 2.3


@pytest.fixture(scope="module")
def canonical(consts3):
    f = CANON_DATA.sample(CANON_GRID)
    lin = neumann_potential(f, CANON_GRID, consts3)
    u, tr = picard_solve(f, CANON, CANON_GRID, consts3, linear=lin)
    return f, lin, u, tr


@pytest.fixture(scope="module")
def homogeneous(consts3):
    g = GridSpec(3, 4.0, 32, 4.0, 16)
    fam = BoundaryDataFamily.homogeneous(CANON, 0.05)
    u, tr, lin = solve_family(fam, CANON, g, consts3, extension=2, tail=True)
    return u, tr, lin


# ------------------------------------------------------------------------ 1

def test_c01_operator_identities(consts3, acceptance):
    g = GridSpec(3, 4.0, 8, 2.0, 4)
    x = g.x_axes()
    r2 = g.radius() ** 2
    corpus = [np.exp(-r2), np.exp(-r2 / 4), (1 + 0.3 * x[0]) * np.exp(-r2),
              np.exp(-((x[0] - 1) ** 2 + x[1] ** 2 + x[2] ** 2)), 1 / (1 + r2) ** 2]
    worst_n = worst_g = 0.0
    for v in corpus:
        f = BoundaryField(g, v)
        a = neumann_potential(f, g, consts3).values
        b = neumann_potential(f, g, consts3, DIRECT).values
        worst_n = max(worst_n, np.max(np.abs(a - b)) / np.max(np.abs(b)))
        F = HalfSpaceField(g, v[..., None] * np.exp(-(g.t_axis() - 1) ** 2))
        a = green_potential(F, consts3).values
        b = green_potential(F, consts3, DIRECT).values
        worst_g = max(worst_g, np.max(np.abs(a - b)) / np.max(np.abs(b)))
    harm, green = [], []
    for nx in (16, 32):
        g = GridSpec(3, 4.0, nx, 4.0, nx // 2)
        harm.append(harmonicity_residual(BoundaryField(g, np.exp(-g.radius() ** 2)), consts3))
        F = HalfSpaceField(g, np.exp(-g.radius()[..., None] ** 2 - (g.t_axis() - 2) ** 2))
        green.append(green_identity_residual(F, consts3))
    rh, rg = harm[0] / harm[1], green[0] / green[1]
    ok = acceptance(1, "operator identities", {
        "fft_vs_direct_N": (worst_n, worst_n <= 1e-8),
        "fft_vs_direct_G": (worst_g, worst_g <= 1e-8),
        "harmonicity_factor": (rh, _halving(rh)),
        "green_identity_factor": (rg, _halving(rg))})
    assert ok


# ------------------------------------------------------------------------ 2

def test_c02_delta_recovery(acceptance):
    derived = calibrated_constants(3)
    alternate = calibrated_constants(3, "alternate")
    e_d, e_p = [], []
    for nx in (24, 48):
        g = GridSpec(3, 3.0, nx, 0.375, nx // 2)
        f = BoundaryDataFamily("gaussian", 1.0, width=1.0).sample(g)
        e_d.append(delta_recovery_error(f, derived))
        e_p.append(delta_recovery_error(f, alternate))
    r = e_d[0] / e_d[1]
    gap = e_p[1] / e_d[1]
    ok = acceptance(2, "delta recovery", {
        "derived_error_fine": (e_d[1], True),
        "derived_halving_factor": (r, _halving(r)),
        "alternate_over_derived": (gap, gap >= 100)})
    assert ok


# ------------------------------------------------------------------------ 3

def test_c03_scaling_covariance(consts2, acceptance):
    spec = ProblemSpec(2, 5)
    g = GridSpec(2, 8.0, 128, 8.0, 64)
    fam = BoundaryDataFamily("gaussian", 1.0, width=1.0)
    u = neumann_potential(fam.sample(g), g, consts2)
    checks = {}
    for lam in (0.5, 2.0):
        ul = scale_solution(u, lam, spec)
        v = neumann_potential(family_scaled(fam, lam, spec).sample(g), g, consts2)
        mask = scaled_valid_mask(g, lam)
        d = np.max(np.abs(v.values - ul.values)[mask]) / np.max(np.abs(u.values))
        checks[f"defect_lambda_{lam}"] = (d, d <= 0.02)
    assert acceptance(3, "scaling covariance", checks)


# ------------------------------------------------------------------------ 4

def test_c04_contraction_uniqueness(consts3, canonical, acceptance):
    f, lin, u, tr = canonical
    q = 2.0
    rng = np.random.default_rng(4)
    pert = 0.1 * np.max(lin.values) * rng.uniform(-1, 1, size=lin.values.shape)
    starts = {"zero": HalfSpaceField(CANON_GRID, np.zeros(CANON_GRID.shape)),
              "scaled": HalfSpaceField(CANON_GRID, 1.5 * lin.values + pert)}
    ref = x_norm(u, q=q).x_norm
    agree = 0.0
    for init in starts.values():
        v, tv = picard_solve(f, CANON, CANON_GRID, consts3, linear=lin, initial=init)
        assert tv.verdict == "converged"
        agree = max(agree, x_norm(v.with_values(v.values - u.values), q=q).x_norm / ref)
    ok = acceptance(4, "contraction and uniqueness", {
        "verdict": (tr.verdict, tr.verdict == "converged"),
        "max_ratio": (max(tr.ratios), max(tr.ratios) <= 0.5),
        "residual": (tr.residual, tr.residual <= 2e-6),
        "initialization_agreement": (agree, agree <= 1e-5)})
    assert ok


# ------------------------------------------------------------------------ 5

def test_c05_threshold(consts3, acceptance):
    g = GridSpec(3, 4.0, 16, 2.0, 8)
    fam = BoundaryDataFamily("gaussian", 1.0, width=1.0)
    sv = SolverConfig(max_iter=60)
    res = threshold_search(fam, CANON, g, consts3, solver=sv, ratio=1.1, start=0.25)
    finite = res.low is not None and res.high is not None
    verdicts = {}
    if finite:
        for label, A in (("0.1_low", 0.1 * res.low), ("10_high", 10 * res.high)):
            _, tr = picard_solve(fam.with_amplitude(A).sample(g), CANON, g, consts3, solver=sv)
            verdicts[label] = tr.verdict
    ok = acceptance(5, "threshold existence", {
        "bracket": (f"[{res.low}, {res.high}]", finite),
        "bracket_ratio": (res.bracket_ratio, res.bracket_ratio <= 1.1),
        "small_amplitude": (verdicts.get("0.1_low"), verdicts.get("0.1_low") == "converged"),
        "large_amplitude": (verdicts.get("10_high"), verdicts.get("10_high") == "diverged")})
    assert ok


# ------------------------------------------------------------------------ 6

def test_c06_qualitative(canonical, homogeneous, acceptance):
    f, lin, u, _ = canonical
    rots = [Rotation.from_euler("z", 30, degrees=True).as_matrix(),
            Rotation.from_rotvec(0.7 * np.array([1.0, 2.0, 3.0]) / np.sqrt(14)).as_matrix(),
            np.array([[0, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=float),
            np.diag([-1.0, 1.0, 1.0]),
            np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=float)]
    pos = check_positivity(u, f)
    sym = check_rotational_symmetry(u, rots, baseline=lin)
    mono = check_radial_monotonicity(u, lin)
    hom = check_homogeneity(homogeneous[0], CANON)
    ok = acceptance(6, "qualitative properties", {
        "min_u": (pos.value, bool(pos.passed)),
        "lattice_defect": (sym.details["lattice_defect"], sym.details["lattice_defect"] <= 1e-12),
        "general_defect": (sym.details["general_defect"],
                           sym.details["general_defect"] <= 1.1 * sym.baseline),
        "baseline_defect": (sym.baseline, True),
        "monotonicity_defect": (mono.value, bool(mono.passed)),
        "homogeneity_defect": (hom.value, hom.value < 0.1)})
    assert ok


# ------------------------------------------------------------------------ 7

def test_c07_decay(homogeneous, acceptance):
    u, tr, _ = homogeneous
    assert tr.verdict == "converged"
    fits = [fit_decay(u, CANON, k) for k in (0, 1)]
    ok = acceptance(7, "decay exponents", {
        f"slope_kappa{d.kappa}": (d.slope, d.relative_error <= 0.15) for d in fits})
    assert ok


# ------------------------------------------------------------------------ 8

def test_c08_lorentz(acceptance):
    # indicator of a set of measure a on a 64-sample grid of cell measure 0.25
    v = np.zeros(64)
    v[:10] = 1.0
    ind = max(abs(lorentz_norm(v, p, measure=0.25) - 2.5 ** (1 / p)) for p in (1.2, 1.5, 3.0))
    rng = np.random.default_rng(8)
    w = rng.normal(size=500)
    r = decreasing_rearrangement(w, measure=0.3)
    mass = abs(np.sum(r.values * np.diff(r.breakpoints)) - 0.3 * np.sum(np.abs(w)))
    same = np.array_equal(np.sort(r.values)[::-1], np.sort(np.abs(w))[::-1])
    fams = ([BoundaryDataFamily("gaussian", 1.0, width=s) for s in (0.5, 1.0, 2.0)]
            + [BoundaryDataFamily("power-decay", 1.0, k=k) for k in (1.0, 2.0)]
            + [BoundaryDataFamily("indicator-ball", 1.0, radius=s) for s in (1.0, 2.5)]
            + [BoundaryDataFamily("gaussian", 1.0, width=1.0, center=(1.0, -0.5, 0.0))])
    consts = []
    for nx in (16, 32, 64):
        g = GridSpec(3, 4.0, nx, 1.0, 3)
        fs = [fam.sample(g, "cell") for fam in fams]
        consts.append(max(holder_check(a, b, 3.0, 3.0) for a, b in itertools.product(fs, fs)))
    change = max(abs(consts[i + 1] / consts[i] - 1) for i in range(2))
    ok = acceptance(8, "Lorentz engine", {
        "indicator_error": (ind, ind <= 1e-12),
        "equimeasurability_mass_error": (mass, mass <= 1e-12 * np.sum(np.abs(w))),
        "equimeasurability_values": (same, same),
        "oneil_constants": (", ".join(f"{c:.4f}" for c in consts), True),
        "oneil_change": (change, change < 0.2)})
    assert ok


# ------------------------------------------------------------------------ 9

def test_c09_probes(consts3, acceptance):
    R = np.logspace(6, 10, 9)
    checks = {}
    for k in (0.5, 1.0):
        rep = tf_probe(BoundaryDataFamily("power-decay", 1.0, k=k), CANON, R)
        checks[f"tf_exponent_k{k}"] = (rep.fitted_exponent,
                                       rep.relative_error <= 0.1 and rep.fitted_exponent > 0)
    rep3 = tf_probe(BoundaryDataFamily("power-decay", 1.0, k=3.0), CANON, R)
    checks["tf_exponent_k3"] = (rep3.fitted_exponent, rep3.fitted_exponent <= 0)
    g = GridSpec(3, 8.0, 32, 8.0, 16)
    u = neumann_potential(BoundaryDataFamily("gaussian", 1.0, width=0.5).sample(g), g, consts3)
    Rh = np.linspace(3.0, 7.5, 10)
    signs = []
    for m in (1.5, 3.0):
        rep = halfball_probe(u, ProblemSpec(3, m), Rh)
        checks[f"halfball_exponent_m{m}"] = (rep.fitted_exponent, rep.relative_error <= 0.1)
        signs.append(np.sign(rep.fitted_exponent))
    checks["sign_change_across_m_c"] = (f"{signs[0]:+.0f} / {signs[1]:+.0f}",
                                        signs[0] > 0 > signs[1])
    assert acceptance(9, "nonexistence probes", checks)


# ----------------------------------------------------------------------- 10

def test_c10_energy(consts3, acceptance):
    checks = {}
    for m in (Fraction(3), Fraction(7, 3)):
        spec = ProblemSpec(3, m, 1.0, 1.0)
        ratios = []
        for nx in (16, 32):
            g = GridSpec(3, 4.0, nx, 2.0, nx // 2)
            f = CANON_DATA.sample(g)
            u, tr = picard_solve(f, spec, g, consts3)
            assert tr.verdict == "converged"
            ratios.append(energy_check(u, f, spec).ratio)
        drift = abs(ratios[1] / ratios[0] - 1)
        checks[f"ratio_m{m}"] = (ratios[1], bool(np.isfinite(ratios).all()))
        checks[f"drift_m{m}"] = (drift, drift <= 0.25)
    assert acceptance(10, "energy estimates", checks)


# ----------------------------------------------------------------------- 11

def test_c11_distributional_residual(consts3, acceptance):
    tfs = [BumpTestFunction((0.0, 0.0, 0.0), 2.0, 1.5),
           BumpTestFunction((0.5, 0.0, 0.0), 1.5, 1.0),
           BumpTestFunction((-0.5, 0.5, 0.0), 2.5, 1.8)]
    checks = {}
    for label, ab in (("linear", 0.0), ("nonlinear", 1.0)):
        spec = ProblemSpec(3, 3, ab, ab)
        res = []
        for nx in (16, 32):
            g = GridSpec(3, 4.0, nx, 2.0, nx // 2)
            f = CANON_DATA.sample(g)
            u, tr = picard_solve(f, spec, g, consts3)
            res.append(distributional_residual(u, f, spec, consts3, tfs))
        factors = res[0] / res[1]
        checks[f"{label}_factors"] = (", ".join(f"{x:.3f}" for x in factors),
                                      all(_halving(x) for x in factors))
    assert acceptance(11, "distributional residual", checks)


# ----------------------------------------------------------------------- 12

def test_c12_determinism(tmp_path, acceptance):
    blobs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        subprocess.run([sys.executable, "-m", "halfspace_neumann", "run",
                        str(ROOT / "configs" / "canonical.yaml"), "--output-dir", str(out)],
                       check=True, cwd=tmp_path)
        blobs.append((out / "summary.json").read_bytes())
    same = blobs[0] == blobs[1]
    assert acceptance(12, "determinism", {"identical_summary_bytes": (same, same),
                                          "summary_bytes": (len(blobs[0]), True)})
