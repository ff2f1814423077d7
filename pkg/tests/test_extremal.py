"""Best-constant routes, the normalized extremal, and the inequality probe."""

import numpy as np
import pytest

from anisolap import (ConvergenceError, Field, FinslerNorm, GateError,
                      ProblemSpec, WeightSpec, build_extremal, build_mesh,
                      compute_extremal_report, mu_direct, mu_from_formula,
                      rayleigh_quotient, solve_mixed, verify_inequality)
from anisolap.extremal import constraint_integral, random_trial_field

MESH = build_mesh("square", 16)


def extremal_spec(**kw):
    defaults = dict(mesh=MESH, norm=FinslerNorm.euclidean(), p=2.0,
                    weight=WeightSpec.constant(), delta=0.5, gamma=0.5,
                    f=1.0, g=0.0, outer_tol=1e-3,
                    n_schedule=tuple(2 ** k for k in range(13)))
    defaults.update(kw)
    return ProblemSpec(**defaults)


@pytest.fixture(scope="module")
def solved():
    spec = extremal_spec()
    return spec, solve_mixed(spec)


def test_quotient_homogeneity(solved):
    spec, _ = solved
    rng = np.random.default_rng(0)
    fld = random_trial_field(spec, rng)
    r0 = rayleigh_quotient(fld, spec)
    for t in (1e-3, 0.7, -2.0, 1e3):
        rt = rayleigh_quotient(fld.copy_with(t * fld.values), spec)
        assert rt == pytest.approx(r0, rel=1e-12)


def test_quotient_rejects_zero_field(solved):
    spec, _ = solved
    with pytest.raises(ValueError):
        rayleigh_quotient(Field.zeros(spec.mesh), spec)


def test_quotient_requires_g_zero():
    spec = extremal_spec(g=1.0)
    with pytest.raises(GateError):
        rayleigh_quotient(Field.zeros(spec.mesh), spec)


def test_mu_from_formula_requires_convergence(solved):
    spec, report = solved
    stalled = type(report)(report.kind, report.records, False, report.final,
                           spec)
    with pytest.raises(ConvergenceError):
        mu_from_formula(stalled)


def test_two_routes_agree(solved):
    spec, report = solved
    mu_f = mu_from_formula(report)
    extremal, _, _ = build_extremal(report)
    mu_d, fld = mu_direct(spec, restarts=2, seed=0, warm_start=extremal)
    assert mu_f > 0 and mu_d > 0
    assert abs(mu_f - mu_d) / mu_d <= 0.02
    # the returned minimizer sits on the constraint set
    assert abs(constraint_integral(spec, fld.values) - 1.0) <= 1e-10


def test_extremal_normalization(solved):
    spec, report = solved
    extremal, zeta, diag = build_extremal(report)
    assert zeta > 0
    assert diag["normalization_residual"] <= 1e-10
    # R at the normalized extremal is its energy, which equals mu through
    # the Euler-Lagrange identity; discretely that identity carries a
    # small residual, so saturation holds at the 2% level, not exactly
    r = rayleigh_quotient(extremal, spec)
    assert r == pytest.approx(diag["mu_formula"], rel=2e-2)


def test_descent_from_extremal_cannot_increase(solved):
    spec, report = solved
    extremal, _, _ = build_extremal(report)
    r0 = rayleigh_quotient(extremal, spec)
    mu_d, _ = mu_direct(spec, restarts=1, seed=0, warm_start=extremal)
    assert mu_d <= r0 + 1e-12


def test_quotient_scaling_under_f_doubling(solved):
    spec, _ = solved
    spec2 = extremal_spec(f=2.0)
    rng = np.random.default_rng(5)
    fld = random_trial_field(spec, rng)
    r1 = rayleigh_quotient(fld, spec)
    r2 = rayleigh_quotient(fld, spec2)
    scale = 2.0 ** (-spec.p / (1.0 - spec.delta))
    assert r2 == pytest.approx(scale * r1, rel=1e-10)


def test_verify_inequality_verdicts(solved):
    spec, report = solved
    extremal, _, _ = build_extremal(report)
    mu_d, _ = mu_direct(spec, restarts=1, seed=0, warm_start=extremal)
    ok = verify_inequality(spec, 0.99 * mu_d, trials=100, seed=0,
                           extremal=extremal)
    assert ok.violations == 0
    assert ok.witness is None
    bad = verify_inequality(spec, 1.05 * mu_d, trials=100, seed=0,
                            extremal=extremal)
    assert bad.violations >= 1
    assert bad.witness_index == -1  # the extremal is the witness
    csv = bad.rows_csv().splitlines()
    assert csv[0] == "trial,seed,lhs,rhs,violated"
    assert len(csv) == 102


def test_verify_inequality_zero_field_satisfies(solved):
    spec, _ = solved
    # lhs and rhs both vanish for the zero field; check directly
    z = np.zeros(spec.mesh.num_vertices)
    assert constraint_integral(spec, z) == 0.0
    assert spec.norm_energy(z) == 0.0


def test_full_report(solved):
    spec, _ = solved
    rep = compute_extremal_report(spec, restarts=2, seed=0, trials=50)
    assert rep.rel_gap <= 0.02
    assert rep.normalization_residual <= 1e-10
    low, high = rep.inequality_checks
    assert low.violations == 0
    assert high.violations >= 1
    d = rep.to_dict()
    assert set(d) >= {"mu_formula", "mu_direct", "rel_gap", "zeta_delta",
                      "inequality_checks", "solve"}
