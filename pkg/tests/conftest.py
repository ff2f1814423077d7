"""Prints one PASS/FAIL line per acceptance criterion after the test run."""

_ACCEPTANCE_RESULTS = {}

_LABELS = {
    "test_ac01_finsler_axioms": "AC-1  Finsler axioms",
    "test_ac02_duality": "AC-2  duality",
    "test_ac03_quadrature": "AC-3  quadrature convergence",
    "test_ac04_linear_limit_regression": "AC-4  linear-limit regression",
    "test_ac05_monotone_scheme": "AC-5  monotone scheme properties",
    "test_ac05_outer_convergence_at_default_tolerance":
        "AC-5  outer convergence at tol 1e-6 by n=2^10",
    "test_ac06_extremal_identity": "AC-6  extremal identity (two routes)",
    "test_ac07_inequality_iff": "AC-7  inequality iff-characterization",
    "test_ac08_normalization": "AC-8  extremal normalization",
    "test_ac09_exponential_problem": "AC-9  exponential problem",
    "test_ac10_levelset_diagnostics": "AC-10 level-set diagnostics",
    "test_ac10_supnorm_stabilization_at_default_tolerance":
        "AC-10 sup-norm stabilization below tol 1e-6",
    "test_ac11_determinism": "AC-11 determinism",
}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if name in _LABELS:
        _ACCEPTANCE_RESULTS[name] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in _LABELS:
        if name in _ACCEPTANCE_RESULTS:
            verdict = "PASS" if _ACCEPTANCE_RESULTS[name] == "passed" else "FAIL"
            terminalreporter.write_line(f"{_LABELS[name]}: {verdict}")
