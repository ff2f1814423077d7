"""Norm families: axioms, duality, equivalence constants, p-gate, flux."""

import numpy as np
import pytest

from anisolap import FinslerNorm, FluxParams, GateError, invariant_suite

ALL_TAGS = ["euclidean", "lt:4", "lt:1.5", "lambda-mu:1:1", "lambda-mu:2:0.5"]


@pytest.mark.parametrize("tag", ALL_TAGS)
def test_tag_roundtrip(tag):
    norm = FinslerNorm.from_tag(tag)
    assert FinslerNorm.from_tag(norm.tag) == norm


def test_bad_tags():
    for tag in ["lt", "lt:1", "lt:0.5", "lambda-mu:0:1", "lambda-mu:1:-1",
                "frobenius", "lambda-mu:1"]:
        with pytest.raises(ValueError):
            FinslerNorm.from_tag(tag)


def test_euclidean_is_two_norm():
    norm = FinslerNorm.euclidean()
    rng = np.random.default_rng(3)
    x = rng.standard_normal((50, 2))
    assert np.allclose(norm.evaluate(x), np.linalg.norm(x, axis=1))


def test_lt_reduces_to_euclidean_at_t2():
    norm = FinslerNorm.lt(2.0)
    rng = np.random.default_rng(4)
    x = rng.standard_normal((50, 2))
    assert np.allclose(norm.evaluate(x), np.linalg.norm(x, axis=1), atol=1e-14)


@pytest.mark.parametrize("tag", ALL_TAGS)
def test_equivalence_constants(tag):
    norm = FinslerNorm.from_tag(tag)
    c1, c2 = norm.equivalence_constants
    assert 0 < c1 <= c2
    rng = np.random.default_rng(5)
    x = rng.standard_normal((2000, 2))
    e = np.linalg.norm(x, axis=1)
    f = np.asarray(norm.evaluate(x))
    assert np.all(f >= c1 * e - 1e-12)
    assert np.all(f <= c2 * e + 1e-12)


def test_equivalence_constants_attained_for_lt():
    # along an axis and the diagonal the l_t comparisons are equalities
    norm = FinslerNorm.lt(4.0)
    c1, c2 = norm.equivalence_constants
    axis = np.array([1.0, 0.0])
    diag = np.array([1.0, 1.0])
    assert norm.evaluate(axis) == pytest.approx(c2 * 1.0)
    assert norm.evaluate(diag) == pytest.approx(c1 * np.sqrt(2.0))


@pytest.mark.parametrize("tag", ALL_TAGS)
def test_invariant_suite_passes(tag):
    result = invariant_suite(FinslerNorm.from_tag(tag), samples=2000, seed=7)
    assert result["passed"], result["measured"]


def test_gradient_rejects_origin():
    with pytest.raises(ValueError):
        FinslerNorm.lt(4.0).gradient(np.zeros(2))


def test_flux_zero_at_origin():
    flux = FluxParams(FinslerNorm.lt(4.0), 3.0)
    assert np.all(flux.flux(np.zeros(2)) == 0.0)


def test_p_gate():
    FluxParams(FinslerNorm.euclidean(), 1.5)        # any p > 1
    FluxParams(FinslerNorm.lt(1.5), 1.5)            # t = p allowed
    FluxParams(FinslerNorm.lt(2.0), 1.5)            # t = 2 allowed
    FluxParams(FinslerNorm.lt(4.0), 2.0)            # p >= 2 always fine
    with pytest.raises(GateError):
        FluxParams(FinslerNorm.lt(4.0), 1.5)
    with pytest.raises(GateError):
        FluxParams(FinslerNorm.lambda_mu(1.0, 1.0), 1.5)
    with pytest.raises(GateError):
        FluxParams(FinslerNorm.euclidean(), 1.0)


def test_monotonicity_gap_positive():
    rng = np.random.default_rng(11)
    for tag in ALL_TAGS:
        flux = FluxParams(FinslerNorm.from_tag(tag), 2.5)
        for _ in range(20):
            x, y = rng.standard_normal((2, 2))
            assert flux.monotonicity_gap(x, y) > 0.0


def test_dual_euclidean_matches_two_norm():
    norm = FinslerNorm.euclidean()
    rng = np.random.default_rng(12)
    for _ in range(10):
        xi = rng.standard_normal(2)
        dual = norm.dual_evaluate(xi, directions=4096)
        assert dual == pytest.approx(np.linalg.norm(xi), rel=1e-3)


def test_dual_nested_monotone():
    norm = FinslerNorm.lt(4.0)
    xi = np.array([0.3, -1.2])
    vals = [norm.dual_evaluate(xi, directions=d) for d in (64, 256, 1024, 4096)]
    for lo, hi in zip(vals, vals[1:]):
        assert hi >= lo  # refinements only add candidate directions


def test_dual_lt_matches_conjugate_norm():
    # the dual of l_t is l_{t'} with 1/t + 1/t' = 1
    norm = FinslerNorm.lt(4.0)
    rng = np.random.default_rng(13)
    tp = 4.0 / 3.0
    for _ in range(10):
        xi = rng.standard_normal(2)
        exact = np.sum(np.abs(xi) ** tp) ** (1.0 / tp)
        assert norm.dual_evaluate(xi, directions=8192) == pytest.approx(
            exact, rel=1e-4)


def test_dual_zero_is_zero():
    assert FinslerNorm.lt(4.0).dual_evaluate(np.zeros(2)) == 0.0
