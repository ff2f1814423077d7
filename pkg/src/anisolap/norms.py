"""Minkowski norm families, their first-order calculus and duality.

Three closed-form families are supported:

* ``euclidean``        -- the Euclidean norm (the t=2 member of the lt family),
* ``lt:<t>``           -- the l_t norm (sum |x_i|^t)^(1/t) for t > 1,
* ``lambda-mu:<l>:<m>``-- sqrt(l * sqrt(sum x_i^4) + m * sum x_i^2) for l, m > 0.

All evaluation routines are vectorized: ``x`` may be a single vector of
length N or an array of shape (..., N).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GateError

_EUCLIDEAN = "euclidean"
_LT = "lt"
_LAMBDA_MU = "lambda-mu"


@dataclass(frozen=True)
class FinslerNorm:
    """A member of one of the supported Minkowski norm families on R^N."""

    family: str
    dimension: int = 2
    t: float | None = None
    lam: float | None = None
    mu: float | None = None

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")
        if self.family == _EUCLIDEAN:
            object.__setattr__(self, "t", 2.0)
        elif self.family == _LT:
            if self.t is None or self.t <= 1:
                raise ValueError("lt family requires t > 1")
        elif self.family == _LAMBDA_MU:
            if self.lam is None or self.mu is None or self.lam <= 0 or self.mu <= 0:
                raise ValueError("lambda-mu family requires lambda > 0 and mu > 0")
        else:
            raise ValueError(f"unknown norm family {self.family!r}")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def euclidean(dimension: int = 2) -> "FinslerNorm":
        return FinslerNorm(_EUCLIDEAN, dimension)

    @staticmethod
    def lt(t: float, dimension: int = 2) -> "FinslerNorm":
        return FinslerNorm(_LT, dimension, t=float(t))

    @staticmethod
    def lambda_mu(lam: float, mu: float, dimension: int = 2) -> "FinslerNorm":
        return FinslerNorm(_LAMBDA_MU, dimension, lam=float(lam), mu=float(mu))

    @staticmethod
    def from_tag(tag: str, dimension: int = 2) -> "FinslerNorm":
        """Build a norm from its canonical config tag.

        Tags: ``euclidean``, ``lt:<t>``, ``lambda-mu:<lambda>:<mu>``.
        """
        parts = tag.strip().split(":")
        if parts[0] == _EUCLIDEAN and len(parts) == 1:
            return FinslerNorm.euclidean(dimension)
        if parts[0] == _LT and len(parts) == 2:
            return FinslerNorm.lt(float(parts[1]), dimension)
        if parts[0] == _LAMBDA_MU and len(parts) == 3:
            return FinslerNorm.lambda_mu(float(parts[1]), float(parts[2]), dimension)
        raise ValueError(f"unrecognized norm tag {tag!r}")

    @property
    def tag(self) -> str:
        if self.family == _EUCLIDEAN:
            return _EUCLIDEAN
        if self.family == _LT:
            return f"lt:{self.t:g}"
        return f"lambda-mu:{self.lam:g}:{self.mu:g}"

    # -- equivalence constants --------------------------------------------

    @property
    def equivalence_constants(self) -> tuple[float, float]:
        """Closed-form (c1, c2) with c1|x| <= F(x) <= c2|x| for all x.

        For l_t: the sharp constants comparing l_t to l_2 in R^N.
        For lambda-mu: from sqrt(N)^-1 |x|^2 <= (sum x_i^4)^(1/2) <= |x|^2.
        """
        N = self.dimension
        if self.family in (_EUCLIDEAN, _LT):
            t = self.t
            if t >= 2.0:
                return (N ** (1.0 / t - 0.5), 1.0)
            return (1.0, N ** (1.0 / t - 0.5))
        c1 = float(np.sqrt(self.lam / np.sqrt(N) + self.mu))
        c2 = float(np.sqrt(self.lam + self.mu))
        return (c1, c2)

    # -- first-order calculus ----------------------------------------------

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise ValueError(
                f"vector has dimension {x.shape[-1]}, norm expects {self.dimension}"
            )
        return x

    def evaluate(self, x) -> np.ndarray | float:
        """F(x); vectorized over leading axes of x."""
        x = self._check_dim(x)
        if self.family in (_EUCLIDEAN, _LT):
            t = self.t
            if t == 2.0:
                val = np.sqrt(np.sum(x * x, axis=-1))
            else:
                val = np.sum(np.abs(x) ** t, axis=-1) ** (1.0 / t)
        else:
            q = np.sqrt(np.sum(x ** 4, axis=-1))
            r = np.sum(x * x, axis=-1)
            val = np.sqrt(self.lam * q + self.mu * r)
        return float(val) if val.ndim == 0 else val

    def gradient(self, x) -> np.ndarray:
        """The gradient of F at x != 0 (analytic for every family)."""
        x = self._check_dim(x)
        f = np.asarray(self.evaluate(x))
        if np.any(f == 0.0):
            raise ValueError("gradient undefined at the origin")
        return self._gradient_unchecked(x, f)

    def _gradient_unchecked(self, x: np.ndarray, f: np.ndarray) -> np.ndarray:
        # caller guarantees f > 0 wherever the result is used
        fsafe = np.where(f == 0.0, 1.0, f)
        if self.family in (_EUCLIDEAN, _LT):
            t = self.t
            if t == 2.0:
                return x / fsafe[..., None]
            return (
                np.abs(x) ** (t - 1.0)
                * np.sign(x)
                * (fsafe ** (1.0 - t))[..., None]
            )
        q = np.sqrt(np.sum(x ** 4, axis=-1))
        qsafe = np.where(q == 0.0, 1.0, q)
        num = self.lam * x ** 3 / qsafe[..., None] + self.mu * x
        return num / fsafe[..., None]

    def dual_evaluate(self, xi, directions: int = 1024) -> float:
        """Brute-force dual norm sup <x, xi>/F(x) over sampled unit directions.

        Sample sets are nested: the set for d directions is a subset of the one
        for any integer multiple of d (uniform angles in 2D, a fixed seeded
        prefix sequence in higher dimensions), so refinement is monotone.
        The direction xi/|xi| is always included.
        """
        if directions < 8:
            raise ValueError("directions must be >= 8")
        xi = self._check_dim(np.asarray(xi, dtype=float))
        nrm = float(np.sqrt(np.sum(xi * xi)))
        if nrm == 0.0:
            return 0.0
        pts = _unit_directions(self.dimension, directions)
        pts = np.vstack([pts, xi / nrm])
        vals = pts @ xi / self.evaluate(pts)
        return float(np.max(vals))


def _unit_directions(dim: int, count: int) -> np.ndarray:
    if dim == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    rng = np.random.default_rng(20240117)  # fixed: prefixes must nest
    g = rng.standard_normal((count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class FluxParams:
    """A norm together with the growth exponent p of the operator.

    General norms require p >= 2; the Euclidean norm and the l_t norm with
    t = 2 or t = p admit the full range p in (1, inf).
    """

    norm: FinslerNorm
    p: float

    def __post_init__(self):
        if self.p <= 1:
            raise GateError("p must exceed 1")
        if self.p < 2:
            fam = self.norm.family
            if fam == _LAMBDA_MU:
                raise GateError("lambda-mu norms require p >= 2")
            if fam == _LT and self.norm.t not in (2.0, self.p):
                raise GateError(
                    f"lt:{self.norm.t:g} with p={self.p:g} < 2 requires t in {{2, p}}"
                )

    def flux(self, x) -> np.ndarray:
        """a(x) = F(x)^(p-1) grad F(x), continuously extended by a(0) = 0."""
        x = self.norm._check_dim(x)
        f = np.asarray(self.norm.evaluate(x))
        scalar = f.ndim == 0
        f = np.atleast_1d(f)
        xx = x.reshape(f.shape + (self.norm.dimension,))
        g = self.norm._gradient_unchecked(xx, f)
        a = (f ** (self.p - 1.0))[..., None] * g
        a[f == 0.0] = 0.0
        return a[0] if scalar else a.reshape(x.shape)

    def monotonicity_gap(self, x, y) -> float:
        """<a(x) - a(y), x - y>; strictly positive for x != y."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return float(np.sum((self.flux(x) - self.flux(y)) * (x - y), axis=-1))


INVARIANT_TOLERANCES = {
    "homogeneity": 1e-12,
    "euler_identity": 1e-8,
    "midpoint_convexity": 1e-12,
    "monotonicity_gap": 0.0,       # the sampled minimum must exceed this
    "flux_homogeneity": 1e-10,
}


def invariant_suite(norm: FinslerNorm, p: float = 2.0, samples: int = 10_000,
                    seed: int = 0) -> dict:
    """Sampled checks of the structural norm properties.

    Measures, over seeded random points, the worst relative deviation from
    absolute homogeneity F(tx) = |t| F(x), the Euler identity
    <grad F(x), x> = F(x), midpoint convexity, strict monotonicity of the
    flux, and the degree-(p-1) homogeneity of the flux.  Returns a mapping
    with each measured deviation, the tolerances, and a `passed` flag.
    """
    rng = np.random.default_rng(seed)
    dim = norm.dimension
    x = rng.standard_normal((samples, dim))
    y = rng.standard_normal((samples, dim))
    t = rng.uniform(-3.0, 3.0, samples)
    t = np.where(np.abs(t) < 1e-3, 1.0, t)

    fx = np.asarray(norm.evaluate(x))
    fy = np.asarray(norm.evaluate(y))
    homogeneity = float(np.max(
        np.abs(norm.evaluate(t[:, None] * x) - np.abs(t) * fx) / fx))
    euler = float(np.max(
        np.abs(np.sum(norm.gradient(x) * x, axis=-1) - fx) / fx))
    fmid = np.asarray(norm.evaluate(0.5 * (x + y)))
    convexity = float(np.max(fmid - 0.5 * (fx + fy)))

    flux = FluxParams(norm, p)
    gap = float(np.min(np.sum((flux.flux(x) - flux.flux(y)) * (x - y), axis=-1)))
    ts = np.abs(t)  # flux homogeneity a(tx) = t^(p-1) a(x) holds for t > 0
    ax = flux.flux(x)
    scale = np.max(np.abs(ax), axis=-1, keepdims=True)
    flux_hom = float(np.max(
        np.abs(flux.flux(ts[:, None] * x)
               - (ts ** (p - 1.0))[:, None] * ax)
        / (ts ** (p - 1.0))[:, None] / scale))

    measured = {
        "homogeneity": homogeneity,
        "euler_identity": euler,
        "midpoint_convexity": convexity,
        "monotonicity_gap": gap,
        "flux_homogeneity": flux_hom,
    }
    passed = (measured["homogeneity"] <= INVARIANT_TOLERANCES["homogeneity"]
              and measured["euler_identity"] <= INVARIANT_TOLERANCES["euler_identity"]
              and measured["midpoint_convexity"] <= INVARIANT_TOLERANCES["midpoint_convexity"]
              and measured["monotonicity_gap"] > INVARIANT_TOLERANCES["monotonicity_gap"]
              and measured["flux_homogeneity"] <= INVARIANT_TOLERANCES["flux_homogeneity"])
    return {"norm": norm.tag, "p": p, "samples": samples, "seed": seed,
            "measured": measured, "tolerances": dict(INVARIANT_TOLERANCES),
            "passed": passed}
