"""Weight families and the exponent calculus that gates solver configurations.

A weight is either a positive constant or a power |x|^nu.  For power weights
an integrability parameter s must be supplied; membership of |x|^nu in the
admissible class is certified by the closed-form criterion nu in (-N, N/s),
never by numerical integration.  For constant weights every derived exponent
uses p itself in place of the weighted embedding exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GateError

SUBCRITICAL = "subcritical"
CRITICAL = "critical"
SUPERCRITICAL = "supercritical"


def admissible_power_range(N: int, s: float) -> tuple[float, float]:
    """Open interval of admissible power-weight exponents nu for given (N, s)."""
    if s <= 0:
        raise ValueError("s must be positive")
    return (-float(N), float(N) / s)


@dataclass(frozen=True)
class WeightSpec:
    """A weight family: ``const:<c>`` or ``power:<nu>`` (the latter needs s)."""

    family: str
    N: int = 2
    c: float = 1.0
    nu: float = 0.0
    s: float | None = None

    def __post_init__(self):
        if self.family == "const":
            if self.c <= 0:
                raise ConfigError("constant weight must be positive")
        elif self.family == "power":
            if self.s is None:
                raise ConfigError("power weights require the parameter s")
            lo, hi = admissible_power_range(self.N, self.s)
            if not (lo < self.nu < hi):
                raise GateError(
                    f"power exponent nu={self.nu:g} outside admissible range "
                    f"({lo:g}, {hi:g}) for N={self.N}, s={self.s:g}"
                )
        else:
            raise ConfigError(f"unknown weight family {self.family!r}")

    @staticmethod
    def constant(c: float = 1.0, N: int = 2) -> "WeightSpec":
        return WeightSpec("const", N, c=float(c))

    @staticmethod
    def power(nu: float, s: float, N: int = 2) -> "WeightSpec":
        if s is None:
            raise ConfigError("power weights require the parameter s")
        return WeightSpec("power", N, nu=float(nu), s=float(s))

    @staticmethod
    def from_tag(tag: str, s: float | None = None, N: int = 2) -> "WeightSpec":
        parts = tag.strip().split(":")
        if parts[0] == "const" and len(parts) == 2:
            return WeightSpec.constant(float(parts[1]), N)
        if parts[0] == "power" and len(parts) == 2:
            return WeightSpec.power(float(parts[1]), s, N)
        raise ConfigError(f"unrecognized weight tag {tag!r}")

    @property
    def tag(self) -> str:
        if self.family == "const":
            return f"const:{self.c:g}"
        return f"power:{self.nu:g}"

    def evaluate(self, points) -> np.ndarray:
        """Weight values at an array of points of shape (..., N)."""
        points = np.asarray(points, dtype=float)
        if self.family == "const":
            return np.full(points.shape[:-1], self.c)
        r = np.sqrt(np.sum(points * points, axis=-1))
        return r ** self.nu


def _conjugate(x: float) -> float:
    if x <= 1.0:
        raise ValueError("conjugation requires exponent > 1")
    return x / (x - 1.0)


@dataclass(frozen=True)
class ExponentTable:
    """Derived exponents for a (p, weight) pair.

    ``p_s`` is the weighted embedding exponent (p itself for constant
    weights); ``p_s_star`` is its Sobolev conjugate, infinite outside the
    subcritical regime.  ``r`` is the auxiliary exponent used by the
    critical-regime regularity threshold (default 2p).
    """

    p: float
    N: int
    s: float | None
    p_s: float
    p_s_star: float  # math.inf outside the subcritical regime
    regime: str
    r: float = field(default=0.0)

    def m_delta(self, delta: float) -> float:
        """Data-integrability threshold for the f-term at singularity delta."""
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.regime == SUBCRITICAL:
            return _conjugate(self.p_s_star / (1.0 - delta))
        return 1.0  # critical: any exponent > 1; supercritical: 1

    def r_gamma(self, gamma: float) -> float:
        """Same threshold for the g-term at singularity gamma."""
        return self.m_delta(gamma)

    @property
    def q_threshold(self) -> float:
        """Exponent above which L^q data yields a bounded solution."""
        if self.regime == SUBCRITICAL:
            return self.p_s_star / (self.p_s_star - self.p)
        if self.regime == CRITICAL:
            return self.r / (self.r - self.p)
        return 1.0


def exponent_table(p: float, weight: WeightSpec, r: float | None = None) -> ExponentTable:
    """Build the exponent table for growth p and the given weight.

    For power weights, s must lie in [1/(p-1), inf) intersect (N/p, inf);
    a violation is reported with the offending interval bound.
    """
    if p <= 1:
        raise GateError("p must exceed 1")
    N = weight.N
    if weight.family == "const":
        p_s = float(p)
        s = None
    else:
        s = weight.s
        lo = 1.0 / (p - 1.0)
        if s < lo:
            raise GateError(f"s={s:g} below the lower bound 1/(p-1) = {lo:g}")
        if s <= N / p:
            raise GateError(f"s={s:g} must exceed N/p = {N / p:g}")
        p_s = p * s / (s + 1.0)
    if p_s < N:
        regime = SUBCRITICAL
        p_s_star = N * p_s / (N - p_s)
    elif p_s == N:
        regime = CRITICAL
        p_s_star = math.inf
    else:
        regime = SUPERCRITICAL
        p_s_star = math.inf
    r_val = float(r) if r is not None else 2.0 * p
    if regime == CRITICAL and r_val <= p:
        raise ConfigError(f"critical regime requires r > p, got r={r_val:g}")
    return ExponentTable(p=float(p), N=N, s=s, p_s=p_s, p_s_star=p_s_star,
                         regime=regime, r=r_val)


@dataclass(frozen=True)
class IntegrabilityVerdict:
    """Outcome of checking a declared data exponent against the thresholds."""

    data_exponent: float
    existence_threshold: float
    existence_ok: bool
    linf_threshold: float
    linf_ok: bool


def validate_data_integrability(table: ExponentTable, delta: float, gamma: float,
                                data_exponent: float) -> IntegrabilityVerdict:
    """Check a declared L^q exponent of the data against both thresholds.

    Existence needs q >= max of the two data thresholds (strictly > 1 in the
    critical regime, where the threshold value 1 is exclusive); boundedness
    needs q strictly above the regularity threshold except in the
    supercritical regime, where L^1 data suffices.
    """
    if not (0.0 < delta < 1.0) or not (0.0 < gamma < 1.0):
        raise ValueError("delta and gamma must lie in (0, 1)")
    q = float(data_exponent)
    exist_thr = max(table.m_delta(delta), table.r_gamma(gamma))
    if table.regime == CRITICAL:
        exist_ok = q > exist_thr
    else:
        exist_ok = q >= exist_thr
    linf_thr = table.q_threshold
    if table.regime == SUPERCRITICAL:
        linf_ok = q >= linf_thr
    else:
        linf_ok = q > linf_thr
    return IntegrabilityVerdict(q, exist_thr, exist_ok, linf_thr, linf_ok)
