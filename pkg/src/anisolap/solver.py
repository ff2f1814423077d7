"""Solvers for the regularized singular problems and their monotone n-loop.

The truncated problem at level n replaces the data by min(data, n) and shifts
the singular denominator by 1/n.  Each truncated problem is solved by direct
minimization of its convex C^1 energy with a Barzilai-Borwein step proposal
and Armijo backtracking, using only first-order information (the flux field
of the norm).  The outer loop walks an increasing n-schedule, warm-starting
from the previous solution, and records the monotonicity / norm / positivity
diagnostics of the scheme.

The exponential problem is handled per n by damped Picard iteration: the
right-hand-side coefficient is frozen at the current iterate, the resulting
convex problem with fixed nonnegative load is minimized, and the update is
under-relaxed.  The damping factor halves when the iteration stops
contracting (a fixed factor of 0.5 oscillates once n is large) and relaxes
back toward the configured value after a few contracting sweeps.  When p = 2
and the norm is Euclidean the frozen problem is a linear system, solved
through one sparse factorization reused across all sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConvergenceError, GateError
from .meshing import Field, Mesh, jacobi_smooth
from .norms import FinslerNorm, FluxParams
from .spaces import WeightSpec, exponent_table

MIXED = "mixed"
EXPONENTIAL = "exponential"

DEFAULT_N_SCHEDULE = tuple(2 ** k for k in range(11))

# 1/(u+1/n) can exceed the float64 exponent range on elements whose
# barycenter value is exactly zero (all three vertices on the boundary);
# those elements never load an interior degree of freedom, so capping the
# exponent only avoids overflow and cannot change any solve.
_EXP_CAP = 700.0


def _as_data(value):
    """Accept a constant, a callable of (x, y), or None for a data term."""
    if value is None:
        return None
    if callable(value):
        return value
    return float(value)


@dataclass
class ProblemSpec:
    """A full problem instance: domain, operator, data and solver settings."""

    mesh: Mesh
    norm: FinslerNorm
    p: float
    weight: WeightSpec
    kind: str = MIXED
    delta: float = 0.5
    gamma: float = 0.5
    f: object = None
    g: object = None
    h: object = None
    n_schedule: tuple = DEFAULT_N_SCHEDULE
    inner_tol: float = 1e-8
    outer_tol: float = 1e-6
    max_inner_iters: int = 50_000
    theta: float = 0.5

    def __post_init__(self):
        self.flux_params = FluxParams(self.norm, self.p)  # p-gate
        if self.weight.family == "power":
            exponent_table(self.p, self.weight)  # s-in-I gate
        bary = self.mesh.barycenters
        if self.kind == MIXED:
            if not (0.0 < self.delta < 1.0) or not (0.0 < self.gamma < 1.0):
                raise GateError("delta and gamma must lie in (0, 1)")
            self.f_tri = _eval_data(self.f, bary)
            self.g_tri = _eval_data(self.g, bary)
            if np.any(self.f_tri < 0.0) or np.any(self.g_tri < 0.0):
                raise GateError("data (f, g) must be nonnegative")
            if not np.any(self.f_tri > 0.0) and not np.any(self.g_tri > 0.0):
                raise GateError("data (f, g) must not both vanish")
        elif self.kind == EXPONENTIAL:
            self.h_tri = _eval_data(self.h, bary)
            if np.any(self.h_tri < 0.0):
                raise GateError("data h must be nonnegative")
            if not np.any(self.h_tri > 0.0):
                raise GateError("data h must not vanish identically")
        else:
            raise GateError(f"unknown problem kind {self.kind!r}")
        if not 0.0 < self.theta <= 1.0:
            raise GateError("theta must lie in (0, 1]")
        self.w_tri = self.weight.evaluate(bary)
        self.aw_tri = self.mesh.areas * self.w_tri

    # -- assembly ----------------------------------------------------------

    def scatter(self, per_corner: np.ndarray) -> np.ndarray:
        """Accumulate (T, 3) per-corner contributions into nodal values."""
        tri = self.mesh.triangles
        out = np.zeros(self.mesh.num_vertices)
        for i in range(3):
            out += np.bincount(tri[:, i], weights=per_corner[:, i],
                               minlength=self.mesh.num_vertices)
        return out

    def norm_energy(self, values: np.ndarray) -> float:
        """The discrete ||v||^p = sum area * w * F(grad v)^p."""
        g = self.mesh.gradients(values)
        fv = self.norm.evaluate(g)
        return float(np.sum(self.aw_tri * fv ** self.p))

    def norm_energy_grad(self, values: np.ndarray):
        """Returns (||v||^p, nodal gradient of ||v||^p / p)."""
        mesh = self.mesh
        g = mesh.gradients(values)
        fv = np.asarray(self.norm.evaluate(g))
        a = self.flux_params.flux(g)
        val = float(np.sum(self.aw_tri * fv ** self.p))
        ax = self.aw_tri * a[:, 0]
        ay = self.aw_tri * a[:, 1]
        per_corner = ax[:, None] * mesh.grad_x + ay[:, None] * mesh.grad_y
        return val, self.scatter(per_corner)

    def load_grad(self, coeff: np.ndarray) -> np.ndarray:
        """Nodal gradient of sum area * coeff * vbar (linear load)."""
        per = (self.mesh.areas * coeff / 3.0)[:, None] * np.ones((1, 3))
        return self.scatter(per)

    def quadratic_solver(self):
        """Prefactorized interior stiffness solve, or None.

        When p = 2 and the norm is the Euclidean one the frozen-load problem
        is a linear system with a fixed SPD matrix, so a single sparse LU
        factorization replaces thousands of descent iterations across the
        Picard sweeps.  Returns (lu, interior_index) or None when the energy
        is not quadratic.
        """
        cached = getattr(self, "_quad_solver", None)
        if cached is not None:
            return cached if cached != "none" else None
        quadratic = (self.norm.family == "euclidean"
                     or (self.norm.family == "lt" and self.norm.t == 2.0))
        if self.p != 2.0 or not quadratic:
            self._quad_solver = "none"
            return None
        from scipy import sparse
        from scipy.sparse.linalg import splu
        mesh = self.mesh
        tri = mesh.triangles
        rows, cols, vals = [], [], []
        for i in range(3):
            for j in range(3):
                rows.append(tri[:, i])
                cols.append(tri[:, j])
                vals.append(self.aw_tri
                            * (mesh.grad_x[:, i] * mesh.grad_x[:, j]
                               + mesh.grad_y[:, i] * mesh.grad_y[:, j]))
        k = sparse.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(mesh.num_vertices, mesh.num_vertices)).tocsr()
        idx = np.flatnonzero(mesh.interior)
        lu = splu(k[idx][:, idx].tocsc())
        self._quad_solver = (lu, idx)
        return self._quad_solver

    def interior_region(self) -> np.ndarray:
        """Vertex mask of the centered quarter-area subregion."""
        v = self.mesh.vertices
        if self.mesh.domain == "disk":
            return np.sum(v * v, axis=1) <= 0.25
        lo = np.min(v, axis=0)
        hi = np.max(v, axis=0)
        c = 0.5 * (lo + hi)
        half = 0.25 * (hi - lo)
        return np.all(np.abs(v - c) <= half + 1e-12, axis=1)


def _eval_data(data, points) -> np.ndarray:
    data = _as_data(data)
    n = len(points)
    if data is None:
        return np.zeros(n)
    if callable(data):
        out = np.asarray(data(points[:, 0], points[:, 1]), dtype=float)
        return np.broadcast_to(out, (n,)).copy()
    return np.full(n, data)


# -- truncated primitives ---------------------------------------------------

def truncation_primitive(t: np.ndarray, n: int, sigma: float) -> np.ndarray:
    """(t+ + 1/n)^(1-sigma)/(1-sigma) - n^sigma * t-  (C^1 in t)."""
    inv = 1.0 / n
    pos = np.maximum(t, 0.0)
    neg = np.maximum(-t, 0.0)
    return (pos + inv) ** (1.0 - sigma) / (1.0 - sigma) - inv ** (-sigma) * neg


def truncation_derivative(t: np.ndarray, n: int, sigma: float) -> np.ndarray:
    return (np.maximum(t, 0.0) + 1.0 / n) ** (-sigma)


# -- Barzilai-Borwein descent ------------------------------------------------

@dataclass
class InnerResult:
    values: np.ndarray
    objective: float
    grad_norm: float
    iterations: int
    converged: bool


def minimize_bb(value_grad, u0: np.ndarray, free: np.ndarray, gtol: float,
                max_iters: int, ftol: float = 0.0, armijo: float = 1e-4) -> InnerResult:
    """Monotone descent with BB step proposal and Armijo backtracking.

    ``value_grad`` maps nodal values to (objective, full nodal gradient);
    components outside ``free`` are held fixed.  Stops when the 2-norm of
    the free gradient drops below ``gtol`` (or, if ftol > 0, when the
    objective stalls below that relative change over 50 iterations).
    """
    u = u0.copy()
    fval, grad = value_grad(u)
    grad = np.where(free, grad, 0.0)
    gnorm = float(np.linalg.norm(grad))
    alpha = 1.0
    stall = 0
    it = 0
    for it in range(1, max_iters + 1):
        if gnorm <= gtol:
            return InnerResult(u, fval, gnorm, it - 1, True)
        step = alpha
        for _ in range(60):
            u_new = u - step * grad
            f_new, g_new = value_grad(u_new)
            if f_new <= fval - armijo * step * gnorm * gnorm:
                break
            step *= 0.5
        else:
            # no representable step decreases the energy: numerical stationarity
            return InnerResult(u, fval, gnorm, it, True)
        g_new = np.where(free, g_new, 0.0)
        s = u_new - u
        y = g_new - grad
        sy = float(np.dot(s, y))
        if sy > 0.0:
            alpha = min(max(float(np.dot(s, s)) / sy, 1e-10), 1e10)
        else:
            alpha = min(step * 2.0, 1e10)
        if ftol > 0.0 and abs(fval - f_new) <= ftol * max(1.0, abs(fval)):
            stall += 1
            if stall >= 50:
                u, fval = u_new, f_new
                grad = g_new
                gnorm = float(np.linalg.norm(grad))
                return InnerResult(u, fval, gnorm, it, True)
        else:
            stall = 0
        u, fval, grad = u_new, f_new, g_new
        gnorm = float(np.linalg.norm(grad))
    return InnerResult(u, fval, gnorm, max_iters, gnorm <= gtol)


# -- mixed singular problem ---------------------------------------------------

def energy_In(fld: Field, spec: ProblemSpec, n: int) -> float:
    """Discrete truncated energy at level n for the mixed problem."""
    if spec.kind != MIXED:
        raise GateError("energy_In applies to mixed problems")
    if n < 1:
        raise ValueError("n must be >= 1")
    ubar = spec.mesh.barycenter_values(fld.values)
    fn = np.minimum(spec.f_tri, n)
    gn = np.minimum(spec.g_tri, n)
    val = spec.norm_energy(fld.values) / spec.p
    val -= float(np.sum(spec.mesh.areas * fn * truncation_primitive(ubar, n, spec.delta)))
    val -= float(np.sum(spec.mesh.areas * gn * truncation_primitive(ubar, n, spec.gamma)))
    return val


def _mixed_value_grad(spec: ProblemSpec, n: int):
    mesh = spec.mesh
    fn = np.minimum(spec.f_tri, n)
    gn = np.minimum(spec.g_tri, n)
    area = mesh.areas
    p = spec.p

    def vg(u):
        val, ngrad = spec.norm_energy_grad(u)
        val /= p
        ubar = mesh.barycenter_values(u)
        val -= float(np.sum(area * fn * truncation_primitive(ubar, n, spec.delta)))
        val -= float(np.sum(area * gn * truncation_primitive(ubar, n, spec.gamma)))
        coeff = fn * truncation_derivative(ubar, n, spec.delta) \
            + gn * truncation_derivative(ubar, n, spec.gamma)
        return val, ngrad - spec.load_grad(coeff)

    return vg


def minimize_In(spec: ProblemSpec, n: int, initial: Field | None = None) -> tuple[Field, InnerResult]:
    """Minimize the truncated energy at level n over zero-boundary fields."""
    u0 = np.zeros(spec.mesh.num_vertices) if initial is None else initial.values.copy()
    u0[spec.mesh.boundary] = 0.0
    res = minimize_bb(_mixed_value_grad(spec, n), u0, spec.mesh.interior,
                      spec.inner_tol, spec.max_inner_iters, ftol=1e-15)
    if not res.converged:
        raise ConvergenceError(
            f"inner minimization at n={n} stopped at gradient norm "
            f"{res.grad_norm:.3e} > {spec.inner_tol:.1e} after {res.iterations} iterations",
            last_iterate=Field(spec.mesh, res.values),
            diagnostics={"n": n, "grad_norm": res.grad_norm})
    return Field(spec.mesh, res.values), res


def minimizer_inequality_gap(spec: ProblemSpec, n: int, fld: Field,
                             trials: int = 16, seed: int = 0) -> float:
    """Largest relative violation of the minimizer inequality

        ||u||^p <= ||phi||^p + p * int (u-phi)(u+1/n)^(-delta) f_n
                             + p * int (u-phi)(u+1/n)^(-gamma) g_n

    over ``trials`` random smoothed zero-boundary test fields phi."""
    mesh = spec.mesh
    rng = np.random.default_rng(seed)
    fn = np.minimum(spec.f_tri, n)
    gn = np.minimum(spec.g_tri, n)
    u = fld.values
    unorm_p = spec.norm_energy(u)
    ubar = mesh.barycenter_values(u)
    coeff = fn * truncation_derivative(ubar, n, spec.delta) \
        + gn * truncation_derivative(ubar, n, spec.gamma)
    worst = -np.inf
    for _ in range(trials):
        phi = jacobi_smooth(mesh, rng.uniform(-1.0, 1.0, mesh.num_vertices))
        rhs = spec.norm_energy(phi)
        diff_bar = ubar - mesh.barycenter_values(phi)
        rhs += spec.p * float(np.sum(mesh.areas * coeff * diff_bar))
        worst = max(worst, (unorm_p - rhs) / max(unorm_p, 1e-300))
    return worst


@dataclass
class StepRecord:
    n: int
    norm: float
    sup: float
    min_interior: float
    min_value: float
    inner_iters: int
    energy: float
    sup_change: float          # nan for the first step
    monotonicity_violation: float  # max (u_prev - u_new)+ ; nan for first step

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("n", "norm", "sup", "min_interior", "min_value",
                 "inner_iters", "energy", "sup_change", "monotonicity_violation")}


@dataclass
class SolveReport:
    kind: str
    records: list
    converged: bool
    final: Field
    spec: ProblemSpec = dc_field(repr=False, default=None)

    @property
    def monotonicity_violations(self) -> float:
        vals = [r.monotonicity_violation for r in self.records[1:]]
        return max(vals) if vals else 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "converged": self.converged,
            "records": [r.to_dict() for r in self.records],
            "monotonicity_violations": self.monotonicity_violations,
            "final_values": [float(v) for v in self.final.values],
        }

    def history_csv(self) -> str:
        lines = ["n,norm,sup,min_interior,inner_iters,energy"]
        for r in self.records:
            lines.append(f"{r.n},{r.norm!r},{r.sup!r},{r.min_interior!r},"
                         f"{r.inner_iters},{r.energy!r}")
        return "\n".join(lines) + "\n"


def _record_step(spec, n, values, iters, energy, prev, region) -> StepRecord:
    sup = float(np.max(np.abs(values)))
    if prev is None:
        change = float("nan")
        viol = float("nan")
    else:
        change = float(np.max(np.abs(values - prev)))
        viol = float(max(np.max(prev - values), 0.0))
    return StepRecord(
        n=n,
        norm=spec.norm_energy(values) ** (1.0 / spec.p),
        sup=sup,
        min_interior=float(np.min(values[region])),
        min_value=float(np.min(values)),
        inner_iters=iters,
        energy=energy,
        sup_change=change,
        monotonicity_violation=viol,
    )


def _settled(records, outer_tol) -> bool:
    """Allow the n-loop to stop early once two consecutive sup-changes sit
    below the outer tolerance (a single small change can be transient: the
    exponential scheme's changes are not monotone in n)."""
    return (len(records) >= 3
            and records[-1].sup_change < outer_tol
            and records[-2].sup_change < outer_tol)


def solve_mixed(spec: ProblemSpec) -> SolveReport:
    """Run the monotone n-loop for the mixed singular problem."""
    if spec.kind != MIXED:
        raise GateError("solve_mixed requires a mixed problem spec")
    region = spec.interior_region()
    records = []
    prev = None
    fld = None
    for n in spec.n_schedule:
        try:
            fld, res = minimize_In(spec, n, fld)
        except ConvergenceError as err:
            err.diagnostics["report"] = SolveReport(MIXED, records, False,
                                                    err.last_iterate, spec)
            raise
        records.append(_record_step(spec, n, fld.values, res.iterations,
                                    res.objective, prev, region))
        prev = fld.values.copy()
        if _settled(records, spec.outer_tol):
            break
    converged = len(records) > 1 and records[-1].sup_change < spec.outer_tol
    return SolveReport(MIXED, records, converged, fld, spec)


# -- exponential problem ------------------------------------------------------

def _frozen_load_value_grad(spec: ProblemSpec, coeff: np.ndarray):
    area = spec.mesh.areas
    p = spec.p
    lg = spec.load_grad(coeff)

    def vg(u):
        val, ngrad = spec.norm_energy_grad(u)
        ubar = spec.mesh.barycenter_values(u)
        return val / p - float(np.sum(area * coeff * ubar)), ngrad - lg

    vg.load_scale = float(np.linalg.norm(lg[spec.mesh.interior]))
    return vg


def solve_frozen_load(spec: ProblemSpec, coeff: np.ndarray,
                      initial: np.ndarray | None = None,
                      gtol: float | None = None) -> InnerResult:
    """Minimize (1/p)||v||^p - int coeff * v over zero-boundary fields.

    The gradient tolerance is floored at the roundoff level of the assembled
    load so that huge frozen coefficients cannot demand sub-roundoff accuracy.
    """
    fast = spec.quadratic_solver()
    if fast is not None:
        lu, idx = fast
        b = spec.load_grad(coeff)
        u = np.zeros(spec.mesh.num_vertices)
        u[idx] = lu.solve(b[idx])
        objective = -0.5 * float(b[idx] @ u[idx])
        return InnerResult(u, objective, 0.0, 1, True)
    u0 = np.zeros(spec.mesh.num_vertices) if initial is None else initial.copy()
    u0[spec.mesh.boundary] = 0.0
    vg = _frozen_load_value_grad(spec, coeff)
    tol = spec.inner_tol if gtol is None else gtol
    tol = max(tol, 1e-13 * (1.0 + vg.load_scale))
    res = minimize_bb(vg, u0, spec.mesh.interior, tol, spec.max_inner_iters,
                      ftol=1e-15)
    if not res.converged:
        raise ConvergenceError(
            f"frozen-load solve stopped at gradient norm {res.grad_norm:.3e}",
            last_iterate=Field(spec.mesh, res.values))
    return res


def _exponential_coeff(spec: ProblemSpec, values: np.ndarray, n: int) -> np.ndarray:
    hn = np.minimum(spec.h_tri, n)
    vbar = np.maximum(spec.mesh.barycenter_values(values), 0.0)
    return hn * np.exp(np.minimum(1.0 / (vbar + 1.0 / n), _EXP_CAP))


def _picard_level(spec: ProblemSpec, n: int, v0: np.ndarray,
                  max_picard: int = 20_000) -> tuple[np.ndarray, int]:
    theta = spec.theta
    v = v0.copy()
    prev_change = np.inf
    good = 0
    for it in range(1, max_picard + 1):
        coeff = _exponential_coeff(spec, v, n)
        gtol = max(spec.inner_tol, min(1e-6, 1e-3 * prev_change))
        sol = solve_frozen_load(spec, coeff, initial=v, gtol=gtol).values
        change = float(np.max(np.abs(sol - v)))
        if change < spec.inner_tol:
            return sol, it
        if change > 0.9 * prev_change:
            theta = max(0.5 * theta, 0.02)  # stop contracting -> damp harder
            good = 0
        else:
            good += 1
            if good >= 3:  # contracting steadily -> try less damping
                theta = min(1.5 * theta, spec.theta)
                good = 0
        v = (1.0 - theta) * v + theta * sol
        prev_change = change
    raise ConvergenceError(
        f"Picard iteration stagnated at n={n}: sup-change {prev_change:.3e} "
        f"after {max_picard} sweeps",
        last_iterate=Field(spec.mesh, v),
        diagnostics={"n": n, "theta": theta, "change": prev_change})


def solve_exponential(spec: ProblemSpec) -> SolveReport:
    """Run the n-loop for the exponential singular problem."""
    if spec.kind != EXPONENTIAL:
        raise GateError("solve_exponential requires an exponential problem spec")
    region = spec.interior_region()
    records = []
    prev = None
    values = np.zeros(spec.mesh.num_vertices)
    for n in spec.n_schedule:
        try:
            values, sweeps = _picard_level(spec, n, values)
        except ConvergenceError as err:
            err.diagnostics["report"] = SolveReport(EXPONENTIAL, records, False,
                                                    err.last_iterate, spec)
            raise
        coeff = _exponential_coeff(spec, values, n)
        ubar = spec.mesh.barycenter_values(values)
        energy = spec.norm_energy(values) / spec.p \
            - float(np.sum(spec.mesh.areas * coeff * ubar))
        records.append(_record_step(spec, n, values, sweeps, energy, prev, region))
        prev = values.copy()
        if _settled(records, spec.outer_tol):
            break
    converged = len(records) > 1 and records[-1].sup_change < spec.outer_tol
    return SolveReport(EXPONENTIAL, records, converged,
                       Field(spec.mesh, values), spec)


# -- level-set diagnostics ----------------------------------------------------

def stampacchia_diagnostic(report: SolveReport, spec: ProblemSpec | None = None,
                           k0: float | None = None,
                           levels: list | None = None) -> list[tuple[float, float]]:
    """Discrete measures |A(k)| of the super-level sets of the final field.

    Levels default to the geometric ladder {k0 * 2^j} continued one step past
    the first empty level, exhibiting the finite truncation level that the
    uniform bound forces.
    """
    spec = spec or report.spec
    mesh = spec.mesh
    ubar = mesh.barycenter_values(report.final.values)
    sup = float(np.max(ubar)) if len(ubar) else 0.0
    if levels is None:
        if k0 is None:
            k0 = max(sup, 1e-12) / 2 ** 10
        levels = []
        k = k0
        while True:
            levels.append(k)
            if k > sup:
                break
            k *= 2.0
    table = []
    for k in levels:
        table.append((float(k), float(np.sum(mesh.areas[ubar >= k]))))
    return table
