"""Dense linear-feasibility and box-bounded convex QP solver.

Solves

    minimize    0.5 y'Qy + c'y
    subject to  a y <= b,  lower <= y <= upper

with a Mehrotra predictor-corrector primal-dual interior-point method.
Box bounds are handled natively (they never enter the row matrix), so the
per-iteration cost is dominated by one weighted Gram product a' D a.

Feasibility-only solves (no objective) maximize the minimum constraint
slack, capped at a unit margin: the returned point is strictly interior
whenever the system has interior, which keeps downstream index-of-max
reproduction stable under floating-point noise.

Every returned point is re-verified against the original system by an
independent residual check; the maximum violation is part of the
diagnostics and a violation beyond ``feas_tol`` is an error, never a
silent return.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg.blas import dsyrk

from .core import InvalidInput, IomlabError

_STEP_FRACTION = 0.9995
_STALL_WINDOW = 30


class Infeasible(IomlabError):
    """The constraint system has no point within tolerance."""


class NumericalFailure(IomlabError):
    """The solver could not certify a solution (diagnostics in message)."""


@dataclass
class ConstraintSystem:
    """Dense inequality system {y : a y <= b, lower <= y <= upper}."""

    a: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=np.float64))
        self.b = np.asarray(self.b, dtype=np.float64).ravel()
        self.lower = np.asarray(self.lower, dtype=np.float64).ravel()
        self.upper = np.asarray(self.upper, dtype=np.float64).ravel()
        r, d = self.a.shape
        if self.b.shape != (r,):
            raise InvalidInput(f"b has shape {self.b.shape}, expected ({r},)")
        if self.lower.shape != (d,) or self.upper.shape != (d,):
            raise InvalidInput("bound vectors must have one entry per column")
        for name, arr in (("a", self.a), ("b", self.b),
                          ("lower", self.lower), ("upper", self.upper)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInput(f"constraint field {name!r} contains NaN or Inf")
        if np.any(self.lower > self.upper):
            raise InvalidInput("lower bound exceeds upper bound")

    @property
    def rows(self) -> int:
        return self.a.shape[0]

    @property
    def dim(self) -> int:
        return self.a.shape[1]


class ObjectiveKind(Enum):
    NONE = "none"
    MIN_SQUARED_NORM = "min_squared_norm"
    MIN_SQUARED_DISTANCE = "min_squared_distance"


@dataclass(frozen=True)
class Objective:
    kind: ObjectiveKind = ObjectiveKind.NONE
    target: np.ndarray | None = None

    @staticmethod
    def none() -> "Objective":
        return Objective(ObjectiveKind.NONE)

    @staticmethod
    def min_squared_norm() -> "Objective":
        return Objective(ObjectiveKind.MIN_SQUARED_NORM)

    @staticmethod
    def min_squared_distance_to(target) -> "Objective":
        t = np.asarray(target, dtype=np.float64).ravel()
        if not np.all(np.isfinite(t)):
            raise InvalidInput("objective target contains NaN or Inf")
        return Objective(ObjectiveKind.MIN_SQUARED_DISTANCE, t)


@dataclass
class SolverSettings:
    feas_tol: float = 1e-8
    opt_tol: float = 1e-6
    max_iter: int = 200


@dataclass
class SolveDiagnostics:
    iterations: int
    max_violation: float
    min_slack: float
    mu: float
    objective_value: float | None = None
    phase1_margin: float | None = None
    notes: dict = field(default_factory=dict)


@dataclass
class SolveResult:
    y: np.ndarray
    diagnostics: SolveDiagnostics


def max_violation(system: ConstraintSystem, y) -> float:
    """Largest constraint or bound violation of ``y`` (0 if feasible).

    Independent of the solver path: one plain matvec against the original
    data.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    worst = 0.0
    if system.rows:
        worst = max(worst, float(np.max(system.a @ y - system.b)))
    worst = max(worst, float(np.max(system.lower - y)))
    worst = max(worst, float(np.max(y - system.upper)))
    return max(worst, 0.0)


def min_slack(system: ConstraintSystem, y) -> float:
    """Smallest slack of ``y`` over rows and bounds (negative if violated)."""
    y = np.asarray(y, dtype=np.float64).ravel()
    slack = min(float(np.min(y - system.lower)), float(np.min(system.upper - y)))
    if system.rows:
        slack = min(slack, float(np.min(system.b - system.a @ y)))
    return slack


def _weighted_gram(a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """a' diag(w) a via a rank-k symmetric update (w >= 0)."""
    if a.shape[0] == 0:
        return np.zeros((a.shape[1], a.shape[1]))
    scaled = a * np.sqrt(w)[:, None]
    g = dsyrk(1.0, scaled, trans=1, lower=1)
    return g + np.tril(g, -1).T


def _step_to_boundary(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


class _IpmStatus(Enum):
    CONVERGED = "converged"
    ITERATION_LIMIT = "iteration_limit"
    STALLED = "stalled"


def _ipm(a, b, lower, upper, q, c, settings: SolverSettings):
    """Core Mehrotra predictor-corrector loop.

    Rows of ``a`` are 2-norm equilibrated internally; the variable space is
    unchanged, and convergence is tested on the original (unscaled)
    residuals.
    """
    r, d = a.shape
    if r:
        norms = np.linalg.norm(a, axis=1)
        norms = np.where(norms > 0.0, norms, 1.0)
        a_s = a / norms[:, None]
        b_s = b / norms
    else:
        norms = np.ones(0)
        a_s = a
        b_s = b

    y = 0.5 * (lower + upper)
    s_a = np.maximum(b_s - a_s @ y, 1.0) if r else np.zeros(0)
    s_u = np.maximum(upper - y, 1.0)
    s_l = np.maximum(y - lower, 1.0)
    z_a = np.ones(r)
    z_u = np.ones(d)
    z_l = np.ones(d)
    count = r + 2 * d

    c_scale = 1.0 + float(np.max(np.abs(c))) if c.size else 1.0
    feas_stop = 0.5 * settings.feas_tol
    if q is None:
        mu_stop = 1e-12
    else:
        # for strictly convex objectives the duality gap bounds the distance
        # to the minimizer: push mu low enough that the bound is ~opt_tol
        mu_stop = max(1e-15, min(1e-12, settings.opt_tol ** 2 / (10.0 * count)))
    dual_stop = 1e-8 * c_scale

    best_viol = np.inf
    best_mu = np.inf
    best_iter = 0
    status = _IpmStatus.ITERATION_LIMIT
    it = 0
    mu = np.inf
    viol = np.inf

    for it in range(1, settings.max_iter + 1):
        ay = a_s @ y if r else np.zeros(0)
        r_a = ay + s_a - b_s
        r_u = y + s_u - upper
        r_l = -y + s_l + lower
        qy = q @ y if q is not None else np.zeros(d)
        r_d = qy + c + (a_s.T @ z_a if r else 0.0) + z_u - z_l
        mu = (float(s_a @ z_a) + float(s_u @ z_u) + float(s_l @ z_l)) / count

        viol = max(
            float(np.max((ay - b_s) * norms)) if r else -np.inf,
            float(np.max(lower - y)),
            float(np.max(y - upper)),
            0.0,
        )
        if viol < 0.9 * best_viol or mu < 0.9 * best_mu:
            best_viol = min(best_viol, viol)
            best_mu = min(best_mu, mu)
            best_iter = it
        dual_ok = float(np.max(np.abs(r_d))) <= dual_stop
        if viol <= feas_stop and mu <= mu_stop and dual_ok:
            status = _IpmStatus.CONVERGED
            break
        if it - best_iter > _STALL_WINDOW:
            # degenerate problems stop making progress slightly above the mu
            # target; accept the iterate if it already meets the contract
            if viol <= feas_stop and dual_ok and mu <= max(100.0 * mu_stop, 1e-10):
                status = _IpmStatus.CONVERGED
            else:
                status = _IpmStatus.STALLED
            break

        d_a = z_a / s_a if r else np.zeros(0)
        d_u = z_u / s_u
        d_l = z_l / s_l
        m = _weighted_gram(a_s, d_a)
        if q is not None:
            m = m + q
        m[np.diag_indices(d)] += d_u + d_l

        reg = 0.0
        while True:
            try:
                factor = cho_factor(m if reg == 0.0 else m + reg * np.eye(d), lower=True)
                break
            except np.linalg.LinAlgError:
                reg = max(reg * 10.0, 1e-12 * (1.0 + float(np.trace(m)) / d))
                if reg > 1e2:
                    raise NumericalFailure(
                        f"normal-equation matrix not factorizable (iteration {it})"
                    )

        def direction(rc_a, rc_u, rc_l):
            rhs = -r_d.copy()
            if r:
                rhs -= a_s.T @ (rc_a / s_a + d_a * r_a)
            rhs -= rc_u / s_u + d_u * r_u
            rhs += rc_l / s_l + d_l * r_l
            dy = cho_solve(factor, rhs)
            ds_a = (-r_a - a_s @ dy) if r else np.zeros(0)
            ds_u = -r_u - dy
            ds_l = -r_l + dy
            dz_a = (rc_a - z_a * ds_a) / s_a if r else np.zeros(0)
            dz_u = (rc_u - z_u * ds_u) / s_u
            dz_l = (rc_l - z_l * ds_l) / s_l
            return dy, ds_a, ds_u, ds_l, dz_a, dz_u, dz_l

        # predictor
        dy, ds_a, ds_u, ds_l, dz_a, dz_u, dz_l = direction(-s_a * z_a, -s_u * z_u, -s_l * z_l)
        alpha_p = min(_step_to_boundary(s_a, ds_a),
                      _step_to_boundary(s_u, ds_u),
                      _step_to_boundary(s_l, ds_l))
        alpha_d = min(_step_to_boundary(z_a, dz_a),
                      _step_to_boundary(z_u, dz_u),
                      _step_to_boundary(z_l, dz_l))
        mu_aff = (
            float((s_a + alpha_p * ds_a) @ (z_a + alpha_d * dz_a))
            + float((s_u + alpha_p * ds_u) @ (z_u + alpha_d * dz_u))
            + float((s_l + alpha_p * ds_l) @ (z_l + alpha_d * dz_l))
        ) / count
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

        # corrector
        dy, ds_a, ds_u, ds_l, dz_a, dz_u, dz_l = direction(
            -s_a * z_a + sigma * mu - ds_a * dz_a,
            -s_u * z_u + sigma * mu - ds_u * dz_u,
            -s_l * z_l + sigma * mu - ds_l * dz_l,
        )
        alpha_p = _STEP_FRACTION * min(_step_to_boundary(s_a, ds_a),
                                       _step_to_boundary(s_u, ds_u),
                                       _step_to_boundary(s_l, ds_l))
        alpha_d = _STEP_FRACTION * min(_step_to_boundary(z_a, dz_a),
                                       _step_to_boundary(z_u, dz_u),
                                       _step_to_boundary(z_l, dz_l))
        y = y + alpha_p * dy
        s_a = s_a + alpha_p * ds_a
        s_u = s_u + alpha_p * ds_u
        s_l = s_l + alpha_p * ds_l
        z_a = z_a + alpha_d * dz_a
        z_u = z_u + alpha_d * dz_u
        z_l = z_l + alpha_d * dz_l

    return y, status, it, mu, viol


def _phase1(system: ConstraintSystem, settings: SolverSettings):
    """Max-margin feasibility LP over (y, t): maximize t s.t. a y + t <= b.

    Optimal t > 0 certifies interior feasibility; t below -feas_tol means no
    point can satisfy the contract.
    """
    r, d = system.rows, system.dim
    y_mid = 0.5 * (system.lower + system.upper)
    if r:
        slack0 = float(np.min(system.b - system.a @ y_mid))
        a1 = np.hstack([system.a, np.ones((r, 1))])
    else:
        slack0 = 1.0
        a1 = np.zeros((0, d + 1))
    t_hi = max(1.0, slack0 + 1.0)
    t_lo = min(0.0, slack0) - 1.0
    lower = np.append(system.lower, t_lo)
    upper = np.append(system.upper, t_hi)
    c = np.zeros(d + 1)
    c[-1] = -1.0

    y1, status, iters, mu, _ = _ipm(a1, system.b, lower, upper, None, c, settings)
    if status is not _IpmStatus.CONVERGED:
        raise NumericalFailure(
            f"feasibility phase did not converge (status={status.value}, "
            f"iterations={iters}, mu={mu:.3e})"
        )
    return y1[:d], float(y1[-1]), iters


def _objective_terms(objective: Objective | None, dim: int):
    if objective is None or objective.kind is ObjectiveKind.NONE:
        return None, np.zeros(dim)
    if objective.kind is ObjectiveKind.MIN_SQUARED_NORM:
        return 2.0 * np.eye(dim), np.zeros(dim)
    if objective.kind is ObjectiveKind.MIN_SQUARED_DISTANCE:
        if objective.target is None or objective.target.size != dim:
            raise InvalidInput("objective target length must match system dimension")
        return 2.0 * np.eye(dim), -2.0 * objective.target
    raise InvalidInput(f"unknown objective kind: {objective.kind!r}")


def _objective_value(objective: Objective | None, y: np.ndarray) -> float | None:
    if objective is None or objective.kind is ObjectiveKind.NONE:
        return None
    if objective.kind is ObjectiveKind.MIN_SQUARED_NORM:
        return float(y @ y)
    diff = y - objective.target
    return float(diff @ diff)


def _drop_vacuous_rows(system: ConstraintSystem, feas_tol: float):
    """Remove all-zero rows (coefficient cancellation) before solving.

    A zero row with rhs >= 0 is trivially satisfied; with rhs < -feas_tol it
    certifies infeasibility outright. Left in place, zero rows would cap the
    phase-1 margin at zero and defeat the interior centering.
    """
    if not system.rows:
        return system, 0
    zero = ~np.any(system.a, axis=1)
    n_zero = int(np.count_nonzero(zero))
    if n_zero == 0:
        return system, 0
    worst = float(np.min(system.b[zero]))
    if worst < -feas_tol:
        raise Infeasible(
            f"vacuous constraint row demands 0 <= {worst:.3e}"
        )
    pruned = ConstraintSystem(
        a=system.a[~zero], b=system.b[~zero],
        lower=system.lower, upper=system.upper,
    )
    return pruned, n_zero


def solve(system: ConstraintSystem, objective: Objective | None = None,
          settings: SolverSettings | None = None) -> SolveResult:
    """Solve the system, optionally minimizing a convex quadratic objective.

    Without an objective, returns a strictly interior max-margin point.
    Raises Infeasible when no point satisfies the system within
    ``feas_tol``, NumericalFailure when the method cannot certify either
    outcome.
    """
    settings = settings or SolverSettings()
    q, c = _objective_terms(objective, system.dim)
    work, dropped = _drop_vacuous_rows(system, settings.feas_tol)

    if q is None:
        y, margin, iters = _phase1(work, settings)
        if margin < -settings.feas_tol:
            raise Infeasible(
                f"no feasible point: best achievable margin {margin:.3e}"
            )
        viol = max_violation(system, y)
        if viol > settings.feas_tol:
            raise NumericalFailure(
                f"feasibility residual {viol:.3e} exceeds feas_tol after phase 1"
            )
        return SolveResult(
            y=y,
            diagnostics=SolveDiagnostics(
                iterations=iters, max_violation=viol,
                min_slack=min_slack(system, y), mu=0.0, phase1_margin=margin,
                notes={"vacuous_rows_dropped": dropped} if dropped else {},
            ),
        )

    y, status, iters, mu, _ = _ipm(
        work.a, work.b, work.lower, work.upper, q, c, settings
    )
    if status is not _IpmStatus.CONVERGED:
        # distinguish an infeasible system from a numerical breakdown
        _, margin, p1_iters = _phase1(work, settings)
        if margin < -settings.feas_tol:
            raise Infeasible(
                f"no feasible point: best achievable margin {margin:.3e}"
            )
        raise NumericalFailure(
            f"QP did not converge (status={status.value}, iterations={iters}, "
            f"mu={mu:.3e}) although the system is feasible "
            f"(margin {margin:.3e} in {p1_iters} phase-1 iterations)"
        )
    viol = max_violation(system, y)
    if viol > settings.feas_tol:
        raise NumericalFailure(
            f"solution residual {viol:.3e} exceeds feas_tol {settings.feas_tol:.1e}"
        )
    return SolveResult(
        y=y,
        diagnostics=SolveDiagnostics(
            iterations=iters, max_violation=viol,
            min_slack=min_slack(system, y), mu=mu,
            objective_value=_objective_value(objective, y),
            notes={"vacuous_rows_dropped": dropped} if dropped else {},
        ),
    )
