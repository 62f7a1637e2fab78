"""Stolen-token attack constructions for GRP-IoM and URP-IoM.

Constraint builders turn leaked (secret, template) pairs into the linear
systems a preimage must satisfy; preimage finders wrap the solver; the
remaining helpers cover multi-leak refinement, the sign-guess search-space
estimate, and the linkability statistics.

Strictness convention: a template entry u_i pins the i-th window's maximum
at index u_i with ties broken to the smallest index, so losing indices
j < u_i must lose *strictly* (their rows get rhs -margin) while j > u_i may
tie (rhs 0). ``symmetric_margin`` applies the margin to both sides for
callers that want extra slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DegenerateInput, InvalidInput, SchemeParams, Unsupported, as_template, comparison_score, verify_template
from .grp import GrpSecret, grp_transform
from .optimizer import ConstraintSystem, Objective, SolveResult, SolverSettings, solve
from .urp import UrpSecret, urp_transform

DEFAULT_MARGIN = 1e-6
DEFAULT_LOG_BOUNDS = (-10.0, 1.0)


@dataclass(frozen=True)
class Leak:
    """One stolen (secret parameter set, template) pair."""

    secret: GrpSecret | UrpSecret
    template: np.ndarray

    def __post_init__(self):
        params = self.secret.params
        object.__setattr__(
            self, "template", as_template(self.template, m=params.m, k=params.k)
        )


@dataclass
class Preimage:
    """A recovered feature-vector candidate plus solver provenance."""

    values: np.ndarray
    kind: str  # "nearby_template" | "nearby_feature"
    provenance: dict = field(default_factory=dict)


def _leak_params(leaks: list[Leak], want: type) -> SchemeParams:
    if not leaks:
        raise InvalidInput("at least one leak is required")
    params = leaks[0].secret.params
    for leak in leaks:
        if not isinstance(leak.secret, want):
            raise InvalidInput(f"expected {want.__name__} leaks")
        if leak.secret.params.n != params.n:
            raise InvalidInput("leaks disagree on feature length n")
    return params


def grp_build_constraints(leaks: list[Leak], margin: float = DEFAULT_MARGIN,
                          symmetric_margin: bool = False,
                          bound: float = 1.0) -> ConstraintSystem:
    """Inequality system pinning each leaked GRP window's argmax.

    One row per (leak, window i, losing index j): the projection at j must
    not exceed the projection at u_i. Rows per leak: (k-1) * m; variables
    are box-bounded to [-bound, bound].
    """
    if margin < 0:
        raise InvalidInput("margin must be >= 0")
    params = _leak_params(leaks, GrpSecret)
    n, k, m = params.n, params.k, params.m
    rows = np.empty((len(leaks) * (k - 1) * m, n))
    rhs = np.empty(rows.shape[0])
    r = 0
    for leak in leaks:
        mats = leak.secret.matrices
        for i in range(m):
            u = int(leak.template[i]) - 1
            w_u = mats[i, :, u]
            for j in range(k):
                if j == u:
                    continue
                rows[r] = mats[i, :, j] - w_u
                rhs[r] = -margin if (j < u or symmetric_margin) else 0.0
                r += 1
    return ConstraintSystem(
        a=rows, b=rhs, lower=np.full(n, -bound), upper=np.full(n, bound)
    )


def grp_preimage(system: ConstraintSystem, objective: Objective | None = None,
                 settings: SolverSettings | None = None) -> Preimage:
    """Solve the GRP constraint system for a preimage candidate.

    Without an objective this is the authentication attack (the template is
    reproduced exactly by construction for margin > 0); quadratic
    objectives give the nearby-feature variants.
    """
    result = solve(system, objective, settings)
    quadratic = objective is not None and objective.kind.value != "none"
    return Preimage(
        values=result.y,
        kind="nearby_feature" if quadratic else "nearby_template",
        provenance=_provenance(result, system),
    )


def _provenance(result: SolveResult, system: ConstraintSystem) -> dict:
    d = result.diagnostics
    return {
        "iterations": d.iterations,
        "max_violation": d.max_violation,
        "min_slack": d.min_slack,
        "rows": system.rows,
        **({"phase1_margin": d.phase1_margin} if d.phase1_margin is not None else {}),
        **({"objective_value": d.objective_value} if d.objective_value is not None else {}),
    }


def grp_sc_refine(leaks: list[Leak], margin: float = DEFAULT_MARGIN,
                  symmetric_margin: bool = False, bound: float = 1.0,
                  settings: SolverSettings | None = None) -> Preimage:
    """Multi-leak attack with selected constraints.

    Solves leak 1 in full, then for each further leak keeps only the
    constraint groups (windows) where the current iterate's predicted
    template disagrees with that leak's template, re-solving after each
    augmentation. Cuts constraint count and solve time relative to pooling
    everything.
    """
    if len(leaks) < 2:
        raise InvalidInput("selected-constraint refinement needs at least 2 leaks")
    params = _leak_params(leaks, GrpSecret)
    n, k, m = params.n, params.k, params.m

    system = grp_build_constraints([leaks[0]], margin, symmetric_margin, bound)
    rows = [system.a]
    rhs = [system.b]
    counts = [system.rows]
    result = solve(system, None, settings)

    for leak in leaks[1:]:
        predicted = grp_transform(leak.secret, result.y)
        diff = predicted - leak.template
        mats = leak.secret.matrices
        extra_rows = []
        extra_rhs = []
        for i in np.nonzero(diff)[0]:
            u = int(leak.template[i]) - 1
            w_u = mats[i, :, u]
            for j in range(k):
                if j == u:
                    continue
                extra_rows.append(mats[i, :, j] - w_u)
                extra_rhs.append(-margin if (j < u or symmetric_margin) else 0.0)
        if extra_rows:
            rows.append(np.array(extra_rows))
            rhs.append(np.array(extra_rhs))
        counts.append(sum(a.shape[0] for a in rows))
        system = ConstraintSystem(
            a=np.vstack(rows), b=np.concatenate(rhs),
            lower=np.full(n, -bound), upper=np.full(n, bound),
        )
        result = solve(system, None, settings)

    pre = Preimage(values=result.y, kind="nearby_template",
                   provenance=_provenance(result, system))
    pre.provenance["constraint_counts"] = counts
    pre.provenance["selected_rows"] = counts[-1]
    pre.provenance["full_rows"] = len(leaks) * (k - 1) * m
    return pre


def grp_long_lived(preimage: Preimage, new_secret: GrpSecret,
                   new_template, tau: float) -> dict:
    """Score a stale preimage against a re-enrolled (secret, template) pair."""
    new_template = as_template(new_template, m=new_secret.params.m, k=new_secret.params.k)
    replayed = grp_transform(new_secret, preimage.values)
    score = comparison_score(replayed, new_template)
    return {"score": score, "accepted": verify_template(replayed, new_template, tau)}


def urp_build_constraints(leaks: list[Leak], margin: float = DEFAULT_MARGIN,
                          log_bounds: tuple[float, float] = DEFAULT_LOG_BOUNDS,
                          symmetric_margin: bool = False) -> ConstraintSystem:
    """Log-linearized inequality system for URP leaks (depth p = 2 only).

    Variables are c_i = log x_i; each losing window index contributes the
    row c_{s1(j)} + c_{s2(j)} - c_{s1(u)} - c_{s2(u)} <= 0 (or <= -margin
    when strict), with coefficients accumulating on index collisions.
    Positivity of x is enforced by the finite log-variable box.
    """
    if margin < 0:
        raise InvalidInput("margin must be >= 0")
    params = _leak_params(leaks, UrpSecret)
    if params.p != 2:
        raise Unsupported(f"URP attack is formulated for p = 2, got p = {params.p}")
    lo, hi = log_bounds
    if not lo < hi:
        raise InvalidInput("log_bounds must satisfy lo < hi")
    n, k, m = params.n, params.k, params.m
    rows = np.zeros((len(leaks) * (k - 1) * m, n))
    rhs = np.empty(rows.shape[0])
    r = 0
    for leak in leaks:
        perms = leak.secret.perms - 1  # 0-based (m, 2, k)
        for i in range(m):
            u = int(leak.template[i]) - 1
            s1, s2 = perms[i, 0], perms[i, 1]
            for j in range(k):
                if j == u:
                    continue
                row = rows[r]
                row[s1[j]] += 1.0
                row[s2[j]] += 1.0
                row[s1[u]] -= 1.0
                row[s2[u]] -= 1.0
                rhs[r] = -margin if (j < u or symmetric_margin) else 0.0
                r += 1
    return ConstraintSystem(
        a=rows, b=rhs, lower=np.full(n, lo), upper=np.full(n, hi)
    )


def urp_preimage(system: ConstraintSystem,
                 settings: SolverSettings | None = None) -> Preimage:
    """Solve the log system and exponentiate: a strictly positive preimage."""
    result = solve(system, None, settings)
    pre = Preimage(
        values=np.exp(result.y),
        kind="nearby_template",
        provenance=_provenance(result, system),
    )
    pre.provenance["log_values"] = True
    return pre


def urp_long_lived(preimage: Preimage, new_secret: UrpSecret,
                   new_template, tau: float) -> dict:
    """URP counterpart of grp_long_lived."""
    new_template = as_template(new_template, m=new_secret.params.m, k=new_secret.params.k)
    replayed = urp_transform(new_secret, preimage.values)
    score = comparison_score(replayed, new_template)
    return {"score": score, "accepted": verify_template(replayed, new_template, tau)}


def sign_guess_bits(range_count: int, n: int, sign_accuracy: float) -> float:
    """Search-space size, in bits, after sign guessing.

    Knowing each component's sign halves its value range; imperfect
    per-component sign accuracy multiplies the space back up by
    1/accuracy per component.
    """
    if range_count < 2:
        raise InvalidInput("range_count must be >= 2")
    if n < 1:
        raise InvalidInput("n must be >= 1")
    if not 0.0 < sign_accuracy <= 1.0:
        raise InvalidInput("sign_accuracy must be in (0, 1]")
    return n * (math.log2(range_count / 2.0) + math.log2(1.0 / sign_accuracy))


def exhaustive_search_bits(range_count: int, n: int) -> float:
    """Baseline search-space size in bits, with no sign knowledge."""
    if range_count < 2:
        raise InvalidInput("range_count must be >= 2")
    if n < 1:
        raise InvalidInput("n must be >= 1")
    return n * math.log2(range_count)


def beta_sign_agreement(x, y) -> int:
    """Number of components on which two vectors have compatible signs.

    A zero product counts as agreement, matching the indicator
    1[x_i * y_i >= 0]; this keeps the statistic symmetric.
    """
    a = np.asarray(x, dtype=np.float64).ravel()
    b = np.asarray(y, dtype=np.float64).ravel()
    if a.size != b.size:
        raise InvalidInput(f"vector lengths differ: {a.size} vs {b.size}")
    return int(np.count_nonzero(a * b >= 0.0))


def pearson(x, y) -> float:
    """Pearson correlation coefficient of two equal-length vectors."""
    a = np.asarray(x, dtype=np.float64).ravel()
    b = np.asarray(y, dtype=np.float64).ravel()
    if a.size != b.size:
        raise InvalidInput(f"vector lengths differ: {a.size} vs {b.size}")
    if a.size < 2:
        raise InvalidInput("pearson requires length >= 2")
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(da @ da)) * math.sqrt(float(db @ db))
    if denom == 0.0:
        raise DegenerateInput("pearson undefined for a constant vector")
    return float(da @ db) / denom


@dataclass(frozen=True)
class BetaMetric:
    threshold: int

    def decide(self, x, y) -> int:
        return 1 if beta_sign_agreement(x, y) >= self.threshold else 0

    def value(self, x, y) -> float:
        return float(beta_sign_agreement(x, y))


@dataclass(frozen=True)
class PearsonMetric:
    threshold: float

    def decide(self, x, y) -> int:
        return 1 if abs(pearson(x, y)) >= self.threshold else 0

    def value(self, x, y) -> float:
        return abs(pearson(x, y))


def link_decide(x_star: Preimage, y_star: Preimage,
                metric: BetaMetric | PearsonMetric) -> int:
    """Same-user verdict (1) when the metric value meets its threshold."""
    return metric.decide(x_star.values, y_star.values)
