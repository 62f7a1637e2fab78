"""Rate computation and experiment reports.

Score conventions: Euclidean scores are distances (genuine pairs score
low, accept-below); similarity and template comparison scores are rates
(genuine pairs score high, accept-above). Aggregation uses exact summation
(math.fsum) so results are independent of trial ordering.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInput, SchemeParams, similarity_score
from .dataset import Corpus
from .grp import grp_gen_secret, grp_transform
from .urp import urp_gen_secret, urp_transform

ACCEPT_BELOW = "accept_below"
ACCEPT_ABOVE = "accept_above"

REPORT_SCHEMA = "iomlab-report-v1"


@dataclass(frozen=True)
class ScoreStats:
    min: float
    avg: float
    max: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise InvalidInput("ScoreStats needs at least one score")
        if not 0.0 <= self.min <= self.avg <= self.max <= 1.0:
            raise InvalidInput(
                f"ScoreStats out of order: min={self.min} avg={self.avg} max={self.max}"
            )

    @staticmethod
    def from_scores(scores) -> "ScoreStats":
        vals = [float(s) for s in scores]
        if not vals:
            raise InvalidInput("cannot summarize an empty score list")
        return ScoreStats(
            min=min(vals), avg=math.fsum(vals) / len(vals),
            max=max(vals), count=len(vals),
        )


@dataclass
class ExperimentReport:
    """Everything needed to read off an experiment and re-run it bit-identically."""

    kind: str
    config: dict
    stats: dict[str, ScoreStats] = field(default_factory=dict)
    rates: dict[str, float] = field(default_factory=dict)
    baseline: dict[str, float] = field(default_factory=dict)
    advantage: dict[str, float] = field(default_factory=dict)
    trials: int = 0
    failures: int = 0
    scores: dict[str, list[float]] = field(default_factory=dict)
    table: dict = field(default_factory=dict)
    schema_version: str = REPORT_SCHEMA

    def __post_init__(self):
        for name, rate in self.rates.items():
            if not 0.0 <= rate <= 1.0:
                raise InvalidInput(f"rate {name}={rate} outside [0, 1]")

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    @property
    def completed(self) -> int:
        return self.trials - self.failures

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "kind": self.kind,
            "config": self.config,
            "stats": {k: vars(v) for k, v in self.stats.items()},
            "rates": self.rates,
            "baseline": self.baseline,
            "advantage": self.advantage,
            "trials": self.trials,
            "failures": self.failures,
            "failure_rate": self.failure_rate,
            "scores": self.scores,
            "table": self.table,
        }

    @staticmethod
    def from_dict(data: dict) -> "ExperimentReport":
        if data.get("schema_version") != REPORT_SCHEMA:
            raise InvalidInput(f"unknown report schema: {data.get('schema_version')!r}")
        return ExperimentReport(
            kind=data["kind"],
            config=data["config"],
            stats={k: ScoreStats(**v) for k, v in data["stats"].items()},
            rates=data["rates"],
            baseline=data["baseline"],
            advantage=data["advantage"],
            trials=data["trials"],
            failures=data["failures"],
            scores=data["scores"],
            table=data["table"],
        )


def _pairwise_masks(corpus: Corpus):
    """Index bookkeeping for all-pairs scoring over the flattened corpus."""
    owners = np.array([ui for ui, _, _ in corpus.all_samples()])
    iu, ju = np.triu_indices(owners.size, k=1)
    genuine = owners[iu] == owners[ju]
    return iu, ju, genuine


def score_distributions(corpus: Corpus, metric: str,
                        scheme_params: SchemeParams | None = None,
                        scheme_seed: int | None = None) -> dict:
    """All genuine and impostor pairwise scores under one metric.

    metric: "euclidean" (distances), "similarity", or
    "template_grp"/"template_urp" (comparison scores under one fresh secret
    derived from scheme_seed).
    """
    if corpus.user_count < 2:
        raise InvalidInput("score distributions need at least 2 users")
    x = np.array([s for _, _, s in corpus.all_samples()])
    iu, ju, genuine = _pairwise_masks(corpus)

    if metric == "euclidean":
        gram = x @ x.T
        sq = np.diag(gram)
        d2 = np.maximum(sq[iu] + sq[ju] - 2.0 * gram[iu, ju], 0.0)
        vals = np.sqrt(d2)
        direction = ACCEPT_BELOW
    elif metric == "similarity":
        gram = x @ x.T
        sq = np.diag(gram)
        denom = sq[iu] + sq[ju]
        if np.any(denom == 0.0):
            raise InvalidInput("corpus contains two all-zero samples")
        vals = gram[iu, ju] / denom
        direction = ACCEPT_ABOVE
    elif metric in ("template_grp", "template_urp"):
        if scheme_params is None or scheme_seed is None:
            raise InvalidInput("template metrics need scheme_params and scheme_seed")
        if metric == "template_grp":
            secret = grp_gen_secret(scheme_seed, scheme_params)
            templates = np.array([grp_transform(secret, s) for s in x])
        else:
            secret = urp_gen_secret(scheme_seed, scheme_params)
            templates = np.array([urp_transform(secret, s) for s in x])
        vals = (templates[iu] == templates[ju]).mean(axis=1)
        direction = ACCEPT_ABOVE
    else:
        raise InvalidInput(f"unknown metric {metric!r}")

    return {
        "genuine": vals[genuine].tolist(),
        "impostor": vals[~genuine].tolist(),
        "direction": direction,
        "metric": metric,
    }


def rates_at_threshold(dists: dict, tau: float, direction: str | None = None) -> dict:
    """Empirical FMR and FNMR of the score distributions at one threshold."""
    genuine = np.asarray(dists["genuine"], dtype=np.float64)
    impostor = np.asarray(dists["impostor"], dtype=np.float64)
    if genuine.size == 0 or impostor.size == 0:
        raise InvalidInput("rates need non-empty genuine and impostor distributions")
    direction = direction or dists.get("direction")
    if direction == ACCEPT_BELOW:
        fmr = float(np.mean(impostor <= tau))
        fnmr = float(np.mean(genuine > tau))
    elif direction == ACCEPT_ABOVE:
        fmr = float(np.mean(impostor >= tau))
        fnmr = float(np.mean(genuine < tau))
    else:
        raise InvalidInput(f"unknown direction {direction!r}")
    return {"fmr": fmr, "fnmr": fnmr}


def eer(dists: dict, direction: str | None = None) -> dict:
    """Equal-error operating point, linearly interpolated between the two
    adjacent empirical thresholds bracketing FMR = FNMR."""
    genuine = np.asarray(dists["genuine"], dtype=np.float64)
    impostor = np.asarray(dists["impostor"], dtype=np.float64)
    if genuine.size == 0 or impostor.size == 0:
        raise InvalidInput("eer needs non-empty genuine and impostor distributions")
    direction = direction or dists.get("direction")
    grid = np.unique(np.concatenate([genuine, impostor]))
    # extend the grid so FMR/FNMR reach their extremes on both ends
    span = max(grid[-1] - grid[0], 1.0)
    grid = np.concatenate([[grid[0] - 1e-9 * span], grid, [grid[-1] + 1e-9 * span]])

    def diff(tau: float) -> float:
        r = rates_at_threshold(dists, tau, direction)
        return r["fmr"] - r["fnmr"]

    diffs = np.array([diff(t) for t in grid])
    if direction == ACCEPT_ABOVE:
        # fmr - fnmr decreases with tau; flip so the scan below sees ascending
        grid = grid[::-1]
        diffs = diffs[::-1]

    idx = int(np.searchsorted(diffs >= 0.0, True))
    if idx == 0:
        tau_star = float(grid[0])
    elif idx >= grid.size:
        tau_star = float(grid[-1])
    else:
        d0, d1 = diffs[idx - 1], diffs[idx]
        t0, t1 = grid[idx - 1], grid[idx]
        tau_star = float(t0) if d1 == d0 else float(t0 + (0.0 - d0) * (t1 - t0) / (d1 - d0))
    r = rates_at_threshold(dists, tau_star, direction)
    return {"eer": 0.5 * (r["fmr"] + r["fnmr"]), "tau_star": tau_star}


def emit_report(report: ExperimentReport, path, fmt: str = "json") -> None:
    """Serialize a report deterministically as JSON or a paper-layout CSV table."""
    if report.completed < 1:
        raise InvalidInput("refusing to emit a report with no completed trials")
    if fmt == "json":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    elif fmt == "csv":
        table = report.table or _default_table(report)
        columns = table["columns"]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("statistic," + ",".join(str(c) for c in columns) + "\n")
            for name, values in table["rows"].items():
                cells = ",".join(_fmt_cell(v) for v in values)
                fh.write(f"{name},{cells}\n")
    else:
        raise InvalidInput(f"unknown report format {fmt!r}")


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _default_table(report: ExperimentReport) -> dict:
    rows = {}
    for name, st in report.stats.items():
        rows[f"{name}_min"] = [st.min]
        rows[f"{name}_avg"] = [st.avg]
        rows[f"{name}_max"] = [st.max]
    for name, rate in report.rates.items():
        rows[name] = [rate]
    return {"columns": [report.kind], "rows": rows}
