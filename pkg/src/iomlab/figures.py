"""Report figures: histogram renderings of the score series a report
carries, written as PNG files next to the JSON/CSV output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .evaluation import ExperimentReport  # noqa: E402

_SERIES_STYLE = {
    "auth_score": ("comparison score", "tab:blue"),
    "long_lived_score": ("comparison score", "tab:blue"),
    "euclidean_distance": ("Euclidean distance to true feature", "tab:orange"),
    "similarity": ("similarity to true feature", "tab:green"),
}


def _bins(values, n=40):
    lo, hi = min(values), max(values)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    return n, (lo, hi)


def render_report_figures(report: ExperimentReport, base_path: str) -> list[str]:
    """Write one histogram PNG per score series in the report.

    Returns the list of file paths written. Reports with paired
    genuine/impostor series get a single overlaid figure with the decision
    threshold marked.
    """
    written: list[str] = []
    scores = {k: v for k, v in report.scores.items() if v}
    if not scores:
        return written

    if "genuine_metric" in scores and "impostor_metric" in scores:
        path = f"{base_path}_link.png"
        fig, ax = plt.subplots(figsize=(6, 4))
        pooled = scores["genuine_metric"] + scores["impostor_metric"]
        bins, rng = _bins(pooled)
        ax.hist(scores["impostor_metric"], bins=bins, range=rng, alpha=0.6,
                label="impostor pairs", color="tab:red", density=True)
        ax.hist(scores["genuine_metric"], bins=bins, range=rng, alpha=0.6,
                label="genuine pairs", color="tab:green", density=True)
        t = report.config.get("t_link")
        if t is not None:
            ax.axvline(t, color="k", linestyle="--", label=f"t_link = {t}")
        ax.set_xlabel("distinguisher statistic")
        ax.set_ylabel("density")
        ax.set_title(f"{report.kind}: rate_link = {report.rates.get('rate_link', 0):.3f}")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
        scores.pop("genuine_metric")
        scores.pop("impostor_metric")

    for name, values in scores.items():
        label, color = _SERIES_STYLE.get(name, (name, "tab:blue"))
        path = f"{base_path}_{name}.png"
        fig, ax = plt.subplots(figsize=(6, 4))
        bins, rng = _bins(values)
        ax.hist(values, bins=bins, range=rng, color=color, alpha=0.8)
        tau = report.config.get("params", {}).get("tau")
        if tau is not None and name in ("auth_score", "long_lived_score"):
            ax.axvline(tau, color="k", linestyle="--", label=f"tau = {tau}")
            ax.legend()
        ax.set_xlabel(label)
        ax.set_ylabel("trials")
        ax.set_title(f"{report.kind}: {name} over {len(values)} trials")
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def render_distribution_figure(dists: dict, tau: float | None, path: str,
                               title: str = "score distributions") -> str:
    """Genuine/impostor score histogram for an eval run."""
    fig, ax = plt.subplots(figsize=(6, 4))
    pooled = list(dists["genuine"]) + list(dists["impostor"])
    bins, rng = _bins(pooled)
    ax.hist(dists["impostor"], bins=bins, range=rng, alpha=0.6,
            label="impostor", color="tab:red", density=True)
    ax.hist(dists["genuine"], bins=bins, range=rng, alpha=0.6,
            label="genuine", color="tab:green", density=True)
    if tau is not None:
        ax.axvline(tau, color="k", linestyle="--", label=f"tau = {tau}")
    ax.set_xlabel(f"{dists.get('metric', 'score')} ({dists.get('direction', '')})")
    ax.set_ylabel("density")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
