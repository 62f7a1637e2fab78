"""Experiment runners: each one executes an attack protocol over a corpus
and produces an ExperimentReport.

Seed discipline: one master seed per run; every secret, trial pick, and
pair draw uses a stream derived via SeedSequence spawn keys, so a report's
config replays the experiment bit-identically. Spawn key layout:
(1, *path) secrets, (2,) pair sampling, (3,) trial/user picks,
(4,) baseline scheme secret.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .attacks import (
    BetaMetric,
    Leak,
    PearsonMetric,
    Preimage,
    grp_build_constraints,
    grp_long_lived,
    grp_preimage,
    grp_sc_refine,
    urp_build_constraints,
    urp_long_lived,
    urp_preimage,
)
from .core import (
    FeatureMetric,
    FeatureThresholds,
    InvalidInput,
    SchemeParams,
    euclidean_distance,
    similarity_score,
    verify_feature,
)
from .dataset import Corpus, corpus_mean
from .evaluation import (
    ACCEPT_ABOVE,
    ACCEPT_BELOW,
    ExperimentReport,
    ScoreStats,
    eer,
    rates_at_threshold,
    score_distributions,
)
from .grp import grp_gen_secret, grp_transform
from .optimizer import Infeasible, NumericalFailure, Objective, SolverSettings
from .urp import urp_gen_secret, urp_transform

SOLVER_ERRORS = (Infeasible, NumericalFailure)


def derived_seed(master: int, *path: int) -> int:
    """Deterministic 64-bit sub-seed for a named component stream."""
    ss = np.random.SeedSequence(entropy=master, spawn_key=tuple(path))
    return int(ss.generate_state(1, np.uint64)[0])


def _map_trials(fn, items, threads: int):
    """Run independent trial bodies, preserving item order in the results.

    Results land in input order regardless of completion order, so serial
    and threaded runs aggregate identically.
    """
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _params_dict(params: SchemeParams) -> dict:
    return {"n": params.n, "k": params.k, "m": params.m, "p": params.p, "tau": params.tau}


def _settings_dict(settings: SolverSettings) -> dict:
    return {
        "feas_tol": settings.feas_tol,
        "opt_tol": settings.opt_tol,
        "max_iter": settings.max_iter,
    }


def _template_baseline(corpus: Corpus, params: SchemeParams, seed: int,
                       scheme: str) -> dict:
    dists = score_distributions(
        corpus, f"template_{scheme}", scheme_params=params,
        scheme_seed=derived_seed(seed, 4),
    )
    rates = rates_at_threshold(dists, params.tau, ACCEPT_ABOVE)
    point = eer(dists)
    return {"fmr": rates["fmr"], "fnmr": rates["fnmr"], "eer": point["eer"]}


def _objective_for_case(case: str, corpus: Corpus, rng: np.random.Generator):
    """Reversibility objective cases: none, min_norm, mean (corpus average),
    sample (one held-out user's randomly chosen sample)."""
    if case == "none":
        return None, None
    if case == "min_norm":
        return Objective.min_squared_norm(), None
    if case == "mean":
        return Objective.min_squared_distance_to(corpus_mean(corpus)), None
    if case == "sample":
        target_user = int(rng.integers(corpus.user_count))
        rec = corpus.users[target_user]
        target = rec.samples[int(rng.integers(len(rec.samples)))]
        return Objective.min_squared_distance_to(target), target_user
    raise InvalidInput(f"unknown objective case {case!r}")


def _run_auth(corpus: Corpus, params: SchemeParams, seed: int, scheme: str,
              trials: int, margin: float, log_bounds: tuple[float, float],
              settings: SolverSettings, threads: int) -> ExperimentReport:
    rng = np.random.default_rng(derived_seed(seed, 3))
    picks = []
    for t in range(trials):
        ui = int(rng.integers(corpus.user_count))
        si = int(rng.integers(len(corpus.users[ui].samples)))
        picks.append((t, ui, si))

    def one_trial(pick):
        t, ui, si = pick
        x = corpus.users[ui].samples[si]
        sub = derived_seed(seed, 1, t)
        try:
            if scheme == "grp":
                secret = grp_gen_secret(sub, params)
                template = grp_transform(secret, x)
                system = grp_build_constraints([Leak(secret, template)], margin)
                pre = grp_preimage(system, None, settings)
                replay = grp_transform(secret, pre.values)
            else:
                secret = urp_gen_secret(sub, params)
                template = urp_transform(secret, x)
                system = urp_build_constraints([Leak(secret, template)], margin, log_bounds)
                pre = urp_preimage(system, settings)
                replay = urp_transform(secret, pre.values)
        except SOLVER_ERRORS:
            return None
        return float(np.mean(replay == template))

    outcomes = _map_trials(one_trial, picks, threads)
    scores = [s for s in outcomes if s is not None]
    failures = trials - len(scores)
    exact = sum(1 for s in scores if s == 1.0)
    accepted = sum(1 for s in scores if s >= params.tau)
    completed = len(scores)
    baseline = _template_baseline(corpus, params, seed, scheme)
    rate = accepted / completed if completed else 0.0
    config = {
        "params": _params_dict(params), "seed": seed, "trials": trials,
        "margin": margin, "solver": _settings_dict(settings), "threads": threads,
    }
    if scheme == "urp":
        config["log_bounds"] = list(log_bounds)
    return ExperimentReport(
        kind=f"{scheme}_auth",
        config=config,
        stats={"auth_score": ScoreStats.from_scores(scores)} if scores else {},
        rates={"rate_auth": rate,
               "rate_exact": exact / completed if completed else 0.0},
        baseline=baseline,
        advantage={"rate_auth": rate - baseline["fmr"]},
        trials=trials, failures=failures,
        scores={"auth_score": scores},
        table={"columns": ["N=1"],
               "rows": {"rate_auth": [rate],
                        "min_score": [min(scores)] if scores else [],
                        "avg_score": [math.fsum(scores) / len(scores)] if scores else []}},
    )


def run_grp_auth(corpus: Corpus, params: SchemeParams, seed: int,
                 trials: int = 50, margin: float = 1e-6,
                 settings: SolverSettings | None = None,
                 threads: int = 1) -> ExperimentReport:
    """Single-leak GRP authentication attack, fresh secret per trial."""
    return _run_auth(corpus, params, seed, "grp", trials, margin,
                     (-10.0, 1.0), settings or SolverSettings(), threads)


def run_urp_auth(corpus: Corpus, params: SchemeParams, seed: int,
                 trials: int = 50, margin: float = 1e-6,
                 log_bounds: tuple[float, float] = (-10.0, 1.0),
                 settings: SolverSettings | None = None,
                 threads: int = 1) -> ExperimentReport:
    """Single-leak URP authentication attack via the log-linearized system."""
    return _run_auth(corpus, params, seed, "urp", trials, margin,
                     log_bounds, settings or SolverSettings(), threads)


def run_grp_multi_leak(corpus: Corpus, params: SchemeParams, seed: int,
                       n_leaks: int = 1, selected: bool = False,
                       margin: float = 1e-6,
                       settings: SolverSettings | None = None,
                       threads: int = 1) -> ExperimentReport:
    """Long-lived GRP attack from N leaked enrollments of each user.

    Enrollment b uses the user's b-th sample (corpus order) under a fresh
    secret; the preimage is evaluated against the (N+1)-th enrollment, of
    which the adversary knows only the secret. selected=True runs the
    constraint-selection refinement instead of pooling all constraints.
    """
    settings = settings or SolverSettings()
    if n_leaks < 1:
        raise InvalidInput("n_leaks must be >= 1")
    if selected and n_leaks < 2:
        raise InvalidInput("constraint selection needs n_leaks >= 2")
    eligible = [ui for ui, rec in enumerate(corpus.users)
                if len(rec.samples) >= n_leaks + 1]
    if not eligible:
        raise InvalidInput(f"no user has {n_leaks + 1} samples")

    def one_user(ui):
        rec = corpus.users[ui]
        leaks = []
        for b in range(n_leaks):
            secret = grp_gen_secret(derived_seed(seed, 1, ui, b), params)
            leaks.append(Leak(secret, grp_transform(secret, rec.samples[b])))
        try:
            if selected:
                pre = grp_sc_refine(leaks, margin, settings=settings)
                count = pre.provenance["selected_rows"]
            else:
                system = grp_build_constraints(leaks, margin)
                pre = grp_preimage(system, None, settings)
                count = system.rows + 2 * params.n
        except SOLVER_ERRORS:
            return None
        new_secret = grp_gen_secret(derived_seed(seed, 1, ui, n_leaks), params)
        new_template = grp_transform(new_secret, rec.samples[n_leaks])
        outcome = grp_long_lived(pre, new_secret, new_template, params.tau)
        return outcome["score"], outcome["accepted"], count

    outcomes = _map_trials(one_user, eligible, threads)
    scores = [o[0] for o in outcomes if o is not None]
    accepted = sum(int(o[1]) for o in outcomes if o is not None)
    counts = [o[2] for o in outcomes if o is not None]
    failures = len(eligible) - len(scores)
    completed = len(scores)
    baseline = _template_baseline(corpus, params, seed, "grp")
    rate = accepted / completed if completed else 0.0
    avg_count = math.fsum(counts) / len(counts) if counts else 0.0
    label = f"N={n_leaks}"
    return ExperimentReport(
        kind="grp_sc" if selected else "grp_long_lived",
        config={
            "params": _params_dict(params), "seed": seed, "n_leaks": n_leaks,
            "selected": selected, "margin": margin,
            "solver": _settings_dict(settings), "users": len(eligible),
            "threads": threads,
        },
        stats={"long_lived_score": ScoreStats.from_scores(scores)} if scores else {},
        rates={"rate_auth_ll": rate},
        baseline=baseline,
        advantage={"rate_auth_ll": rate - baseline["fmr"]},
        trials=len(eligible), failures=failures,
        scores={"long_lived_score": scores},
        table={"columns": [label],
               "rows": {
                   "constraint_count_avg": [avg_count],
                   "min_score_pct": [100.0 * min(scores)] if scores else [],
                   "avg_score_pct": [100.0 * math.fsum(scores) / len(scores)] if scores else [],
                   "avg_score_over_users_pct":
                       [100.0 * math.fsum(scores) / len(scores)] if scores else [],
               }},
    )


def run_urp_long_lived(corpus: Corpus, params: SchemeParams, seed: int,
                       n_leaks: int = 1, margin: float = 1e-6,
                       log_bounds: tuple[float, float] = (-10.0, 1.0),
                       settings: SolverSettings | None = None,
                       threads: int = 1) -> ExperimentReport:
    """URP counterpart of run_grp_multi_leak (all constraints pooled)."""
    settings = settings or SolverSettings()
    if n_leaks < 1:
        raise InvalidInput("n_leaks must be >= 1")
    eligible = [ui for ui, rec in enumerate(corpus.users)
                if len(rec.samples) >= n_leaks + 1]
    if not eligible:
        raise InvalidInput(f"no user has {n_leaks + 1} samples")

    def one_user(ui):
        rec = corpus.users[ui]
        leaks = []
        for b in range(n_leaks):
            secret = urp_gen_secret(derived_seed(seed, 1, ui, b), params)
            leaks.append(Leak(secret, urp_transform(secret, rec.samples[b])))
        try:
            system = urp_build_constraints(leaks, margin, log_bounds)
            pre = urp_preimage(system, settings)
        except SOLVER_ERRORS:
            return None
        new_secret = urp_gen_secret(derived_seed(seed, 1, ui, n_leaks), params)
        new_template = urp_transform(new_secret, rec.samples[n_leaks])
        outcome = urp_long_lived(pre, new_secret, new_template, params.tau)
        return outcome["score"], outcome["accepted"], system.rows + 2 * params.n

    outcomes = _map_trials(one_user, eligible, threads)
    scores = [o[0] for o in outcomes if o is not None]
    accepted = sum(int(o[1]) for o in outcomes if o is not None)
    counts = [o[2] for o in outcomes if o is not None]
    failures = len(eligible) - len(scores)
    completed = len(scores)
    baseline = _template_baseline(corpus, params, seed, "urp")
    rate = accepted / completed if completed else 0.0
    return ExperimentReport(
        kind="urp_long_lived",
        config={
            "params": _params_dict(params), "seed": seed, "n_leaks": n_leaks,
            "margin": margin, "log_bounds": list(log_bounds),
            "solver": _settings_dict(settings), "users": len(eligible),
            "threads": threads,
        },
        stats={"long_lived_score": ScoreStats.from_scores(scores)} if scores else {},
        rates={"rate_auth_ll": rate},
        baseline=baseline,
        advantage={"rate_auth_ll": rate - baseline["fmr"]},
        trials=len(eligible), failures=failures,
        scores={"long_lived_score": scores},
        table={"columns": [f"N={n_leaks}"],
               "rows": {
                   "constraint_count_avg":
                       [math.fsum(counts) / len(counts)] if counts else [],
                   "min_score_pct": [100.0 * min(scores)] if scores else [],
                   "avg_score_pct": [100.0 * math.fsum(scores) / len(scores)] if scores else [],
               }},
    )


def run_grp_reversibility(corpus: Corpus, params: SchemeParams, seed: int,
                          objective_case: str = "none",
                          tau_euc_list: tuple[float, ...] = (0.33, 0.2, 0.15, 0.1),
                          thresholds: FeatureThresholds | None = None,
                          margin: float = 1e-6,
                          settings: SolverSettings | None = None,
                          threads: int = 1) -> ExperimentReport:
    """Nearby-feature reversibility attack with an optional quadratic objective.

    Attacks one randomly chosen sample per user (all users except, for the
    "sample" case, the held-out user providing the objective target) and
    measures success against the true feature vector per threshold.
    """
    settings = settings or SolverSettings()
    thresholds = thresholds or FeatureThresholds()
    rng = np.random.default_rng(derived_seed(seed, 3))
    objective, held_out = _objective_for_case(objective_case, corpus, rng)
    jobs = []
    for ui, rec in enumerate(corpus.users):
        si = int(rng.integers(len(rec.samples)))
        if held_out is not None and ui == held_out:
            continue
        jobs.append((ui, si))

    def one_user(job):
        ui, si = job
        x = corpus.users[ui].samples[si]
        secret = grp_gen_secret(derived_seed(seed, 1, ui), params)
        template = grp_transform(secret, x)
        system = grp_build_constraints([Leak(secret, template)], margin)
        try:
            pre = grp_preimage(system, objective, settings)
        except SOLVER_ERRORS:
            return None
        return euclidean_distance(x, pre.values), similarity_score(x, pre.values)

    outcomes = _map_trials(one_user, jobs, threads)
    attacked = len(jobs)
    distances = [o[0] for o in outcomes if o is not None]
    sims = [o[1] for o in outcomes if o is not None]
    failures = attacked - len(distances)
    euc_hits = {tau: sum(1 for d in distances if d <= tau) for tau in tau_euc_list}
    sim_hits = sum(1 for s in sims if s >= thresholds.tau_sim)
    completed = attacked - failures
    feature_dists = score_distributions(corpus, "euclidean")
    rates, baseline, advantage = {}, {}, {}
    for tau in tau_euc_list:
        rate = euc_hits[tau] / completed if completed else 0.0
        fm = rates_at_threshold(feature_dists, tau, ACCEPT_BELOW)["fmr"]
        rates[f"rate_rev_euc_{tau}"] = rate
        baseline[f"fmr_euc_{tau}"] = fm
        advantage[f"rate_rev_euc_{tau}"] = rate - fm
    sim_dists = score_distributions(corpus, "similarity")
    sim_rate = sim_hits / completed if completed else 0.0
    sim_fmr = rates_at_threshold(sim_dists, thresholds.tau_sim, ACCEPT_ABOVE)["fmr"]
    rates["rate_rev_sim"] = sim_rate
    baseline[f"fmr_sim_{thresholds.tau_sim}"] = sim_fmr
    advantage["rate_rev_sim"] = sim_rate - sim_fmr
    baseline["eer_euc"] = eer(feature_dists)["eer"]

    return ExperimentReport(
        kind="grp_reversibility",
        config={
            "params": _params_dict(params), "seed": seed,
            "objective_case": objective_case,
            "tau_euc_list": list(tau_euc_list), "tau_sim": thresholds.tau_sim,
            "margin": margin, "solver": _settings_dict(settings),
            "held_out_user": held_out, "threads": threads,
        },
        stats={},
        rates=rates,
        baseline=baseline,
        advantage=advantage,
        trials=attacked, failures=failures,
        scores={"euclidean_distance": distances, "similarity": sims},
        table={"columns": [f"tau_euc={t}" for t in tau_euc_list],
               "rows": {"rate_rev_pct":
                        [100.0 * rates[f"rate_rev_euc_{t}"] for t in tau_euc_list],
                        "fmr_pct":
                        [100.0 * baseline[f"fmr_euc_{t}"] for t in tau_euc_list]}},
    )


def _preimage_pool(corpus: Corpus, params: SchemeParams, seed: int, scheme: str,
                   objective_case: str, margin: float,
                   log_bounds: tuple[float, float],
                   settings: SolverSettings,
                   threads: int = 1) -> tuple[list[list[Preimage | None]], int]:
    rng = np.random.default_rng(derived_seed(seed, 3))
    objective, _ = _objective_for_case(objective_case, corpus, rng)
    jobs = [(ui, si, x) for ui, si, x in corpus.all_samples()]

    def one_sample(job):
        ui, si, x = job
        sub = derived_seed(seed, 1, ui, si)
        try:
            if scheme == "grp":
                secret = grp_gen_secret(sub, params)
                system = grp_build_constraints(
                    [Leak(secret, grp_transform(secret, x))], margin
                )
                return grp_preimage(system, objective, settings)
            secret = urp_gen_secret(sub, params)
            system = urp_build_constraints(
                [Leak(secret, urp_transform(secret, x))], margin, log_bounds
            )
            return urp_preimage(system, settings)
        except SOLVER_ERRORS:
            return None

    results = _map_trials(one_sample, jobs, threads)
    pool: list[list[Preimage | None]] = [
        [None] * len(rec.samples) for rec in corpus.users
    ]
    failures = 0
    for (ui, si, _), pre in zip(jobs, results):
        pool[ui][si] = pre
        failures += int(pre is None)
    return pool, failures


def run_link(corpus: Corpus, params: SchemeParams, seed: int, scheme: str,
             t_link: float, trials: int = 10000,
             objective_case: str = "none", margin: float = 1e-6,
             log_bounds: tuple[float, float] = (-10.0, 1.0),
             settings: SolverSettings | None = None,
             pool: list[list[Preimage | None]] | None = None,
             threads: int = 1) -> ExperimentReport:
    """Linkability distinguisher: sign-agreement count for GRP, absolute
    Pearson correlation for URP.

    Builds one preimage per (user, sample) under a fresh secret, then runs
    the genuine/impostor counting script: c1 counts genuine pairs at or
    above the threshold, c2 counts impostor pairs below it; the success
    rate is their average. A prebuilt pool may be passed to share preimage
    work across threshold choices.
    """
    settings = settings or SolverSettings()
    if scheme not in ("grp", "urp"):
        raise InvalidInput(f"scheme must be 'grp' or 'urp', got {scheme!r}")
    metric = BetaMetric(int(t_link)) if scheme == "grp" else PearsonMetric(float(t_link))

    pool_failures = 0
    if pool is None:
        pool, pool_failures = _preimage_pool(
            corpus, params, seed, scheme, objective_case, margin, log_bounds,
            settings, threads,
        )
    genuine_users = [ui for ui, row in enumerate(pool)
                     if sum(p is not None for p in row) >= 2]
    impostor_users = [ui for ui, row in enumerate(pool)
                      if any(p is not None for p in row)]
    if not genuine_users or len(impostor_users) < 2:
        raise InvalidInput("not enough successful preimages for the linkability script")

    rng = np.random.default_rng(derived_seed(seed, 2))
    c1 = c2 = 0
    genuine_vals, impostor_vals = [], []
    for _ in range(trials):
        ui = genuine_users[int(rng.integers(len(genuine_users)))]
        options = [p for p in pool[ui] if p is not None]
        a = int(rng.integers(len(options)))
        b = int(rng.integers(len(options) - 1))
        if b >= a:
            b += 1
        val = metric.value(options[a].values, options[b].values)
        genuine_vals.append(val)
        c1 += int(val >= metric.threshold)

        ua = impostor_users[int(rng.integers(len(impostor_users)))]
        ub_choices = len(impostor_users) - 1
        ub = impostor_users[(impostor_users.index(ua) + 1 + int(rng.integers(ub_choices)))
                            % len(impostor_users)]
        pa = [p for p in pool[ua] if p is not None]
        pb = [p for p in pool[ub] if p is not None]
        val = metric.value(pa[int(rng.integers(len(pa)))].values,
                           pb[int(rng.integers(len(pb)))].values)
        impostor_vals.append(val)
        c2 += int(val < metric.threshold)

    rate_link = (c1 + c2) / (2 * trials)
    return ExperimentReport(
        kind=f"link_{scheme}",
        config={
            "params": _params_dict(params), "seed": seed, "scheme": scheme,
            "t_link": t_link, "trials": trials,
            "objective_case": objective_case, "margin": margin,
            "log_bounds": list(log_bounds), "solver": _settings_dict(settings),
            "threads": threads,
        },
        stats={
            "genuine_accept": ScoreStats.from_scores([c1 / trials]),
            "impostor_reject": ScoreStats.from_scores([c2 / trials]),
        },
        rates={"rate_link": rate_link},
        baseline={"guess": 0.5},
        advantage={"rate_link": rate_link - 0.5},
        trials=trials, failures=pool_failures,
        scores={"genuine_metric": genuine_vals, "impostor_metric": impostor_vals},
        table={"columns": [f"t_link={t_link}"],
               "rows": {"c1_over_N": [c1 / trials],
                        "c2_over_N": [c2 / trials],
                        "rate_link": [rate_link]}},
    )


def run_experiment(kind: str, corpus: Corpus, seed: int,
                   params: SchemeParams, **options) -> ExperimentReport:
    """Dispatch an experiment by kind name.

    Kinds: grp_auth, grp_long_lived, grp_ac, grp_sc, grp_reversibility,
    urp_auth, urp_long_lived, link_grp, link_urp.
    """
    if kind == "grp_auth":
        return run_grp_auth(corpus, params, seed, **options)
    if kind == "grp_long_lived":
        return run_grp_multi_leak(corpus, params, seed, n_leaks=1, **options)
    if kind == "grp_ac":
        return run_grp_multi_leak(corpus, params, seed, selected=False, **options)
    if kind == "grp_sc":
        return run_grp_multi_leak(corpus, params, seed, selected=True, **options)
    if kind == "grp_reversibility":
        return run_grp_reversibility(corpus, params, seed, **options)
    if kind == "urp_auth":
        return run_urp_auth(corpus, params, seed, **options)
    if kind == "urp_long_lived":
        return run_urp_long_lived(corpus, params, seed, **options)
    if kind == "link_grp":
        return run_link(corpus, params, seed, "grp", **options)
    if kind == "link_urp":
        return run_link(corpus, params, seed, "urp", **options)
    raise InvalidInput(f"unknown experiment kind {kind!r}")
