"""iomlab: cryptanalysis toolkit for GRP-IoM and URP-IoM cancelable
biometric templates under the stolen-token model.

The library side exposes the scheme primitives, the attack constructions,
and the experiment runners; the ``iomlab`` CLI wires them to corpora and
report files.
"""

from .attacks import (
    BetaMetric,
    Leak,
    PearsonMetric,
    Preimage,
    beta_sign_agreement,
    exhaustive_search_bits,
    grp_build_constraints,
    grp_long_lived,
    grp_preimage,
    grp_sc_refine,
    link_decide,
    pearson,
    sign_guess_bits,
    urp_build_constraints,
    urp_long_lived,
    urp_preimage,
)
from .core import (
    DegenerateInput,
    FeatureMetric,
    FeatureThresholds,
    InvalidInput,
    IomlabError,
    SchemeParams,
    Unsupported,
    comparison_score,
    euclidean_distance,
    hamming_distance,
    iom,
    similarity_score,
    verify_feature,
    verify_template,
)
from .dataset import (
    Corpus,
    DimensionError,
    ParseError,
    UserRecord,
    load_corpus,
    sample_pairs,
    save_corpus,
    synth_corpus,
)
from .evaluation import (
    ExperimentReport,
    ScoreStats,
    eer,
    emit_report,
    rates_at_threshold,
    score_distributions,
)
from .experiments import (
    run_experiment,
    run_grp_auth,
    run_grp_multi_leak,
    run_grp_reversibility,
    run_link,
    run_urp_auth,
    run_urp_long_lived,
)
from .grp import GrpSecret, grp_gen_secret, grp_transform
from .optimizer import (
    ConstraintSystem,
    Infeasible,
    NumericalFailure,
    Objective,
    SolverSettings,
    max_violation,
    solve,
)
from .urp import UrpSecret, urp_gen_secret, urp_transform

__version__ = "0.1.0"
