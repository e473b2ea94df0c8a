"""Confidence sets for the number of change-points in a sequence.

The package turns model-specific change problems into mean changes on a
score sequence, splits the scores by temporal parity, scores every
candidate count out of sample, and inverts studentized bootstrap tests
into a confidence set.  Robust (Huber), multiple-splitting, and
m-dependent variants share the same pipeline, and a simulation harness
reports Monte Carlo coverage and cardinality.
"""

from .core import (
    CandidateSet,
    Segmentation,
    SplitPair,
    TimeSeries,
    odd_even_split,
    order_preserving_l_split,
    segment_means,
)
from .detectors import (
    BINARY_SEGMENTATION,
    SEGMENT_NEIGHBORHOOD,
    CostCache,
    DetectorKind,
    binary_segmentation,
    fit_all_candidates,
    segment_cost,
    segment_neighborhood,
)
from .errors import (
    ConfigError,
    DomainError,
    InfeasibleError,
    LengthError,
    OpticsError,
    ParseError,
    ShapeError,
    SpecError,
)
from .ext import (
    CauchyWeights,
    HuberConfig,
    cauchy_combine,
    h_optics,
    huber_loss,
    m_optics,
    ms_optics,
)
from .inference import (
    LEFTMOST,
    RIGHTMOST,
    BootstrapConfig,
    ConfidenceSet,
    PValueTable,
    XiMatrix,
    bootstrap_pvalue,
    confidence_set,
    copss_estimate,
    criterion,
    optics,
    reduce,
    run_on_scores,
    test_statistic,
    xi_matrix,
)
from .scores import ScoreModel, ScoreSeries, transform, unvech, vech
from .sim import (
    PRESETS,
    ExperimentReport,
    GeneratorSpec,
    RunRecord,
    default_k_max,
    diagnostics,
    generate,
    run_experiment,
)

__version__ = "0.1.0"
