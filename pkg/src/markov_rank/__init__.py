"""Spectral sink/source ranking for finite Markov chains.

Rank the states of an irreducible chain two ways: as sinks, by the escape
rate observed when a hole is punched at the state, and as sources, by how
fast the chain started there converges to stationarity.  Both orders come
with certified envelopes and crossing steps rather than asymptotics alone,
plus a seeded Monte Carlo cross-check.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("markov-rank")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0.dev0"

from .chain import (
    Distribution,
    Hole,
    StructureReport,
    SubMarkovMatrix,
    TransitionMatrix,
    absorbing_matrix,
    analyze_structure,
    as_distribution,
    as_transition_matrix,
    load_matrix,
    remove_states,
)
from .errors import (
    AperiodicityViolation,
    ConvergenceFailure,
    DegenerateInit,
    HorizonTooSmall,
    IllConditioned,
    MarkovRankError,
    NotIrreducible,
    ParseError,
    RatesNotSeparated,
    ReducibleAfterRemoval,
    ValidationError,
)
from .estimators import SinkRanker, SourceRanker
from .simulate import (
    SimConfig,
    SurvivalEstimate,
    estimate_survival,
    estimate_tv,
    sample_hitting_time,
)
from .sink import (
    CrossingCertificate,
    Envelope,
    SinkRanking,
    SurvivalCurve,
    crossing_time,
    envelope,
    rank_sinks,
    survival_curve,
)
from .source import (
    EQUAL,
    FASTER,
    INCOMPARABLE,
    SLOWER,
    DominanceResult,
    EigenStructure,
    ProjectionKey,
    SourceRanking,
    TVCurve,
    compare_convergence,
    eigen_structure,
    predicted_decay,
    project,
    rank_sources,
    tv_curve,
)
from .spectral import EscapeRate, PerronData, escape_rate, perron, stationary
from .validation import parse_number

__all__ = [
    "__version__",
    # chain
    "TransitionMatrix", "SubMarkovMatrix", "Distribution", "Hole",
    "StructureReport", "as_transition_matrix", "as_distribution",
    "load_matrix", "analyze_structure", "remove_states", "absorbing_matrix",
    "parse_number",
    # spectral
    "PerronData", "EscapeRate", "perron", "stationary", "escape_rate",
    # sink
    "SurvivalCurve", "Envelope", "SinkRanking", "CrossingCertificate",
    "survival_curve", "envelope", "rank_sinks", "crossing_time",
    # source
    "EigenStructure", "ProjectionKey", "DominanceResult", "SourceRanking",
    "TVCurve", "eigen_structure", "project", "compare_convergence",
    "rank_sources", "tv_curve", "predicted_decay",
    "FASTER", "SLOWER", "EQUAL", "INCOMPARABLE",
    # simulate
    "SimConfig", "SurvivalEstimate", "estimate_survival", "estimate_tv",
    "sample_hitting_time",
    # estimators
    "SinkRanker", "SourceRanker",
    # errors
    "MarkovRankError", "ParseError", "ValidationError", "NotIrreducible",
    "ReducibleAfterRemoval", "AperiodicityViolation", "DegenerateInit",
    "RatesNotSeparated", "HorizonTooSmall", "ConvergenceFailure",
    "IllConditioned",
]
