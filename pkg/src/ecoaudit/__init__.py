"""Ecosystem-level analysis of multi-model classification outcomes.

Builds failure matrices from prediction logs, quantifies homogeneous
outcomes against independence baselines, tracks how model improvements
redistribute failures over time, and fits a two-parameter difficulty model
to observed failure-count distributions.
"""

__version__ = "0.1.0"

from .conditional import ConditionalReport, conditional_profiles
from .distributions import (
    DEFAULT_ALPHA_GRID,
    DEFAULT_DELTA_GRID,
    DifficultyParams,
    FitResult,
    HomogeneityMetrics,
    brute_force_baseline,
    distribution_mean,
    fit_difficulty,
    grid_range,
    homogeneity_metrics,
    l1_distance,
    observed_distribution,
    parse_grid,
    poisson_binomial,
    tv_distance,
    two_population_baseline,
)
from .errors import (
    ConflictingPrediction,
    EcoAuditError,
    EmptyEcosystem,
    IncompleteCoverage,
    InconsistentLabel,
    InconsistentMetadata,
    InvalidParams,
    InvalidRate,
    LengthMismatch,
    MalformedInput,
    MissingField,
    MissingMetadata,
    NoValidParams,
    TooManyModels,
    UnknownInstance,
    UnknownModel,
)
from .ingest import (
    MetadataTable,
    ParseResult,
    PredictionRecord,
    RecordSet,
    load_metadata,
    load_votes,
    parse_records,
    write_records_csv,
)
from .matrix import (
    POLICY_DROP,
    POLICY_STRICT,
    Ecosystem,
    build_failure_matrix,
    consistent_success_rate,
    failure_rates,
    profile,
    systemic_failure_rate,
)
from .profiles import (
    OutcomeProfile,
    ProfileDistribution,
    all_profiles,
    parse_profile_token,
    profile_distribution,
    profile_token,
)
from .reports import (
    EcosystemReport,
    ecosystem_report,
    parse_report,
    plot_csv_bytes,
    report_json_bytes,
    write_plot_data,
    write_report,
)
from .strata import (
    StratifiedReport,
    derive_accuracy_stratum,
    derive_disagreement_stratum,
    stratify,
)
from .synth import SynthSpec, generate, generate_two_period
from .temporal import (
    ImprovementReport,
    PairedPeriods,
    align_periods,
    decline_analysis,
    detect_improvements,
    improvement_analysis,
)
