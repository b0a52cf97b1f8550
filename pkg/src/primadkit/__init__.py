"""PRIMAD metadata for TREC run files and reproducibility measures."""

from .errors import PrimadError
from .evaluation import TopicScores, evaluate_run
from .experiment import ExperimentSpec, ReproReport, run_experiment
from .measures import (
    MeasureConfig,
    PairedTopicSeries,
    delta_relative_improvement,
    effect_ratio,
    kendalls_tau_union,
    paired_p_value,
    rank_biased_overlap,
    rmse,
)
from .metadata import MetadataRecord, ValidationReport, parse_metadata, serialize_metadata, validate
from .primad import Measure, PrimadDiff, analyze_directory, applicable_measures, diff, signature
from .run_model import Qrels, RunFile, RunLine, TiePolicy, canonical_sort, parse_qrels, parse_run, serialize_run

__version__ = "0.1.0"
