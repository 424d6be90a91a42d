"""Evaluation metrics and ranking toolkit for text-to-image synthesis models.

The package computes image-quality metrics (inception score, its
temperature-calibrated variant, Fréchet distance, and their object-centric
forms), text-alignment metrics (retrieval precision, semantic object
accuracy, positional and counting alignment), and aggregates them into a
single ranking score across methods. All metric math operates on
standardized artifact files so model inference stays fully decoupled.
"""

__version__ = "0.1.0"

from .alignment import PaResult, SoaResult, counting_alignment, positional_alignment, r_precision, soa
from .artifacts import (CountRecord, Detection, DetectionRecord, MatrixArtifact,
                        PositionalTriplet, RetrievalRecord, load_labels, load_matrix,
                        load_records, save_matrix)
from .calibration import (ReliabilityReport, Temperature, calibrate, fit_temperature, nll,
                          reliability, softmax_with_temperature)
from .captions import (WordSetConfig, build_pa_caption_sets, filter_counting_captions,
                       make_mismatched_caption, map_caption_to_classes, match_positional_words)
from .errors import (ConfigError, DegenerateError, DomainError, EmptyInputError, FormatError,
                     IoError, MetricsError, NumericalError, ParseError, UnmappedWordError,
                     ValidationError)
from .fidelity import (GaussianStats, SplitScore, fid, fit_gaussian, frechet_distance,
                       inception_score, is_star, o_fid, o_is)
from .ranking import AspectSpec, MetricTable, aspect_scores, rank_metric, ranking_score, table_ranks
from .reporting import emit_report, rank_and_report
from .runner import RunConfig, run

__all__ = [
    "__version__",
    "AspectSpec", "ConfigError", "CountRecord", "DegenerateError", "Detection",
    "DetectionRecord", "DomainError", "EmptyInputError", "FormatError", "GaussianStats",
    "IoError", "MatrixArtifact", "MetricTable", "MetricsError", "NumericalError", "PaResult",
    "ParseError", "PositionalTriplet", "ReliabilityReport", "RetrievalRecord", "RunConfig",
    "SoaResult", "SplitScore", "Temperature", "UnmappedWordError", "ValidationError",
    "WordSetConfig", "aspect_scores", "build_pa_caption_sets", "calibrate",
    "counting_alignment", "emit_report", "fid", "filter_counting_captions", "fit_gaussian",
    "fit_temperature", "frechet_distance", "inception_score", "is_star", "load_labels",
    "load_matrix", "load_records", "make_mismatched_caption", "map_caption_to_classes",
    "match_positional_words", "nll", "o_fid", "o_is", "positional_alignment", "r_precision",
    "rank_and_report", "rank_metric", "ranking_score", "reliability", "run", "save_matrix",
    "soa", "softmax_with_temperature", "table_ranks",
]
