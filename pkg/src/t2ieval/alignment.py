"""Text-relevance and semantic-alignment metrics.

All four metrics are streaming folds over record files: retrieval
precision (RP), detector-based semantic object accuracy (SOA-C/SOA-I),
positional alignment over a fixed word set (PA), and counting alignment
(CA, lower is better). Comparisons are strict: a tied similarity counts
as a failure, which keeps results deterministic and conservative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .artifacts import CountRecord, DetectionRecord, PositionalTriplet, RetrievalRecord
from .captions import DEFAULT_POSITIONAL_WORDS
from .errors import EmptyInputError, ValidationError

DEFAULT_SOA_THRESHOLD = 0.5


@dataclass(frozen=True)
class SoaResult:
    """Per-class and per-image detector recall."""

    soa_c: float
    soa_i: float
    per_class: dict[str, tuple[int, int]]

    def to_dict(self) -> dict:
        return {
            "soa_c": self.soa_c,
            "soa_i": self.soa_i,
            "per_class": {
                cls: {"hits": hits, "total": total}
                for cls, (hits, total) in sorted(self.per_class.items())
            },
        }


@dataclass(frozen=True)
class PaResult:
    """Per-word query success rates and their mean over covered words."""

    pa: float
    per_word: dict[str, tuple[int, int]]
    missing_words: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "pa": self.pa,
            "per_word": {
                word: {"successes": k, "triplets": n}
                for word, (k, n) in self.per_word.items()
            },
            "missing_words": list(self.missing_words),
        }


def r_precision(records: Iterable[RetrievalRecord]) -> float:
    """Percentage of records whose ground-truth similarity is the strict maximum."""
    total = 0
    successes = 0
    for rec in records:
        total += 1
        gt = rec.similarities[rec.gt_index]
        if all(gt > s for i, s in enumerate(rec.similarities) if i != rec.gt_index):
            successes += 1
    if total == 0:
        raise EmptyInputError("no retrieval records")
    return 100.0 * successes / total


def soa(records: Iterable[DetectionRecord],
        score_threshold: float = DEFAULT_SOA_THRESHOLD) -> SoaResult:
    """Detector recall of the expected class, averaged per class and per image.

    An image counts as a hit when some detection matches its expected class
    with score >= threshold.
    """
    if not 0.0 <= score_threshold <= 1.0:
        raise ValidationError(f"score threshold {score_threshold} outside [0, 1]")
    tallies: dict[str, list[int]] = {}
    for rec in records:
        hit = any(d.label == rec.expected_class and d.score >= score_threshold
                  for d in rec.detections)
        tally = tallies.setdefault(rec.expected_class, [0, 0])
        tally[0] += int(hit)
        tally[1] += 1
    if not tallies:
        raise EmptyInputError("no detection records")
    per_class = {cls: (hits, total) for cls, (hits, total) in tallies.items()}
    soa_c = math.fsum(hits / total for hits, total in
                      (per_class[c] for c in sorted(per_class))) / len(per_class)
    total_hits = sum(hits for hits, _ in per_class.values())
    total_images = sum(total for _, total in per_class.values())
    return SoaResult(soa_c=soa_c, soa_i=total_hits / total_images, per_class=per_class)


def positional_alignment(triplets: Iterable[PositionalTriplet],
                         word_set: Sequence[str] = DEFAULT_POSITIONAL_WORDS) -> PaResult:
    """Mean per-word rate of matched captions beating their mismatched twin.

    Words from the set with no triplets are excluded from the mean and
    reported in ``missing_words`` so thin coverage is visible instead of
    silently scored as zero.
    """
    words = list(word_set)
    allowed = set(words)
    tallies: dict[str, list[int]] = {w: [0, 0] for w in words}
    total = 0
    for trip in triplets:
        if trip.word not in allowed:
            raise ValidationError(f"triplet word {trip.word!r} is not in the configured word set")
        total += 1
        tally = tallies[trip.word]
        tally[0] += int(trip.sim_matched > trip.sim_mismatched)
        tally[1] += 1
    if total == 0:
        raise EmptyInputError("no positional triplets")
    covered = [w for w in words if tallies[w][1] > 0]
    missing = tuple(w for w in words if tallies[w][1] == 0)
    pa = math.fsum(tallies[w][0] / tallies[w][1] for w in covered) / len(covered)
    return PaResult(pa=pa,
                    per_word={w: (tallies[w][0], tallies[w][1]) for w in covered},
                    missing_words=missing)


def counting_alignment(records: Iterable[CountRecord]) -> float:
    """Mean per-record RMSE between ground-truth and predicted object counts.

    The RMSE runs over the ground-truth class set; classes the predictor
    never reported count as zero, classes only the predictor reported are
    ignored. Lower is better.
    """
    rmses = []
    for rec in records:
        if not rec.gt_counts:
            raise ValidationError(f"record {rec.caption_id!r} has no ground-truth counts")
        sq = math.fsum((rec.pred_counts.get(cls, 0.0) - true) ** 2
                       for cls, true in rec.gt_counts.items())
        rmses.append(math.sqrt(sq / len(rec.gt_counts)))
    if not rmses:
        raise EmptyInputError("no count records")
    return math.fsum(rmses) / len(rmses)
