"""Human-preference aggregation with the empty-QC extra-win rule."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Sequence

WINNER_PIPELINE = "pipeline"
WINNER_BASELINE = "baseline"


@dataclass(frozen=True)
class PreferenceTally:
    model_tag: str
    pipeline_wins: int
    baseline_wins: int
    qc_empty_cases: int
    preference_rate: float


def preference_rate(votes: Sequence[dict], qc_empty: int = 0,
                    model_tag: str = "") -> PreferenceTally:
    """Majority vote per pair; pairs the pipeline produced nothing for count
    against it in the denominator.

    Each vote is {pair_id, winner} with winner "pipeline" or "baseline";
    every pair must have an odd number of votes so majorities are strict.
    """
    if qc_empty < 0:
        raise ValueError("qc_empty must be non-negative")
    by_pair: dict = defaultdict(list)
    for vote in votes:
        winner = vote["winner"]
        if winner not in (WINNER_PIPELINE, WINNER_BASELINE):
            raise ValueError(f"unknown winner {winner!r}")
        by_pair[vote["pair_id"]].append(winner)
    pipeline_wins = 0
    baseline_wins = 0
    for pair_id, winners in by_pair.items():
        if len(winners) % 2 == 0:
            raise ValueError(f"pair {pair_id!r} has an even vote count ({len(winners)})")
        counts = Counter(winners)
        if counts[WINNER_PIPELINE] > counts[WINNER_BASELINE]:
            pipeline_wins += 1
        else:
            baseline_wins += 1
    denominator = pipeline_wins + baseline_wins + qc_empty
    rate = pipeline_wins / denominator if denominator else 0.0
    return PreferenceTally(model_tag, pipeline_wins, baseline_wins, qc_empty, rate)
