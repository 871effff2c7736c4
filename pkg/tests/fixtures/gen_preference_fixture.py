"""Regenerate the preference-vote fixture: 50 pairs x 5 annotator votes.

The expected tally is computed here by straightforward counting (kept
deliberately independent of the package implementation) and frozen into
preference_votes.json.
"""

import json
from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
N_PAIRS = 50
N_VOTES = 5
QC_EMPTY = 4


def main():
    rng = np.random.default_rng(1905)
    votes = []
    pipeline_wins = 0
    baseline_wins = 0
    for i in range(N_PAIRS):
        pair_id = f"pair{i:03d}"
        lean = rng.uniform(0.25, 0.75)
        winners = ["pipeline" if rng.random() < lean else "baseline"
                   for _ in range(N_VOTES)]
        for w in winners:
            votes.append({"pair_id": pair_id, "winner": w})
        if winners.count("pipeline") > winners.count("baseline"):
            pipeline_wins += 1
        else:
            baseline_wins += 1
    rate = pipeline_wins / (pipeline_wins + baseline_wins + QC_EMPTY)
    print(f"pipeline={pipeline_wins} baseline={baseline_wins} "
          f"qc_empty={QC_EMPTY} rate={rate:.6f}")
    payload = {
        "votes": votes,
        "qc_empty": QC_EMPTY,
        "expected": {
            "pipeline_wins": pipeline_wins,
            "baseline_wins": baseline_wins,
            "preference_rate": rate,
        },
    }
    (HERE / "preference_votes.json").write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
