"""Regenerate ``sample_panel.csv``: eight simulated return series in two volatility regimes."""

import csv
import datetime as dt
from pathlib import Path

from dcsfcm.score_models import EgarchDgpParams, simulate_egarch

T = 600
GROUPS = {
    "calm": EgarchDgpParams(-0.02, 0.98, 0.02),
    "jumpy": EgarchDgpParams(-0.2, 0.8, 0.25, beta=0.1),
}


def main(path=Path(__file__).with_name("sample_panel.csv")):
    columns = {}
    for g, (name, dgp) in enumerate(GROUPS.items()):
        for k in range(4):
            columns[f"{name.upper()}{k + 1}"] = simulate_egarch(dgp, T, seed=[2024, g, k]).values
    start = dt.date(2020, 1, 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["DATE", *columns])
        for t in range(T):
            row = [(start + dt.timedelta(days=t)).isoformat()]
            for name, values in columns.items():
                # one gap to exercise per-column missing-value handling
                row.append("" if (name == "CALM1" and t == 10) else f"{values[t]:.8f}")
            w.writerow(row)


if __name__ == "__main__":
    main()
