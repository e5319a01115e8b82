#!/usr/bin/env python3
"""Generate steinloss/data/ridge_fixture.csv.

The fixture is a closed-form function of the row index, so it is reproducible
without a random number generator.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

ROWS = 40
FIXTURE_FILE = Path(__file__).parent / "../steinloss/data/ridge_fixture.csv"

logging.getLogger().setLevel(logging.DEBUG)


def build_fixture(rows: int = ROWS) -> pd.DataFrame:
    """Return the fixture frame: y = 1 + 2 x1 - 1.5 x2 + 0.5 x3 + e, x4 is noise."""
    i = np.arange(rows, dtype=float)
    x1 = np.sin(1.3 * i + 0.7)
    x2 = np.cos(0.9 * i + 0.2) + 0.3 * x1
    x3 = np.sin(0.37 * i * i + 1.1)
    x4 = np.cos(2.3 * i + 0.4) * np.sin(0.6 * i + 0.9)
    x1, x2, x3, x4 = (np.round(column, 6) for column in (x1, x2, x3, x4))
    e = 0.8 * np.sin(7.1 * i + 2.3) * np.cos(3.7 * i + 0.5)
    y = 1.0 + 2.0 * x1 - 1.5 * x2 + 0.5 * x3 + e
    return pd.DataFrame({"y": y, "x1": x1, "x2": x2, "x3": x3, "x4": x4})


def main() -> None:
    """Write the fixture."""
    frame = build_fixture()
    frame.to_csv(FIXTURE_FILE, index=False, float_format="%.6f")
    logging.info("Wrote %s rows to %s", len(frame), FIXTURE_FILE.resolve())


if __name__ == "__main__":
    main()
