import os
import sys
from pathlib import Path

import numpy as np
import pytest

from singlebirth import RateRow, build_tabulated

REPO = Path(__file__).resolve().parent.parent
MODELSPECS = REPO / "modelspecs"


@pytest.fixture
def modelspecs_dir() -> Path:
    return MODELSPECS


def make_random_model(rng: np.random.Generator, N: int):
    """Tabulated random model with contained down mass (well conditioned)."""
    rows = [RateRow(up=float(rng.uniform(1.0, 2.0)))]
    for i in range(1, N + 1):
        down = {i - 1: float(rng.uniform(0.05, 0.2))}
        for j in range(i - 1):
            if rng.random() < min(2.0 / i, 0.3):
                down[j] = float(rng.uniform(0.01, 0.1))
        rows.append(RateRow(up=float(rng.uniform(1.0, 2.0)), down=down))
    return build_tabulated(rows, label="random")
