from __future__ import annotations

import numpy as np
import pytest

from frictio.core import LoadJump, LoadPath, Segment, StiffnessMatrix2

# lines collected by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def random_spd(rng: np.random.Generator, coupling_sign: float = 1.0) -> StiffnessMatrix2:
    """Random SPD stiffness with k_nt of the requested sign, moderately conditioned."""
    knn = rng.uniform(0.5, 3.0)
    ktt = rng.uniform(0.5, 3.0)
    knt = coupling_sign * rng.uniform(0.0, 0.95) * np.sqrt(knn * ktt)
    return StiffnessMatrix2(knn, knt, ktt)


def random_lipschitz_load(rng: np.random.Generator, knots: int = 6, horizon: float = 1.0, start_zero: bool = True) -> LoadPath:
    times = np.concatenate([[0.0], np.sort(rng.uniform(0.0, horizon, knots - 2)), [horizon]])
    vals = rng.uniform(-1.0, 1.0, (knots, 2))
    if start_zero:
        vals[0] = 0.0
    return LoadPath.piecewise_affine(times.tolist(), vals)


def random_bv_load(rng: np.random.Generator, pieces: int = 5, horizon: float = 1.0, jump_prob: float = 0.5) -> LoadPath:
    """Piecewise-affine load with random jumps at segment boundaries (and at the horizon)."""
    times = np.concatenate([[0.0], np.sort(rng.uniform(0.0, horizon, pieces - 1)), [horizon]])
    segs, jumps = [], []
    cur = np.zeros(2)
    for k in range(pieces):
        if k > 0 and rng.random() < jump_prob:
            new = cur + rng.uniform(-1.0, 1.0, 2)
            jumps.append(LoadJump(times[k], cur, new))
            cur = new
        end = rng.uniform(-1.0, 1.0, 2)
        segs.append(Segment(times[k], times[k + 1], cur, end))
        cur = end
    if rng.random() < jump_prob:
        jumps.append(LoadJump(horizon, cur, cur + rng.uniform(-1.0, 1.0, 2)))
    return LoadPath(segs, jumps)


@pytest.fixture
def K212() -> StiffnessMatrix2:
    return StiffnessMatrix2(2.0, 1.0, 2.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
