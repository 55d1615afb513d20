"""Shared random-instance builders for the test suite."""

from __future__ import annotations

import numpy as np

from birdcast import McsTable, ProblemInstance


def random_mcs_table(rng: np.random.Generator, max_rates: int = 3) -> McsTable:
    m = int(rng.integers(1, max_rates + 1))
    rates = np.cumsum(rng.uniform(0.2, 2.0, size=m))
    thresholds = -5.0 + np.cumsum(rng.uniform(0.5, 8.0, size=m))
    return McsTable(tuple(rates), tuple(thresholds))


def random_instance(rng: np.random.Generator, max_users: int = 6,
                    max_grids: int = 8, max_rates: int = 3,
                    density: float = 0.7,
                    budget_span: tuple[float, float] | None = None,
                    ) -> ProblemInstance:
    """Random instance with heterogeneous SNRs and sparse weights.

    budget_span scales the budget between multiples of the cheapest item
    cost; the default ranges from too-tight-for-anything to ample.
    """
    table = random_mcs_table(rng, max_rates)
    n_users = int(rng.integers(1, max_users + 1))
    n_grids = int(rng.integers(1, max_grids + 1))
    lo_t, hi_t = table.thresholds_db[0], table.thresholds_db[-1]
    snr = rng.uniform(lo_t - 5.0, hi_t + 5.0, size=n_users)
    moi = rng.uniform(0.0, 1.0, size=(n_users, n_grids))
    moi *= rng.random(size=moi.shape) < density
    grid_bytes = 1600.0
    bandwidth = 1e8
    min_cost = 8.0 * grid_bytes / (bandwidth * table.rates[-1])
    lo_b, hi_b = budget_span if budget_span else (0.5, 3.0 * n_grids)
    budget = float(min_cost * rng.uniform(lo_b, hi_b))
    return ProblemInstance(
        moi=moi,
        snr_db=tuple(snr),
        mcs=table,
        grid_bytes=grid_bytes,
        bandwidth_hz=bandwidth,
        budget_s=budget,
    )


def random_full_scale_instance(rng: np.random.Generator,
                                n_users: int, n_grids: int) -> ProblemInstance:
    """Random instance on the default 14-option table."""
    from birdcast import DEFAULT_MCS_TABLE

    table = DEFAULT_MCS_TABLE
    snr = rng.uniform(-6.0, 36.0, size=n_users)
    snr[0] = max(snr[0], 12.0)  # keep at least one user in range
    moi = rng.uniform(0.0, 1.0, size=(n_users, n_grids))
    moi *= rng.random(size=moi.shape) < 0.3
    moi[0, 0] = max(moi[0, 0], 0.5)
    grid_bytes = 1600.0
    bandwidth = 1e8
    costs = [8.0 * grid_bytes / (bandwidth * r) for r in table.rates]
    budget = float(rng.uniform(0.05, 0.6) * n_grids * costs[-1])
    return ProblemInstance(
        moi=moi,
        snr_db=tuple(snr),
        mcs=table,
        grid_bytes=grid_bytes,
        bandwidth_hz=bandwidth,
        budget_s=budget,
    )
