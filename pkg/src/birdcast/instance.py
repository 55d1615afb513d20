"""Grid-rate scheduling instance, utility evaluation, and plan mappings.

The transformed problem selects (grid, rate) items under a latency budget.
A user receives a grid when some selected item for that grid uses a rate
the user can decode; utility is the interest-weighted count of received
(user, grid) pairs. Selections map losslessly to multicast plans (one
group per rate option, populated with every user that decodes it) and
back; both directions preserve the objective and never increase cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .channel import McsTable, item_cost

# Relative slack for budget-feasibility checks only; utilities and plan/cost
# equivalences are compared exactly.
FEASIBILITY_RTOL = 1e-9

Item = tuple[int, int]


@dataclass(frozen=True)
class ProblemInstance:
    """Self-contained input of the grid-rate selection problem.

    moi is the N x L non-negative interest matrix (one vectorized map per
    user); decodability is derived from snr_db and the MCS table, so every
    row is a prefix-of-ones pattern over rate indices.
    """

    moi: np.ndarray
    snr_db: tuple[float, ...]
    mcs: McsTable
    grid_bytes: float
    bandwidth_hz: float
    budget_s: float

    # derived, filled in __post_init__
    decodable: np.ndarray = field(init=False, repr=False, compare=False)
    item_cost_s: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        moi = np.ascontiguousarray(np.asarray(self.moi, dtype=np.float64))
        if moi.ndim != 2:
            raise ValueError("moi must be an N x L matrix")
        if not np.all(np.isfinite(moi)) or np.any(moi < 0.0):
            raise ValueError("moi weights must be finite and non-negative")
        snr = tuple(float(s) for s in self.snr_db)
        if len(snr) != moi.shape[0]:
            raise ValueError("snr_db length must match the number of users")
        if self.grid_bytes <= 0 or self.bandwidth_hz <= 0:
            raise ValueError("grid_bytes and bandwidth_hz must be positive")
        if self.budget_s <= 0:
            raise ValueError("budget_s must be positive")
        m = self.mcs.n_rates
        thresholds = np.asarray(self.mcs.thresholds_db)
        decodable = np.asarray(snr)[:, None] >= thresholds[None, :]
        costs = np.array(
            [item_cost(j, self.mcs, self.bandwidth_hz, self.grid_bytes)
             for j in range(m)],
            dtype=np.float64,
        )
        moi.setflags(write=False)
        decodable.setflags(write=False)
        costs.setflags(write=False)
        object.__setattr__(self, "moi", moi)
        object.__setattr__(self, "snr_db", snr)
        object.__setattr__(self, "grid_bytes", float(self.grid_bytes))
        object.__setattr__(self, "bandwidth_hz", float(self.bandwidth_hz))
        object.__setattr__(self, "budget_s", float(self.budget_s))
        object.__setattr__(self, "decodable", decodable)
        object.__setattr__(self, "item_cost_s", costs)

    @property
    def n_users(self) -> int:
        return self.moi.shape[0]

    @property
    def n_grids(self) -> int:
        return self.moi.shape[1]

    @property
    def n_rates(self) -> int:
        return self.mcs.n_rates

    @property
    def n_items(self) -> int:
        return self.n_grids * self.n_rates

    def user_max_rate_index(self) -> np.ndarray:
        """Highest decodable rate index per user, -1 when out of range."""
        return self.decodable.sum(axis=1).astype(np.int64) - 1

    def user_max_rate_bps(self) -> np.ndarray:
        """Maximum achievable data rate per user (0 when out of range)."""
        idx = self.user_max_rate_index()
        rates = np.asarray(self.mcs.rates)
        out = np.zeros(self.n_users, dtype=np.float64)
        ok = idx >= 0
        out[ok] = self.bandwidth_hz * rates[idx[ok]]
        return out

    def standalone_gains(self) -> np.ndarray:
        """L x M matrix of single-item utilities F({(l, m)})."""
        return self.moi.T @ self.decodable.astype(np.float64)

    def validate_item(self, item: Item) -> None:
        l, m = item
        if not (0 <= l < self.n_grids and 0 <= m < self.n_rates):
            raise ValueError(f"item {item} out of range "
                             f"(L={self.n_grids}, M={self.n_rates})")

    def to_json(self) -> dict:
        return {
            "n_users": self.n_users,
            "n_grids": self.n_grids,
            "mcs_table": self.mcs.to_json(),
            "snr_db": [float(s) for s in self.snr_db],
            "moi": [[float(v) for v in row] for row in self.moi],
            "grid_bytes": self.grid_bytes,
            "bandwidth_hz": self.bandwidth_hz,
            "budget_s": self.budget_s,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ProblemInstance":
        inst = cls(
            moi=np.asarray(d["moi"], dtype=np.float64),
            snr_db=tuple(d["snr_db"]),
            mcs=McsTable.from_json(d["mcs_table"]),
            grid_bytes=d["grid_bytes"],
            bandwidth_hz=d["bandwidth_hz"],
            budget_s=d["budget_s"],
        )
        if inst.n_users != d["n_users"] or inst.n_grids != d["n_grids"]:
            raise ValueError("instance JSON dimensions are inconsistent")
        return inst


@dataclass(frozen=True)
class Selection:
    """A set of (grid, rate) items — the sparse form of the decision matrix."""

    items: frozenset[Item]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Iterable[int]]) -> "Selection":
        items = frozenset((int(l), int(m)) for l, m in pairs)
        return cls(items)

    def sorted_items(self) -> list[Item]:
        return sorted(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item: Item) -> bool:
        return item in self.items

    def validate(self, inst: ProblemInstance) -> None:
        for item in self.items:
            inst.validate_item(item)

    def dense(self, inst: ProblemInstance) -> np.ndarray:
        """L x M 0/1 decision matrix."""
        x = np.zeros((inst.n_grids, inst.n_rates), dtype=np.int8)
        for l, m in self.items:
            x[l, m] = 1
        return x

    def to_json(self) -> list[list[int]]:
        return [[l, m] for l, m in self.sorted_items()]

    @classmethod
    def from_json(cls, data: list[list[int]]) -> "Selection":
        return cls.from_pairs(data)


EMPTY_SELECTION = Selection(frozenset())


@dataclass(frozen=True)
class MulticastPlan:
    """Groups, per-group grid masks, and per-group rates (bits/s).

    In the canonical form produced by plan_from_selection there is one group
    per rate option, holding every user that decodes it; empty groups are
    retained so the mapping is testable verbatim and can be pruned
    separately for display.
    """

    groups: tuple[tuple[int, ...], ...]
    masks: np.ndarray
    rates_bps: tuple[float, ...]

    def __post_init__(self) -> None:
        masks = np.ascontiguousarray(np.asarray(self.masks, dtype=bool))
        if masks.ndim != 2:
            raise ValueError("masks must be a K x L boolean matrix")
        groups = tuple(tuple(sorted(int(n) for n in g)) for g in self.groups)
        rates = tuple(float(r) for r in self.rates_bps)
        if not (len(groups) == masks.shape[0] == len(rates)):
            raise ValueError("groups, masks, and rates_bps must agree on K")
        masks.setflags(write=False)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "masks", masks)
        object.__setattr__(self, "rates_bps", rates)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def n_grids(self) -> int:
        return self.masks.shape[1]

    def pruned(self) -> "MulticastPlan":
        """Cosmetic copy without empty groups."""
        keep = [k for k, g in enumerate(self.groups) if g]
        return MulticastPlan(
            groups=tuple(self.groups[k] for k in keep),
            masks=self.masks[keep] if keep else np.zeros((0, self.n_grids), bool),
            rates_bps=tuple(self.rates_bps[k] for k in keep),
        )

    def to_json(self) -> dict:
        return {
            "groups": [list(g) for g in self.groups],
            "masks": [[int(v) for v in row] for row in self.masks],
            "rate_bps": [float(r) for r in self.rates_bps],
        }

    @classmethod
    def from_json(cls, d: dict) -> "MulticastPlan":
        return cls(
            groups=tuple(tuple(g) for g in d["groups"]),
            masks=np.asarray(d["masks"], dtype=bool),
            rates_bps=tuple(d["rate_bps"]),
        )


class CoverageState:
    """Mutable received-grid bookkeeping for one solver run.

    covered[n, l] says user n has received grid l at a decodable rate;
    min_rate[l] caches the lowest selected rate index per grid (sentinel M
    when the grid is unselected), which makes dominated items detectable in
    O(1) and marginal gains O(N).
    """

    __slots__ = ("inst", "covered", "min_rate")

    def __init__(self, inst: ProblemInstance) -> None:
        self.inst = inst
        self.covered = np.zeros((inst.n_users, inst.n_grids), dtype=bool)
        self.min_rate = np.full(inst.n_grids, inst.n_rates, dtype=np.int64)

    @classmethod
    def from_selection(cls, inst: ProblemInstance, sel: Selection) -> "CoverageState":
        state = cls(inst)
        for item in sel.sorted_items():
            state.apply(item)
        return state

    def apply(self, item: Item) -> None:
        """Fold one item into the coverage; re-applying is a no-op."""
        l, m = item
        self.inst.validate_item(item)
        if m < self.min_rate[l]:
            self.min_rate[l] = m
        self.covered[:, l] |= self.inst.decodable[:, m]

    def copy(self) -> "CoverageState":
        dup = CoverageState(self.inst)
        dup.covered[:] = self.covered
        dup.min_rate[:] = self.min_rate
        return dup

    def utility(self) -> float:
        return coverage_utility(self.inst, self.covered)


def coverage_utility(inst: ProblemInstance, covered: np.ndarray) -> float:
    """Interest-weighted coverage total.

    Every utility number in the package funnels through this expression so
    equal coverage matrices produce bit-identical values.
    """
    return float((inst.moi * covered).sum())


def _coverage_from_selection(inst: ProblemInstance, sel: Selection) -> np.ndarray:
    covered = np.zeros((inst.n_users, inst.n_grids), dtype=bool)
    min_rate: dict[int, int] = {}
    for l, m in sel.items:
        if l not in min_rate or m < min_rate[l]:
            min_rate[l] = m
    for l, m in min_rate.items():
        covered[:, l] = inst.decodable[:, m]
    return covered


def utility(inst: ProblemInstance, sel: Selection) -> float:
    """Objective value of a selection (0 for the empty selection)."""
    sel.validate(inst)
    return coverage_utility(inst, _coverage_from_selection(inst, sel))


def marginal_gain(inst: ProblemInstance, state: CoverageState, item: Item) -> float:
    """utility(S + item) - utility(S) against the state's coverage."""
    l, m = item
    inst.validate_item(item)
    newly = inst.decodable[:, m] & ~state.covered[:, l]
    return float(np.dot(inst.moi[:, l], newly))


def selection_cost(inst: ProblemInstance, sel: Selection) -> float:
    """Total transmission time (seconds) of a selection."""
    sel.validate(inst)
    if not sel.items:
        return 0.0
    return float(sum(inst.item_cost_s[m] for _, m in sel.sorted_items()))


def is_budget_feasible(inst: ProblemInstance, cost_s: float) -> bool:
    return cost_s <= inst.budget_s * (1.0 + FEASIBILITY_RTOL)


def plan_from_selection(inst: ProblemInstance, sel: Selection) -> MulticastPlan:
    """Map a feasible selection to the canonical one-group-per-rate plan.

    Group k holds every user that decodes rate k and transmits the grids
    selected at rate k; its rate is the slowest member's maximum rate
    (the nominal rate of option k when some member bottoms out exactly
    there, which solver outputs always do). Empty groups keep the nominal
    rate of their option.
    """
    sel.validate(inst)
    cost = selection_cost(inst, sel)
    if not is_budget_feasible(inst, cost):
        raise ValueError(f"selection cost {cost:.6g}s exceeds budget "
                         f"{inst.budget_s:.6g}s")
    n_rates = inst.n_rates
    masks = np.zeros((n_rates, inst.n_grids), dtype=bool)
    for l, m in sel.items:
        masks[m, l] = True
    user_rate = inst.user_max_rate_bps()
    groups = []
    rates = []
    for k in range(n_rates):
        members = np.flatnonzero(inst.decodable[:, k])
        groups.append(tuple(int(n) for n in members))
        if members.size:
            rates.append(float(user_rate[members].min()))
        else:
            rates.append(float(inst.bandwidth_hz * inst.mcs.rates[k]))
    return MulticastPlan(groups=tuple(groups), masks=masks,
                         rates_bps=tuple(rates))


def selection_from_plan(inst: ProblemInstance, plan: MulticastPlan) -> Selection:
    """Collapse a plan into unique (grid, rate) items.

    Each group's rate must match a rate option exactly and be decodable by
    every member; duplicate transmissions of the same grid-rate pair across
    groups collapse into one item, so the cost never exceeds the plan's
    latency.
    """
    if plan.n_grids != inst.n_grids:
        raise ValueError("plan mask width does not match the instance")
    option_bps = [inst.bandwidth_hz * r for r in inst.mcs.rates]
    items: set[Item] = set()
    for k in range(plan.n_groups):
        if not plan.masks[k].any():
            continue
        try:
            m = option_bps.index(plan.rates_bps[k])
        except ValueError:
            raise ValueError(f"group {k} rate {plan.rates_bps[k]} is not a "
                             "rate option of the instance") from None
        for n in plan.groups[k]:
            if not inst.decodable[n, m]:
                raise ValueError(f"user {n} cannot decode group {k}'s rate")
        for l in np.flatnonzero(plan.masks[k]):
            items.add((int(l), m))
    return Selection(frozenset(items))


class PlanEvaluation(NamedTuple):
    utility: float
    latency_s: float
    feasible: bool


def evaluate_plan(inst: ProblemInstance, plan: MulticastPlan) -> PlanEvaluation:
    """Objective, latency, and feasibility of a plan.

    A (user, grid) pair counts once no matter how many groups deliver it.
    Feasible means the latency fits the budget and every non-empty group's
    rate equals its slowest member's maximum rate.
    """
    if plan.n_grids != inst.n_grids:
        raise ValueError("plan mask width does not match the instance")
    covered = np.zeros((inst.n_users, inst.n_grids), dtype=bool)
    latency = 0.0
    rate_consistent = True
    user_rate = inst.user_max_rate_bps()
    bits = 8.0 * inst.grid_bytes
    for k in range(plan.n_groups):
        members = list(plan.groups[k])
        mask = plan.masks[k]
        n_sel = int(mask.sum())
        if n_sel:
            if plan.rates_bps[k] <= 0:
                rate_consistent = False
                continue
            latency += bits * n_sel / plan.rates_bps[k]
        if members:
            if plan.rates_bps[k] != float(user_rate[members].min()):
                rate_consistent = False
            if n_sel:
                covered[np.ix_(members, np.flatnonzero(mask))] = True
    value = coverage_utility(inst, covered)
    feasible = rate_consistent and is_budget_feasible(inst, latency)
    return PlanEvaluation(utility=value, latency_s=latency, feasible=feasible)
