"""Adaptive MCS downlink model.

Maps received SNR to the set of decodable rate options, the maximum
achievable data rate, and the transmission cost of sending one grid at a
given rate. The threshold model is deterministic: a rate is decodable
exactly when the received SNR meets its lower bound, so the decodable set
is always a prefix of the (ascending) rate indices.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class McsTable:
    """Paired rate options (bits/s/Hz) and SNR decoding thresholds (dB).

    Both sequences are strictly increasing and of equal length, which makes
    decodability sets nested: anyone who can decode rate m can decode every
    slower rate below it.
    """

    rates: tuple[float, ...]
    thresholds_db: tuple[float, ...]

    def __post_init__(self) -> None:
        rates = tuple(float(r) for r in self.rates)
        thresholds = tuple(float(t) for t in self.thresholds_db)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "thresholds_db", thresholds)
        if len(rates) < 1 or len(rates) != len(thresholds):
            raise ValueError("rates and thresholds_db must have equal length >= 1")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ValueError("rates must be strictly increasing")
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("thresholds_db must be strictly increasing")
        if rates[0] <= 0.0:
            raise ValueError("rates must be positive")

    @property
    def n_rates(self) -> int:
        return len(self.rates)

    def to_json(self) -> list[dict[str, float]]:
        return [
            {"rate": r, "threshold_db": t}
            for r, t in zip(self.rates, self.thresholds_db)
        ]

    @classmethod
    def from_json(cls, entries: list[dict[str, float]]) -> "McsTable":
        return cls(
            rates=tuple(e["rate"] for e in entries),
            thresholds_db=tuple(e["threshold_db"] for e in entries),
        )


# Default 14-option table used throughout; custom tables are accepted
# anywhere an McsTable is taken, provided the invariants hold.
DEFAULT_MCS_TABLE = McsTable(
    rates=(0.31, 0.49, 0.74, 1.03, 1.33, 1.48, 1.91,
           2.41, 2.57, 3.03, 3.61, 4.21, 4.82, 5.33),
    thresholds_db=(-4.0, -1.0, 2.5, 5.5, 8.5, 10.5, 13.0,
                   16.0, 18.0, 20.5, 24.0, 27.0, 30.0, 33.0),
)

# Grid payload sizes follow the networking convention 1 KB = 1000 bytes.
BITS_PER_BYTE = 8


def decodable_set(snr_db: float, table: McsTable) -> set[int]:
    """Indices of every rate option whose threshold the SNR meets (inclusive).

    The result is always a prefix of {0, ..., M-1}; an empty set means the
    user is out of range for even the most robust option.
    """
    return {m for m, t in enumerate(table.thresholds_db) if snr_db >= t}


def max_rate_index(snr_db: float, table: McsTable) -> int | None:
    """Index of the fastest decodable rate, or None when nothing decodes."""
    best = None
    for m, t in enumerate(table.thresholds_db):
        if snr_db >= t:
            best = m
        else:
            break
    return best


def max_data_rate(snr_db: float, table: McsTable, bandwidth_hz: float) -> float | None:
    """Maximum achievable data rate (bits/s), or None when out of range."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth_hz must be positive")
    m = max_rate_index(snr_db, table)
    if m is None:
        return None
    return bandwidth_hz * table.rates[m]


def item_cost(rate_index: int, table: McsTable, bandwidth_hz: float,
              grid_bytes: float) -> float:
    """Time (seconds) to transmit one grid of `grid_bytes` at a rate option.

    Strictly decreasing in rate_index for fixed bandwidth and payload.
    """
    if not 0 <= rate_index < table.n_rates:
        raise IndexError(f"rate_index {rate_index} out of range for table "
                         f"with {table.n_rates} rates")
    if grid_bytes <= 0:
        raise ValueError("grid_bytes must be positive")
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth_hz must be positive")
    return BITS_PER_BYTE * grid_bytes / (bandwidth_hz * table.rates[rate_index])


@dataclass(frozen=True)
class UserChannel:
    """Per-user decodability snapshot derived from received SNR.

    alpha[m] is 1 iff the user decodes rate option m; by threshold
    monotonicity it is a prefix-of-ones pattern.
    """

    snr_db: float
    alpha: tuple[int, ...]
    max_rate_index: int | None

    @classmethod
    def from_snr(cls, snr_db: float, table: McsTable) -> "UserChannel":
        alpha = tuple(1 if snr_db >= t else 0 for t in table.thresholds_db)
        return cls(snr_db=float(snr_db), alpha=alpha,
                   max_rate_index=max_rate_index(snr_db, table))
