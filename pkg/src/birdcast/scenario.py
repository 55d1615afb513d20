"""Synthetic scene generation without any perception stack.

Builds a sender at an elevated position, ground users with rectangular
occluders between them and parts of the scene, and geometry-derived
confidence/feature maps; the interest pipeline and the channel model then
turn a scene into a ProblemInstance. Everything is a pure function of the
parameters including the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .baselines import broadcast_solve, unicast_solve
from .channel import DEFAULT_MCS_TABLE, McsTable
from .instance import ProblemInstance
from .moi import (
    GridMap,
    build_moi,
    confidence_map,
    entropy_map,
    info_mask,
    local_correlation,
)
from .oracle import exact_solve


@dataclass(frozen=True)
class RadioParams:
    """Log-distance path-loss channel constants.

    The 1 m reference loss defaults to the free-space value at 5.9 GHz
    (about 47.85 dB), the usual intercept for this model.
    """

    tx_power_dbm: float = 23.0
    noise_dbm: float = -92.0
    pathloss_exponent: float = 3.8
    carrier_hz: float = 5.9e9
    ref_pathloss_db: float = 47.85


@dataclass(frozen=True)
class UserGeometry:
    position: tuple[float, float, float]
    heading: tuple[float, float]
    roi: GridMap
    q_user: GridMap


@dataclass(frozen=True)
class Scene:
    hvn_position: tuple[float, float, float]
    users: tuple[UserGeometry, ...]
    q_hvn: GridMap
    compressed_feature: GridMap
    extent: tuple[float, float]
    grid_shape: tuple[int, int]
    radio: RadioParams
    occluders: tuple[tuple[float, float, float, float], ...]  # xmin, xmax, ymin, ymax

    def to_json(self) -> dict:
        return {
            "hvn_position": list(self.hvn_position),
            "users": [
                {
                    "position": list(u.position),
                    "heading": list(u.heading),
                    "roi": u.roi.to_json(),
                    "q_user": u.q_user.to_json(),
                }
                for u in self.users
            ],
            "q_hvn": self.q_hvn.to_json(),
            "compressed_feature": self.compressed_feature.to_json(),
            "extent": list(self.extent),
            "grid_shape": list(self.grid_shape),
            "radio": asdict(self.radio),
            "occluders": [list(o) for o in self.occluders],
        }


@dataclass(frozen=True)
class GenParams:
    """Everything the generator needs; the seed fixes the whole scene."""

    n_users: int = 24
    extent: tuple[float, float] = (100.0, 100.0)
    grid_h: int = 10
    grid_w: int = 25
    n_objects: int = 12
    n_occluders: int = 6
    occluder_min_size: float = 8.0
    occluder_max_size: float = 20.0
    seed: int = 0
    eta: float = 0.5
    window: int = 5
    grid_bytes: float = 1600.0
    bandwidth_hz: float = 100e6
    budget_s: float = 0.030
    hvn_height: float = 10.0
    roi_half_width: float = 25.0
    roi_forward_offset: float = 10.0
    occlusion_atten: float = 0.15
    object_sigma_m: float = 6.0
    feature_noise: float = 0.1
    radio: RadioParams = field(default=RadioParams())
    mcs: McsTable = field(default=DEFAULT_MCS_TABLE)

    def __post_init__(self) -> None:
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        if self.grid_h < 1 or self.grid_w < 1:
            raise ValueError("grid resolution must be >= 1 in both axes")
        if min(self.extent) <= 0:
            raise ValueError("extent must be positive")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must be in (0, 1]")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.grid_bytes <= 0 or self.bandwidth_hz <= 0 or self.budget_s <= 0:
            raise ValueError("grid_bytes, bandwidth_hz, budget_s must be positive")
        if self.hvn_height <= 0:
            raise ValueError("hvn_height must be positive")
        if not 0.0 <= self.occlusion_atten <= 1.0:
            raise ValueError("occlusion_atten must lie in [0, 1]")


def snr_for_user(scene: Scene, user_index: int) -> float:
    """Received SNR (dB) from the log-distance path-loss model, d0 = 1 m."""
    user = scene.users[user_index]
    hx, hy, hz = scene.hvn_position
    ux, uy, uz = user.position
    d = math.dist((hx, hy, hz), (ux, uy, uz))
    if d == 0.0:
        raise ValueError("user is co-located with the sender")
    r = scene.radio
    pathloss = r.ref_pathloss_db + 10.0 * r.pathloss_exponent * math.log10(d)
    return r.tx_power_dbm - pathloss - r.noise_dbm


def _segments_hit_rect(p0: np.ndarray, cells: np.ndarray,
                       rect: tuple[float, float, float, float]) -> np.ndarray:
    """Liang-Barsky test of segments p0 -> each cell center against one rect."""
    xmin, xmax, ymin, ymax = rect
    d = cells - p0[None, :]
    t0 = np.zeros(len(cells))
    t1 = np.ones(len(cells))
    hit = np.ones(len(cells), dtype=bool)
    for axis, lo, hi in ((0, xmin, xmax), (1, ymin, ymax)):
        p = d[:, axis]
        q_lo = p0[axis] - lo
        q_hi = hi - p0[axis]
        parallel = p == 0.0
        hit &= ~(parallel & ((q_lo < 0.0) | (q_hi < 0.0)))
        with np.errstate(divide="ignore", invalid="ignore"):
            t_lo = np.where(parallel, 0.0, -q_lo / np.where(parallel, 1.0, p))
            t_hi = np.where(parallel, 1.0, q_hi / np.where(parallel, 1.0, p))
        enter = np.where(p >= 0.0, t_lo, t_hi)
        leave = np.where(p >= 0.0, t_hi, t_lo)
        t0 = np.where(parallel, t0, np.maximum(t0, enter))
        t1 = np.where(parallel, t1, np.minimum(t1, leave))
    return hit & (t0 <= t1)


def _cell_centers(params: GenParams) -> np.ndarray:
    ex, ey = params.extent
    ys = (np.arange(params.grid_h) + 0.5) * ey / params.grid_h
    xs = (np.arange(params.grid_w) + 0.5) * ex / params.grid_w
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)  # row-major (x, y)


def generate(params: GenParams) -> tuple[Scene, ProblemInstance]:
    """Synthesize a scene and assemble the scheduling instance from it.

    Confidence at the sender peaks around synthetic objects; a user's own
    confidence matches it wherever the line of sight is clear and drops by
    the occlusion factor behind a rectangle. The interest pipeline turns
    the gap, the informativeness mask of the compressed feature, and each
    user's forward-looking region into per-user weights.
    """
    rng = np.random.default_rng(params.seed)
    ex, ey = params.extent
    h, w = params.grid_h, params.grid_w
    hvn = (ex / 2.0, ey / 2.0, params.hvn_height)

    user_xy = rng.uniform((0.0, 0.0), (ex, ey), size=(params.n_users, 2))
    headings = np.array([(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)])
    user_heading = headings[rng.integers(0, 4, size=params.n_users)]
    objects = rng.uniform((0.0, 0.0), (ex, ey), size=(params.n_objects, 2)) \
        if params.n_objects else np.zeros((0, 2))
    occluders = []
    for _ in range(params.n_occluders):
        cx, cy = rng.uniform((0.0, 0.0), (ex, ey))
        width = rng.uniform(params.occluder_min_size, params.occluder_max_size)
        depth = rng.uniform(params.occluder_min_size, params.occluder_max_size)
        occluders.append((cx - width / 2, cx + width / 2,
                          cy - depth / 2, cy + depth / 2))

    cells = _cell_centers(params)
    if params.n_objects:
        d2 = ((cells[:, None, :] - objects[None, :, :]) ** 2).sum(axis=2)
        bumps = np.exp(-d2 / (2.0 * params.object_sigma_m ** 2))
        q_hvn_flat = np.clip(bumps.max(axis=1), 0.0, 1.0)
        feature_flat = bumps.sum(axis=1)
    else:
        q_hvn_flat = np.zeros(len(cells))
        feature_flat = np.zeros(len(cells))
    feature_flat = feature_flat + params.feature_noise * rng.standard_normal(len(cells))
    q_hvn = GridMap(q_hvn_flat.reshape(h, w))
    compressed = GridMap(feature_flat.reshape(h, w))

    p_map = local_correlation(compressed, params.window)
    informative = info_mask(entropy_map(p_map), params.eta)

    users = []
    moi_rows = []
    for n in range(params.n_users):
        blocked = np.zeros(len(cells), dtype=bool)
        for rect in occluders:
            blocked |= _segments_hit_rect(user_xy[n], cells, rect)
        q_user_flat = np.where(blocked, q_hvn_flat * params.occlusion_atten,
                               q_hvn_flat)
        q_user = GridMap(q_user_flat.reshape(h, w))
        center = user_xy[n] + params.roi_forward_offset * user_heading[n]
        inside = (np.abs(cells[:, 0] - center[0]) <= params.roi_half_width) \
            & (np.abs(cells[:, 1] - center[1]) <= params.roi_half_width)
        roi = GridMap(inside.astype(np.float64).reshape(h, w))
        interest = build_moi(confidence_map(q_hvn, q_user), informative, roi)
        users.append(UserGeometry(
            position=(float(user_xy[n, 0]), float(user_xy[n, 1]), 0.0),
            heading=(float(user_heading[n, 0]), float(user_heading[n, 1])),
            roi=roi,
            q_user=q_user,
        ))
        moi_rows.append(interest.values.ravel())

    scene = Scene(
        hvn_position=hvn,
        users=tuple(users),
        q_hvn=q_hvn,
        compressed_feature=compressed,
        extent=(float(ex), float(ey)),
        grid_shape=(h, w),
        radio=params.radio,
        occluders=tuple(occluders),
    )
    snrs = tuple(snr_for_user(scene, n) for n in range(params.n_users))
    inst = ProblemInstance(
        moi=np.stack(moi_rows),
        snr_db=snrs,
        mcs=params.mcs,
        grid_bytes=params.grid_bytes,
        bandwidth_hz=params.bandwidth_hz,
        budget_s=params.budget_s,
    )
    return scene, inst


# --- hand-constructed four-user toy instance -------------------------------

FIG1_BUDGET_S = 14e-3
FIG1_GRID_BYTES = 15_000.0
FIG1_WEAK_BPS = 20e6
_FIG1_BANDWIDTH = 10e6
_FIG1_TARGET = (8.0, 6.0, 3.0)  # optimum, broadcast, unicast


def _fig1_candidate(strong_bps: float, extra_want: bool) -> ProblemInstance:
    table = McsTable(
        rates=(FIG1_WEAK_BPS / _FIG1_BANDWIDTH, strong_bps / _FIG1_BANDWIDTH),
        thresholds_db=(0.0, 10.0),
    )
    moi = np.zeros((4, 4))
    moi[:, 0] = 1.0        # one grid wanted by all four users
    moi[0:2, 2] = 1.0      # two grids shared by the strong pair
    moi[0:2, 3] = 1.0
    if extra_want:
        moi[2, 1] = 1.0    # a weak user also wants the leftover grid
    return ProblemInstance(
        moi=moi,
        snr_db=(10.0, 10.0, 0.0, 0.0),
        mcs=table,
        grid_bytes=FIG1_GRID_BYTES,
        bandwidth_hz=_FIG1_BANDWIDTH,
        budget_s=FIG1_BUDGET_S,
    )


def fig1_instance() -> ProblemInstance:
    """Four users, four grids, 14 ms budget, 15 KB grids, weakest at 20 Mbps.

    The interest pattern is fixed by the narrative (one grid wanted by
    everyone, two more shared by the stronger pair); the strong users'
    rate is not documented anywhere, so a small exhaustive search picks
    the first assignment for which the exact optimum is 8 while the
    broadcast and unicast schemes score 6 and 3. Construction fails loudly
    if no candidate matches.
    """
    for extra_want in (False, True):
        for strong_bps in (25e6, 30e6, 35e6, 40e6, 50e6, 60e6):
            inst = _fig1_candidate(strong_bps, extra_want)
            triple = (
                exact_solve(inst).opt_utility,
                broadcast_solve(inst).utility,
                unicast_solve(inst).utility,
            )
            if triple == _FIG1_TARGET:
                return inst
    raise RuntimeError(
        "no rate assignment reproduces the target utility triple "
        f"{_FIG1_TARGET} under the toy-instance construction search")
