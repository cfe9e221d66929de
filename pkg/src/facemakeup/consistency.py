"""Collection-wide color consistency from sparse correspondences.

Each image is modeled as a per-channel scale plus gamma applied to a
shared per-track albedo; in the log domain the observation matrix then
factors through rank-2 structure.  Alternating least squares recovers the
per-image parameters (gauge fixed to the first image), and images are
corrected by inverting the fitted map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DisconnectedGraph,
    InsufficientObservations,
    NonPositiveIntensity,
    UnknownImage,
)

GAMMA_BOUNDS = (0.2, 5.0)
REFERENCE_IMAGE = 0


@dataclass
class TrackSet:
    """Sparse color correspondences across a collection."""

    image_count: int
    track_count: int
    # (image index, track index, color (3,), position (x, y))
    observations: list[tuple[int, int, np.ndarray, tuple[float, float]]]


@dataclass
class ChannelObservation:
    """Log-intensity matrix for one channel with a presence mask."""

    values: np.ndarray    # (m, n)
    present: np.ndarray   # (m, n) bool


@dataclass
class ChannelModel:
    scale: np.ndarray         # (m,) a_i > 0
    gamma: np.ndarray         # (m,)
    log_albedo: np.ndarray    # (n,)
    residual: np.ndarray      # (m, n), zero where absent
    history: list[float]
    converged: bool

    def reconstruction(self) -> np.ndarray:
        return self.gamma[:, None] * (np.log(self.scale)[:, None]
                                      + self.log_albedo[None, :])


@dataclass
class ConsistencyModel:
    """Per-image, per-channel white-balance scale and gamma."""

    channels: list[ChannelModel] = field(default_factory=list)

    @property
    def image_count(self) -> int:
        return self.channels[0].scale.shape[0]

    @property
    def converged(self) -> bool:
        return all(ch.converged for ch in self.channels)

    def scale_of(self, index: int) -> np.ndarray:
        return np.array([ch.scale[index] for ch in self.channels])

    def gamma_of(self, index: int) -> np.ndarray:
        return np.array([ch.gamma[index] for ch in self.channels])


def sample_bilinear(img: np.ndarray, x: float, y: float) -> np.ndarray:
    """Bilinearly interpolated color at a (possibly fractional) pixel."""
    h, w = img.shape[:2]
    x = min(max(x, 0.0), w - 1.0)
    y = min(max(y, 0.0), h - 1.0)
    x0, y0 = int(np.floor(x)), int(np.floor(y))
    x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
    fx, fy = x - x0, y - y0
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bottom = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return np.asarray(top * (1 - fy) + bottom * fy, dtype=np.float64)


def load_tracks(document: dict, images: list[np.ndarray]) -> TrackSet:
    """Build a TrackSet from a tracks JSON document plus loaded images.

    Colors are sampled with bilinear interpolation at load time.
    """
    observations = []
    tracks = document.get("tracks", [])
    for j, track in enumerate(tracks):
        obs = track.get("obs", [])
        for entry in obs:
            i = int(entry["img"])
            if not 0 <= i < len(images):
                raise UnknownImage(f"track {j} references image {i}")
            x, y = float(entry["x"]), float(entry["y"])
            color = sample_bilinear(images[i], x, y)
            if color.ndim == 0:
                color = np.repeat(color, 3)
            observations.append((i, j, color, (x, y)))
    return TrackSet(image_count=len(images), track_count=len(tracks),
                    observations=observations)


def build_observation(tracks: TrackSet) -> list[ChannelObservation]:
    """Per-channel log-intensity matrices with presence masks.

    Rejects non-positive samples (no logarithm) and tracks observed in
    fewer than two images; a single-image collection skips the track-count
    rule because its model is fully gauge-determined.
    """
    m, n = tracks.image_count, tracks.track_count
    values = np.zeros((m, n, 3))
    present = np.zeros((m, n), dtype=bool)
    for i, j, color, _pos in tracks.observations:
        if np.any(np.asarray(color) <= 0.0):
            raise NonPositiveIntensity(
                f"track {j} in image {i} sampled a non-positive color {color}")
        values[i, j] = np.log(np.asarray(color, dtype=np.float64))
        present[i, j] = True

    if m > 1:
        counts = present.sum(axis=0)
        low = np.flatnonzero(counts < 2)
        if low.size:
            raise InsufficientObservations(
                f"track {int(low[0])} observed {int(counts[low[0]])} time(s); "
                "need >= 2")
    return [ChannelObservation(values=values[..., c], present=present.copy())
            for c in range(3)]


def _check_connected(present: np.ndarray) -> None:
    m, n = present.shape
    seen_img = np.zeros(m, dtype=bool)
    seen_trk = np.zeros(n, dtype=bool)
    stack = [(True, 0)]
    seen_img[0] = True
    while stack:
        is_img, idx = stack.pop()
        if is_img:
            for j in np.flatnonzero(present[idx]):
                if not seen_trk[j]:
                    seen_trk[j] = True
                    stack.append((False, j))
        else:
            for i in np.flatnonzero(present[:, idx]):
                if not seen_img[i]:
                    seen_img[i] = True
                    stack.append((True, i))
    if not (seen_img.all() and seen_trk.all()):
        raise DisconnectedGraph(
            f"{int((~seen_img).sum())} image(s) and {int((~seen_trk).sum())} "
            "track(s) unreachable from the reference image")


def factorize_channel(obs: ChannelObservation, tol: float = 1e-14,
                      max_iter: int = 500, robust: bool = False) -> ChannelModel:
    """Alternating least squares for one channel.

    The reference image's row is pinned to gamma = 1, scale = 1 throughout,
    which removes the gauge freedom exactly; the remaining rows solve
    closed-form 2-parameter regressions against (log_albedo, 1) with gamma
    clamped to sanity bounds, and the albedo column update is closed form.
    The objective never increases; after ``max_iter`` sweeps the best model
    so far is returned with ``converged=False``.

    With ``robust`` set, one reweighting pass down-weights entries whose
    residual exceeds three median-absolute-deviations to 0.1 and re-runs
    the sweep loop (objective monotonicity then holds per phase).
    """
    values, present = obs.values, obs.present
    m, n = values.shape
    weights = present.astype(np.float64)

    if m == 1:
        kappa = np.where(present[0], values[0], 0.0)
        residual = np.zeros_like(values)
        return ChannelModel(scale=np.ones(1), gamma=np.ones(1), log_albedo=kappa,
                            residual=residual, history=[0.0], converged=True)

    row_counts = present.sum(axis=1)
    col_counts = present.sum(axis=0)
    if (row_counts < 2).any():
        raise InsufficientObservations(
            f"image {int(np.argmin(row_counts))} observes "
            f"{int(row_counts.min())} track(s); need >= 2")
    if (col_counts < 2).any():
        raise InsufficientObservations(
            f"track {int(np.argmin(col_counts))} observed "
            f"{int(col_counts.min())} time(s); need >= 2")
    _check_connected(present)

    gamma = np.ones(m)
    alpha = np.zeros(m)  # log scale
    with np.errstate(invalid="ignore"):
        kappa = np.where(present.any(axis=0),
                         (values * weights).sum(axis=0) / np.maximum(weights.sum(axis=0), 1),
                         0.0)

    def objective():
        recon = gamma[:, None] * (alpha[:, None] + kappa[None, :])
        return float((weights * (values - recon) ** 2).sum())

    def sweep_until_converged(history):
        nonlocal gamma, alpha, kappa
        converged = False
        for _ in range(max_iter):
            # Row regressions y ~ gamma * kappa + b over present tracks.
            for i in range(m):
                if i == REFERENCE_IMAGE:
                    continue
                w = weights[i]
                sw = w.sum()
                sx = (w * kappa).sum()
                sxx = (w * kappa * kappa).sum()
                sy = (w * values[i]).sum()
                sxy = (w * kappa * values[i]).sum()
                det = sxx * sw - sx * sx
                if det > 1e-12 * max(sxx * sw, 1e-300):
                    g = (sxy * sw - sx * sy) / det
                else:
                    g = gamma[i]
                g = min(max(g, GAMMA_BOUNDS[0]), GAMMA_BOUNDS[1])
                b = (sy - g * sx) / sw
                gamma[i] = g
                alpha[i] = b / g
            # Column update for the shared log-albedo.
            num = (weights * gamma[:, None]
                   * (values - (gamma * alpha)[:, None])).sum(axis=0)
            den = (weights * (gamma ** 2)[:, None]).sum(axis=0)
            kappa = num / den

            history.append(objective())
            if len(history) >= 2 and history[-2] - history[-1] < tol:
                converged = True
                break
        return converged

    history = [objective()]
    converged = sweep_until_converged(history)

    if robust:
        recon = gamma[:, None] * (alpha[:, None] + kappa[None, :])
        res = np.abs(values - recon)[present]
        mad = float(np.median(np.abs(res - np.median(res))))
        if mad > 1e-12:
            outliers = present & (np.abs(values - recon) > 3.0 * mad)
            if outliers.any():
                weights = weights.copy()
                weights[outliers] = 0.1
                history.append(objective())
                converged = sweep_until_converged(history)

    recon = gamma[:, None] * (alpha[:, None] + kappa[None, :])
    residual = np.where(present, values - recon, 0.0)
    return ChannelModel(scale=np.exp(alpha), gamma=gamma, log_albedo=kappa,
                        residual=residual, history=history, converged=converged)


def factorize(channels: list[ChannelObservation], tol: float = 1e-14,
              max_iter: int = 500, robust: bool = False) -> ConsistencyModel:
    """Independent rank-2 factorization per channel."""
    return ConsistencyModel(channels=[
        factorize_channel(ch, tol=tol, max_iter=max_iter, robust=robust)
        for ch in channels
    ])


def correct_image(img: np.ndarray, model: ConsistencyModel, index: int) -> np.ndarray:
    """Undo an image's fitted scale/gamma: I = (I')^(1/gamma) / a, clamped."""
    if not 0 <= index < model.image_count:
        raise UnknownImage(f"image index {index} not in model "
                           f"(0..{model.image_count - 1})")
    img = np.asarray(img, dtype=np.float64)
    scale = model.scale_of(index)
    gamma = model.gamma_of(index)
    out = np.clip(img, 0.0, 1.0) ** (1.0 / gamma) / scale
    return np.clip(out, 0.0, 1.0)
