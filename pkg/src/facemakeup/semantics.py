"""Facial landmarks, per-part contours, and rasterized region masks.

Landmarks are ingested from JSON (83 points in 8 fixed groups); detection
itself is upstream tooling and out of scope.  Contours connect each group's
points in storage order and close the ring; masks are scanline even-odd
fills sampled at pixel centers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EmptyMask, NoContour, OutOfBounds, SchemaError, SelfIntersecting

GROUP_SIZES = {
    "face_contour": 19,
    "left_eyebrow": 8,
    "right_eyebrow": 8,
    "left_eye": 10,
    "right_eye": 10,
    "nose": 10,
    "mouth_outer": 12,
    "mouth_inner": 6,
}
TOTAL_POINTS = 83


class SemanticRegion(str, Enum):
    FACE_SKIN = "FaceSkin"
    LEFT_EYEBROW = "LeftEyebrow"
    RIGHT_EYEBROW = "RightEyebrow"
    LEFT_EYE = "LeftEye"
    RIGHT_EYE = "RightEye"
    LIPS = "Lips"
    TEETH = "Teeth"
    HAIR = "Hair"


# Region -> landmark group.  Hair has no landmark contour (user-supplied
# mask); the nose group is validated but produces no transfer region.
REGION_GROUPS = {
    SemanticRegion.FACE_SKIN: "face_contour",
    SemanticRegion.LEFT_EYEBROW: "left_eyebrow",
    SemanticRegion.RIGHT_EYEBROW: "right_eyebrow",
    SemanticRegion.LEFT_EYE: "left_eye",
    SemanticRegion.RIGHT_EYE: "right_eye",
    SemanticRegion.LIPS: "mouth_outer",
    SemanticRegion.TEETH: "mouth_inner",
}

# Compositing order: skin foundation first, hair last.
COMPOSITE_ORDER = [
    SemanticRegion.FACE_SKIN,
    SemanticRegion.TEETH,
    SemanticRegion.LIPS,
    SemanticRegion.LEFT_EYE,
    SemanticRegion.RIGHT_EYE,
    SemanticRegion.LEFT_EYEBROW,
    SemanticRegion.RIGHT_EYEBROW,
    SemanticRegion.HAIR,
]


@dataclass
class LandmarkSet:
    image: str
    width: int
    height: int
    groups: dict[str, np.ndarray]  # group name -> (n, 2) float array of (x, y)


def parse_landmarks(document: dict) -> LandmarkSet:
    """Validate a landmark JSON document into a :class:`LandmarkSet`."""
    if not isinstance(document, dict):
        raise SchemaError("landmark document must be a JSON object")
    for key in ("image", "width", "height", "groups"):
        if key not in document:
            raise SchemaError(f"missing key {key!r}")
    width, height = document["width"], document["height"]
    if not (isinstance(width, int) and isinstance(height, int) and width > 0 and height > 0):
        raise SchemaError("width/height must be positive integers")

    raw_groups = document["groups"]
    if not isinstance(raw_groups, dict):
        raise SchemaError("groups must be an object")
    unknown = set(raw_groups) - set(GROUP_SIZES)
    if unknown:
        raise SchemaError(f"unknown groups {sorted(unknown)}")

    groups: dict[str, np.ndarray] = {}
    total = 0
    for name, size in GROUP_SIZES.items():
        pts = raw_groups.get(name)
        if pts is None:
            raise SchemaError(f"missing group {name!r}")
        arr = np.asarray(pts, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise SchemaError(f"group {name!r} must be a list of [x, y] pairs")
        if arr.shape[0] != size:
            raise SchemaError(f"group {name!r} has {arr.shape[0]} points, expected {size}")
        if not np.isfinite(arr).all():
            raise SchemaError(f"group {name!r} contains non-finite coordinates")
        groups[name] = arr
        total += arr.shape[0]
    if total != TOTAL_POINTS:
        raise SchemaError(f"expected {TOTAL_POINTS} points, got {total}")

    for name, arr in groups.items():
        bad = (arr[:, 0] < 0) | (arr[:, 0] >= width) | (arr[:, 1] < 0) | (arr[:, 1] >= height)
        if bad.any():
            idx = int(np.flatnonzero(bad)[0])
            raise OutOfBounds(
                f"{name}[{idx}] = {tuple(arr[idx])} outside {width}x{height} image"
            )
    return LandmarkSet(image=str(document["image"]), width=width, height=height,
                       groups=groups)


def load_landmarks(path) -> LandmarkSet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_landmarks(json.load(fh))


def _cross2(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _segments_cross(p1, p2, p3, p4) -> bool:
    """Proper intersection of open segments (shared endpoints do not count)."""
    d1 = _cross2(p4 - p3, p1 - p3)
    d2 = _cross2(p4 - p3, p2 - p3)
    d3 = _cross2(p2 - p1, p3 - p1)
    d4 = _cross2(p2 - p1, p4 - p1)
    return bool(((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))
                and d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0)


def region_contour(lm: LandmarkSet, region: SemanticRegion) -> np.ndarray:
    """Closed simple polygon for a landmark-derived region.

    Points are connected in group storage order, closing last to first.
    Raises :class:`NoContour` for Hair and :class:`SelfIntersecting` when
    the resulting ring crosses itself.
    """
    if region == SemanticRegion.HAIR:
        raise NoContour("Hair has no landmark contour; supply a mask image")
    group = REGION_GROUPS[region]
    poly = lm.groups[group].copy()

    n = len(poly)
    for i in range(n):
        a1, a2 = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = poly[j], poly[(j + 1) % n]
            if _segments_cross(a1, a2, b1, b2):
                raise SelfIntersecting(
                    f"{region.value} contour edges {i} and {j} cross"
                )
    return poly


def polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def rasterize_mask(polygon: np.ndarray, width: int, height: int) -> np.ndarray:
    """Scanline even-odd fill: pixels whose centers fall inside the polygon.

    Raises :class:`EmptyMask` when the polygon covers less than one pixel of
    area or no pixel center at all.
    """
    poly = np.asarray(polygon, dtype=np.float64)
    if polygon_area(poly) < 1.0:
        raise EmptyMask(f"polygon area {polygon_area(poly):.3f} px below one pixel")

    x1, y1 = poly[:, 0], poly[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    mask = np.zeros((height, width), dtype=bool)
    centers_x = np.arange(width) + 0.5

    y_lo, y_hi = np.minimum(y1, y2), np.maximum(y1, y2)
    for row in range(height):
        yc = row + 0.5
        hit = (y_lo <= yc) & (yc < y_hi)   # half-open rule handles vertices
        if not hit.any():
            continue
        t = (yc - y1[hit]) / (y2[hit] - y1[hit])
        crossings = np.sort(x1[hit] + t * (x2[hit] - x1[hit]))
        parity = np.searchsorted(crossings, centers_x, side="left") % 2
        mask[row] = parity == 1

    if not mask.any():
        raise EmptyMask("polygon encloses no pixel center")
    return mask


def region_mask(lm: LandmarkSet, region: SemanticRegion) -> np.ndarray:
    """Full-image binary mask for a region.

    FaceSkin is the face-contour fill minus the eye, eyebrow and lip fills
    so later layers never fight the foundation.
    """
    mask = rasterize_mask(region_contour(lm, region), lm.width, lm.height)
    if region != SemanticRegion.FACE_SKIN:
        return mask
    for sub in (SemanticRegion.LEFT_EYE, SemanticRegion.RIGHT_EYE,
                SemanticRegion.LEFT_EYEBROW, SemanticRegion.RIGHT_EYEBROW,
                SemanticRegion.LIPS):
        try:
            mask &= ~rasterize_mask(region_contour(lm, sub), lm.width, lm.height)
        except EmptyMask:
            continue
    return mask
