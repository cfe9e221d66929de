"""Deterministic synthetic face images + matching 83-point landmark files.

Parts are drawn as soft-edged ellipses so mattes have real gradients to
work with; per-channel noise keeps region color clouds fully 3D.  The
final image is gray-world balanced so white balancing is a near no-op on
fixtures (self-transfer stays close to the subject).
"""

import numpy as np

from facemakeup.imaging import gray_world_white_balance
from facemakeup.semantics import GROUP_SIZES

STYLES = {
    "subject": {
        "background": ((0.48, 0.50, 0.52), (0.58, 0.58, 0.56)),
        "skin": (0.80, 0.62, 0.52),
        "brow": (0.30, 0.22, 0.18),
        "iris": (0.35, 0.45, 0.60),
        "lip_top": (0.72, 0.35, 0.38),
        "lip_bottom": (0.60, 0.26, 0.30),
        "mouth_inner": (0.86, 0.80, 0.76),
        "hair": (0.25, 0.18, 0.14),
    },
    "example": {
        "background": ((0.52, 0.50, 0.48), (0.60, 0.60, 0.62)),
        "skin": (0.68, 0.52, 0.42),
        "brow": (0.16, 0.12, 0.10),
        "iris": (0.30, 0.55, 0.35),
        "lip_top": (0.62, 0.14, 0.24),
        "lip_bottom": (0.48, 0.10, 0.18),
        "mouth_inner": (0.90, 0.86, 0.80),
        "hair": (0.36, 0.22, 0.12),
    },
}

# Part geometry as (cx, cy, rx, ry) in image-size fractions.
GEOMETRY = {
    "face": (0.50, 0.54, 0.30, 0.38),
    "left_eyebrow": (0.38, 0.35, 0.085, 0.022),
    "right_eyebrow": (0.62, 0.35, 0.085, 0.022),
    "left_eye": (0.38, 0.44, 0.058, 0.034),
    "right_eye": (0.62, 0.44, 0.058, 0.034),
    "nose": (0.50, 0.56, 0.045, 0.060),
    "mouth_outer": (0.50, 0.72, 0.105, 0.048),
    "mouth_inner": (0.50, 0.72, 0.058, 0.022),
}

GROUP_PART = {
    "face_contour": "face",
    "left_eyebrow": "left_eyebrow",
    "right_eyebrow": "right_eyebrow",
    "left_eye": "left_eye",
    "right_eye": "right_eye",
    "nose": "nose",
    "mouth_outer": "mouth_outer",
    "mouth_inner": "mouth_inner",
}


def ellipse_points(cx, cy, rx, ry, n):
    theta = 2.0 * np.pi * np.arange(n) / n
    return np.stack([cx + rx * np.cos(theta), cy + ry * np.sin(theta)], axis=1)


def _ellipse_field(size, cx, cy, rx, ry):
    ys, xs = np.mgrid[0:size, 0:size]
    return (((xs + 0.5) - cx) / rx) ** 2 + (((ys + 0.5) - cy) / ry) ** 2


def _paint(img, field, color, softness):
    alpha = np.clip((1.0 - field) / softness, 0.0, 1.0)[..., None]
    img *= 1.0 - alpha
    img += alpha * np.asarray(color)


def synth_face(size=512, style="subject", seed=0, image_name="synthetic.png"):
    """Render a face and return (image array, landmark JSON document)."""
    palette = STYLES[style]
    rng = np.random.default_rng(seed)

    top, bottom = (np.asarray(c) for c in palette["background"])
    ramp = np.linspace(0.0, 1.0, size)[:, None, None]
    img = top * (1.0 - ramp) + bottom * ramp
    img = np.broadcast_to(img, (size, size, 3)).copy()

    soft = 10.0 / size  # soft boundary a few pixels wide

    # Hair cap behind the face.
    fx, fy, frx, fry = GEOMETRY["face"]
    hair = _ellipse_field(size, fx * size, (fy - 0.10) * size,
                          frx * 1.18 * size, fry * 1.05 * size)
    _paint(img, hair, palette["hair"], soft)

    face = _ellipse_field(size, fx * size, fy * size, frx * size, fry * size)
    _paint(img, face, palette["skin"], soft)
    # Gentle forehead-to-chin shading so the skin luminance has structure.
    shade = 0.06 * np.linspace(-1.0, 1.0, size)[:, None]
    img[..., :3] += (shade * np.clip(1.0 - face, 0.0, 1.0)[..., None] / 3.0)

    for part in ("left_eyebrow", "right_eyebrow"):
        cx, cy, rx, ry = GEOMETRY[part]
        f = _ellipse_field(size, cx * size, cy * size, rx * size, ry * size)
        _paint(img, f, palette["brow"], soft * 2)

    for part in ("left_eye", "right_eye"):
        cx, cy, rx, ry = GEOMETRY[part]
        f = _ellipse_field(size, cx * size, cy * size, rx * size, ry * size)
        _paint(img, f, (0.95, 0.95, 0.94), soft)
        iris = _ellipse_field(size, cx * size, cy * size, rx * 0.45 * size, ry * 0.9 * size)
        _paint(img, iris, palette["iris"], soft)

    cx, cy, rx, ry = GEOMETRY["mouth_outer"]
    lips = _ellipse_field(size, cx * size, cy * size, rx * size, ry * size)
    ys = np.linspace(0.0, 1.0, size)[:, None, None]
    lip_color = (np.asarray(palette["lip_top"]) * (1 - ys)
                 + np.asarray(palette["lip_bottom"]) * ys)
    alpha = np.clip((1.0 - lips) / soft, 0.0, 1.0)[..., None]
    img = img * (1 - alpha) + alpha * lip_color

    cx, cy, rx, ry = GEOMETRY["mouth_inner"]
    inner = _ellipse_field(size, cx * size, cy * size, rx * size, ry * size)
    _paint(img, inner, palette["mouth_inner"], soft)

    img += rng.normal(0.0, 0.012, size=img.shape)
    img = np.clip(img, 0.02, 0.98)
    balanced, _ = gray_world_white_balance(img)
    img = np.clip(balanced, 0.0, 1.0)

    groups = {}
    for group, n in GROUP_SIZES.items():
        cx, cy, rx, ry = GEOMETRY[GROUP_PART[group]]
        pts = ellipse_points(cx * size, cy * size, rx * size, ry * size, n)
        groups[group] = [[float(x), float(y)] for x, y in pts]

    doc = {"image": image_name, "width": size, "height": size, "groups": groups}
    return img, doc
