"""Image buffers, sRGB <-> CIE L*a*b* conversion, white balance, PNG/JPEG IO.

Images are numpy float64 arrays in [0, 1]: shape (h, w) for single-channel
masks/mattes/luminance, (h, w, 3) for color.  Lab images share the layout
with L in [0, 100] and a, b roughly in [-128, 127].  Values are clamped to
[0, 1] only at file boundaries (8-bit PNG); intermediate stages keep full
float precision so repeated passes do not drift.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import ChannelMismatch, ZeroChannel

# sRGB <-> XYZ (D65) primaries.
_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])

# Rec. 709 luma weights, used as the gray-world target.
_LUMA = np.array([0.2126, 0.7152, 0.0722])


def _require_color(img: np.ndarray, op: str) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ChannelMismatch(f"{op} expects an (h, w, 3) image, got shape {img.shape}")
    return img


def rgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Per-pixel sRGB (D65) to CIE L*a*b*."""
    rgb = _require_color(img, "rgb_to_lab")
    linear = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _RGB_TO_XYZ.T / _D65_WHITE

    delta = 6.0 / 29.0
    f = np.where(xyz > delta ** 3, np.cbrt(xyz), xyz / (3 * delta ** 2) + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_lab`; out-of-gamut results clamp to [0, 1]."""
    lab = _require_color(lab, "lab_to_rgb")
    light, a, b = lab[..., 0], lab[..., 1], lab[..., 2]
    fy = (light + 16.0) / 116.0
    fx = fy + a / 500.0
    fz = fy - b / 200.0
    f = np.stack([fx, fy, fz], axis=-1)

    delta = 6.0 / 29.0
    xyz = np.where(f > delta, f ** 3, 3 * delta ** 2 * (f - 4.0 / 29.0)) * _D65_WHITE
    linear = xyz @ _XYZ_TO_RGB.T
    linear = np.clip(linear, 0.0, None)
    rgb = np.where(linear <= 0.0031308, 12.92 * linear,
                   1.055 * linear ** (1.0 / 2.4) - 0.055)
    return np.clip(rgb, 0.0, 1.0)


def gray_world_white_balance(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each channel so its mean matches the pre-balance luminance mean.

    Returns the balanced image and the per-channel gains for audit.  Output
    samples are intentionally not clamped (a second application must be an
    exact no-op); clamping happens at the file boundary.
    """
    img = _require_color(img, "gray_world_white_balance")
    means = img.reshape(-1, 3).mean(axis=0)
    if np.any(means < 1e-6):
        raise ZeroChannel(f"channel means {means} too small to balance")
    target = means.dot(_LUMA)
    gains = target / means
    return img * gains, gains


# --- file boundaries ---------------------------------------------------------

def to_uint8(img: np.ndarray) -> np.ndarray:
    return (np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def from_uint8(raw: np.ndarray) -> np.ndarray:
    return raw.astype(np.float64) / 255.0


def load_image(path) -> np.ndarray:
    """Read PNG/JPEG as float RGB in [0, 1] (grayscale files load as (h, w))."""
    with PILImage.open(path) as pil:
        if pil.mode in ("L", "I;16"):
            return from_uint8(np.asarray(pil.convert("L")))
        return from_uint8(np.asarray(pil.convert("RGB")))


def load_gray(path) -> np.ndarray:
    """Read an 8-bit grayscale PNG (masks/mattes: 0 -> 0.0, 255 -> 1.0)."""
    with PILImage.open(path) as pil:
        return from_uint8(np.asarray(pil.convert("L")))


def save_png(path, img: np.ndarray) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(png_bytes(img))


def png_bytes(img: np.ndarray) -> bytes:
    """Deterministic PNG encoding of a float image (color or grayscale)."""
    raw = to_uint8(img)
    mode = "L" if raw.ndim == 2 else "RGB"
    buf = io.BytesIO()
    PILImage.fromarray(raw, mode=mode).save(buf, format="PNG")
    return buf.getvalue()
