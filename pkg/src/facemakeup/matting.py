"""Trimap generation and alpha-matte solving for soft region boundaries.

A region mask becomes a trimap by eroding (sure foreground) and dilating
(reach of the unknown band) with a disk structuring element; the matte
inside the unknown band is the minimizer of a local color-line Laplacian
energy with soft label constraints, solved by conjugate gradients.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, EmptyForeground, UnconstrainedMatte
from .numerics import SparseMatrix, cg_solve

BACKGROUND = 0
UNKNOWN = 128
FOREGROUND = 255

# Matting Laplacian defaults: window regularization and label stiffness.
DEFAULT_EPS = 1e-5
DEFAULT_LAMBDA = 100.0

# Unknown-band half-width at 512 px, scaled proportionally with image size.
BASE_BAND = 4
BASE_SIZE = 512


def default_band(width: int, height: int) -> int:
    return max(1, round(BASE_BAND * min(width, height) / BASE_SIZE))


def disk_offsets(radius: int) -> np.ndarray:
    """Integer offsets (dy, dx) with dy^2 + dx^2 <= radius^2."""
    r = int(radius)
    span = np.arange(-r, r + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    keep = dy ** 2 + dx ** 2 <= r ** 2
    return np.stack([dy[keep], dx[keep]], axis=1)


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Max-filter of a binary mask over a disk; out-of-image reads are 0."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    mask = np.asarray(mask, dtype=bool)
    if radius == 0:
        return mask.copy()
    h, w = mask.shape
    out = np.zeros_like(mask)
    for dy, dx in disk_offsets(radius):
        sy0, sy1 = max(0, -dy), min(h, h - dy)
        sx0, sx1 = max(0, -dx), min(w, w - dx)
        if sy1 <= sy0 or sx1 <= sx0:
            continue
        out[sy0 + dy:sy1 + dy, sx0 + dx:sx1 + dx] |= mask[sy0:sy1, sx0:sx1]
    return out


def erode(mask: np.ndarray, radius: int) -> np.ndarray:
    """Dilation of the complement, complemented (image border does not erode)."""
    return ~dilate(~np.asarray(mask, dtype=bool), radius)


def make_trimap(mask: np.ndarray, band: int) -> np.ndarray:
    """Trimap from a binary mask: erode for foreground, dilate for reach.

    Raises :class:`EmptyForeground` when the erosion annihilates the mask;
    callers should shrink ``band``.
    """
    if band < 1:
        raise ValueError("band must be >= 1")
    mask = np.asarray(mask, dtype=bool)
    fg = erode(mask, band)
    if not fg.any():
        raise EmptyForeground(f"band {band} erased a {int(mask.sum())}-pixel mask")
    reach = dilate(mask, band)
    trimap = np.full(mask.shape, BACKGROUND, dtype=np.uint8)
    trimap[reach] = UNKNOWN
    trimap[fg] = FOREGROUND
    return trimap


def trimap_from_gray(gray: np.ndarray) -> np.ndarray:
    """Decode a grayscale matte/trimap image into {0, 128, 255} labels."""
    raw = (np.clip(gray, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    trimap = np.full(raw.shape, UNKNOWN, dtype=np.uint8)
    trimap[raw <= 64] = BACKGROUND
    trimap[raw >= 192] = FOREGROUND
    return trimap


def _matting_laplacian_triplets(img: np.ndarray, eps: float):
    """Closed-form color-line Laplacian over all full 3x3 windows."""
    if img.ndim == 2:
        img = img[..., None]
    h, w, c = img.shape
    flat = img.reshape(-1, c)
    idx = np.arange(h * w).reshape(h, w)

    # All 3x3 window pixel-index blocks, as an (n_windows, 9) matrix.
    win = np.stack([idx[dy:h - 2 + dy, dx:w - 2 + dx]
                    for dy in range(3) for dx in range(3)], axis=-1).reshape(-1, 9)
    win_px = flat[win]                                    # (n, 9, c)
    mu = win_px.mean(axis=1, keepdims=True)
    centered = win_px - mu
    cov = np.einsum("nij,nik->njk", centered, centered) / 9.0
    inv = np.linalg.inv(cov + (eps / 9.0) * np.eye(c))
    quad = np.einsum("nij,njk,nlk->nil", centered, inv, centered)
    vals = np.eye(9) - (1.0 + quad) / 9.0

    rows = np.repeat(win, 9, axis=1).ravel()
    cols = np.tile(win, (1, 9)).ravel()
    return rows, cols, vals.ravel(), h * w


def solve_matte(img: np.ndarray, trimap: np.ndarray, eps: float = DEFAULT_EPS,
                lam: float = DEFAULT_LAMBDA, tol: float = 1e-6,
                max_iter: int = 20000) -> np.ndarray:
    """Alpha matte honoring trimap labels with color-line smoothness between.

    Minimizes a^T L a + lam * sum over labeled pixels of (a_p - t_p)^2 with
    L the 3x3-window color-line Laplacian, then clamps to [0, 1] and pins
    labeled pixels to their exact {0, 1} targets.  The linear solve runs on
    the bounding box of the unknown band (pixels elsewhere are already
    decided by their labels), which leaves the result unchanged up to the
    label stiffness.
    """
    img = np.asarray(img, dtype=np.float64)
    trimap = np.asarray(trimap)
    if img.shape[:2] != trimap.shape:
        raise DimensionMismatch(
            f"image {img.shape[:2]} and trimap {trimap.shape} sizes differ")
    if not (trimap == FOREGROUND).any() or not (trimap == BACKGROUND).any():
        raise UnconstrainedMatte("trimap needs at least one foreground and one "
                                 "background pixel")

    alpha = (trimap == FOREGROUND).astype(np.float64)
    unknown = trimap == UNKNOWN
    if not unknown.any():
        return alpha

    if img.shape[0] < 3 or img.shape[1] < 3:
        raise UnconstrainedMatte("image too small for 3x3 matting windows")

    rows_u, cols_u = np.nonzero(unknown)
    margin = 2  # window radius + 1 so every window touching the band is kept
    r0 = max(0, rows_u.min() - margin)
    r1 = min(trimap.shape[0], rows_u.max() + margin + 1)
    c0 = max(0, cols_u.min() - margin)
    c1 = min(trimap.shape[1], cols_u.max() + margin + 1)
    if r1 - r0 < 3:
        r0 = min(r0, trimap.shape[0] - 3)
        r1 = r0 + 3
    if c1 - c0 < 3:
        c0 = min(c0, trimap.shape[1] - 3)
        c1 = c0 + 3

    sub_img = img[r0:r1, c0:c1]
    sub_tri = trimap[r0:r1, c0:c1]
    labeled = (sub_tri != UNKNOWN).ravel()
    targets = (sub_tri == FOREGROUND).ravel().astype(np.float64)

    rows, cols, vals, n = _matting_laplacian_triplets(sub_img, eps)
    diag = np.arange(n)
    rows = np.concatenate([rows, diag])
    cols = np.concatenate([cols, diag])
    vals = np.concatenate([vals, lam * labeled])
    A = SparseMatrix.from_triplets(rows, cols, vals, (n, n), symmetric=True)
    b = lam * labeled * targets

    x = cg_solve(A, b, tol=tol, max_iter=max_iter)
    sub_alpha = np.clip(x.reshape(sub_tri.shape), 0.0, 1.0)
    sub_alpha[sub_tri == FOREGROUND] = 1.0
    sub_alpha[sub_tri == BACKGROUND] = 0.0
    alpha[r0:r1, c0:c1] = sub_alpha
    return alpha
