"""Per-region makeup style transfer.

Four stages over a matted region pair: luminance histogram matching,
gradient-preserving luminance blending (a screened least-squares solve
balancing target intensities against subject gradients), gamut centering,
and a 3x3 color transform fitted by minimizing a convex-hull union-volume
energy.  All color math runs in CIE L*a*b* after gray-world balancing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .errors import DegenerateGamut, DimensionMismatch, EmptyRegion
from .imaging import gray_world_white_balance, lab_to_rgb, rgb_to_lab
from .numerics import Hull3, SparseMatrix, cg_solve, nelder_mead, quickhull3

# Pixels with matte above this opacity belong to the transfer support;
# below it, matting noise would be amplified.
MATTE_SUPPORT = 0.05


@dataclass
class TransferConfig:
    """Knobs for one region transfer."""

    sigma: float = 1.0             # gradient-preservation weight
    bins: int = 256                # histogram resolution
    sample_cap: int = 4000         # max color samples fed to hulls
    optimizer_tol: float = 1e-4
    optimizer_max_iter: int = 500
    seed: int = 0
    solver_tol: float = 1e-8

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.bins < 2:
            raise ValueError("need at least 2 histogram bins")
        if self.sample_cap < 4:
            raise ValueError("sample cap must be >= 4")

    def replace(self, **overrides) -> "TransferConfig":
        fields = {**self.__dict__, **overrides}
        return TransferConfig(**fields)


@dataclass
class Gamut:
    """Color cloud of a region: samples, their hull, and their mean."""

    samples: np.ndarray   # (k, 3)
    hull: Hull3
    mean: np.ndarray      # (3,)


@dataclass
class ColorTransform:
    """3x3 linear map acting on mean-centered color samples."""

    matrix: np.ndarray    # (3, 3)
    energy: float
    converged: bool = True

    def apply(self, samples: np.ndarray) -> np.ndarray:
        return samples @ self.matrix.T


def match_luminance_histogram(values: np.ndarray, example: np.ndarray,
                              bins: int = 256) -> np.ndarray:
    """Map ``values`` through their own CDF and the inverse example CDF.

    The inverse interpolates linearly between bin edges, so outputs stay
    within [example.min(), example.max()] and the identity case reproduces
    inputs within one bin width.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    example = np.asarray(example, dtype=np.float64).ravel()
    if values.size == 0 or example.size == 0:
        raise EmptyRegion("histogram matching needs nonempty sample sets")
    if bins < 2:
        raise ValueError("need at least 2 histogram bins")

    lo_e, hi_e = float(example.min()), float(example.max())
    if hi_e == lo_e:
        return np.full(values.shape, lo_e)
    lo_s, hi_s = float(values.min()), float(values.max())
    if hi_s == lo_s:
        u = np.ones(values.shape)
    else:
        edges_s = np.linspace(lo_s, hi_s, bins + 1)
        counts_s = np.histogram(values, bins=bins, range=(lo_s, hi_s))[0]
        cdf_s = np.concatenate([[0.0], np.cumsum(counts_s)]) / values.size
        u = np.interp(values, edges_s, cdf_s)

    edges_e = np.linspace(lo_e, hi_e, bins + 1)
    counts_e = np.histogram(example, bins=bins, range=(lo_e, hi_e))[0]
    cdf_e = np.concatenate([[0.0], np.cumsum(counts_e)]) / example.size
    keep = np.concatenate([[True], np.diff(cdf_e) > 0])
    return np.interp(u, cdf_e[keep], edges_e[keep])


def _gradient_normal_matrix(height: int, width: int) -> scipy.sparse.csr_matrix:
    """Gx^T Gx + Gy^T Gy for forward differences with replicate boundaries."""
    n = height * width
    idx = np.arange(n).reshape(height, width)

    def diff_op(src, dst):
        rows = np.concatenate([src, src])
        cols = np.concatenate([src, dst])
        vals = np.concatenate([-np.ones(src.size), np.ones(src.size)])
        return scipy.sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()

    gx = diff_op(idx[:, :-1].ravel(), idx[:, 1:].ravel())
    gy = diff_op(idx[:-1, :].ravel(), idx[1:, :].ravel())
    return (gx.T @ gx + gy.T @ gy).tocsr()


def blend_luminance_gradient(subject_lum: np.ndarray, target_lum: np.ndarray,
                             sigma: float, tol: float = 1e-8,
                             max_iter: int = 20000) -> np.ndarray:
    """Solve for luminance whose values follow ``target_lum`` while its
    gradients follow ``subject_lum``, weighted by ``sigma``.

    With sigma = 0 the system collapses to the identity and the target is
    returned exactly.
    """
    subject_lum = np.asarray(subject_lum, dtype=np.float64)
    target_lum = np.asarray(target_lum, dtype=np.float64)
    if subject_lum.shape != target_lum.shape or subject_lum.ndim != 2:
        raise DimensionMismatch(
            f"luminance shapes {subject_lum.shape} vs {target_lum.shape}")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")

    h, w = subject_lum.shape
    smooth = _gradient_normal_matrix(h, w)
    system = scipy.sparse.identity(h * w, format="csr") + sigma * smooth
    rhs = target_lum.ravel() + sigma * (smooth @ subject_lum.ravel())
    A = SparseMatrix(csr=system.tocsr(), symmetric=True)
    x = cg_solve(A, rhs, tol=tol, max_iter=max_iter)
    return x.reshape(h, w)


def center_gamut(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Shift samples so their mean is the origin; returns (centered, mean)."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise EmptyRegion("cannot center an empty sample set")
    mean = samples.mean(axis=0)
    return samples - mean, mean


def build_gamut(samples: np.ndarray, sample_cap: int | None = None,
                seed: int = 0) -> Gamut:
    """Gamut of a color cloud, optionally capped by a seeded subsample."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise EmptyRegion("cannot build a gamut from no samples")
    if sample_cap is not None and samples.shape[0] > sample_cap:
        pick = np.random.default_rng(seed).choice(samples.shape[0], sample_cap,
                                                  replace=False)
        samples = samples[np.sort(pick)]
    return Gamut(samples=samples, hull=quickhull3(samples),
                 mean=samples.mean(axis=0))


def _check_mapped_nondegenerate(vertices: np.ndarray) -> None:
    spread = float(np.linalg.norm(vertices.max(axis=0) - vertices.min(axis=0)))
    sv = np.linalg.svd(vertices - vertices.mean(axis=0), compute_uv=False)
    if spread == 0.0 or sv[-1] <= 1e-9 * spread:
        raise DegenerateGamut("transform collapsed the subject gamut")


def gamut_energy(transform, subject_gamut: Gamut, example_gamut: Gamut) -> float:
    """Hull mismatch after mapping the subject gamut: twice the union-hull
    volume minus the two individual volumes.  Nonnegative by convexity
    (clamped against roundoff at the zero floor).

    Linear maps send hulls to hulls, so the mapped volume is |det| times the
    subject hull volume and the union only needs the mapped hull vertices.
    """
    matrix = transform.matrix if isinstance(transform, ColorTransform) else np.asarray(transform)
    mapped = subject_gamut.hull.vertices @ matrix.T
    _check_mapped_nondegenerate(mapped)
    mapped_volume = abs(float(np.linalg.det(matrix))) * subject_gamut.hull.volume
    union_volume = quickhull3(
        np.vstack([mapped, example_gamut.hull.vertices])).volume
    return max(0.0, 2.0 * union_volume - example_gamut.hull.volume - mapped_volume)


def fit_gamut_transform(subject_gamut: Gamut, example_gamut: Gamut,
                        cfg: TransferConfig) -> ColorTransform:
    """Minimize the gamut energy over 3x3 matrices with Nelder-Mead.

    Starts from the per-axis standard-deviation ratio diagonal; the result
    never has higher energy than that initialization.
    """
    std_s = subject_gamut.samples.std(axis=0)
    std_e = example_gamut.samples.std(axis=0)
    if np.any(std_s <= 0):
        raise DegenerateGamut("subject gamut has a zero-variance axis")
    init = np.diag(std_e / std_s)

    def objective(params: np.ndarray) -> float:
        matrix = params.reshape(3, 3)
        if abs(np.linalg.det(matrix)) < 1e-9:
            return float("inf")
        try:
            return gamut_energy(matrix, subject_gamut, example_gamut)
        except DegenerateGamut:
            return float("inf")

    scale = 0.1 * max(1.0, float(np.abs(init).max()))
    res = nelder_mead(objective, init.ravel(), scale=scale,
                      tol=cfg.optimizer_tol, max_iter=cfg.optimizer_max_iter)
    matrix = res.x.reshape(3, 3)
    if abs(np.linalg.det(matrix)) < 1e-12:
        raise DegenerateGamut("fitted transform is singular")
    return ColorTransform(matrix=matrix, energy=res.value, converged=res.converged)


def _bounding_box(mask: np.ndarray) -> tuple[int, int, int, int]:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return rows[0], rows[-1] + 1, cols[0], cols[-1] + 1


def transfer_region(subject: np.ndarray, example: np.ndarray,
                    subject_matte: np.ndarray, example_mask: np.ndarray,
                    cfg: TransferConfig | None = None) -> np.ndarray:
    """Restyle the subject's matted region after the example's masked region.

    Subject and example may differ freely in size and pose; no alignment is
    performed.  Only pixels with matte > MATTE_SUPPORT change; everything
    else is bit-identical to the subject.  Degenerate (near-constant) color
    clouds skip the transform fit and apply a pure mean shift.
    """
    cfg = cfg or TransferConfig()
    subject = np.asarray(subject, dtype=np.float64)
    example = np.asarray(example, dtype=np.float64)
    region = np.asarray(subject_matte) > MATTE_SUPPORT
    ex_region = np.asarray(example_mask) > 0.5
    if not region.any():
        raise EmptyRegion("subject matte has no support above threshold")
    if not ex_region.any():
        raise EmptyRegion("example mask is empty")

    balanced_s, _ = gray_world_white_balance(subject)
    balanced_e, _ = gray_world_white_balance(example)
    lab_s = rgb_to_lab(balanced_s)
    lab_e = rgb_to_lab(balanced_e)

    # Luminance: histogram match into the example, then re-anchor gradients.
    lum_s = lab_s[..., 0]
    matched = match_luminance_histogram(lum_s[region],
                                        lab_e[..., 0][ex_region], cfg.bins)
    r0, r1, c0, c1 = _bounding_box(region)
    box_region = region[r0:r1, c0:c1]
    box_subject = lum_s[r0:r1, c0:c1]
    box_target = box_subject.copy()
    box_target[box_region] = matched
    box_output = blend_luminance_gradient(box_subject, box_target, cfg.sigma,
                                          tol=cfg.solver_tol)

    # Chrominance: centered-gamut transform, or mean shift when degenerate.
    centered_s, _ = center_gamut(lab_s[region])
    centered_e, example_mean = center_gamut(lab_e[ex_region])
    try:
        subject_gamut = build_gamut(centered_s, cfg.sample_cap, seed=cfg.seed)
        example_gamut = build_gamut(centered_e, cfg.sample_cap, seed=cfg.seed + 1)
        transform = fit_gamut_transform(subject_gamut, example_gamut, cfg)
        styled_samples = transform.apply(centered_s) + example_mean
    except DegenerateGamut:
        styled_samples = centered_s + example_mean

    out_lab = lab_s.copy()
    out_lab[region] = styled_samples
    out_lab[r0:r1, c0:c1][box_region, 0] = box_output[box_region]

    out_rgb = lab_to_rgb(out_lab)
    result = subject.copy()
    result[region] = out_rgb[region]
    return result
