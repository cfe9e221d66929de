"""Plan execution: per-region matting and transfer, then ordered alpha blends.

Every region is transferred from the pristine subject (regions are
independent, so they could run in parallel); blending follows the fixed
foundation-first order.  A failing region is skipped with a warning so one
degenerate trimap cannot kill an interactive session.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from .assets import AssetResolver, MakeupPlan, transfer_config
from .errors import AssetError, DimensionMismatch, MakeupError
from .matting import default_band, make_trimap, solve_matte
from .semantics import COMPOSITE_ORDER, SemanticRegion
from .transfer import transfer_region


@dataclass
class StageTiming:
    region: str
    stage: str
    seconds: float


@dataclass
class RegionArtifacts:
    mask: np.ndarray
    trimap: np.ndarray
    matte: np.ndarray
    styled: np.ndarray


@dataclass
class RenderResult:
    image: np.ndarray
    artifacts: dict[SemanticRegion, RegionArtifacts] = field(default_factory=dict)
    timings: list[StageTiming] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)
    cache_hits: int = 0
    cache_misses: int = 0

    @property
    def total_seconds(self) -> float:
        return sum(t.seconds for t in self.timings)

    def timing_report(self) -> dict:
        return {
            "stages": [{"region": t.region, "stage": t.stage,
                        "seconds": t.seconds} for t in self.timings],
            "total_seconds": self.total_seconds,
            "warnings": [{"region": r, "error": e} for r, e in self.warnings],
            "cache": {"hits": self.cache_hits, "misses": self.cache_misses},
        }


def alpha_blend(base: np.ndarray, styled: np.ndarray, matte: np.ndarray,
                strength: float = 1.0) -> np.ndarray:
    """Per-pixel blend: (strength * matte) of styled over base."""
    base = np.asarray(base, dtype=np.float64)
    styled = np.asarray(styled, dtype=np.float64)
    matte = np.asarray(matte, dtype=np.float64)
    if base.shape != styled.shape or base.shape[:2] != matte.shape:
        raise DimensionMismatch(
            f"blend shapes base={base.shape} styled={styled.shape} "
            f"matte={matte.shape}")
    if not 0.0 <= strength <= 1.0:
        raise ValueError("strength must lie in [0, 1]")
    weight = (strength * matte)[..., None] if base.ndim == 3 else strength * matte
    return weight * styled + (1.0 - weight) * base


def matte_cache_key(subject: np.ndarray, mask: np.ndarray, band: int,
                    region: SemanticRegion) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(subject).tobytes())
    digest.update(np.ascontiguousarray(mask).tobytes())
    digest.update(f"{region.value}|{band}".encode())
    return digest.hexdigest()


def apply_plan(plan: MakeupPlan, assets: AssetResolver,
               matte_cache: dict | None = None) -> RenderResult:
    """Render a makeup plan over its subject.

    Deterministic given plan + assets + seed.  ``matte_cache`` (optional,
    content-hash keyed) lets interactive callers reuse mattes across plan
    tweaks that leave a region's inputs unchanged.
    """
    if plan.subject is None or plan.landmarks is None:
        raise MakeupError("plan needs subject image and landmarks references")
    subject = assets.image(plan.subject)
    landmarks = assets.landmarks(plan.landmarks)
    result = RenderResult(image=subject.copy())

    by_region = {a.region: a for a in plan.assignments}
    for region in COMPOSITE_ORDER:
        assignment = by_region.get(region)
        if assignment is None:
            continue
        try:
            result.image = _render_region(result, subject, landmarks, plan,
                                          assignment, assets, matte_cache)
        except AssetError:
            raise  # missing files are a caller problem, not a render hiccup
        except MakeupError as exc:
            result.warnings.append((region.value, f"{type(exc).__name__}: {exc}"))
    return result


def _render_region(result: RenderResult, subject, landmarks, plan, assignment,
                   assets, matte_cache):
    region = assignment.region
    cfg = transfer_config(assignment, plan.seed)
    band = assignment.band or default_band(subject.shape[1], subject.shape[0])

    tick = time.perf_counter()
    mask = assets.subject_mask(plan, region, landmarks)
    example = assets.example_image(assignment)
    example_mask = assets.example_mask(assignment)
    result.timings.append(StageTiming(region.value, "semantics",
                                      time.perf_counter() - tick))

    tick = time.perf_counter()
    trimap = make_trimap(mask, band)
    result.timings.append(StageTiming(region.value, "trimap",
                                      time.perf_counter() - tick))

    tick = time.perf_counter()
    key = matte_cache_key(subject, mask, band, region) if matte_cache is not None else None
    if key is not None and key in matte_cache:
        matte = matte_cache[key]
        result.cache_hits += 1
    else:
        matte = solve_matte(subject, trimap)
        if key is not None:
            matte_cache[key] = matte
            result.cache_misses += 1
    result.timings.append(StageTiming(region.value, "matte",
                                      time.perf_counter() - tick))

    tick = time.perf_counter()
    styled = transfer_region(subject, example, matte, example_mask, cfg)
    result.timings.append(StageTiming(region.value, "transfer",
                                      time.perf_counter() - tick))

    tick = time.perf_counter()
    blended = alpha_blend(result.image, styled, matte, assignment.strength)
    result.timings.append(StageTiming(region.value, "blend",
                                      time.perf_counter() - tick))

    result.artifacts[region] = RegionArtifacts(mask=mask, trimap=trimap,
                                               matte=matte, styled=styled)
    return blended
