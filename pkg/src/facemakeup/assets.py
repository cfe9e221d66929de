"""Makeup plans, example catalogs, and file-backed asset resolution."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AssetError, PlanError
from .imaging import load_gray, load_image
from .semantics import SemanticRegion, load_landmarks, region_mask
from .transfer import TransferConfig

CONFIG_KEYS = {"sigma", "bins", "sample_cap", "optimizer_tol",
               "optimizer_max_iter", "seed", "solver_tol"}


@dataclass
class Assignment:
    """One region's style source: example image plus its region mask."""

    region: SemanticRegion
    example: str                     # image path or catalog identifier
    example_mask: str | None = None  # grayscale PNG; derived from landmarks if absent
    example_landmarks: str | None = None
    strength: float = 1.0
    config: dict = field(default_factory=dict)
    band: int | None = None          # trimap band override

    def __post_init__(self):
        if not 0.0 <= self.strength <= 1.0:
            raise PlanError(f"strength {self.strength} outside [0, 1]")
        unknown = set(self.config) - CONFIG_KEYS
        if unknown:
            raise PlanError(f"unknown config keys {sorted(unknown)}")


@dataclass
class MakeupPlan:
    """Subject references plus at most one assignment per region."""

    subject: str | None = None
    landmarks: str | None = None
    subject_masks: dict[SemanticRegion, str] = field(default_factory=dict)
    assignments: list[Assignment] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        regions = [a.region for a in self.assignments]
        if len(regions) != len(set(regions)):
            raise PlanError("duplicate region assignment")

    @classmethod
    def from_document(cls, doc: dict) -> "MakeupPlan":
        if not isinstance(doc, dict):
            raise PlanError("plan must be a JSON object")
        try:
            assignments = [
                Assignment(
                    region=SemanticRegion(entry["region"]),
                    example=entry["example"],
                    example_mask=entry.get("example_mask"),
                    example_landmarks=entry.get("example_landmarks"),
                    strength=float(entry.get("strength", 1.0)),
                    config=dict(entry.get("config", {})),
                    band=entry.get("band"),
                )
                for entry in doc.get("assignments", [])
            ]
        except (KeyError, ValueError, TypeError) as exc:
            raise PlanError(f"bad assignment: {exc}") from exc
        masks = {SemanticRegion(k): v
                 for k, v in doc.get("subject_masks", {}).items()}
        return cls(subject=doc.get("subject"), landmarks=doc.get("landmarks"),
                   subject_masks=masks, assignments=assignments,
                   seed=int(doc.get("seed", 0)))

    def to_document(self) -> dict:
        doc: dict = {"seed": self.seed, "assignments": []}
        if self.subject is not None:
            doc["subject"] = self.subject
        if self.landmarks is not None:
            doc["landmarks"] = self.landmarks
        if self.subject_masks:
            doc["subject_masks"] = {r.value: p for r, p in self.subject_masks.items()}
        for a in self.assignments:
            entry: dict = {"region": a.region.value, "example": a.example,
                           "strength": a.strength}
            if a.example_mask is not None:
                entry["example_mask"] = a.example_mask
            if a.example_landmarks is not None:
                entry["example_landmarks"] = a.example_landmarks
            if a.config:
                entry["config"] = a.config
            if a.band is not None:
                entry["band"] = a.band
            doc["assignments"].append(entry)
        return doc

    @classmethod
    def load(cls, path) -> "MakeupPlan":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_document(json.load(fh))


@dataclass
class CatalogEntry:
    identifier: str
    image: str
    landmarks: str
    display_name: str = ""
    masks: dict[str, str] = field(default_factory=dict)  # region -> mask path


def load_catalog(path) -> list[CatalogEntry]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, list):
        raise AssetError("catalog must be a JSON list")
    entries = []
    seen = set()
    for raw in doc:
        entry = CatalogEntry(
            identifier=raw["id"],
            image=raw["image"],
            landmarks=raw["landmarks"],
            display_name=raw.get("name", raw["id"]),
            masks=dict(raw.get("masks", {})),
        )
        if entry.identifier in seen:
            raise AssetError(f"duplicate catalog id {entry.identifier!r}")
        seen.add(entry.identifier)
        entries.append(entry)
    return entries


class AssetResolver:
    """Resolves plan references (paths or ``catalog:`` ids) to loaded data.

    Loads are cached so a plan reusing one example pays for it once.
    """

    def __init__(self, root, catalog: list[CatalogEntry] | None = None):
        self.root = Path(root)
        self.catalog = {e.identifier: e for e in (catalog or [])}
        self._images: dict[str, np.ndarray] = {}
        self._grays: dict[str, np.ndarray] = {}

    def _path(self, ref: str) -> Path:
        path = Path(ref)
        if not path.is_absolute():
            path = self.root / path
        if not path.exists():
            raise AssetError(f"asset not found: {ref}")
        return path

    def _entry(self, ref: str) -> CatalogEntry:
        ident = ref.split(":", 1)[1]
        if ident not in self.catalog:
            raise AssetError(f"unknown catalog id {ident!r}")
        return self.catalog[ident]

    def image(self, ref: str) -> np.ndarray:
        if ref.startswith("catalog:"):
            ref = self._entry(ref).image
        if ref not in self._images:
            self._images[ref] = load_image(self._path(ref))
        return self._images[ref]

    def gray(self, ref: str) -> np.ndarray:
        if ref not in self._grays:
            self._grays[ref] = load_gray(self._path(ref))
        return self._grays[ref]

    def landmarks(self, ref: str):
        return load_landmarks(self._path(ref))

    def example_image(self, assignment: Assignment) -> np.ndarray:
        return self.image(assignment.example)

    def example_mask(self, assignment: Assignment) -> np.ndarray:
        """Mask for the assignment's region on the example side.

        Priority: explicit mask PNG, then catalog-precomputed mask, then
        rasterization from the example's landmarks.
        """
        if assignment.example_mask is not None:
            return self.gray(assignment.example_mask) >= 0.5
        entry = (self._entry(assignment.example)
                 if assignment.example.startswith("catalog:") else None)
        if entry is not None and assignment.region.value in entry.masks:
            return self.gray(entry.masks[assignment.region.value]) >= 0.5
        landmarks_ref = assignment.example_landmarks or (entry.landmarks if entry else None)
        if landmarks_ref is None:
            raise AssetError(
                f"assignment for {assignment.region.value} needs example_mask "
                "or example_landmarks")
        return region_mask(self.landmarks(landmarks_ref), assignment.region)

    def subject_mask(self, plan: MakeupPlan, region: SemanticRegion,
                     subject_landmarks) -> np.ndarray:
        if region in plan.subject_masks:
            return self.gray(plan.subject_masks[region]) >= 0.5
        if region == SemanticRegion.HAIR:
            raise AssetError("Hair needs a user-supplied subject mask")
        return region_mask(subject_landmarks, region)


def transfer_config(assignment: Assignment, plan_seed: int) -> TransferConfig:
    overrides = dict(assignment.config)
    overrides.setdefault("seed", plan_seed)
    return TransferConfig(**overrides)
