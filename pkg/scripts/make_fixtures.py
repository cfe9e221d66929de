"""Bake the committed test fixtures: synthetic faces, a plan, and the golden
render the regression suite compares against.

Run from the repository root:  python3 scripts/make_fixtures.py
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from _synth import synth_face  # noqa: E402

from facemakeup.assets import AssetResolver, MakeupPlan  # noqa: E402
from facemakeup.compositor import apply_plan  # noqa: E402
from facemakeup.imaging import save_png  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"

PLAN = {
    "subject": "subject_256.png",
    "landmarks": "subject_256.json",
    "seed": 0,
    "assignments": [
        {"region": "Lips", "example": "example_224.png",
         "example_landmarks": "example_224.json",
         "config": {"optimizer_max_iter": 150}},
        {"region": "LeftEye", "example": "example_224.png",
         "example_landmarks": "example_224.json",
         "config": {"optimizer_max_iter": 150}},
    ],
}


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    for name, size, style, seed in (("subject_256", 256, "subject", 0),
                                    ("example_224", 224, "example", 1)):
        img, doc = synth_face(size=size, style=style, seed=seed,
                              image_name=f"{name}.png")
        save_png(FIXTURES / f"{name}.png", img)
        (FIXTURES / f"{name}.json").write_text(json.dumps(doc))
        print(f"wrote {name}.png / {name}.json")

    (FIXTURES / "plan.json").write_text(json.dumps(PLAN, indent=2))
    print("wrote plan.json")

    plan = MakeupPlan.from_document(PLAN)
    result = apply_plan(plan, AssetResolver(FIXTURES))
    if result.warnings:
        raise SystemExit(f"fixture render skipped regions: {result.warnings}")
    save_png(FIXTURES / "golden_render.png", result.image)
    print("wrote golden_render.png")


if __name__ == "__main__":
    main()
