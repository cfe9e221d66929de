import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from _synth import synth_face  # noqa: E402

from facemakeup.imaging import save_png  # noqa: E402
from facemakeup.semantics import parse_landmarks  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def subject_face():
    return synth_face(size=192, style="subject", seed=0)


@pytest.fixture(scope="session")
def example_face():
    return synth_face(size=160, style="example", seed=1)


@pytest.fixture(scope="session")
def subject_landmarks(subject_face):
    return parse_landmarks(subject_face[1])


@pytest.fixture(scope="session")
def fixture_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def assets_dir(tmp_path_factory, subject_face, example_face):
    """Subject + example images and landmarks written to disk."""
    root = tmp_path_factory.mktemp("assets")
    for name, (img, doc) in (("subject", subject_face), ("example", example_face)):
        save_png(root / f"{name}.png", img)
        doc = dict(doc, image=f"{name}.png")
        (root / f"{name}.json").write_text(json.dumps(doc))
    return root
