import json

import pytest

from questforge import bundled_world_path
from questforge.taskgen import generate_suite
from questforge.world import BUNDLE_FILES, load_world_dir


@pytest.fixture(scope="session")
def toy_world():
    return load_world_dir(bundled_world_path("toy"))


@pytest.fixture(scope="session")
def reference_world():
    return load_world_dir(bundled_world_path("reference"))


@pytest.fixture(scope="session")
def reference_suite(reference_world):
    """The 180-task base suite; shared because generation costs ~40s."""
    return generate_suite(reference_world, {"per_bracket_count": 20, "seed": 42})


def load_bundle_docs(name: str) -> dict:
    """Raw JSON documents of a bundled world, keyed by filename."""
    docs = {}
    for filename in BUNDLE_FILES:
        with open(bundled_world_path(name) / filename, "r", encoding="utf-8") as fh:
            docs[filename] = json.load(fh)
    return docs


def write_bundle(directory, docs: dict) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for filename, doc in docs.items():
        with open(directory / filename, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
