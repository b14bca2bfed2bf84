"""Procedural RPG planning tasks: generation, deterministic simulation, scoring."""

from importlib import resources as _resources
from pathlib import Path

__version__ = "0.1.0"

BUNDLED_WORLDS = ("toy", "reference")


def bundled_world_path(name: str) -> Path:
    """Filesystem path of a world bundle shipped with the package."""
    if name not in BUNDLED_WORLDS:
        raise KeyError(f"no bundled world named '{name}'")
    return Path(str(_resources.files("questforge").joinpath(f"data/worlds/{name}")))
