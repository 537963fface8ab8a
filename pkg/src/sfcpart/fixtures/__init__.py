"""Packaged fixture partitions."""
from __future__ import annotations

import json
from importlib import resources

from ..geometry import Box
from ..spacetree import cells_from_json, params_from_json


def _load(name: str):
    return json.loads(resources.files(__name__).joinpath(name).read_text(encoding="utf-8"))


def example_p() -> frozenset[Box]:
    """Three cells a, b, c of depths 3, 2, 1 in the unit square (k=2)."""
    obj = _load("example_p.json")
    return frozenset(cells_from_json(params_from_json(obj), obj["cells"]))


def example_p_named() -> dict[str, Box]:
    cells = sorted(example_p(), key=lambda b: -b.depth)
    return dict(zip("abc", cells))


def tower(M: int) -> frozenset[Box]:
    """A depth-1 cell followed by a column of ever smaller cells down to depth M."""
    obj = _load("tower.json")
    params = params_from_json(obj)
    for item in obj["family"]:
        if item["M"] == M:
            return frozenset(cells_from_json(params, item["cells"]))
    raise KeyError(f"no tower of depth {M} (available: {tower_depths()})")


def tower_depths() -> list[int]:
    return [item["M"] for item in _load("tower.json")["family"]]
