"""Bundled experiment configurations."""

from __future__ import annotations

import json
from importlib import resources
from typing import Any

from ..errors import ConfigurationError


def _files():
    return resources.files(__name__)


def names() -> list[str]:
    return sorted(p.name[: -len(".json")] for p in _files().iterdir() if p.name.endswith(".json"))


def load(name: str) -> dict[str, Any]:
    path = _files() / f"{name}.json"
    if not path.is_file():
        raise ConfigurationError(f"no bundled scenario {name!r}; available: {names()}")
    return json.loads(path.read_text(encoding="utf-8"))
