"""Python front-end for the eovsim simulator core."""

import json
from typing import Any, Mapping, Optional

from . import _core
from ._core import ConfigError

__all__ = ["ConfigError", "run", "sweep", "plot", "presets", "resolve_config"]


def _dump(obj: Any) -> str:
    return obj if isinstance(obj, str) else json.dumps(obj)


def run(config: Mapping[str, Any] | str, base_dir: str = ".") -> dict:
    """Run one simulation; the report comes back parsed."""
    out = _core.run(_dump(config), base_dir)
    out["report"] = json.loads(out["report"])
    return out


def sweep(spec: Mapping[str, Any] | str, base_dir: str = ".",
          out_dir: Optional[str] = None, workers: int = 1) -> str:
    """Run a sweep and return the combined cells CSV text."""
    return _core.sweep(_dump(spec), base_dir, out_dir, workers)


def plot(cells_csv: str, preset: str):
    return _core.plot(cells_csv, preset)


def presets() -> list:
    return list(_core.presets())


def resolve_config(config: Mapping[str, Any] | str, base_dir: str = ".") -> dict:
    return json.loads(_core.resolve_config(_dump(config), base_dir))
