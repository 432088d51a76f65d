"""Run manifests: what produced a set of output files."""
from __future__ import annotations
import logging
import pathlib
from importlib import metadata
from typing import Iterable, List, Optional, Sequence, Union

from percmon import errors, jsonio, utils

log = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def tool_version() -> str:
    try:
        return metadata.version("percmon")
    except metadata.PackageNotFoundError:
        return "0.0.0"


def build_manifest(command: str, seed: int, config: dict, **extra) -> dict:
    manifest = {
        "tool": "percmon",
        "version": tool_version(),
        "command": command,
        "seed": seed,
        "config_hash": utils.config_hash(config),
    }
    manifest.update(extra)
    return manifest


def write_manifest(manifest: dict, directory: Union[str, pathlib.Path]) -> pathlib.Path:
    path = pathlib.Path(directory) / MANIFEST_NAME
    jsonio.write_file(manifest, path)
    return path


def read_manifest(path: Union[str, pathlib.Path]) -> dict:
    path = pathlib.Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    manifest = jsonio.read_file(path)
    if not isinstance(manifest, dict):
        raise errors.DataError("Manifest must be a JSON object", code="malformed-manifest", path=path)
    return manifest


def check_consistent(manifests: Sequence[dict], keys: Iterable[str] = ("graph",), paths: Optional[List[str]] = None):
    """Manifests to be merged must agree on every given key."""
    for key in keys:
        values = {}
        for n, m in enumerate(manifests):
            values.setdefault(jsonio.canonical(m.get(key)), paths[n] if paths else str(n))
        if len(values) > 1:
            raise errors.ReportConflictError(f"Inputs disagree on '{key}': {', '.join(values.values())}")

# vim: set et sw=4 ts=4:
