from __future__ import annotations
import hashlib
import pathlib
from typing import Union

import numpy as np

from percmon import jsonio

SCENE_STREAM = "scene"
INJECTION_STREAM = "injection"


def config_hash(document) -> str:
    """SHA-256 over the canonical JSON form of a configuration document."""
    return hashlib.sha256(jsonio.canonical(document).encode("utf-8")).hexdigest()


def _name_key(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:4], "little")


def substream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """
    Independent generator for a named consumer of the root seed. The same
    (seed, name, extra) always gives the same stream, and streams with
    different names do not overlap.
    """
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(_name_key(name),) + tuple(int(e) for e in extra))
    return np.random.default_rng(seq)


def as_generator(seed: Union[int, np.random.Generator, None]) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def split_counts(count: int):
    """80/10/10 rule: test and validation get the floor, the remainder goes to training."""
    test = count // 10
    validation = count // 10
    return count - test - validation, test, validation


def write_text_file(text: str, path: Union[str, pathlib.Path]):
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)

# vim: set et sw=4 ts=4:
