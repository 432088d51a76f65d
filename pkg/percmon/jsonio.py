from __future__ import annotations
import json
import pathlib
from typing import Iterable, Iterator, List, Union

import numpy as np

from percmon import errors


class PercmonJSONEncoder(json.JSONEncoder):
    def default(self, obj: object):
        if isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, (set, frozenset)):
            return sorted(obj)
        elif hasattr(obj, "to_config"):
            return obj.to_config()
        else:
            return super().default(obj)


def print_json(data):
    print(dumps(data, indent=4))


def load(*args, **kwargs):
    return json.load(*args, **kwargs)


def loads(*args, **kwargs):
    return json.loads(*args, **kwargs)


def dump(*args, **kwargs):
    return json.dump(*args, **kwargs, cls=PercmonJSONEncoder)


def dumps(*args, **kwargs):
    return json.dumps(*args, **kwargs, cls=PercmonJSONEncoder)


def canonical(data) -> str:
    return dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def read_file(path: Union[str, pathlib.Path]):
    path = pathlib.Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            return load(f)
    except FileNotFoundError:
        raise errors.DataError("File not found", code="missing-file", path=path) from None
    except json.JSONDecodeError as exc:
        raise errors.DataError(f"Malformed JSON: {exc}", code="malformed-json", path=path) from None


def write_file(data, path: Union[str, pathlib.Path]):
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")


def read_ndjson(path: Union[str, pathlib.Path]) -> Iterator[dict]:
    path = pathlib.Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            for n, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield loads(line)
                except json.JSONDecodeError as exc:
                    raise errors.DataError(f"Line {n}: {exc}", code="malformed-json", path=path) from None
    except FileNotFoundError:
        raise errors.DataError("File not found", code="missing-file", path=path) from None


def write_ndjson(records: Iterable[dict], path: Union[str, pathlib.Path]) -> int:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(canonical(record))
            f.write("\n")
            n += 1
    return n


def read_ndjson_list(path: Union[str, pathlib.Path]) -> List[dict]:
    return list(read_ndjson(path))

# vim: set et sw=4 ts=4:
