from __future__ import annotations
from typing import Dict, Iterable, List, Optional, TypeVar, Union

from percmon import errors, types

T = TypeVar("T")


def first_item_by_id_or_name(items: Iterable[T], key: str, default: Union[T, None, types.Nothing] = types.NOTHING) -> Optional[T]:
    name = key.casefold()
    for item in items:
        if item.id == key or (item.name or "").casefold() == name:
            return item
    if default is types.NOTHING:
        raise KeyError(key)
    else:
        return default


def index_items(items: Iterable[T], what: str, path: Optional[str] = None) -> Dict[str, T]:
    """Map ids to items, refusing duplicates."""
    result: Dict[str, T] = {}
    for item in items:
        if item.id in result:
            raise errors.DuplicateIdError(f"Duplicate {what} id '{item.id}'", path=path)
        result[item.id] = item
    return result


def resolve_ids(ids: Iterable[str], known: Dict[str, int], owner: str, path: Optional[str] = None) -> List[int]:
    """Translate ids to indices; unknown ids are dangling references."""
    result = []
    for i in ids:
        try:
            result.append(known[i])
        except KeyError:
            raise errors.DanglingReferenceError(f"{owner} references unknown failure mode '{i}'", path=path) from None
    return result


def check_probability(value, owner: str, path: Optional[str] = None) -> float:
    try:
        p = float(value)
    except (TypeError, ValueError):
        raise errors.ProbabilityError(f"{owner}: '{value}' is not a probability", path=path) from None
    if not 0.0 <= p <= 1.0:
        raise errors.ProbabilityError(f"{owner}: probability {p} outside [0,1]", path=path)
    return p

# vim: set et sw=4 ts=4:
