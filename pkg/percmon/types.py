from __future__ import annotations

from typing import Protocol, Sequence, Tuple

PASS = 0
FAIL = 1
INACTIVE = 0
ACTIVE = 1

FaultState = Tuple[int, ...]
Syndrome = Tuple[int, ...]


class Nothing:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "<nothing>"


NOTHING = Nothing()

def as_bits(values: Sequence[int]) -> Tuple[int, ...]:
    """Normalise any 0/1 sequence (list, tuple, numpy row) to a tuple of ints."""
    return tuple(1 if int(v) else 0 for v in values)


class IdentifierP(Protocol):
    """Anything that maps a syndrome to an estimated fault state."""

    def __call__(self, syndrome: Syndrome) -> FaultState:
        ...

# vim: set et sw=4 ts=4:
