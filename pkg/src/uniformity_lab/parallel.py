"""Thread fan-out with ordered results, so reductions stay deterministic."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "UNIFORMITY_LAB_THREADS"
_override: int | None = None


def set_threads(n: int | None) -> None:
    global _override
    _override = None if n is None else max(1, int(n))


def thread_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    if _override is not None:
        return _override
    env = os.environ.get(ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be an integer, got {env!r}") from None
    return max(1, min(8, os.cpu_count() or 1))


def map_ordered(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    items = list(items)
    n = thread_count(threads)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
