"""Optional frame-level parallelism, capped by POSEFORGE_THREADS.

Work items are pure per-frame functions, so the output is deterministic
regardless of the degree of parallelism; order is always preserved.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    raw = os.environ.get("POSEFORGE_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def map_frames(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
