"""Small in-memory LRU cache for assembled operators and oracle solves."""

from __future__ import annotations

from collections import OrderedDict
from threading import Lock
from typing import Callable, Generic, TypeVar

K = TypeVar("K")
V = TypeVar("V")


class LruCache(Generic[K, V]):
    """Thread-safe LRU cache.

    Sweep cells with the same (alpha, M) differ only in the ReLU power, so the
    operator, forcing vector and FDM oracle are shared through this cache.
    """

    def __init__(self, max_items: int) -> None:
        if max_items < 1:
            raise ValueError("max_items must be >= 1")
        self._max_items = int(max_items)
        self._lock = Lock()
        self._data: OrderedDict[K, V] = OrderedDict()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        with self._lock:
            return len(self._data)

    def get(self, key: K) -> V | None:
        with self._lock:
            if key not in self._data:
                self.misses += 1
                return None
            self.hits += 1
            self._data.move_to_end(key)
            return self._data[key]

    def put(self, key: K, value: V) -> None:
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
            self._data[key] = value
            while len(self._data) > self._max_items:
                self._data.popitem(last=False)

    def get_or_compute(self, key: K, factory: Callable[[], V]) -> V:
        """Cached value for `key`, building it with `factory` on a miss.

        Two threads missing the same key concurrently may both run `factory`;
        the later result wins, so factories must be pure.
        """
        value = self.get(key)
        if value is not None:
            return value
        value = factory()
        self.put(key, value)
        return value
