from __future__ import annotations

import logging
import threading
from typing import Callable, Generic, Hashable, TypeAlias, TypeVar

__all__ = ["ComputeOnceCache"]

Key: TypeAlias = Hashable
Value = TypeVar("Value")


class ComputeOnceCache(Generic[Value]):
    """This is a thread safe dictionary intended to memoize expensive, pure computations.
    Using the get_or_create function guarantees that the value for a given key is computed
    exactly once, even when many threads ask for it at the same time.
    Different keys are computed concurrently: every key has its own lock, the shared lock
    only protects the bookkeeping dictionaries and is never held while computing.

    Values that are not in the cache are created with factory or otherwise default_factory.
    If a factory raises, nothing is stored and the next request for the key tries again.
    """

    def __init__(self, default_factory: Callable[[Key], Value], name: str = "cache") -> None:
        self._default_factory = default_factory
        self._name = name
        self._lock = threading.Lock()  # guards _cache, _key_locks and the counters
        self._cache: dict[Key, Value] = dict()
        self._key_locks: dict[Key, threading.Lock] = dict()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        with self._lock:
            return len(self._cache)

    def __contains__(self, key: Key) -> bool:
        with self._lock:
            return key in self._cache

    def __getitem__(self, key: Key) -> Value:
        with self._lock:
            return self._cache[key]

    def get(self, key: Key, default=None) -> Value | None:
        """Return the value for key if key is in the cache, else default.
        This function never computes a value; use get_or_create for that.
        """
        try:
            return self[key]
        except KeyError:
            return default

    def clear(self) -> None:
        with self._lock:
            self._cache.clear()
            self._key_locks.clear()

    def get_or_create(self, key: Key, factory: Callable[[Key], Value] | None = None) -> Value:
        """Return the cached value for key or compute it with factory (or otherwise default_factory).
        Guarantees that the factory runs at most once per key across all threads (unless it raises).
        """
        _sentinel = object()  # None could be a legit value in cache
        with self._lock:
            value = self._cache.get(key, _sentinel)
            if value is not _sentinel:
                self.hits += 1
                return value  # type: ignore
            key_lock = self._key_locks.setdefault(key, threading.Lock())

        with key_lock:
            # must check again, another thread may have finished while we waited for key_lock
            with self._lock:
                value = self._cache.get(key, _sentinel)
                if value is not _sentinel:
                    self.hits += 1
                    return value  # type: ignore
                self.misses += 1
            logging.debug(f"ComputeOnceCache: get_or_create: {self._name}: computing {key!r}")
            try:
                value = factory(key) if factory is not None else self._default_factory(key)
                with self._lock:
                    self._cache[key] = value
            finally:
                with self._lock:
                    if self._key_locks.get(key) is key_lock:
                        del self._key_locks[key]
        return value
