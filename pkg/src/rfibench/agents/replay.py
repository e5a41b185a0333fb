"""Fixed-capacity ring replay buffer."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation


class ReplayBuffer:
    """Stores named fields; ``shapes`` maps field name to per-item shape."""

    def __init__(self, capacity: int, shapes: dict):
        if capacity < 1:
            raise ContractViolation("capacity must be >= 1")
        self.capacity = int(capacity)
        self.data = {k: np.zeros((self.capacity,) + tuple(np.atleast_1d(s)) if s != () else
                                 (self.capacity,)) for k, s in shapes.items()}
        self.size = 0
        self.ptr = 0
        self.added = 0

    def __len__(self):
        return self.size

    def add(self, **item):
        if set(item) != set(self.data):
            raise ContractViolation(f"transition fields {sorted(item)} != {sorted(self.data)}")
        for k, v in item.items():
            self.data[k][self.ptr] = v
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.added += 1

    def indices(self, batch: int, rng) -> np.ndarray:
        if self.size == 0:
            raise ContractViolation("cannot sample from an empty replay buffer")
        return rng.integers(0, self.size, batch)

    def sample(self, batch: int, rng) -> dict:
        idx = self.indices(batch, rng)
        return {k: v[idx] for k, v in self.data.items()}
