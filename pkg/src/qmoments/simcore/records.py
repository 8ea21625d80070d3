"""Shot outcome containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ShotRecord:
    """Outcomes of one shot: ``outcomes[s]`` in {+1, -1} for every record slot.

    ``sampled`` maps an observable id to ``(term index, coefficient sign)`` for
    importance-sampled Pauli measurements.
    """

    outcomes: tuple[int, ...]
    sampled: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.outcomes)


@dataclass(eq=False)
class ShotBatch:
    """Outcomes of many shots stored column-wise.

    ``outcomes`` has shape (shots, slots) with int8 entries in {+1, -1};
    ``terms[obs_id]`` holds the sampled term index of every shot and
    ``signs[obs_id]`` the matching coefficient signs.
    """

    outcomes: np.ndarray
    terms: dict[str, np.ndarray] = field(default_factory=dict)
    signs: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def shots(self) -> int:
        return self.outcomes.shape[0]

    def record(self, i: int) -> ShotRecord:
        sampled = {k: (int(self.terms[k][i]), int(self.signs[k][i])) for k in self.terms}
        return ShotRecord(tuple(int(v) for v in self.outcomes[i]), sampled)

    def product(self, slots: Sequence[int]) -> np.ndarray:
        """Per-shot product of the listed slots (int8 vector)."""
        out = np.ones(self.shots, dtype=np.int8)
        for s in slots:
            out = out * self.outcomes[:, s]
        return out

    def running_products(self, slots: Sequence[int]) -> np.ndarray:
        """Column j is the product of ``slots[:j+1]``; shape (shots, len(slots))."""
        if not slots:
            return np.ones((self.shots, 0), dtype=np.int8)
        return np.cumprod(self.outcomes[:, list(slots)], axis=1, dtype=np.int8)

    @staticmethod
    def concatenate(batches: Sequence["ShotBatch"]) -> "ShotBatch":
        outcomes = np.concatenate([b.outcomes for b in batches], axis=0)
        keys = batches[0].terms.keys() if batches else ()
        terms = {k: np.concatenate([b.terms[k] for b in batches]) for k in keys}
        signs = {k: np.concatenate([b.signs[k] for b in batches]) for k in keys}
        return ShotBatch(outcomes, terms, signs)
