"""Stress-strain curve container shared by the generators and the reduction code."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOADING = "loading"
UNLOADING = "unloading"


@dataclass(frozen=True)
class StressStrainCurve:
    """Sampled stress-strain history with a loading/unloading flag per point.

    ``loading[i]`` is True when point ``i`` was reached with a non-decreasing
    actuator command.
    """

    strain: np.ndarray
    stress: np.ndarray
    loading: np.ndarray

    def __post_init__(self):
        strain = np.asarray(self.strain, dtype=float)
        stress = np.asarray(self.stress, dtype=float)
        loading = np.asarray(self.loading, dtype=bool)
        if not (strain.shape == stress.shape == loading.shape) or strain.ndim != 1:
            raise ValueError("strain, stress and loading must be 1-D arrays of equal length")
        if not np.all(np.isfinite(strain)):
            raise ValueError("strains must be finite")
        object.__setattr__(self, "strain", strain)
        object.__setattr__(self, "stress", stress)
        object.__setattr__(self, "loading", loading)

    def __len__(self):
        return len(self.strain)

    def direction(self, i):
        return LOADING if self.loading[i] else UNLOADING

    def segments(self):
        """Return ``(start, stop, is_loading)`` runs of constant direction."""
        out = []
        n = len(self)
        start = 0
        for i in range(1, n + 1):
            if i == n or self.loading[i] != self.loading[start]:
                out.append((start, i, bool(self.loading[start])))
                start = i
        return out

    def subset(self, index):
        """Points selected by a boolean mask, index array or slice."""
        mask = index if isinstance(index, slice) else np.asarray(index)
        return StressStrainCurve(self.strain[mask], self.stress[mask], self.loading[mask])
