"""Nested hierarchical beam codebooks over a sine-space sector.

Every level partitions the sector into equal-width sine intervals.  Interval
edges at all levels are drawn from the finest-level edge grid, so a parent's
coverage equals the union of its children's coverage exactly (bit-for-bit).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .arrays import (
    AngleInterval,
    Beamformer,
    UniformLinearArray,
    synthesize_deactivation,
)

__all__ = ["HierarchicalCodebook", "build_hierarchical_codebook"]

SYNTHESIS_MODES = ("ideal", "deactivation")


@dataclass
class HierarchicalCodebook:
    """Per-level codeword lists with nesting by interval containment.

    ``levels[k][l]`` is the l-th codeword of (0-based) level k.  Level sizes
    are nondecreasing and each divides the next, so the children of a
    codeword form the contiguous index block ``children(k, l)``.
    """

    array: UniformLinearArray
    sector: AngleInterval
    levels: list[list[Beamformer]] = field(repr=False)
    synthesis: str = "deactivation"

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def level_sizes(self) -> list[int]:
        return [len(lvl) for lvl in self.levels]

    def children(self, level: int, index: int) -> range:
        """Indices at ``level + 1`` whose coverage tiles codeword ``index``."""
        sizes = self.level_sizes
        ratio = sizes[level + 1] // sizes[level]
        return range(index * ratio, (index + 1) * ratio)

    def children_map(self) -> dict[tuple[int, int], list[int]]:
        return {
            (k, l): list(self.children(k, l))
            for k in range(self.num_levels - 1)
            for l in range(len(self.levels[k]))
        }

    def codeword_containing(self, level: int, sine: float) -> int | None:
        """Index of the level-``level`` codeword covering ``sine``, or None."""
        lo, hi = self.sector.lo, self.sector.hi
        if not (lo <= sine <= hi):
            return None
        size = len(self.levels[level])
        idx = int((sine - lo) / (hi - lo) * size)
        return min(idx, size - 1)

    def weights_matrix(self, level: int) -> np.ndarray | None:
        """Stacked (L, N) weight matrix of a level; None for ideal patterns."""
        if self.synthesis == "ideal":
            return None
        return np.stack([bf.weights for bf in self.levels[level]])

    def flat_gains(self, level: int) -> np.ndarray | None:
        if self.synthesis != "ideal":
            return None
        return np.array([bf.flat_gain for bf in self.levels[level]])

    def to_json_dict(self) -> dict:
        return {
            "num_elements": self.array.num_elements,
            "spacing_wavelengths": self.array.spacing_wavelengths,
            "sector": [self.sector.lo, self.sector.hi],
            "synthesis": self.synthesis,
            "level_sizes": self.level_sizes,
            "levels": [
                [
                    {
                        "coverage": [bf.coverage.lo, bf.coverage.hi],
                        "flat_gain": bf.flat_gain,
                        "weights": None if bf.weights is None
                        else [[float(w.real), float(w.imag)] for w in bf.weights],
                    }
                    for bf in lvl
                ]
                for lvl in self.levels
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "HierarchicalCodebook":
        array = UniformLinearArray(d["num_elements"], d["spacing_wavelengths"])
        levels = []
        for k, lvl in enumerate(d["levels"]):
            beams = []
            for l, e in enumerate(lvl):
                weights = None
                if e["weights"] is not None:
                    weights = np.array([complex(re, im) for re, im in e["weights"]])
                beams.append(Beamformer(
                    weights=weights,
                    coverage=AngleInterval(*e["coverage"]),
                    level=k,
                    index=l,
                    flat_gain=e["flat_gain"],
                ))
            levels.append(beams)
        return cls(array=array, sector=AngleInterval(*d["sector"]),
                   levels=levels, synthesis=d["synthesis"])

    def save_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)

    @classmethod
    def load_json(cls, path) -> "HierarchicalCodebook":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def build_hierarchical_codebook(array: UniformLinearArray, sector: AngleInterval,
                                level_sizes: list[int],
                                synthesis: str = "deactivation") -> HierarchicalCodebook:
    """Build nested equal-sine-width codebooks of the given per-level sizes.

    Sizes must be nondecreasing with each dividing the next (ragged nesting
    is rejected).  ``synthesis`` picks deactivation weight vectors or ideal
    flat patterns; ideal gains are calibrated so the finest level equals the
    full array gain.
    """
    if synthesis not in SYNTHESIS_MODES:
        raise ValueError(f"unknown synthesis mode {synthesis!r}; expected one of {SYNTHESIS_MODES}")
    if not level_sizes:
        raise ValueError("level_sizes must be nonempty")
    for size in level_sizes:
        if int(size) != size or size < 1:
            raise ValueError(f"level sizes must be positive integers, got {size}")
    for a, b in zip(level_sizes, level_sizes[1:]):
        if b < a:
            raise ValueError(f"level sizes must be nondecreasing, got {a} -> {b}")
        if b % a != 0:
            raise ValueError(f"ragged nesting unsupported: {b} is not a multiple of {a}")

    top = level_sizes[-1]
    edges = sector.lo + (sector.hi - sector.lo) * np.arange(top + 1) / top
    edges[-1] = sector.hi
    levels = []
    for k, size in enumerate(level_sizes):
        stride = top // size
        beams = []
        for l in range(size):
            iv = AngleInterval(float(edges[l * stride]), float(edges[(l + 1) * stride]))
            if synthesis == "ideal":
                beams.append(Beamformer(
                    weights=None, coverage=iv, level=k, index=l,
                    flat_gain=array.num_elements * size / top,
                ))
            else:
                beams.append(synthesize_deactivation(array, iv, level=k, index=l))
        levels.append(beams)
    return HierarchicalCodebook(array=array, sector=sector, levels=levels,
                                synthesis=synthesis)
