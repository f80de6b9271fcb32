"""Graded dimensions: finitely supported maps from degree to count."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping


def parity(degree: int) -> int:
    return degree % 2


@dataclass(frozen=True)
class GradedDimension:
    """Sparse degree -> count map. Zero counts are never stored."""

    items: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for deg, count in self.items:
            if count < 0:
                raise ValueError(f"negative count {count} in degree {deg}")

    @classmethod
    def of(cls, counts: Mapping[int, int] | Iterable[tuple[int, int]] = ()) -> "GradedDimension":
        if isinstance(counts, Mapping):
            counts = counts.items()
        acc: dict[int, int] = {}
        for deg, count in counts:
            acc[int(deg)] = acc.get(int(deg), 0) + int(count)
        return cls(tuple(sorted((d, c) for d, c in acc.items() if c != 0)))

    @classmethod
    def from_degrees(cls, degrees: Iterable[int]) -> "GradedDimension":
        return cls.of((d, 1) for d in degrees)

    @property
    def counts(self) -> dict[int, int]:
        return dict(self.items)

    def __getitem__(self, degree: int) -> int:
        return self.counts.get(degree, 0)

    def total(self) -> int:
        return sum(c for _, c in self.items)

    def degrees(self) -> list[int]:
        return [d for d, _ in self.items]

    def to_json(self) -> dict[str, int]:
        return {str(d): c for d, c in self.items}

    def __str__(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def gdim_shift(d: GradedDimension, shift: int) -> GradedDimension:
    """result[k] = d[k + shift]."""
    return GradedDimension.of((deg - shift, c) for deg, c in d.items)


def gdim_dual(d: GradedDimension) -> GradedDimension:
    return GradedDimension.of((-deg, c) for deg, c in d.items)


def gdim_convolve(a: GradedDimension, b: GradedDimension) -> GradedDimension:
    acc: dict[int, int] = {}
    for i, ci in a.items:
        for j, cj in b.items:
            acc[i + j] = acc.get(i + j, 0) + ci * cj
    return GradedDimension.of(acc)
