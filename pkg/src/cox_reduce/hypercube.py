"""Hypercube arrangements of variable indices, fibres and collinearity pairing.

Cells are stored flat in C order; cell ``c`` sits at lattice coordinate
``numpy.unravel_index(c, (side,) * dims)``.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ArrangementOverflowError, ConfigError
from .linalg_core import as_matrix
from .seeding import generator

logger = logging.getLogger(__name__)

DEFAULT_PAIR_THRESHOLD = 0.97


@dataclass(frozen=True)
class Arrangement:
    """Variable indices placed in a dims-dimensional array of side ``side``."""

    dims: int
    side: int
    seed: int
    cells: Tuple[Optional[int], ...]

    def __post_init__(self):
        if len(self.cells) != self.side**self.dims:
            raise ConfigError(
                f"Arrangement needs {self.side**self.dims} cells, got {len(self.cells)}"
            )

    @cached_property
    def _positions(self) -> Dict[int, int]:
        return {index: cell for cell, index in enumerate(self.cells) if index is not None}

    @property
    def indices(self) -> Tuple[int, ...]:
        return tuple(sorted(self._positions))

    @property
    def n_empty(self) -> int:
        return len(self.cells) - len(self._positions)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.side,) * self.dims

    def coordinate_of(self, index: int) -> Tuple[int, ...]:
        cell = self._positions[index]
        return tuple(int(c) for c in np.unravel_index(cell, self.shape))

    def to_record(self) -> Dict[str, Any]:
        """Structured audit record: shape, seed and occupied cells."""
        return {
            "dims": self.dims,
            "side": self.side,
            "seed": self.seed,
            "cells": [
                [list(self.coordinate_of(index)), index] for index in self.indices
            ],
        }

    @classmethod
    def from_record(cls, record: Dict[str, Any]) -> "Arrangement":
        dims = int(record["dims"])
        side = int(record["side"])
        cells: List[Optional[int]] = [None] * side**dims
        for coordinate, index in record["cells"]:
            cells[int(np.ravel_multi_index(tuple(coordinate), (side,) * dims))] = int(index)
        return cls(dims=dims, side=side, seed=int(record["seed"]), cells=tuple(cells))


@dataclass(frozen=True)
class Fibre:
    """One row/column/tube of an arrangement: the block of one regression."""

    axis: int
    anchor: Tuple[int, ...]
    members: Tuple[int, ...]


def choose_shape(p_effective: int, dims: int = 3) -> Tuple[int, int]:
    """Smallest side k with k**dims >= p_effective (never below 2)."""
    if p_effective < 2:
        raise ConfigError(f"Need at least 2 variables to arrange, got {p_effective}")
    if dims < 2:
        raise ConfigError(f"Arrangement dimension must be at least 2, got {dims}")

    side = max(2, math.ceil(p_effective ** (1.0 / dims)))
    while side > 2 and (side - 1) ** dims >= p_effective:
        side -= 1
    while side**dims < p_effective:
        side += 1
    return dims, side


def sample_cells(count: int, dims: int, side: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random distinct flat cells for ``count`` indices (Fisher-Yates)."""
    total = side**dims
    if count > total:
        raise ArrangementOverflowError(f"{count} indices do not fit in {total} cells")
    return rng.permutation(total)[:count]


def randomise(indices: Iterable[int], dims: int, side: int, seed: int) -> Arrangement:
    """Place ``indices`` into random cells; identical seeds give identical arrangements."""
    ordered = sorted(int(i) for i in indices)
    if len(set(ordered)) != len(ordered):
        raise ConfigError("Indices to arrange contain duplicates")
    if dims < 2 or side < 2:
        raise ConfigError(f"Need dims >= 2 and side >= 2, got dims={dims}, side={side}")

    positions = sample_cells(len(ordered), dims, side, generator(seed))
    cells: List[Optional[int]] = [None] * side**dims
    for index, cell in zip(ordered, positions):
        cells[int(cell)] = index
    return Arrangement(dims=dims, side=side, seed=int(seed), cells=tuple(cells))


def fibres(a: Arrangement) -> List[Fibre]:
    """All non-empty fibres, axis-major, anchors in lexicographic order."""
    grid = np.empty(len(a.cells), dtype=object)
    grid[:] = list(a.cells)
    grid = grid.reshape(a.shape)

    result = []
    for axis in range(a.dims):
        lines = np.moveaxis(grid, axis, -1)
        for anchor in np.ndindex(*((a.side,) * (a.dims - 1))):
            members = tuple(int(v) for v in lines[anchor] if v is not None)
            if members:
                result.append(Fibre(axis=axis, anchor=tuple(anchor), members=members))
    return result


def _coordinates(cells: np.ndarray, dims: int, side: int) -> np.ndarray:
    return np.stack(np.unravel_index(np.asarray(cells, dtype=int), (side,) * dims), axis=1)


def _shared_axes(coords: np.ndarray) -> np.ndarray:
    """Boolean (m, dims) table: does marked index i share its axis-``d`` fibre?"""
    differs = coords[:, None, :] != coords[None, :, :]
    neighbours = differs.sum(axis=2) == 1
    # for neighbours the single differing coordinate names the shared fibre's axis
    return np.any(neighbours[:, :, None] & differs, axis=1)


def companion_counts_from_cells(cells: np.ndarray, dims: int, side: int) -> np.ndarray:
    """For each marked cell, how many other marked cells share one of its fibres."""
    coords = _coordinates(cells, dims, side)
    differs = coords[:, None, :] != coords[None, :, :]
    return (differs.sum(axis=2) == 1).sum(axis=1)


def isolated_from_cells(cells: np.ndarray, dims: int, side: int, min_clear: int = 2) -> bool:
    """True when every marked cell is alone in at least ``min_clear`` of its fibres."""
    if len(cells) < 2:
        return True
    shared = _shared_axes(_coordinates(cells, dims, side))
    clear = dims - shared.sum(axis=1)
    return bool(np.all(clear >= min_clear))


def _marked_cells(a: Arrangement, marked: Iterable[int]) -> np.ndarray:
    return np.array([a._positions[i] for i in sorted(marked)], dtype=int)


def companion_counts(a: Arrangement, marked: Iterable[int]) -> Dict[int, int]:
    """Marked companions of each marked index across its fibres."""
    ordered = sorted(marked)
    counts = companion_counts_from_cells(_marked_cells(a, ordered), a.dims, a.side)
    return {index: int(c) for index, c in zip(ordered, counts)}


def is_isolated(a: Arrangement, marked: Iterable[int], min_clear: int = 2) -> bool:
    return isolated_from_cells(_marked_cells(a, marked), a.dims, a.side, min_clear)


def expected_companions(n_marked: int, side: int, dims: int) -> float:
    """Mean number of marked companions of a marked index: d(m-1)(k-1)/(k^d-1)."""
    return dims * (n_marked - 1) * (side - 1) / (side**dims - 1)


def isolation_bound(n_marked: int, side: int) -> float:
    """Stated lower bound on P(every marked index is alone in 2 of its 3 cube fibres).

    Counts one failure event per ordered triple. Any of the three fibres can
    be the one left clear, so this overstates the probability; gate on
    ``isolation_union_bound`` instead.
    """
    m = n_marked
    loss = m * (m - 1) * (m - 2) * (side - 1) ** 2 / ((side**3 - 1) * (side**3 - 2))
    return max(0.0, 1.0 - loss)


def isolation_union_bound(n_marked: int, side: int) -> float:
    """Union bound over every (index, companion, companion, clear fibre) failure event.

    An index fails when two distinct companions each share a different fibre
    with it: m(m-1)(m-2) ordered triples times three choices of the clear
    fibre, each with probability (k-1)^2 / ((k^3-1)(k^3-2)).
    """
    m = n_marked
    events = 3 * m * (m - 1) * (m - 2)
    loss = events * (side - 1) ** 2 / ((side**3 - 1) * (side**3 - 2))
    return max(0.0, 1.0 - loss)


@dataclass(frozen=True)
class PairingGroups:
    """Partition of the variables; each group is represented by its lowest index."""

    groups: Tuple[Tuple[int, ...], ...]
    threshold: float

    @cached_property
    def _representative(self) -> Dict[int, int]:
        return {member: group[0] for group in self.groups for member in group}

    @cached_property
    def _members(self) -> Dict[int, Tuple[int, ...]]:
        return {group[0]: group for group in self.groups}

    @property
    def representatives(self) -> Tuple[int, ...]:
        return tuple(group[0] for group in self.groups)

    @property
    def merged(self) -> Tuple[Tuple[int, ...], ...]:
        """Groups with more than one member."""
        return tuple(group for group in self.groups if len(group) > 1)

    def representative_of(self, index: int) -> int:
        return self._representative[index]

    def members_of(self, representative: int) -> Tuple[int, ...]:
        return self._members[representative]

    def to_record(self) -> Dict[str, Any]:
        return {"threshold": self.threshold, "merged": [list(g) for g in self.merged]}


def pair_collinear(x, threshold: float = DEFAULT_PAIR_THRESHOLD) -> PairingGroups:
    """Single-linkage groups of columns whose |correlation| reaches ``threshold``."""
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"Pairing threshold must lie in (0, 1), got {threshold}")
    x = as_matrix(x)
    p = x.shape[1]

    norms = np.linalg.norm(x, axis=0)
    usable = norms > 0
    scaled = np.zeros_like(x)
    scaled[:, usable] = x[:, usable] / norms[usable]
    correlation = np.abs(scaled.T @ scaled)
    np.fill_diagonal(correlation, 0.0)
    links = correlation >= threshold

    _, labels = connected_components(csr_matrix(links), directed=False)
    by_label: Dict[int, List[int]] = {}
    for index, label in enumerate(labels):
        by_label.setdefault(int(label), []).append(index)
    groups = tuple(sorted(tuple(sorted(members)) for members in by_label.values()))

    merged = [g for g in groups if len(g) > 1]
    if merged:
        logger.info("Paired %d groups of near-collinear columns out of %d columns", len(merged), p)
    return PairingGroups(groups=groups, threshold=threshold)


def unpair(retained: Iterable[int], groups: PairingGroups) -> FrozenSet[int]:
    """Replace each retained representative by its whole group."""
    result = set()
    for index in retained:
        if groups.representative_of(index) == index:
            result.update(groups.members_of(index))
        else:
            result.add(index)
    return frozenset(result)
