"""Tensor-product basis over [0,1]^d organized by support subsets.

A basis function is identified by a multi-index j (one order per
coordinate); its support is the set of coordinates with nonzero order.
Functions are constant in off-support coordinates, which is what lets a
record with missing cells still contribute evidence to low-order terms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .basis1d import Family1D
from .errors import MissingCoordinateError

__all__ = [
    "MultiIndex",
    "support",
    "canonical_key",
    "BasisSpec",
    "build_full",
    "build_sparse",
]

MultiIndex = tuple  # length-d tuple of non-negative int orders


def support(j: MultiIndex) -> tuple[int, ...]:
    """Coordinates with nonzero order, ascending."""
    return tuple(i for i, o in enumerate(j) if o > 0)


def canonical_key(j: MultiIndex):
    """Sort key: correlation level first, then support set, then orders."""
    s = support(j)
    return (len(s), s, tuple(j))


@dataclass
class BasisSpec:
    """Per-coordinate families plus the selected multi-index set.

    selected is kept in canonical order and always starts with the
    all-zero index.  Treated as immutable after construction.
    """

    d: int
    families: tuple[Family1D, ...]
    selected: tuple[MultiIndex, ...]
    level_orders: dict[int, int] | None = None
    _position: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(self.families) != self.d:
            raise ValueError("one family per coordinate required")
        zero = (0,) * self.d
        ordered = sorted(set(map(tuple, self.selected)) | {zero}, key=canonical_key)
        self.selected = tuple(ordered)
        for j in self.selected:
            for i in support(j):
                if j[i] > self.families[i].max_order:
                    raise ValueError(
                        f"order {j[i]} exceeds coordinate {i} family capacity"
                    )
        self._position = {j: k for k, j in enumerate(self.selected)}
        groups: dict[tuple[int, ...], list[MultiIndex]] = {}
        for j in self.selected:
            s = support(j)
            if s:
                groups.setdefault(s, []).append(j)
        self._supports = groups

    def __len__(self) -> int:
        return len(self.selected)

    def position(self, j: MultiIndex) -> int:
        return self._position[tuple(j)]

    def supports(self) -> dict[tuple[int, ...], list[MultiIndex]]:
        """Selected non-constant functions grouped by support subset.

        The returned mapping is shared; treat it as read-only.
        """
        return self._supports

    def level_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for j in self.selected:
            lvl = len(support(j))
            counts[lvl] = counts.get(lvl, 0) + 1
        return counts

    def eval_function(self, j: MultiIndex, x: Sequence[float]) -> float:
        """Product of 1-D factors over support(j); other slots never read."""
        j = tuple(j)
        if j not in self._position:
            raise ValueError(f"multi-index {j} not in the selected set")
        out = 1.0
        for i in support(j):
            xi = x[i]
            if xi is None or (isinstance(xi, float) and np.isnan(xi)):
                raise MissingCoordinateError(
                    f"coordinate {i} is required by multi-index {j} but missing"
                )
            out *= self.families[i].eval(j[i], xi)
        return out


def _as_families(d: int, families) -> tuple[Family1D, ...]:
    if isinstance(families, Family1D):
        return (families,) * d
    families = tuple(families)
    if len(families) != d:
        raise ValueError(f"expected {d} families, got {len(families)}")
    return families


def _capacity_check(families: tuple[Family1D, ...], coords: Iterable[int], m: int):
    for i in coords:
        if m > families[i].max_order:
            raise ValueError(
                f"order {m} exceeds coordinate {i} family capacity "
                f"({families[i].max_order})"
            )


def build_full(d: int, families, level_orders) -> BasisSpec:
    """All multi-indices with per-level maximal order.

    level_orders maps correlation level |C| (1..d) to the maximal 1-D
    order used at that level; an int applies one order to every level.
    Order 0 at a level drops that level entirely.  The constant is always
    selected, so a level-0 entry is accepted but redundant.
    """
    if isinstance(level_orders, int):
        level_orders = {lvl: level_orders for lvl in range(1, d + 1)}
    else:
        level_orders = dict(level_orders)
    for lvl in range(1, d + 1):
        if lvl not in level_orders:
            raise ValueError(f"level_orders missing level {lvl}")
    fams = _as_families(d, families)
    selected: list[MultiIndex] = [(0,) * d]
    for lvl in range(1, d + 1):
        m = level_orders[lvl]
        if m == 0:
            continue
        for coords in combinations(range(d), lvl):
            _capacity_check(fams, coords, m)
            for orders in product(range(1, m + 1), repeat=lvl):
                j = [0] * d
                for i, o in zip(coords, orders):
                    j[i] = o
                selected.append(tuple(j))
    return BasisSpec(d, fams, tuple(selected), level_orders)


def build_sparse(d: int, families, subsets: Iterable[Iterable[int]], orders) -> BasisSpec:
    """Basis populated only for the whitelisted coordinate subsets.

    orders is an int shared by every subset, or a mapping from frozenset
    to the maximal order used inside that subset.
    """
    fams = _as_families(d, families)
    selected: list[MultiIndex] = [(0,) * d]
    for raw in subsets:
        coords = tuple(sorted(set(raw)))
        if not coords:
            raise ValueError("whitelisted subsets must be nonempty")
        if coords[0] < 0 or coords[-1] >= d:
            raise ValueError(f"subset {coords} out of range for d={d}")
        m = orders[frozenset(coords)] if isinstance(orders, Mapping) else int(orders)
        _capacity_check(fams, coords, m)
        for os in product(range(1, m + 1), repeat=len(coords)):
            j = [0] * d
            for i, o in zip(coords, os):
                j[i] = o
            selected.append(tuple(j))
    return BasisSpec(d, fams, tuple(selected))
