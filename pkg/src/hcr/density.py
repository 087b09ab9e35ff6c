"""Density queries against a fitted model.

Covers full-point evaluation with the epsilon clamp, marginal models,
one-coordinate conditional slices, mode/cluster analysis of slices, and
sequential imputation of missing cells with optional branching on
multimodal slices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .basis1d import Family1D, gauss_nodes
from .errors import MissingCoordinateError, NonpositiveMassError
from .estimator import Model
from .tensor_basis import BasisSpec, support

__all__ = [
    "evaluate",
    "evaluate_points",
    "clamp",
    "marginalize",
    "conditional_slice",
    "ConditionalSlice",
    "SliceMoments",
    "Cluster",
    "Completion",
    "impute",
    "EXPECTED",
    "TOP_MODE",
    "CLUSTER_SPLIT",
]

EXPECTED = "expected"
TOP_MODE = "top-mode"
CLUSTER_SPLIT = "cluster-split"

MASS_FLOOR = 0.01  # cluster-split slivers below this merge into a neighbor


def evaluate_points(model: Model, points: np.ndarray) -> np.ndarray:
    """Densities at an (n, d) block of points; slots outside every used
    support may be NaN (they are never read)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    filled = np.where(np.isnan(points), 0.0, points)
    tables = [model.spec.families[i].eval_all(filled[:, i]) for i in range(model.d)]
    out = np.full(points.shape[0], model.coefficients[(0,) * model.d])
    for j in model.spec.selected:
        s = support(j)
        if not s:
            continue
        term = np.ones(points.shape[0])
        for i in s:
            term = term * tables[i][j[i]]
        out += model.coefficients[j] * term
    return out


def evaluate(model: Model, x) -> float:
    """Density at one full point of [0,1]^d; may be negative (see clamp)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.d,):
        raise ValueError(f"expected a full length-{model.d} point")
    if np.any(np.isnan(x)):
        missing = np.flatnonzero(np.isnan(x))
        raise MissingCoordinateError(
            f"point is missing coordinates {missing.tolist()}; use conditional_slice"
        )
    for i in range(model.d):
        # validates range / discrete grid membership per coordinate
        model.spec.families[i].eval(0, x[i])
    return float(evaluate_points(model, x[None, :])[0])


def clamp(value: float, epsilon: float) -> float:
    """max(value, epsilon); the cost is approximate normalization."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return max(value, epsilon)


def marginalize(model: Model, keep) -> Model:
    """Model of the kept coordinates: only functions supported inside keep.

    Off-support factors integrate to zero, so dropping every function
    that touches a removed coordinate is the exact marginal; coefficients
    are unchanged and dimension is preserved for indexing stability.
    """
    keep = frozenset(keep)
    if not keep:
        raise ValueError("keep must name at least one coordinate")
    if not keep <= set(range(model.d)):
        raise ValueError(f"keep out of range for d={model.d}")
    selected = tuple(j for j in model.spec.selected if set(support(j)) <= keep)
    spec = BasisSpec(model.spec.d, model.spec.families, selected,
                     model.spec.level_orders)
    kept_supports = {support(j) for j in selected}
    return Model(
        spec,
        {j: model.coefficients[j] for j in selected},
        {c: n for c, n in model.evidence.items() if c in kept_supports},
        {j: model.uncertainty.get(j, float("nan")) for j in selected},
        {j: model.flags.get(j, "") for j in selected},
        transforms=model.transforms,
        names=model.names,
    )


# ---------------------------------------------------------------------------
# conditional slices


@dataclass(frozen=True)
class SliceMoments:
    mean: float
    variance: float
    negative_region: bool


@dataclass(frozen=True)
class Cluster:
    lo: float
    hi: float
    mean: float
    mass: float


@dataclass
class ConditionalSlice:
    """One-coordinate section of the density with known coordinates fixed.

    numerator[o] collects every compatible coefficient of order o in the
    free coordinate, already multiplied by its fixed-coordinate factors;
    denominator is numerator[0], the restriction to the known set, so the
    normalized slice integrates to 1 by construction.
    """

    free_coordinate: int
    family: Family1D
    numerator: np.ndarray
    denominator: float

    @property
    def coef(self) -> np.ndarray:
        """Orthonormal-basis coefficients of the normalized slice."""
        return self.numerator / self.denominator

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        table = self.family.eval_all(x)
        out = np.tensordot(self.coef, table, axes=(0, 0))
        return out if x.ndim else float(out)

    # -- continuous-slice internals

    def _poly(self):
        scale = np.sqrt(2 * np.arange(self.numerator.size) + 1)
        return np.polynomial.legendre.Legendre(self.coef * scale, domain=[0, 1])

    def _derivative_roots(self) -> list[float]:
        """Stationary points in (0,1), ascending, deduplicated."""
        if self.family.kind == "legendre":
            if self.numerator.size < 3:
                return []
            roots = self._poly().deriv().roots()
            real = sorted(float(r.real) for r in np.atleast_1d(roots)
                          if abs(r.imag) < 1e-9 and 1e-10 < r.real < 1 - 1e-10)
        else:
            grid = np.linspace(0.0, 1.0, 4097)
            h = 1e-7
            dv = (self.evaluate(np.clip(grid + h, 0, 1))
                  - self.evaluate(np.clip(grid - h, 0, 1)))
            sign = np.sign(dv)
            real = []
            for k in np.flatnonzero(sign[:-1] * sign[1:] < 0):
                f = lambda t: float(self.evaluate(min(1.0, t + h)) - self.evaluate(max(0.0, t - h)))
                real.append(float(brentq(f, grid[k], grid[k + 1], xtol=1e-12)))
            real = sorted(r for r in real if 1e-10 < r < 1 - 1e-10)
        out: list[float] = []
        for r in real:
            if not out or r - out[-1] > 1e-9:
                out.append(r)
        return out

    def _interior_minima(self) -> list[float]:
        h = 1e-4
        minima = []
        for r in self._derivative_roots():
            step = min(h, r / 2, (1 - r) / 2)
            mid = float(self.evaluate(r))
            if float(self.evaluate(r - step)) > mid and float(self.evaluate(r + step)) > mid:
                minima.append(r)
        return minima

    def _interval_stats(self, lo: float, hi: float) -> tuple[float, float]:
        """(mass, mean) of the normalized slice restricted to [lo, hi]."""
        nodes, weights = gauss_nodes(48)
        x = lo + (hi - lo) * nodes
        w = (hi - lo) * weights
        rho = self.evaluate(x)
        mass = float(np.sum(w * rho))
        if mass == 0.0:
            return 0.0, (lo + hi) / 2
        return mass, float(np.sum(w * x * rho) / mass)

    # -- queries

    def expected_value(self) -> SliceMoments:
        """Mean and variance of the slice, flagging negative regions.

        A slice with negative parts is integrated as-is (signed) and the
        mean clipped into [0,1]; variance is floored at 0.
        """
        c = self.coef
        if self.family.is_discrete:
            grid = self.family.grid
            p = self.evaluate(grid) / self.family.v
            mean = float(np.sum(grid * p))
            var = float(np.sum(grid**2 * p) - mean**2)
            negative = bool(np.any(p < 0))
        else:
            mean = sum(c[o] * self.family.integrate_moment(o, 1) for o in range(c.size))
            ex2 = sum(c[o] * self.family.integrate_moment(o, 2) for o in range(c.size))
            var = ex2 - mean * mean
            negative = self._minimum_value() < 0
        if negative:
            mean = min(1.0, max(0.0, mean))
        return SliceMoments(float(mean), float(max(var, 0.0)), bool(negative))

    def _minimum_value(self) -> float:
        xs = [0.0, 1.0] + self._derivative_roots()
        return min(float(self.evaluate(x)) for x in xs)

    def top_mode(self) -> tuple[float, bool]:
        """Location of the global maximum; ties resolve to the smaller
        coordinate and are flagged."""
        if self.family.is_discrete:
            p = self.evaluate(self.family.grid)
            best = int(np.argmax(p))
            tied = int(np.sum(np.abs(p - p[best]) < 1e-12)) > 1
            return float(self.family.grid[best]), tied
        xs = np.array([0.0, 1.0] + self._derivative_roots())
        vals = np.array([float(self.evaluate(x)) for x in xs])
        best = np.max(vals)
        winners = np.sort(xs[vals > best - 1e-12])
        return float(winners[0]), winners.size > 1

    def modes_and_clusters(self) -> list[Cluster]:
        """Clusters of [0,1] split at interior density minima.

        Each cluster reports its interval, conditional mean, and mass;
        slivers below the mass floor merge into the adjacent cluster with
        the nearer mean.  Output is ordered by mass descending, ties by
        left endpoint.
        """
        if self.family.is_discrete:
            grid = self.family.grid
            p = self.evaluate(grid) / self.family.v
            clusters = [Cluster(g, g, float(g), float(m)) for g, m in zip(grid, p)]
        else:
            cuts = [0.0] + self._interior_minima() + [1.0]
            clusters = []
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                mass, mean = self._interval_stats(lo, hi)
                clusters.append(Cluster(lo, hi, mean, mass))
        clusters = self._merge_slivers(clusters)
        return sorted(clusters, key=lambda c: (-c.mass, c.lo))

    def _merge_slivers(self, clusters: list[Cluster]) -> list[Cluster]:
        clusters = list(clusters)
        while len(clusters) > 1:
            k = min(range(len(clusters)), key=lambda i: clusters[i].mass)
            if clusters[k].mass >= MASS_FLOOR:
                break
            if k == 0:
                nb = 1
            elif k == len(clusters) - 1:
                nb = k - 1
            else:
                nb = k - 1 if (abs(clusters[k - 1].mean - clusters[k].mean)
                               <= abs(clusters[k + 1].mean - clusters[k].mean)) else k + 1
            lo_i, hi_i = min(k, nb), max(k, nb)
            lo, hi = clusters[lo_i].lo, clusters[hi_i].hi
            if self.family.is_discrete:
                a, b = clusters[lo_i], clusters[hi_i]
                mass = a.mass + b.mass
                mean = (a.mean * a.mass + b.mean * b.mass) / mass if mass else (lo + hi) / 2
            else:
                mass, mean = self._interval_stats(lo, hi)
            merged = Cluster(lo, hi, mean, mass)
            clusters[lo_i:hi_i + 1] = [merged]
        return clusters


def conditional_slice(model: Model, known, i: int) -> ConditionalSlice:
    """Normalized density of coordinate i given the known coordinates.

    known is a length-d point with NaN at unknown slots, or a mapping
    from coordinate index to value.  Functions outside the known-plus-i
    envelope integrate away; what remains is grouped by the order of
    coordinate i, and the order-0 group is the normalizing restriction
    to the known set.
    """
    if not 0 <= i < model.d:
        raise ValueError(f"free coordinate {i} out of range")
    if isinstance(known, dict):
        values = {int(k): float(v) for k, v in known.items()}
    else:
        arr = np.asarray(known, dtype=float)
        values = {k: float(arr[k]) for k in range(arr.size) if not np.isnan(arr[k])}
    if i in values:
        raise ValueError(f"coordinate {i} is already known")
    for k, v in values.items():
        model.spec.families[k].eval(0, v)  # range / grid validation
    family = model.spec.families[i]
    numerator = np.zeros(family.max_order + 1)
    fixed = set(values)
    for j in model.spec.selected:
        s = set(support(j))
        if not s <= fixed | {i}:
            continue
        factor = model.coefficients[j]
        for k in s - {i}:
            factor *= model.spec.families[k].eval(j[k], values[k])
        numerator[j[i]] += factor
    denominator = numerator[0]
    if denominator <= 0:
        raise NonpositiveMassError(
            f"conditional mass for coordinate {i} is {denominator:.6g} at the given "
            "evidence; repair the model or fall back to the marginal", denominator)
    return ConditionalSlice(i, family, numerator, denominator)


# ---------------------------------------------------------------------------
# imputation


@dataclass
class Completion:
    """One imputed record: filled values, branch weight, per-fill variance."""

    values: np.ndarray
    weight: float
    variances: dict[int, float]
    notes: tuple[str, ...] = ()


def impute(model: Model, record, policy: str = EXPECTED) -> list[Completion]:
    """Fill the missing cells of one record, most-certain coordinate first.

    At every step the missing coordinate whose conditional slice has the
    smallest variance is filled and becomes evidence for the rest.  The
    cluster-split policy branches on multimodal slices, one weighted
    completion per cluster; weights are the cluster masses and sum to 1.
    """
    if policy not in (EXPECTED, TOP_MODE, CLUSTER_SPLIT):
        raise ValueError(f"unknown policy {policy!r}")
    start = np.asarray(record, dtype=float)
    if start.shape != (model.d,):
        raise ValueError(f"expected a length-{model.d} record")
    if not np.any(np.isnan(start)):
        raise ValueError("record is already complete")
    states = [Completion(start.copy(), 1.0, {})]
    while True:
        missing_any = False
        next_states: list[Completion] = []
        for state in states:
            missing = np.flatnonzero(np.isnan(state.values))
            if missing.size == 0:
                next_states.append(state)
                continue
            missing_any = True
            slices: dict[int, ConditionalSlice] = {}
            errors: list[Exception] = []
            for i in missing:
                try:
                    slices[int(i)] = conditional_slice(model, state.values, int(i))
                except NonpositiveMassError as exc:
                    errors.append(exc)
            if not slices:
                raise errors[0]
            moments = {i: s.expected_value() for i, s in slices.items()}
            target = min(slices, key=lambda i: (moments[i].variance, i))
            sl = slices[target]
            mom = moments[target]
            notes = state.notes
            if mom.negative_region:
                notes = notes + (f"negative-region:{model.coordinate_names()[target]}",)
            if policy == EXPECTED:
                fills = [(mom.mean, 1.0)]
            elif policy == TOP_MODE:
                value, tied = sl.top_mode()
                if tied:
                    notes = notes + (f"mode-tie:{model.coordinate_names()[target]}",)
                fills = [(value, 1.0)]
            else:
                clusters = sl.modes_and_clusters()
                total = sum(c.mass for c in clusters)
                fills = [(c.mean, c.mass / total) for c in clusters]
            for value, share in fills:
                values = state.values.copy()
                values[target] = min(1.0, max(0.0, value))
                if sl.family.is_discrete:
                    # snap to the nearest admissible grid value
                    k = int(np.rint(values[target] * (sl.family.v - 1)))
                    values[target] = k / (sl.family.v - 1)
                variances = dict(state.variances)
                variances[target] = mom.variance
                next_states.append(Completion(values, state.weight * share,
                                              variances, notes))
        states = next_states
        if not missing_any:
            break
    total = sum(s.weight for s in states)
    for s in states:
        s.weight /= total
    return states
