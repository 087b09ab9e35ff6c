"""Likelihood evaluation, approximated gradient, ascent, and repair.

The objective F(a) averages log-density over complete records only; the
gradient follows the per-subset evidence averaging of the estimator, so
incomplete records still steer every coefficient they can support.  For
a record missing some coordinates the denominator is the density of the
model marginalized to that record's known set; this reading is a
documented interpretation, not a unique one.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.stats import qmc

from .dataset import Dataset
from .density import evaluate, evaluate_points
from .errors import NonpositiveMassError, PositivityError
from .estimator import Model, _coordinate_tables
from .tensor_basis import MultiIndex, support

__all__ = [
    "RefineConfig",
    "TraceStep",
    "log_likelihood",
    "gradient",
    "refine",
    "repair_negative",
    "find_negative_witness",
    "RESCALE_ALL",
    "REDUCE_LARGEST",
]

RESCALE_ALL = "rescale-all"
REDUCE_LARGEST = "reduce-largest"

MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class RefineConfig:
    steps: int
    step_size: float
    ridge: float = 0.0
    positivity_margin: float = 1e-6
    backtrack_factor: float = 0.5

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")
        if self.positivity_margin < 0:
            raise ValueError("positivity_margin must be >= 0")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0,1)")


@dataclass(frozen=True)
class TraceStep:
    step: int
    loglik: float
    objective: float
    step_scale: float


class _Workspace:
    """Precomputed per-record function values and presence grouping.

    V[p] holds the value of selected function p at every record, with
    missing slots at a placeholder that is masked away: a function is
    only ever read at records whose known set covers its support.
    """

    def __init__(self, model: Model, data: Dataset):
        if data.d != model.d:
            raise ValueError(f"data has {data.d} coordinates, model expects {model.d}")
        self.model = model
        self.data = data
        spec = model.spec
        tables = _coordinate_tables(spec, data)
        self.selected = spec.selected
        n = data.n
        self.V = np.ones((len(self.selected), n))
        for p, j in enumerate(self.selected):
            for i in support(j):
                self.V[p] *= tables[i][j[i]]
        present = data.present
        groups: dict[tuple[int, ...], list[int]] = {}
        for k in range(n):
            groups.setdefault(tuple(np.flatnonzero(present[k])), []).append(k)
        self.groups = []
        self.usable = np.zeros(n, dtype=bool)
        for known, rows in groups.items():
            if not known:
                continue  # a fully-missing record supports nothing
            cover = set(known)
            positions = [p for p, j in enumerate(self.selected)
                         if set(support(j)) <= cover]
            self.groups.append((np.asarray(rows), np.asarray(positions)))
            self.usable[rows] = True
        self.complete_rows = np.flatnonzero(data.complete_mask())

    def coef_vector(self, model: Model) -> np.ndarray:
        return np.array([model.coefficients[j] for j in self.selected])

    def densities(self, coef: np.ndarray) -> np.ndarray:
        """Per-record marginal density over the record's known set
        (NaN for unusable records)."""
        rho = np.full(self.data.n, np.nan)
        for rows, positions in self.groups:
            rho[rows] = coef[positions] @ self.V[np.ix_(positions, rows)]
        return rho

    def loglik(self, rho: np.ndarray) -> float:
        if self.complete_rows.size == 0:
            return float("nan")
        return float(np.mean(np.log(rho[self.complete_rows])))

    def gradient_vector(self, rho: np.ndarray) -> np.ndarray:
        grad = np.zeros(len(self.selected))
        ratio = np.zeros(self.data.n)
        ok = self.usable
        ratio[ok] = 1.0 / rho[ok]
        for p, j in enumerate(self.selected):
            c = support(j)
            if not c:
                continue  # constant coefficient is fixed
            mask = self.data.evidence_mask(c)
            count = int(mask.sum())
            if count == 0:
                continue
            grad[p] = float(np.sum(self.V[p][mask] * ratio[mask]) / count)
        return grad


def log_likelihood(model: Model, data: Dataset) -> float:
    """Average log-density over the complete records.

    Records with any missing cell are skipped: the full-point density is
    undefined for them, and they enter through the gradient instead.
    """
    mask = data.complete_mask()
    if not mask.any():
        raise ValueError("log-likelihood needs at least one complete record")
    rho = evaluate_points(model, data.values[mask])
    rows = np.flatnonzero(mask)
    bad = rows[rho <= 0]
    if bad.size:
        raise NonpositiveMassError(
            f"nonpositive density at records {bad.tolist()[:10]}"
            f"{'...' if bad.size > 10 else ''}; repair the model first",
            float(rho.min()),
        )
    return float(np.mean(np.log(rho)))


def gradient(model: Model, data: Dataset) -> dict[MultiIndex, float]:
    """Approximated likelihood gradient using all per-subset evidence.

    For coefficient a_f with support C the entry averages f(x)/rho(x)
    over the records knowing C, where rho is each record's marginal
    density over its own known set.  The constant's entry is 0.
    """
    ws = _Workspace(model, data)
    rho = ws.densities(ws.coef_vector(model))
    _check_positive(rho, ws)
    vec = ws.gradient_vector(rho)
    return {j: float(g) for j, g in zip(ws.selected, vec)}


def _check_positive(rho: np.ndarray, ws: _Workspace, margin: float = 0.0):
    used = rho[ws.usable]
    if used.size and np.min(used) <= margin:
        k = int(np.flatnonzero(ws.usable)[int(np.argmin(used))])
        raise NonpositiveMassError(
            f"record {k} has marginal density {np.min(used):.6g}", float(np.min(used)))


def refine(model: Model, data: Dataset, config: RefineConfig) -> tuple[Model, list[TraceStep]]:
    """Fixed-step gradient ascent on F(a) - ridge * sum a_f^2.

    Each step shrinks geometrically until every usable record keeps
    density >= positivity_margin; on fully complete data the shrink also
    enforces a non-decreasing penalized objective (with incomplete data
    the gradient is approximate, so the trace is indicative only).
    Aborts after 60 shrinks.
    """
    ws = _Workspace(model, data)
    coef = ws.coef_vector(model)
    nonconst = np.array([bool(support(j)) for j in ws.selected])
    all_complete = bool(ws.complete_rows.size == ws.data.n) and ws.data.n > 0
    rho = ws.densities(coef)
    _check_positive(rho, ws)

    def objective(c, r):
        f = ws.loglik(r)
        return f, f - config.ridge * float(np.sum(c[nonconst] ** 2))

    trace: list[TraceStep] = []
    _, current_obj = objective(coef, rho)
    for step in range(config.steps):
        g = ws.gradient_vector(rho)
        g[nonconst] -= 2.0 * config.ridge * coef[nonconst]
        g[~nonconst] = 0.0
        scale = config.step_size
        for attempt in range(MAX_BACKTRACKS + 1):
            candidate = coef + scale * g
            candidate[~nonconst] = coef[~nonconst]
            cand_rho = ws.densities(candidate)
            used = cand_rho[ws.usable]
            positive = (not used.size) or np.min(used) >= config.positivity_margin
            if positive:
                f_new, obj_new = objective(candidate, cand_rho)
                monotone = (not all_complete or np.isnan(obj_new)
                            or obj_new >= current_obj - 1e-12 * (1 + abs(current_obj)))
                if monotone:
                    break
            scale *= config.backtrack_factor
        else:
            raise PositivityError(
                f"step {step}: no acceptable step after {MAX_BACKTRACKS} reductions"
            )
        coef, rho = candidate, cand_rho
        current_obj = obj_new
        trace.append(TraceStep(step, f_new, obj_new, scale))
    refined = model.with_coefficients({j: float(c) for j, c in zip(ws.selected, coef)})
    return refined, trace


# ---------------------------------------------------------------------------
# negative-density handling


def repair_negative(model: Model, witness, strategy: str = RESCALE_ALL,
                    margin: float = 1e-6) -> Model:
    """Lift the density at a negative witness back up to the margin.

    rescale-all multiplies every non-constant coefficient by one factor
    t in (0,1), which cannot flip signs; reduce-largest moves only the
    coefficient with the largest negative contribution at the witness,
    just enough to reach the margin.
    """
    if strategy not in (RESCALE_ALL, REDUCE_LARGEST):
        raise ValueError(f"unknown strategy {strategy!r}")
    witness = np.asarray(witness, dtype=float)
    rho = evaluate(model, witness)
    if rho >= margin:
        raise ValueError(f"witness density {rho:.6g} already >= margin {margin:.6g}")
    zero = (0,) * model.d
    contributions = {}
    for j in model.spec.selected:
        if j == zero:
            continue
        contributions[j] = model.coefficients[j] * model.spec.eval_function(j, witness)
    nonconst_sum = sum(contributions.values())  # rho - 1
    coefficients = dict(model.coefficients)
    if strategy == RESCALE_ALL:
        t = (margin - 1.0) / nonconst_sum
        for j in contributions:
            coefficients[j] = model.coefficients[j] * t
    else:
        negatives = {j: c for j, c in contributions.items() if c < 0}
        target = max(negatives, key=lambda j: abs(negatives[j]))
        fw = model.spec.eval_function(target, witness)
        coefficients[target] = model.coefficients[target] + (margin - rho) / fw
    return model.with_coefficients(coefficients)


def _snap_to_grids(model: Model, point: np.ndarray) -> np.ndarray:
    out = np.array(point, dtype=float)
    for i, fam in enumerate(model.spec.families):
        if fam.is_discrete:
            out[i] = np.rint(out[i] * (fam.v - 1)) / (fam.v - 1)
    return out


def _candidate_points(d: int):
    for corner in product((0.0, 1.0), repeat=d):
        yield np.array(corner)
    for i in range(d):
        for corner in product((0.0, 1.0), repeat=d - 1):
            p = np.array(corner[:i] + (0.5,) + corner[i:])
            yield p
    sampler = qmc.Halton(d=d, scramble=False)
    while True:
        for row in sampler.random(128):
            yield row


def find_negative_witness(model: Model, budget: int = 512):
    """Scan corners, edge midpoints, then a low-discrepancy interior
    sequence; return the most negative point found, or None.

    Discrete coordinates snap to their nearest admissible grid value
    before evaluation.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    best_point = None
    best_value = 0.0
    for count, raw in enumerate(_candidate_points(model.d)):
        if count >= budget:
            break
        point = _snap_to_grids(model, raw)
        value = evaluate(model, point)
        if value < best_value:
            best_value = value
            best_point = point
    return best_point
