"""Command-line surface: fit, impute, density, refine, report, transform.

Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure
(nonpositive conditional mass or exhausted positivity backtracking).
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .basis1d import discrete, legendre, trig
from .dataset import (DEFAULT_MISSING_TOKENS, Identity, column_specs,
                      fit_transform, load_table, parse_schema,
                      transform_from_tokens, write_table)
from .density import (CLUSTER_SPLIT, EXPECTED, TOP_MODE, clamp,
                      conditional_slice, evaluate, impute)
from .errors import HcrError, NonpositiveMassError, PositivityError, TableError
from .estimator import fit
from .likelihood import RefineConfig, find_negative_witness, refine
from .model_io import load_model, save_model
from .tensor_basis import build_full, support

__all__ = ["main"]

TRANSFORMS_MAGIC = "hcrtransforms 1"
ORDER_LABELS = {1: "trend", 2: "focus/spread", 3: "skew-like", 4: "kurtosis-like"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _missing_tokens(arg: str | None) -> frozenset:
    if arg is None:
        return DEFAULT_MISSING_TOKENS
    return frozenset(t.strip() for t in arg.split(",")) | {""}


def _parse_orders(text: str, d: int) -> dict[int, int]:
    """Comma list per correlation level; one value applies to all levels,
    short lists leave the remaining deeper levels empty."""
    try:
        values = [int(t) for t in text.split(",")]
    except ValueError:
        raise _UsageError(f"--orders expects integers, got {text!r}") from None
    if any(v < 0 for v in values):
        raise _UsageError("--orders values must be >= 0")
    if len(values) == 1:
        values = values * d
    if len(values) > d:
        raise _UsageError(f"--orders lists {len(values)} levels for {d} coordinates")
    orders = {lvl: 0 for lvl in range(1, d + 1)}
    for lvl, v in enumerate(values, start=1):
        orders[lvl] = v
    return orders


def _read_text(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _float_cell(x) -> str:
    return repr(float(x))


def _subset_names(coords, names) -> str:
    return "{" + ",".join(names[i] for i in coords) + "}"


def _function_name(j, names) -> str:
    parts = [f"{names[i]}^{j[i]}" for i in support(j)]
    return "*".join(parts) if parts else "1"


def _interpret(j, names, a: float) -> str:
    s = support(j)
    if not s:
        return "normalization"
    if len(s) >= 2 and all(j[i] == 1 for i in s):
        coords = ",".join(str(i + 1) for i in s)
        return f"coordinates {coords}: {'co-increase' if a > 0 else 'co-decrease'}"
    return ", ".join(
        f"{names[i]}: {ORDER_LABELS.get(j[i], f'order-{j[i]}')}" for i in s)


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit(args) -> int:
    data = load_table(args.input, _missing_tokens(args.missing_tokens), args.sep)
    schema = parse_schema(_read_text(args.schema)) if args.schema else {}
    specs = column_specs(schema, data.names)
    transforms = [fit_transform(s, data.values[:, i]) for i, s in enumerate(specs)]
    unit = data.transformed(transforms)
    orders = _parse_orders(args.orders, data.d)
    max_m = max(orders.values())
    families = []
    for s in specs:
        if s.family == "discrete":
            families.append(discrete(len(s.categories)))
        elif s.family == "trig":
            families.append(trig(max_m))
        else:
            families.append(legendre(max_m))
    spec = build_full(data.d, families, orders)
    model = fit(spec, unit, names=data.names, transforms=transforms)
    save_model(model, args.out)

    names = data.names
    print(f"records: {data.n}, coordinates: {data.d}")
    counts = data.presence_counts()
    print("presence: " + ", ".join(f"{nm} {int(c)}/{data.n}" for nm, c in zip(names, counts)))
    if any(c == 0 for c in counts):
        empty = [nm for nm, c in zip(names, counts) if c == 0]
        print(f"warning: fully-missing columns {empty}: their terms are flagged no-evidence")
    levels = spec.level_counts()
    print("basis: " + ", ".join(f"level {lvl}: {levels[lvl]}" for lvl in sorted(levels))
          + f" ({len(spec)} functions)")
    if len(spec) == 1:
        print("warning: uniform model (no non-constant functions selected)")
    ev = sorted(model.evidence.items(), key=lambda kv: (len(kv[0]), kv[0]))
    print("evidence: " + ", ".join(
        f"{_subset_names(c, names) if c else '{}'}: {n}" for c, n in ev))
    ranked = sorted(
        (j for j in spec.selected if support(j) and np.isfinite(model.uncertainty[j])
         and model.uncertainty[j] > 0),
        key=lambda j: -abs(model.coefficients[j]) / model.uncertainty[j])
    if ranked:
        print("top coefficients by |a|/uncertainty:")
        for j in ranked[:5]:
            a, u = model.coefficients[j], model.uncertainty[j]
            print(f"  {_function_name(j, names)} a={a:.6g} u={u:.6g} ratio={abs(a) / u:.3g}")
    return 0


def cmd_impute(args) -> int:
    model = load_model(args.model)
    data = load_table(args.input, _missing_tokens(args.missing_tokens), args.sep)
    if data.d != model.d:
        raise TableError(f"table has {data.d} coordinates, model expects {model.d}")
    transforms = model.transforms or [Identity() for _ in range(model.d)]
    unit = data.transformed(transforms)
    out_rows = []
    notes_seen = False
    failures = 0
    for k in range(data.n):
        row = data.values[k]
        missing = np.isnan(unit.values[k])
        if not missing.any():
            out_rows.append((list(row), 1.0, "", {}))
            continue
        try:
            completions = impute(model, unit.values[k], args.policy)
        except NonpositiveMassError as exc:
            failures += 1
            notes_seen = True
            out_rows.append((list(row), 1.0, f"nonpositive-mass:{exc.denominator:.6g}", {}))
            continue
        for comp in completions:
            cells = []
            for i in range(model.d):
                if missing[i]:
                    cells.append(float(np.asarray(transforms[i].invert(comp.values[i]))))
                else:
                    cells.append(row[i])
            note = ";".join(comp.notes)
            notes_seen = notes_seen or bool(note)
            out_rows.append((cells, comp.weight, note, comp.variances))
    header = list(data.names)
    with_weight = args.policy == CLUSTER_SPLIT
    if with_weight:
        header.append("__hcr_weight")
    if notes_seen:
        header.append("__hcr_note")
    if args.report:
        header.extend(f"__hcr_var_{nm}" for nm in data.names)
    rendered = []
    for cells, weight, note, variances in out_rows:
        line = [None if (isinstance(c, float) and np.isnan(c)) else c for c in cells]
        if with_weight:
            line.append(weight)
        if notes_seen:
            line.append(note)
        if args.report:
            line.extend(variances.get(i) for i in range(model.d))
        rendered.append(line)
    write_table(args.out if args.out else sys.stdout, header, rendered, args.sep,
                fmt=_float_cell)
    if failures:
        print(f"warning: {failures} rows left unfilled (nonpositive conditional mass)",
              file=sys.stderr)
    return 0


def cmd_density(args) -> int:
    model = load_model(args.model)
    parts = [p.strip() for p in args.point.split(",")]
    if len(parts) != model.d:
        raise _UsageError(f"point has {len(parts)} cells, model expects {model.d}")
    free = [i for i, p in enumerate(parts) if p == "?"]
    if len(free) > 1:
        raise _UsageError("at most one '?' coordinate; use impute for joint queries")
    transforms = model.transforms or [Identity() for _ in range(model.d)]
    point = np.full(model.d, np.nan)
    for i, p in enumerate(parts):
        if p == "?":
            continue
        try:
            raw = float(p)
        except ValueError:
            raise _UsageError(f"coordinate {i + 1}: {p!r} is not a number") from None
        point[i] = float(np.asarray(transforms[i].apply(raw)))
    if not free:
        rho = evaluate(model, point)
        if args.epsilon is not None:
            rho = clamp(rho, args.epsilon)
        print(repr(rho))
        return 0
    i = free[0]
    sl = conditional_slice(model, point, i)
    fam = model.spec.families[i]
    grid = fam.grid if fam.is_discrete else np.linspace(0.0, 1.0, args.grid)
    values = np.asarray(sl.evaluate(grid))
    if args.epsilon is not None:
        values = np.maximum(values, args.epsilon)
    name = model.coordinate_names()[i]
    rows = [(float(x), float(np.asarray(transforms[i].invert(x))), float(v))
            for x, v in zip(grid, values)]
    write_table(args.out if args.out else sys.stdout, ["x", name, "density"],
                rows, args.sep, fmt=_float_cell)
    return 0


def cmd_refine(args) -> int:
    model = load_model(args.model)
    data = load_table(args.input, _missing_tokens(args.missing_tokens), args.sep)
    if data.d != model.d:
        raise TableError(f"table has {data.d} coordinates, model expects {model.d}")
    transforms = model.transforms or [Identity() for _ in range(model.d)]
    unit = data.transformed(transforms)
    config = RefineConfig(steps=args.steps, step_size=args.rate, ridge=args.ridge,
                          positivity_margin=args.epsilon if args.epsilon is not None else 1e-6)
    try:
        refined, trace = refine(model, unit, config)
    except (PositivityError, NonpositiveMassError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        witness = find_negative_witness(model, budget=512)
        if witness is not None:
            cells = ",".join(repr(float(w)) for w in witness)
            print(f"negative-density witness (unit coordinates): {cells}", file=sys.stderr)
        return 3
    save_model(refined, args.out)
    print("step loglik objective step_scale")
    for t in trace:
        print(f"{t.step} {t.loglik:.12g} {t.objective:.12g} {t.step_scale:.6g}")
    return 0


def cmd_transform(args) -> int:
    if args.direction == "forward":
        if not args.schema:
            raise _UsageError("forward transform requires --schema")
        data = load_table(args.input, _missing_tokens(args.missing_tokens), args.sep)
        schema = parse_schema(_read_text(args.schema))
        specs = column_specs(schema, data.names)
        transforms = [fit_transform(s, data.values[:, i]) for i, s in enumerate(specs)]
        unit = data.transformed(transforms)
        write_table(args.out if args.out else sys.stdout, data.names,
                    [list(r) for r in unit.values], args.sep, fmt=_float_cell)
        if args.transforms:
            lines = [TRANSFORMS_MAGIC]
            for i, (nm, tr) in enumerate(zip(data.names, transforms)):
                safe = "_".join(str(nm).split()) or f"x{i + 1}"
                lines.append(" ".join(["column", str(i), safe, *tr.tokens()]))
            with open(args.transforms, "w") as fh:
                fh.write("\n".join(lines) + "\n")
        return 0
    if not args.transforms:
        raise _UsageError("backward transform requires --transforms")
    data = load_table(args.input, _missing_tokens(args.missing_tokens), args.sep)
    text = _read_text(args.transforms).splitlines()
    if not text or text[0].strip() != TRANSFORMS_MAGIC:
        raise TableError("not a transforms file (bad magic line)")
    transforms = [Identity() for _ in range(data.d)]
    for raw in text[1:]:
        if not raw.strip():
            continue
        parts = raw.split()
        i = int(parts[1])
        if not 0 <= i < data.d:
            raise TableError(f"transform column {i} out of range")
        transforms[i] = transform_from_tokens(parts[3:])
    back = data.transformed(transforms, invert=True)
    write_table(args.out if args.out else sys.stdout, data.names,
                [list(r) for r in back.values], args.sep, fmt=_float_cell)
    return 0


def cmd_report(args) -> int:
    model = load_model(args.model)
    names = model.coordinate_names()
    print(f"model: {model.d} coordinates, {len(model.spec.selected)} functions")
    transforms = model.transforms or [Identity() for _ in range(model.d)]
    for i, fam in enumerate(model.spec.families):
        extra = f" v={fam.v}" if fam.is_discrete else ""
        print(f"  column {names[i]}: {fam.kind} order<={fam.max_order}{extra} "
              f"transform={transforms[i].kind}")
    by_level: dict[int, list] = {}
    for j in model.spec.selected:
        by_level.setdefault(len(support(j)), []).append(j)
    for lvl in sorted(by_level):
        print(f"level {lvl} ({len(by_level[lvl])} functions):")
        for j in by_level[lvl]:
            a = model.coefficients[j]
            u = model.uncertainty.get(j, float("nan"))
            flag = model.flags.get(j, "")
            ratio = abs(a) / u if (np.isfinite(u) and u > 0) else float("nan")
            line = (f"  {_function_name(j, names)} a={a:.6g} u={u:.6g} "
                    f"ratio={ratio:.3g} {_interpret(j, names, a)}")
            if flag:
                line += f" [{flag}]"
            print(line)
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> _Parser:
    parser = _Parser(prog="hcr", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--sep", default=",", help="cell separator (default ,)")
    common.add_argument("--missing-tokens", default=None,
                        help="comma list of missing-value tokens (empty cell always counts)")
    common.add_argument("--seed", type=int, default=0,
                        help="reserved for sampled diagnostics; commands are deterministic")

    p = sub.add_parser("fit", parents=[common], help="fit a model to a table")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--schema", help="per-column family/transform declarations")
    p.add_argument("--orders", required=True,
                   help="comma list of max order per correlation level, e.g. 3,2")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("impute", parents=[common], help="fill missing cells")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", help="output table (default stdout)")
    p.add_argument("--policy", default=EXPECTED,
                   choices=[EXPECTED, TOP_MODE, CLUSTER_SPLIT])
    p.add_argument("--report", action="store_true",
                   help="append per-cell variance columns")
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("density", parents=[common],
                       help="density at a point, or a slice table with one '?'")
    p.add_argument("--model", required=True)
    p.add_argument("--point", required=True,
                   help="comma list in original units; '?' marks the free coordinate")
    p.add_argument("--out", help="slice table output (default stdout)")
    p.add_argument("--grid", type=int, default=101, help="slice table resolution")
    p.add_argument("--epsilon", type=float, default=None,
                   help="clamp floor applied to reported densities")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("refine", parents=[common],
                       help="gradient-ascent refinement of a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--rate", type=float, default=0.1, help="ascent step size")
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--epsilon", type=float, default=None,
                   help="positivity margin (default 1e-6)")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("report", parents=[common], help="human-readable model report")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("transform", parents=[common],
                       help="map a table to [0,1] coordinates and back")
    p.add_argument("--input", required=True)
    p.add_argument("--out", help="output table (default stdout)")
    p.add_argument("--schema", help="required for forward")
    p.add_argument("--direction", choices=["forward", "backward"], default="forward")
    p.add_argument("--transforms", help="transform tables to write (forward) or read (backward)")
    p.set_defaults(func=cmd_transform)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.error("a subcommand is required")
    try:
        return args.func(args) or 0
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (NonpositiveMassError, PositivityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except HcrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
