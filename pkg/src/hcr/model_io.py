"""Versioned plain-text model files.

Line-oriented and diffable: a magic header, one `column` line per
coordinate (family plus transform tokens), then one `coef` line per
selected multi-index in canonical order.  Floats are written with 17
significant digits so save -> load -> save is byte-identical.
"""
from __future__ import annotations


from .basis1d import Family1D, discrete, legendre, trig
from .dataset import Identity, transform_from_tokens
from .estimator import Model
from .tensor_basis import BasisSpec, support

__all__ = ["save_model", "load_model", "MAGIC", "FORMAT_VERSION"]

MAGIC = "hcrmodel"
FORMAT_VERSION = 1


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_model(model: Model, dest) -> None:
    """Write the model to a path or text stream."""
    names = model.coordinate_names()
    transforms = model.transforms or [Identity() for _ in range(model.d)]
    lines = [f"{MAGIC} {FORMAT_VERSION}", f"dim {model.d}"]
    for i in range(model.d):
        fam = model.spec.families[i]
        name = "_".join(str(names[i]).split()) or f"x{i + 1}"
        v = str(fam.v) if fam.is_discrete else "-"
        lines.append(" ".join(["column", str(i), name, fam.kind,
                               str(fam.max_order), v, *transforms[i].tokens()]))
    for j in model.spec.selected:
        ev = model.evidence.get(support(j), 0)
        unc = model.uncertainty.get(j, float("nan"))
        flag = model.flags.get(j, "") or "-"
        lines.append(" ".join(["coef", ",".join(map(str, j)),
                               _fmt(model.coefficients[j]), str(ev), _fmt(unc), flag]))
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w") as fh:
            fh.write(text)


def _family_from(kind: str, max_order: int, v: str) -> Family1D:
    if kind == "legendre":
        return legendre(max_order)
    if kind == "trig":
        return trig(max_order)
    if kind == "discrete":
        return discrete(int(v), max_order)
    raise ValueError(f"unknown family kind {kind!r}")


def load_model(source) -> Model:
    """Read a model written by save_model."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source) as fh:
            text = fh.read()
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty model file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != MAGIC:
        raise ValueError("not a model file (bad magic line)")
    if int(head[1]) != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {head[1]}")
    if len(lines) < 2 or lines[1].split()[0] != "dim":
        raise ValueError("model file missing dim line")
    d = int(lines[1].split()[1])
    names: list[str] = [""] * d
    families: list[Family1D | None] = [None] * d
    transforms: list = [None] * d
    selected = []
    coefficients = {}
    evidence = {}
    uncertainty = {}
    flags = {}
    for lineno, raw in enumerate(lines[2:], start=3):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "column":
                i = int(parts[1])
                if not 0 <= i < d:
                    raise ValueError(f"column index {i} out of range")
                names[i] = parts[2]
                families[i] = _family_from(parts[3], int(parts[4]), parts[5])
                transforms[i] = transform_from_tokens(parts[6:])
            elif parts[0] == "coef":
                j = tuple(int(t) for t in parts[1].split(","))
                if len(j) != d:
                    raise ValueError(f"multi-index {parts[1]} is not length {d}")
                selected.append(j)
                coefficients[j] = float(parts[2])
                evidence[support(j)] = int(parts[3])
                uncertainty[j] = float(parts[4])
                flags[j] = "" if parts[5] == "-" else parts[5]
            else:
                raise ValueError(f"unknown record {parts[0]!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"model file line {lineno}: {exc}") from None
    if any(f is None for f in families):
        raise ValueError("model file missing column lines")
    spec = BasisSpec(d, tuple(families), tuple(selected))
    return Model(spec, coefficients, evidence, uncertainty, flags,
                 transforms=transforms, names=tuple(names))
