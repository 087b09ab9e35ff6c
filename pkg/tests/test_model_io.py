import io

import numpy as np
import pytest

from hcr import (Dataset, build_full, discrete, evaluate, fit,
                 fit_empirical_cdf, legendre, load_model, save_model,
                 trig)

nan = float("nan")


def fitted_model(seed=41, n=40):
    rng = np.random.default_rng(seed)
    vals = rng.random((n, 2))
    vals[rng.random((n, 2)) < 0.2] = nan
    return fit(build_full(2, legendre(2), 2), Dataset(vals))


def test_round_trip_exact():
    m = fitted_model()
    buf = io.StringIO()
    save_model(m, buf)
    back = load_model(io.StringIO(buf.getvalue()))
    assert back.spec.selected == m.spec.selected
    for j in m.spec.selected:
        assert back.coefficients[j] == m.coefficients[j]  # bitwise
        u1, u2 = m.uncertainty[j], back.uncertainty[j]
        assert (u1 == u2) or (np.isnan(u1) and np.isnan(u2))
        assert back.flags.get(j, "") == m.flags.get(j, "")
    assert back.evidence == m.evidence
    assert back.coordinate_names() == m.coordinate_names()


def test_save_load_save_is_byte_identical(tmp_path):
    m = fitted_model(seed=42)
    p1, p2 = tmp_path / "a.model", tmp_path / "b.model"
    save_model(m, p1)
    save_model(load_model(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_file_layout():
    m = fitted_model()
    buf = io.StringIO()
    save_model(m, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "hcrmodel 1"
    assert lines[1] == "dim 2"
    assert lines[2].startswith("column 0 x1 legendre 2 -")
    assert lines[3].startswith("column 1 x2 legendre 2 -")
    coef_lines = [ln for ln in lines if ln.startswith("coef")]
    assert len(coef_lines) == len(m.spec.selected)
    assert coef_lines[0].split()[1] == "0,0"  # canonical order, constant first


def test_round_trip_preserves_evaluation():
    m = fitted_model(seed=43)
    buf = io.StringIO()
    save_model(m, buf)
    back = load_model(io.StringIO(buf.getvalue()))
    rng = np.random.default_rng(44)
    for _ in range(10):
        pt = rng.random(2)
        assert evaluate(back, pt) == evaluate(m, pt)


def test_round_trip_discrete_and_trig_families():
    rng = np.random.default_rng(45)
    vals = np.column_stack([
        rng.integers(0, 3, 30) / 2.0,
        rng.random(30),
    ])
    spec = build_full(2, (discrete(3), trig(2)), {1: 2, 2: 1})
    m = fit(spec, Dataset(vals))
    buf = io.StringIO()
    save_model(m, buf)
    back = load_model(io.StringIO(buf.getvalue()))
    assert back.spec.families[0].kind == "discrete"
    assert back.spec.families[0].v == 3
    assert back.spec.families[1].kind == "trig"
    assert back.spec.families[1].max_order == 2
    for j in m.spec.selected:
        assert back.coefficients[j] == m.coefficients[j]


def test_round_trip_transforms():
    rng = np.random.default_rng(46)
    raw = rng.normal(10, 2, 25)
    cdf = fit_empirical_cdf(raw)
    data = Dataset(cdf.apply(raw)[:, None], names=("income",))
    m = fit(build_full(1, legendre(2), 2), data, names=data.names,
            transforms=[cdf])
    buf = io.StringIO()
    save_model(m, buf)
    back = load_model(io.StringIO(buf.getvalue()))
    assert back.coordinate_names() == ("income",)
    t = back.transforms[0]
    x = np.linspace(raw.min(), raw.max(), 50)
    assert np.max(np.abs(t.apply(x) - cdf.apply(x))) < 1e-15
    assert np.max(np.abs(t.invert(cdf.apply(x)) - cdf.invert(cdf.apply(x)))) < 1e-15


def test_names_with_spaces_are_sanitized():
    data = Dataset(np.array([[0.5], [0.25]]), names=("body mass",))
    m = fit(build_full(1, legendre(1), 1), data, names=data.names)
    buf = io.StringIO()
    save_model(m, buf)
    back = load_model(io.StringIO(buf.getvalue()))
    assert back.coordinate_names() == ("body_mass",)


def test_flags_round_trip():
    data = Dataset(np.array([[0.5, nan], [0.25, nan], [0.75, 0.5]]))
    m = fit(build_full(2, legendre(1), 1), data)
    assert m.flags[(1, 1)] != ""
    buf = io.StringIO()
    save_model(m, buf)
    back = load_model(io.StringIO(buf.getvalue()))
    assert back.flags[(1, 1)] == m.flags[(1, 1)]
    assert back.flags[(1, 0)] == ""


def test_load_rejects_malformed_input():
    with pytest.raises(ValueError):
        load_model(io.StringIO(""))
    with pytest.raises(ValueError):
        load_model(io.StringIO("notamodel 1\ndim 1\n"))
    with pytest.raises(ValueError):
        load_model(io.StringIO("hcrmodel 9\ndim 1\n"))
    with pytest.raises(ValueError):
        load_model(io.StringIO("hcrmodel 1\nnope\n"))


def test_load_reports_line_numbers():
    m = fitted_model()
    buf = io.StringIO()
    save_model(m, buf)
    lines = buf.getvalue().splitlines()
    lines[5] = "coef 1,0 not-a-number 4 0.1 -"
    with pytest.raises(ValueError) as err:
        load_model(io.StringIO("\n".join(lines)))
    assert "line 6" in str(err.value)
    truncated = buf.getvalue().splitlines()
    truncated[4] = "coef 0,0"
    with pytest.raises(ValueError) as err:
        load_model(io.StringIO("\n".join(truncated)))
    assert "line 5" in str(err.value)


def test_load_rejects_missing_columns():
    text = "hcrmodel 1\ndim 2\ncolumn 0 x1 legendre 1 - none\ncoef 0,0 1 4 0 -\ncoef 1,0 0.5 4 0.1 -\n"
    with pytest.raises(ValueError):
        load_model(io.StringIO(text))


def test_load_rejects_wrong_index_length():
    text = ("hcrmodel 1\ndim 2\n"
            "column 0 x1 legendre 1 - none\n"
            "column 1 x2 legendre 1 - none\n"
            "coef 1 0.5 4 0.1 -\n")
    with pytest.raises(ValueError) as err:
        load_model(io.StringIO(text))
    assert "line 5" in str(err.value)
