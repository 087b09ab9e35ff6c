import math

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss
from scipy.special import eval_sh_legendre

from hcr import Family1D, discrete, gauss_nodes, legendre, trig

SQ2 = math.sqrt(2.0)
SQ3 = math.sqrt(3.0)


def poly_oracle(j, x):
    # independent closed forms for the rescaled polynomials
    x = np.asarray(x, dtype=float)
    if j == 0:
        return np.ones_like(x)
    if j == 1:
        return SQ3 * (2 * x - 1)
    if j == 2:
        return math.sqrt(5.0) * (6 * x**2 - 6 * x + 1)
    if j == 3:
        return math.sqrt(7.0) * (20 * x**3 - 30 * x**2 + 12 * x - 1)
    if j == 4:
        return 3.0 * (70 * x**4 - 140 * x**3 + 90 * x**2 - 20 * x + 1)
    if j == 5:
        return math.sqrt(11.0) * (252 * x**5 - 630 * x**4 + 560 * x**3
                                  - 210 * x**2 + 30 * x - 1)
    raise ValueError(j)


def trig_oracle(j, x):
    x = np.asarray(x, dtype=float)
    if j == 0:
        return np.ones_like(x)
    freq = (j + 1) // 2
    if j % 2 == 1:
        return SQ2 * np.sin(2 * np.pi * freq * x)
    return SQ2 * np.cos(2 * np.pi * freq * x)


def unit_nodes(n):
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def test_polynomial_point_values():
    fam = legendre(3)
    assert fam.eval(0, 0.73) == 1.0
    assert fam.eval(1, 0.5) == 0.0
    assert fam.eval(1, 1.0) == pytest.approx(SQ3, abs=1e-15)
    assert fam.eval(2, 0.0) == pytest.approx(math.sqrt(5.0), abs=1e-15)
    assert fam.eval(3, 1.0) == pytest.approx(math.sqrt(7.0), abs=1e-13)
    out = fam.eval(2, np.array([0.0, 1.0]))
    assert isinstance(out, np.ndarray) and out.shape == (2,)
    assert isinstance(fam.eval(2, 0.3), float)


def test_polynomials_match_closed_forms():
    rng = np.random.default_rng(101)
    x = rng.random(257)
    fam = legendre(5)
    for j in range(6):
        assert np.max(np.abs(fam.eval(j, x) - poly_oracle(j, x))) < 1e-12


def test_high_order_polynomials_match_scipy():
    # orders past the closed-form table come from the recurrence
    rng = np.random.default_rng(102)
    x = rng.random(200)
    fam = legendre(10)
    for j in range(11):
        want = math.sqrt(2 * j + 1) * eval_sh_legendre(j, x)
        assert np.max(np.abs(fam.eval(j, x) - want)) < 1e-10


def test_trig_point_values():
    fam = trig(4)
    assert fam.eval(1, 0.25) == pytest.approx(SQ2, abs=1e-15)
    assert fam.eval(2, 0.5) == pytest.approx(-SQ2, abs=1e-15)
    assert fam.eval(3, 0.125) == pytest.approx(SQ2, abs=1e-15)
    assert fam.eval(4, 0.25) == pytest.approx(-SQ2, abs=1e-15)


def test_trig_frequency_mapping():
    rng = np.random.default_rng(103)
    x = rng.random(64)
    fam = trig(8)
    for j in range(9):
        assert np.max(np.abs(fam.eval(j, x) - trig_oracle(j, x))) < 1e-13


def test_discrete_two_levels():
    fam = discrete(2)
    assert fam.max_order == 1
    assert fam.eval(1, 0.0) == pytest.approx(-1.0, abs=1e-12)
    assert fam.eval(1, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_discrete_three_levels():
    fam = discrete(3)
    r = math.sqrt(1.5)
    got = fam.eval_all(fam.grid)
    assert np.allclose(got[1], [-r, 0.0, r], atol=1e-12)
    assert np.allclose(got[2], [1 / SQ2, -SQ2, 1 / SQ2], atol=1e-12)


def test_discrete_four_levels():
    fam = discrete(4)
    got = fam.eval_all(fam.grid)
    a, b = 3 / math.sqrt(5.0), 1 / math.sqrt(5.0)
    assert np.allclose(got[1], [-a, -b, b, a], atol=1e-12)
    assert np.allclose(got[2], [1.0, -1.0, -1.0, 1.0], atol=1e-12)
    assert np.allclose(got[3], [-b, a, -a, b], atol=1e-12)


def test_discrete_tables_are_orthonormal():
    for v in range(2, 7):
        fam = discrete(v)
        table = fam.eval_all(fam.grid)
        gram = table @ table.T / v
        assert np.max(np.abs(gram - np.eye(v))) < 1e-12
        # sign convention: first-order function increases along the grid
        assert np.all(np.diff(table[1]) > 0)


def test_orthonormality_by_quadrature():
    x, w = unit_nodes(48)
    for fam in (legendre(4), trig(4)):
        table = fam.eval_all(x)
        gram = (table * w) @ table.T
        assert np.max(np.abs(gram - np.eye(5))) < 1e-12


def test_nonconstant_functions_have_zero_mean():
    x, w = unit_nodes(64)
    for fam in (legendre(6), trig(6)):
        for j in range(1, 7):
            assert abs(np.sum(w * fam.eval(j, x))) < 1e-13


def test_inner_product():
    fam = legendre(5)
    assert fam.inner_product(3, 3) == pytest.approx(1.0, abs=1e-12)
    assert fam.inner_product(2, 3) == pytest.approx(0.0, abs=1e-12)
    assert fam.inner_product(0, 5) == pytest.approx(0.0, abs=1e-12)
    t = trig(4)
    assert t.inner_product(2, 2) == pytest.approx(1.0, abs=1e-12)
    assert t.inner_product(1, 2) == pytest.approx(0.0, abs=1e-12)
    d = discrete(3)
    assert d.inner_product(1, 2) == pytest.approx(0.0, abs=1e-14)
    assert d.inner_product(2, 2) == pytest.approx(1.0, abs=1e-14)


def test_moment_integrals_polynomial():
    fam = legendre(2)
    assert fam.integrate_moment(0, 0) == pytest.approx(1.0)
    assert fam.integrate_moment(0, 1) == pytest.approx(0.5)
    assert fam.integrate_moment(0, 2) == pytest.approx(1.0 / 3.0)
    assert fam.integrate_moment(1, 1) == pytest.approx(SQ3 / 6.0)
    assert fam.integrate_moment(1, 2) == pytest.approx(SQ3 / 6.0)
    assert fam.integrate_moment(2, 1) == pytest.approx(0.0, abs=1e-15)
    assert fam.integrate_moment(2, 2) == pytest.approx(math.sqrt(5.0) / 30.0)


def test_moment_integrals_trig():
    fam = trig(4)
    x, w = unit_nodes(200)
    for j in range(5):
        for p in (0, 1, 2):
            want = float(np.sum(w * x**p * trig_oracle(j, x)))
            assert fam.integrate_moment(j, p) == pytest.approx(want, abs=1e-12)


def test_moment_integrals_validation():
    with pytest.raises(ValueError):
        discrete(3).integrate_moment(1, 1)
    with pytest.raises(ValueError):
        legendre(2).integrate_moment(0, 3)


def test_eval_range_validation():
    fam = legendre(2)
    for bad in (-0.01, 1.01):
        with pytest.raises(ValueError):
            fam.eval(1, bad)
        with pytest.raises(ValueError):
            fam.eval_all(np.array([0.5, bad]))
    with pytest.raises(ValueError):
        fam.eval(3, 0.5)
    with pytest.raises(ValueError):
        fam.eval(-1, 0.5)


def test_discrete_grid_validation():
    fam = discrete(4)
    fam.eval(1, 1 / 3)
    fam.eval(1, 1 / 3 + 1e-10)  # inside snap tolerance
    with pytest.raises(ValueError):
        fam.eval(1, 0.3)
    with pytest.raises(ValueError):
        fam.eval_all(np.array([0.0, 0.5]))


def test_family_construction_validation():
    with pytest.raises(ValueError):
        discrete(1)
    with pytest.raises(ValueError):
        discrete(3, 3)  # at most v-1 orders
    with pytest.raises(ValueError):
        Family1D("legendre", 2, v=3)
    with pytest.raises(ValueError):
        Family1D("nope", 2)
    with pytest.raises(ValueError):
        legendre(-1)


def test_eval_all_matches_eval():
    rng = np.random.default_rng(104)
    x = rng.random(40)
    for fam in (legendre(6), trig(5)):
        table = fam.eval_all(x)
        assert table.shape == (fam.max_order + 1, 40)
        for j in range(fam.max_order + 1):
            assert np.array_equal(table[j], fam.eval(j, x))
    fam = discrete(3)
    xg = fam.grid[np.array([0, 2, 1, 1])]
    assert np.allclose(fam.eval_all(xg)[2], fam.eval(2, xg))


def test_gauss_nodes():
    x, w = gauss_nodes(4)
    assert np.all((0 < x) & (x < 1))
    assert np.sum(w) == pytest.approx(1.0, abs=1e-14)
    # degree-7 polynomials integrate exactly with 4 nodes
    assert np.sum(w * x**7) == pytest.approx(1.0 / 8.0, abs=1e-14)
    assert gauss_nodes(4) is gauss_nodes(4)  # cached
