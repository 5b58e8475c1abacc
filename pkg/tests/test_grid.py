import os

import numpy as np
import pytest

from smre.grid import (
    Grid,
    GridMismatchError,
    NoiseModel,
    Signal,
    draw_white_noise,
    inner,
    norm,
    signal_from_binary,
    signal_from_csv,
    signal_to_binary,
    signal_to_csv,
)


def test_grid_measure():
    g = Grid((8, 4))
    assert g.ncells == 32
    assert g.h * g.ncells == pytest.approx(1.0)
    with pytest.raises(ValueError):
        Grid((8, 4, 2))
    with pytest.raises(ValueError):
        Grid((0,))


def test_inner_constant_one():
    for dims in [(7,), (5, 3), (1024,)]:
        g = Grid(dims)
        one = Signal(g, np.ones(g.ncells))
        assert inner(one, one) == pytest.approx(1.0)
        assert norm(one) == pytest.approx(1.0)


def test_inner_disjoint_supports():
    g = Grid((10,))
    a = Signal(g, np.r_[np.ones(5), np.zeros(5)])
    b = Signal(g, np.r_[np.zeros(5), np.ones(5)])
    assert inner(a, b) == 0.0


def test_inner_indicator_direct_sum_oracle():
    rng = np.random.default_rng(0)
    g = Grid((40,))
    for _ in range(5):
        k = rng.integers(1, 40)
        cells = rng.choice(40, size=k, replace=False)
        v = np.zeros(40)
        v[cells] = 1.0
        a = Signal(g, v)
        # direct summation oracle
        expected = sum(v[i] * v[i] for i in range(40)) / 40.0
        assert inner(a, a) == pytest.approx(expected)
        assert inner(a, a) == pytest.approx(k / 40.0)
        assert norm(a) <= 1.0 + 1e-12


def test_inner_grid_mismatch():
    a = Signal(Grid((4,)), np.ones(4))
    b = Signal(Grid((5,)), np.ones(5))
    with pytest.raises(GridMismatchError):
        inner(a, b)


def test_signal_validation():
    g = Grid((4,))
    with pytest.raises(ValueError):
        Signal(g, np.ones(5))
    with pytest.raises(ValueError):
        Signal(g, np.array([1.0, np.inf, 0.0, 0.0]))


def test_white_noise_determinism():
    g = Grid((64,))
    m = NoiseModel(sigma=1.0, seed=123)
    a = draw_white_noise(g, m, replicate=7)
    b = draw_white_noise(g, m, replicate=7)
    assert np.array_equal(a.values, b.values)
    c = draw_white_noise(g, m, replicate=8)
    assert not np.array_equal(a.values, c.values)


def test_white_noise_unit_projections():
    # variance of the projection on a unit-norm signal is 1, projections on
    # orthogonal unit signals are uncorrelated (Monte-Carlo moment check)
    g = Grid((64,))
    m = NoiseModel(sigma=1.0, seed=5)
    phi = np.zeros(64)
    phi[:16] = 1.0
    phi /= np.sqrt(g.h * 16)
    psi = np.zeros(64)
    psi[16:32] = 1.0
    psi /= np.sqrt(g.h * 16)
    draws = 100_000
    xs = np.empty(draws)
    ys = np.empty(draws)
    sphi = Signal(g, phi)
    spsi = Signal(g, psi)
    for r in range(draws):
        eps = draw_white_noise(g, m, replicate=r)
        xs[r] = inner(eps, sphi)
        ys[r] = inner(eps, spsi)
    assert abs(xs.var() - 1.0) < 0.02
    assert abs(np.corrcoef(xs, ys)[0, 1]) < 0.02
    assert abs(xs.mean()) < 0.02


def test_white_noise_covariance_matches_inner():
    g = Grid((32,))
    rng = np.random.default_rng(3)
    v = Signal(g, rng.standard_normal(32))
    w = Signal(g, rng.standard_normal(32))
    m = NoiseModel(sigma=1.0, seed=11)
    draws = 40_000
    a = np.empty(draws)
    b = np.empty(draws)
    for r in range(draws):
        eps = draw_white_noise(g, m, replicate=r)
        a[r] = inner(eps, v)
        b[r] = inner(eps, w)
    cov = np.cov(a, b)[0, 1]
    assert cov == pytest.approx(inner(v, w), abs=3.0 * norm(v) * norm(w) / np.sqrt(draws))


def test_csv_roundtrip(tmp_path):
    g = Grid((9,))
    sig = Signal(g, np.linspace(-1, 1, 9))
    path = os.path.join(tmp_path, "sig.csv")
    signal_to_csv(sig, path)
    back = signal_from_csv(path)
    assert back.grid == g
    assert np.array_equal(back.values, sig.values)


def test_binary_roundtrip(tmp_path):
    for dims in [(9,), (4, 6)]:
        g = Grid(dims)
        rng = np.random.default_rng(1)
        sig = Signal(g, rng.standard_normal(g.ncells))
        path = os.path.join(tmp_path, "sig.bin")
        signal_to_binary(sig, path)
        back = signal_from_binary(path)
        assert back.grid == g
        assert np.array_equal(back.values, sig.values)
