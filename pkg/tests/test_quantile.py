import numpy as np
import pytest
from scipy import stats as spstats

from smre.dictionary import Dictionary, build_dyadic, build_intervals, build_trigonometric
from smre.grid import Grid
from smre.mrstat import MrFamily
from smre.quantile import (
    QuantileTable,
    borel_bound,
    orthonormal_max_quantile,
    quantile,
    quantile_se,
    simulate,
)


def single_atom_dict(n=64):
    g = Grid((n,))
    row = np.ones((1, n))  # constant, unit grid norm
    return g, Dictionary(kind="custom", grid=g, norms=np.array([1.0]),
                         dense_duals=row, group_of=np.zeros(1, dtype=np.int64),
                         group_norms=np.array([1.0]))


def test_single_atom_half_normal():
    g, d = single_atom_dict()
    fam = MrFamily("threshold")
    table = simulate(d, fam, g, draws=20000, seed=4)
    q = quantile(table, 0.05)
    assert q == pytest.approx(spstats.norm.ppf(0.975), abs=0.05)


def test_simulate_reproducible():
    g = Grid((128,))
    d = build_intervals(g, 6)
    fam = MrFamily("threshold")
    t1 = simulate(d, fam, g, draws=200, seed=9)
    t2 = simulate(d, fam, g, draws=200, seed=9)
    assert np.array_equal(t1.samples, t2.samples)
    t3 = simulate(d, fam, g, draws=200, seed=10)
    assert not np.array_equal(t1.samples, t3.samples)
    # batch size must not matter
    t4 = simulate(d, fam, g, draws=200, seed=9, batch=7)
    assert np.array_equal(t1.samples, t4.samples)
    with pytest.raises(ValueError):
        simulate(d, fam, g, draws=50, seed=1)


def test_quantile_inf_convention():
    table = QuantileTable(samples=np.array([1.0, 2.0, 3.0, 4.0]))
    assert quantile(table, 0.5) == 2.0
    assert quantile(table, 0.25) == 3.0
    assert quantile(table, 1e-9) == 4.0
    with pytest.raises(ValueError):
        quantile(table, 0.0)
    with pytest.raises(ValueError):
        quantile(table, 1.0)


def test_quantile_monotone_in_alpha():
    rng = np.random.default_rng(0)
    table = QuantileTable(samples=rng.standard_normal(500))
    alphas = [0.01, 0.05, 0.1, 0.3, 0.5, 0.9]
    qs = [quantile(table, a) for a in alphas]
    assert all(q1 >= q2 for q1, q2 in zip(qs, qs[1:]))


def test_borel_bound_algebra():
    assert borel_bound(0.0, 1.0, 1.0 / (2.0 * np.e ** 2)) == pytest.approx(2.0, abs=1e-12)
    assert borel_bound(1.7, 1.0, 0.5 - 1e-12) == pytest.approx(1.7, abs=1e-5)
    with pytest.raises(ValueError):
        borel_bound(0.0, 1.0, 0.5)


def test_borel_dominates_empirical_quantiles():
    g = Grid((128,))
    d = build_intervals(g, 8)
    fam = MrFamily("threshold")
    table = simulate(d, fam, g, draws=2000, seed=21)
    med = table.median
    for alpha in (0.01, 0.05):
        q = quantile(table, alpha)
        bound = borel_bound(med, 1.0, alpha)
        assert q <= bound + 3.0 * quantile_se(table, alpha)


def test_orthonormal_closed_form_matches_simulation():
    g = Grid((256,))
    d = build_trigonometric(g, 8)
    fam = MrFamily("penalized_logN")
    table = simulate(d, fam, g, draws=20000, seed=3)
    for alpha in (0.1, 0.5):
        exact = orthonormal_max_quantile(8, alpha, shift=np.sqrt(2 * np.log(8)))
        assert quantile(table, alpha) == pytest.approx(exact, abs=0.05)


def test_dyadic_medians_non_exploding():
    # boundedness proxy: scale-calibrated cube statistic medians grow by
    # less than 0.5 from depth 3 to depth 8 on a 2-D grid
    g = Grid((256, 256))
    fam = MrFamily("scale_calibrated", gamma=2.0)
    meds = {}
    for m in (3, 8):
        d = build_dyadic(g, m)
        table = simulate(d, fam, g, draws=400, seed=2)
        meds[m] = table.median
    assert meds[8] - meds[3] < 0.5


def test_table_csv(tmp_path):
    table = QuantileTable(samples=np.array([0.5, 1.5, 2.5]))
    path = str(tmp_path / "t.csv")
    table.to_csv(path)
    rows = open(path).read().strip().splitlines()
    assert rows[0] == "replicate,statistic"
    assert len(rows) == 4
