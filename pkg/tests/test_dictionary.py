import numpy as np
import pytest

from smre.dictionary import (
    Dictionary,
    build_dyadic,
    build_intervals,
    build_trigonometric,
    project_coeff,
)
from smre.grid import Grid, Signal, inner


def brute_intervals(n, max_len):
    out = []
    for length in range(1, max_len + 1):
        for start in range(n - length + 1):
            out.append((start, length))
    return out


def test_interval_count_matches_short_scan_system():
    g = Grid((1024,))
    d = build_intervals(g, 20)
    assert len(d) == 20290


def test_interval_singletons():
    g = Grid((3,))
    d = build_intervals(g, 1)
    assert len(d) == 3
    assert np.allclose(d.norms, np.sqrt(1.0 / 3.0))


def test_interval_enumeration_oracle():
    g = Grid((5,))
    d = build_intervals(g, 2)
    ref = brute_intervals(5, 2)
    assert len(d) == 9
    assert len(ref) == 9
    r0, c0, nr, nc = d.blocks
    got = sorted(zip(c0.tolist(), nc.tolist()))
    assert got == sorted(ref)


def test_interval_ordering_by_length_then_start():
    d = build_intervals(Grid((6,)), 3)
    _, c0, _, nc = d.blocks
    order = list(zip(nc.tolist(), c0.tolist()))
    assert order == sorted(order)


def test_dyadic_counts_closed_form():
    d2 = build_dyadic(Grid((4, 4)), 1)
    assert len(d2) == 5  # (2^(2*2) - 1) / 3
    d1 = build_dyadic(Grid((8,)), 2)
    assert len(d1) == 7  # 1 + 2 + 4
    d = build_dyadic(Grid((16, 16)), 3)
    counts = d.meta["cumulative_counts"]
    for level in range(4):
        expected = (2 ** (2 * (level + 1)) - 1) // 3
        assert counts[level] == expected
        assert int(np.sum(d.group_of <= level)) == expected


def test_dyadic_norms_and_divisibility():
    d = build_dyadic(Grid((8, 8)), 2)
    for level in range(3):
        sub = d.norms[d.group_of == level]
        assert np.allclose(sub, 2.0 ** (-level))  # 2^(-l d / 2), d = 2
    with pytest.raises(ValueError):
        build_dyadic(Grid((6,)), 2)


def test_dyadic_ordering_row_major():
    d = build_dyadic(Grid((4, 4)), 1)
    r0, c0, _, _ = d.blocks
    assert list(zip(r0.tolist(), c0.tolist()))[1:] == [(0, 0), (0, 2), (2, 0), (2, 2)]


def test_trigonometric_orthonormality():
    g = Grid((1024,))
    d = build_trigonometric(g, 32)
    for i in range(32):
        di = d.dual(i)
        assert inner(di, di) == pytest.approx(1.0, abs=1e-12)
        for j in range(i + 1, 32):
            assert abs(inner(di, d.dual(j))) <= 1e-8
    assert np.allclose(d.dual(0).values, 1.0)


def test_trigonometric_bounds():
    with pytest.raises(ValueError):
        build_trigonometric(Grid((8,)), 9)


def test_project_coeff_orthonormal_unit():
    g = Grid((256,))
    d = build_trigonometric(g, 8)
    v = d.dual(3)
    coeffs = d.project_all(v)
    assert coeffs[3] == pytest.approx(1.0, abs=1e-10)
    assert np.abs(np.delete(coeffs, 3)).max() < 1e-10


def test_project_coeff_interval_constant_signal():
    g = Grid((50,))
    d = build_intervals(g, 5)
    c = 2.5
    v = Signal(g, np.full(50, c))
    r0, c0, nr, nc = d.blocks
    for n in [0, 10, len(d) - 1]:
        length = int(nc[n])
        assert project_coeff(d, n, v) == pytest.approx(c * np.sqrt(length / 50.0))
    z = Signal(g, np.zeros(50))
    assert project_coeff(d, 0, z) == 0.0
    with pytest.raises(IndexError):
        project_coeff(d, len(d), v)


def test_projections_match_direct_summation():
    rng = np.random.default_rng(7)
    g = Grid((64,))
    d = build_intervals(g, 9)
    v = Signal(g, rng.standard_normal(64))
    coeffs = d.project_all(v)
    duals = np.stack([d.dual(n).values for n in range(len(d))])
    direct = g.h * duals @ v.values
    assert np.abs(coeffs - direct).max() <= 1e-10 * max(1.0, np.abs(direct).max())

    g2 = Grid((8, 8))
    d2 = build_dyadic(g2, 2)
    v2 = Signal(g2, rng.standard_normal(64))
    coeffs2 = d2.project_all(v2)
    duals2 = np.stack([d2.dual(n).values for n in range(len(d2))])
    direct2 = g2.h * duals2 @ v2.values
    assert np.abs(coeffs2 - direct2).max() <= 1e-10 * max(1.0, np.abs(direct2).max())


def test_norms_in_unit_interval():
    for d in [
        build_intervals(Grid((32,)), 32),
        build_dyadic(Grid((16, 16)), 2),
        build_trigonometric(Grid((64,)), 16),
    ]:
        assert np.all(d.norms > 0)
        assert np.all(d.norms <= 1 + 1e-12)


def test_group_max_matches_full_projection():
    rng = np.random.default_rng(5)
    g = Grid((48,))
    d = build_intervals(g, 6)
    rows = rng.standard_normal((3, 48))
    gmax = d.coeff_group_max(rows)
    for b in range(3):
        coeffs = d.project_all(Signal(g, rows[b]))
        for gi in range(gmax.shape[1]):
            ref = np.abs(coeffs[d.group_of == gi]).max()
            assert gmax[b, gi] == pytest.approx(ref, rel=1e-12)
    smax = d.coeff_group_max(rows, one_sided=True)
    for b in range(3):
        coeffs = d.project_all(Signal(g, rows[b]))
        for gi in range(smax.shape[1]):
            ref = coeffs[d.group_of == gi].max()
            assert smax[b, gi] == pytest.approx(ref, rel=1e-12)


def test_empty_dictionary_rejected():
    with pytest.raises(ValueError):
        Dictionary(kind="custom", grid=Grid((4,)), norms=np.array([]))
