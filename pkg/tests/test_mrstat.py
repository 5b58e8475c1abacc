import mpmath
import numpy as np
import pytest

from smre.dictionary import Dictionary, build_dyadic, build_intervals, build_trigonometric
from smre.grid import Grid, Signal
from smre.mrstat import MrFamily, check_mr_axioms, eval_T, eval_t, lambda_inf


def test_eval_t_penalized_closed_form():
    fam = MrFamily("penalized_logN")
    # verified against arbitrary-precision evaluation
    expected = float(-mpmath.sqrt(2 * mpmath.log(2)))
    assert eval_t(fam, 2, 0.0, 0.5) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(-1.1774100226, abs=1e-9)
    with pytest.raises(ValueError):
        eval_t(fam, 1, 0.0, 0.5)


def test_eval_t_scale_calibrated():
    fam = MrFamily("scale_calibrated", gamma=2.0)
    s = 1.3
    assert eval_t(fam, 10, s, 0.5) == pytest.approx(s - np.sqrt(4.0 * np.log(2.0)))
    # r = 1 marks the envelope boundary: no penalty
    assert eval_t(fam, 10, s, 1.0) == pytest.approx(s)
    with pytest.raises(ValueError):
        eval_t(fam, 10, s, 0.0)
    with pytest.raises(ValueError):
        eval_t(fam, 10, -0.1, 0.5)


def test_eval_t_envelope_crossing():
    fam = MrFamily("penalized_logN")
    f = np.sqrt(2 * np.log(17))
    assert eval_t(fam, 17, f, 0.3) == pytest.approx(0.0, abs=1e-14)


def test_eval_T_zero_signal():
    g = Grid((64,))
    d = build_trigonometric(g, 8)
    fam = MrFamily("penalized_logN")
    sv = eval_T(d, fam, Signal(g, np.zeros(64)))
    assert sv.value == pytest.approx(-np.sqrt(2 * np.log(8)))
    assert sv.argmax_atom == 0  # tie broken at lowest index


def test_eval_T_single_atom_bump():
    g = Grid((64,))
    d = build_trigonometric(g, 8)
    fam = MrFamily("penalized_logN")
    c = 3.7
    k = 5
    v = Signal(g, c * d.dual(k).values)
    sv = eval_T(d, fam, v)
    # direct enumeration oracle
    terms = [eval_t(fam, 8, abs(g.h * np.dot(d.dual(n).values, v.values)), 1.0) for n in range(8)]
    assert sv.value == pytest.approx(max(terms), abs=1e-12)
    assert sv.argmax_atom == k


def test_eval_T_interval_scan_brute_force():
    # the short-interval residual scan: h^(-1/2)-scaled values make the
    # dual coefficients equal the plain normalized window sums
    rng = np.random.default_rng(2)
    n = 256
    g = Grid((n,))
    d = build_intervals(g, 12)
    fam = MrFamily("threshold")
    for _ in range(10):
        w = rng.standard_normal(n)
        sig = Signal(g, w / np.sqrt(g.h))
        got = eval_T(d, fam, sig).value
        brute = -np.inf
        for i in range(n):
            acc = 0.0
            for j in range(i, min(n, i + 12)):
                acc += w[j]
                brute = max(brute, abs(acc) / np.sqrt(j - i + 1))
        assert got == pytest.approx(brute, abs=1e-10)
        got_signed = eval_T(d, fam, sig, one_sided=True).value
        brute_s = -np.inf
        for i in range(n):
            acc = 0.0
            for j in range(i, min(n, i + 12)):
                acc += w[j]
                brute_s = max(brute_s, acc / np.sqrt(j - i + 1))
        assert got_signed == pytest.approx(brute_s, abs=1e-10)


def test_eval_T_random_dense_dictionary_vs_brute():
    rng = np.random.default_rng(3)
    g = Grid((128,))
    natoms = 1000
    rows = rng.standard_normal((natoms, 128))
    rows /= np.sqrt(g.h) * np.linalg.norm(rows, axis=1, keepdims=True)
    norms = rng.uniform(0.2, 1.0, natoms)
    d = Dictionary(kind="custom", grid=g, norms=norms, dense_duals=rows,
                   group_of=np.arange(natoms), group_norms=norms)
    fam = MrFamily("scale_calibrated", gamma=1.5)
    v = Signal(g, rng.standard_normal(128))
    sv = eval_T(d, fam, v, margins=True)
    coeffs = g.h * rows @ v.values
    brute = np.abs(coeffs) - np.sqrt(-2 * 1.5 * np.log(norms))
    assert sv.value == pytest.approx(brute.max(), abs=1e-12)
    assert sv.argmax_atom == int(np.argmax(brute))
    assert np.abs(sv.per_atom_margins - brute).max() < 1e-12


def test_lambda_inf():
    g = Grid((64,))
    d = build_trigonometric(g, 16)
    fam = MrFamily("penalized_logN")
    assert lambda_inf(d, fam) == pytest.approx(-np.sqrt(2 * np.log(16)))

    g2 = Grid((16, 16))
    d2 = build_dyadic(g2, 3)
    fam2 = MrFamily("scale_calibrated", gamma=2.0)
    eps_m = 2.0 ** (-3 * 2 / 2)
    expected = -np.sqrt(-2 * 2.0 * np.log(eps_m))
    # closed form vs enumeration over atom norms
    enum = -max(np.sqrt(-2 * 2.0 * np.log(r)) for r in d2.norms)
    assert lambda_inf(d2, fam2) == pytest.approx(expected)
    assert lambda_inf(d2, fam2) == pytest.approx(enum)

    single = Dictionary(kind="custom", grid=g, norms=np.array([1.0]),
                        dense_duals=np.ones((1, 64)),
                        group_of=np.zeros(1, dtype=np.int64),
                        group_norms=np.array([1.0]))
    assert lambda_inf(single, fam2) == 0.0


def test_axioms_additive_family_passes():
    fam = MrFamily("penalized_logN")
    s = np.linspace(0.0, 5.0, 21)
    r = [0.1, 0.5, 1.0]
    rep = check_mr_axioms(fam, 50, s, r, sigma0=0.5)
    assert rep["all_pass"]

    fam2 = MrFamily("scale_calibrated", gamma=2.0)
    rep2 = check_mr_axioms(fam2, 50, s, [0.1, 0.5, 0.9], sigma0=0.5)
    assert rep2["all_pass"]


def test_axioms_threshold_family_boundary():
    # the plain scan maximum has a vanishing lower envelope: flagged
    rep = check_mr_axioms(MrFamily("threshold"), 50, np.linspace(0, 3, 7), [0.5])
    assert not rep["lower_envelope_negative"]
    assert rep["monotone"] and rep["convex"] and rep["lipschitz"]


def test_axioms_tampered_family_flagged():
    def bad(s, r):
        return -2.0 * s - 1.0  # decreasing, Lipschitz constant 2

    rep = check_mr_axioms(bad, 10, np.linspace(0, 2, 9), [0.5])
    assert not rep["monotone"]
    assert not rep["lipschitz"]


def test_axioms_degenerate_sample_grid():
    rep = check_mr_axioms(MrFamily("penalized_logN"), 10, [1.0], [0.5])
    assert rep["convex"]  # vacuous on a single point
    assert rep["lower_envelope_negative"]


def test_statistic_dominates_envelope():
    rng = np.random.default_rng(9)
    g = Grid((64,))
    d = build_intervals(g, 8)
    fam = MrFamily("penalized_logN")
    floor = lambda_inf(d, fam)
    for _ in range(20):
        v = Signal(g, rng.standard_normal(64))
        assert eval_T(d, fam, v).value >= floor - 1e-12
