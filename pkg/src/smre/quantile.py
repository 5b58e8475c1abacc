"""Monte-Carlo calibration of statistic thresholds.

The threshold of the estimation problem is the ``(1 - alpha)``-quantile of
the statistic under pure white noise, estimated from replicated draws.
Empirical quantiles follow the inf-definition
``q(alpha) = inf{q : P(T <= q) >= 1 - alpha}``, i.e. the smallest sample
value whose empirical cdf reaches ``1 - alpha``.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from smre.grid import NoiseModel, _replicate_rng
from smre.mrstat import eval_T_batch

__all__ = [
    "QuantileTable",
    "simulate",
    "quantile",
    "quantile_se",
    "borel_bound",
    "orthonormal_max_quantile",
]


@dataclass(frozen=True, eq=False)
class QuantileTable:
    samples: np.ndarray = field(repr=False)  # sorted ascending
    draws: int = 0
    seed: int = 0
    fingerprint: str = ""
    one_sided: bool = False

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float))
        if s.size < 2:
            raise ValueError("need at least two draws")
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "draws", int(s.size))

    @property
    def median(self):
        return float(np.median(self.samples))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replicate", "statistic"])
            for i, v in enumerate(self.samples):
                w.writerow([i, repr(float(v))])


def simulate(dico, family, grid, draws, seed, one_sided=False, batch=256):
    """Replicated draws of the statistic under unit-level white noise.

    Replicate ``r`` uses its own counter-based stream keyed by
    ``(seed, r)``, so the table is reproducible and independent of batch
    size or evaluation order.  `one_sided` calibrates the signed scan
    maximum instead of the two-sided one.
    """
    if draws < 100:
        raise ValueError("need at least 100 draws")
    if grid != dico.grid:
        raise ValueError("grid does not match dictionary")
    model = NoiseModel(sigma=1.0, seed=seed)
    scale = 1.0 / np.sqrt(grid.h)
    out = np.empty(draws)
    done = 0
    while done < draws:
        b = min(batch, draws - done)
        rows = np.empty((b, grid.ncells))
        for i in range(b):
            rng = _replicate_rng(model.seed, done + i)
            rows[i] = scale * rng.standard_normal(grid.ncells)
        out[done:done + b] = eval_T_batch(dico, family, rows, one_sided=one_sided)
        done += b
    fp = f"{dico.kind}/{len(dico)}:{family.kind}"
    return QuantileTable(samples=out, seed=seed, fingerprint=fp,
                         one_sided=one_sided)


def quantile(table, alpha):
    """Empirical ``(1 - alpha)``-quantile (inf convention)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    m = table.draws
    k = int(np.ceil((1.0 - alpha) * m))
    k = min(max(k, 1), m)
    return float(table.samples[k - 1])


def quantile_se(table, alpha):
    """Order-statistic (binomial) standard error of the sample quantile.

    Half the spread between the order statistics one binomial standard
    deviation ``sqrt(m alpha (1 - alpha))`` to either side of the quantile
    rank.
    """
    m = table.draws
    k = int(np.ceil((1.0 - alpha) * m))
    half = max(1, int(np.ceil(np.sqrt(m * alpha * (1.0 - alpha)))))
    lo = max(0, k - 1 - half)
    hi = min(m - 1, k - 1 + half)
    return 0.5 * float(table.samples[hi] - table.samples[lo])


def borel_bound(median, lipschitz, alpha):
    """Gaussian-concentration bound ``med + L * sqrt(-2 log(2 alpha))``.

    Valid upper bound on the ``(1 - alpha)``-quantile of any statistic
    expressible as an L-Lipschitz function of a standard Gaussian vector;
    requires ``alpha < 1/2``.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    return float(median + lipschitz * np.sqrt(-2.0 * np.log(2.0 * alpha)))


def orthonormal_max_quantile(N, alpha, shift=0.0):
    """Exact ``(1 - alpha)``-quantile of ``max_n |z_n| - shift``.

    For orthonormal dictionaries the dual coefficients of white noise are
    N i.i.d. standard normals, so the statistic's distribution is known in
    closed form: ``P(max |z| <= x) = (2 Phi(x) - 1)^N``.  Used as a fast
    path for calibrated-coefficient statistics and as an independent check
    on the simulated tables.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    p = (1.0 - alpha) ** (1.0 / N)
    return float(ndtri(0.5 * (1.0 + p)) - shift)
