"""Parameter schedules and approximation machinery.

Links the decay of a source element's dual coefficients to the model-size
and test-level sequences that drive the convergence-rate experiments:
the orthonormal schedule scans for the smallest model size whose
approximation error is dominated by the noise-calibrated envelope, and
the dyadic schedule does the same over partition depths with the modulus
of continuity controlling the piecewise-constant approximation error.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter1d

from smre.grid import Signal, norm

__all__ = [
    "SourceElement",
    "Schedule",
    "err_n",
    "bernstein_stechkin_check",
    "schedule_orthonormal",
    "modulus_of_continuity",
    "pw_const_approx",
    "schedule_dyadic",
]


@dataclass(frozen=True, eq=False)
class SourceElement:
    """Dual-coefficient representation of a source element.

    ``coeffs[n-1]`` is the coefficient against the n-th orthonormal atom.
    When `beta` and `Q` are given, membership in the coefficient ellipsoid
    ``sum n^(2 beta) theta_n^2 <= Q^2`` is verified on the stored
    truncation.
    """

    coeffs: np.ndarray = field(repr=False)
    beta: float = None
    Q: float = None

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must form a nonempty vector")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)
        if self.beta is not None:
            if self.Q is None:
                raise ValueError("ellipsoid membership needs both beta and Q")
            n = np.arange(1, c.size + 1, dtype=float)
            mass = float(np.sum(n ** (2.0 * self.beta) * c ** 2))
            if mass > self.Q ** 2 * (1.0 + 1e-12):
                raise ValueError(
                    f"coefficients violate the ({self.beta}, {self.Q}) ellipsoid: "
                    f"weighted mass {mass:.6g} > Q^2 = {self.Q ** 2:.6g}"
                )


def _tail_norms(source):
    """``err_N`` for N = 0..len: root tail sums of squared coefficients."""
    c2 = source.coeffs ** 2
    tails = np.concatenate([np.cumsum(c2[::-1])[::-1], [0.0]])
    return np.sqrt(np.maximum(tails, 0.0))


def err_n(source, N):
    """Approximation error of the best N-term truncation (tail norm)."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    tails = _tail_norms(source)
    return float(tails[min(N, len(source.coeffs))])


def bernstein_stechkin_check(source, n_max=None):
    """Advisory summability heuristic for the dual coefficients.

    True when an ellipsoid exponent ``beta > 1/2`` is certified, when the
    coefficients are finitely supported, or when the partial sums of
    ``err_N / sqrt(N)`` have flattened (trailing increment below 1% of the
    total) by `n_max`.
    """
    if source.beta is not None and source.beta > 0.5:
        return True
    c = source.coeffs
    support = np.nonzero(c)[0]
    if support.size == 0 or support[-1] + 1 < c.size:
        return True
    m = len(c) if n_max is None else min(n_max, len(c))
    tails = _tail_norms(source)
    terms = tails[1:m + 1] / np.sqrt(np.arange(1, m + 1))
    total = float(terms.sum())
    trailing = float(terms[m // 2:].sum())
    return trailing <= 0.01 * max(total, 1e-300)


@dataclass(frozen=True)
class ScheduleRow:
    k: int
    sigma: float
    N: int
    eta: float
    alpha: float
    zeta: float
    depth: int = None  # partition depth for dyadic schedules


@dataclass(frozen=True, eq=False)
class Schedule:
    kind: str
    rows: tuple
    alphas_summable: bool

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "sigma", "N", "eta", "alpha", "zeta"])
            for r in self.rows:
                w.writerow([r.k, repr(r.sigma), r.N, repr(r.eta),
                            repr(r.alpha), repr(r.zeta)])


def _check_sigmas(sigmas):
    s = np.asarray(sigmas, dtype=float)
    if s.size == 0 or np.any(s <= 0):
        raise ValueError("noise levels must be positive")
    if np.any(np.diff(s) >= 0):
        raise ValueError("noise levels must be strictly decreasing")
    return s


def _ratio_summable(alphas):
    """Advisory ratio test on the computed test levels."""
    a = np.asarray(alphas)
    if a.size < 2:
        return True
    ratios = a[1:] / np.maximum(a[:-1], 1e-300)
    return bool(ratios[len(ratios) // 2:].max() < 1.0 - 1e-9)


def schedule_orthonormal(source, sigmas, kappa, n_cap=10 ** 6):
    """Model sizes, rates and test levels for orthonormal systems.

    Per noise level: the smallest ``N >= 2`` with
    ``err_N <= sigma * sqrt(2 log N)``; the rate ``eta = sigma *
    sqrt(2 log N)``; the test level ``alpha = exp(-(kappa eta / sigma)^2)
    = N^(-2 kappa^2)``; and ``zeta = sigma * max(sqrt(2 log N),
    sqrt(-log alpha))``.
    """
    s = _check_sigmas(sigmas)
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    tails = _tail_norms(source)
    size = len(source.coeffs)
    rows = []
    for k, sigma in enumerate(s):
        found = None
        N = 2
        while N <= n_cap:
            e = tails[min(N, size)]
            if e <= sigma * np.sqrt(2.0 * np.log(N)):
                found = N
                break
            N += 1
        if found is None:
            raise RuntimeError(
                f"no admissible model size below cap {n_cap} for sigma={sigma}"
            )
        eta = sigma * np.sqrt(2.0 * np.log(found))
        alpha = float(np.exp(-((kappa * eta / sigma) ** 2)))
        zeta = sigma * max(np.sqrt(2.0 * np.log(found)), np.sqrt(-np.log(max(alpha, 1e-300))))
        rows.append(ScheduleRow(k=k, sigma=float(sigma), N=found, eta=float(eta),
                                alpha=alpha, zeta=float(zeta)))
    return Schedule(kind="orthonormal", rows=tuple(rows),
                    alphas_summable=_ratio_summable([r.alpha for r in rows]))


# ---------------------------------------------------------------------------
# modulus of continuity and piecewise-constant approximation

def modulus_of_continuity(g, delta):
    """Exact largest variation of `g` over grid-point pairs within `delta`.

    1-D uses a sliding max filter; 2-D scans all cell offsets whose
    physical distance does not exceed `delta`.  Pair inclusion errs on the
    generous side (a relative 1e-12 slack on the distance test), which
    keeps downstream approximation certificates valid.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    grid = g.grid
    if grid.ndim == 1:
        n = grid.ncells
        W = int(np.floor(delta * n * (1.0 + 1e-12)))
        if W <= 0:
            return 0.0
        vals = g.values
        size = 2 * W + 1
        mx = maximum_filter1d(vals, size=size, mode="nearest")
        return float((mx - vals).max())
    n1, n2 = grid.dims
    a = g.as_grid()
    # whole-domain shortcut
    diam2 = ((n1 - 1) / n1) ** 2 + ((n2 - 1) / n2) ** 2
    if delta ** 2 * (1.0 + 1e-12) >= diam2:
        return float(a.max() - a.min())
    W1 = int(np.floor(delta * n1 * (1.0 + 1e-12)))
    W2 = int(np.floor(delta * n2 * (1.0 + 1e-12)))
    best = 0.0
    lim2 = delta ** 2 * (1.0 + 1e-12)
    for di in range(0, W1 + 1):
        rem = lim2 - (di / n1) ** 2
        if rem < 0:
            break
        djmax = min(W2, int(np.floor(np.sqrt(rem) * n2 * (1.0 + 1e-12))))
        lo = 0 if di == 0 else -djmax
        for dj in range(lo, djmax + 1):
            if di == 0 and dj == 0:
                continue
            if (di / n1) ** 2 + (dj / n2) ** 2 > lim2:
                continue
            s1 = a[di:, :] if di else a
            s0 = a[: n1 - di, :] if di else a
            if dj > 0:
                diff = s1[:, dj:] - s0[:, : n2 - dj]
            elif dj < 0:
                diff = s1[:, : n2 + dj] - s0[:, -dj:]
            else:
                diff = s1 - s0
            if diff.size:
                m = float(np.abs(diff).max())
                if m > best:
                    best = m
    return best


@dataclass(frozen=True, eq=False)
class PwConstApprox:
    level_coeffs: tuple  # per level, flat arrays of weighted cell averages
    weights: np.ndarray
    approx: Signal = field(repr=False)
    error: float = 0.0
    bound: float = np.inf
    coeff_l1: float = 0.0
    degenerate: bool = False


def _level_block_means(values, dims, level):
    k = 2 ** level
    if len(dims) == 1:
        b = dims[0] // k
        return values.reshape(k, b).mean(axis=1)
    n1, n2 = dims
    b1, b2 = n1 // k, n2 // k
    return values.reshape(k, b1, k, b2).mean(axis=(1, 3)).ravel()


def _expand_block_means(means, dims, level):
    k = 2 ** level
    if len(dims) == 1:
        return np.repeat(means, dims[0] // k)
    n1, n2 = dims
    b1, b2 = n1 // k, n2 // k
    a = means.reshape(k, k)
    return np.repeat(np.repeat(a, b1, axis=0), b2, axis=1).ravel()


def pw_const_approx(g, max_level):
    """Multi-depth piecewise-constant approximation with certificate.

    Builds the convex combination of per-depth cell-average projections
    with weights proportional to the inverse squared moduli of continuity
    at the cube diameters.  Returns the weighted coefficients, the
    combined approximant, its achieved squared error, and the certified
    bound ``(max_level + 1) / sum_l omega^{-2}(delta_l)``; the achieved
    error never exceeds the bound, and the measure-weighted coefficient
    sum never exceeds ``max |g|`` (both re-checked at runtime).
    """
    grid = g.grid
    d = grid.ndim
    for dim in grid.dims:
        if dim % (2 ** max_level) != 0:
            raise ValueError(f"grid dims {grid.dims} not divisible by 2**{max_level}")
    levels = np.arange(max_level + 1)
    deltas = (2.0 ** -levels.astype(float)) * np.sqrt(d)
    omegas = np.array([modulus_of_continuity(g, dl) for dl in deltas])

    if np.any(omegas == 0.0):
        # zero modulus at a usable depth forces g constant: represent it
        # exactly at depth 0
        c = float(g.values.mean())
        approx = Signal(grid, np.full(grid.ncells, c))
        err = norm(Signal(grid, g.values - approx.values))
        return PwConstApprox(
            level_coeffs=(np.array([c]),) + tuple(np.zeros(2 ** (d * l)) for l in levels[1:]),
            weights=np.concatenate([[1.0], np.zeros(max_level)]),
            approx=approx,
            error=float(err),
            bound=np.inf,
            coeff_l1=abs(c),
            degenerate=True,
        )

    inv2 = omegas ** -2.0
    weights = inv2 / inv2.sum()
    bound = (max_level + 1) / inv2.sum()
    acc = np.zeros(grid.ncells)
    level_coeffs = []
    l1 = 0.0
    for level in levels:
        means = _level_block_means(g.values, grid.dims, level)
        coeffs = weights[level] * means
        level_coeffs.append(coeffs)
        acc += _expand_block_means(coeffs, grid.dims, level)
        l1 += float(np.abs(coeffs).sum()) * 2.0 ** (-d * level)
    approx = Signal(grid, acc)
    err = norm(Signal(grid, g.values - acc))
    max_abs = float(np.abs(g.values).max())
    if err ** 2 > bound + 1e-12:
        raise RuntimeError("approximation certificate violated (squared error above bound)")
    if l1 > max_abs + 1e-12:
        raise RuntimeError("coefficient mass certificate violated")
    return PwConstApprox(
        level_coeffs=tuple(level_coeffs),
        weights=weights,
        approx=approx,
        error=float(err),
        bound=float(bound),
        coeff_l1=l1,
        degenerate=False,
    )


def schedule_dyadic(p, sigmas, kappa, m_cap=20):
    """Partition-depth schedule driven by the modulus of continuity.

    Per noise level: the smallest depth ``m`` with
    ``(m + 1) / sum_l omega^{-2}(delta_l) <= sigma^2 m d log 2`` (the
    right-hand side is ``-2 sigma^2 log eps_m`` for the per-depth scale
    ``eps_m = 2^(-m d / 2)``); then ``eta = sigma * sqrt(m d log 2)``,
    ``alpha = exp(-(kappa eta / sigma)^2)`` and ``zeta = eta *
    max(sqrt(d), kappa)``.  A constant input has zero modulus at every
    depth and is reported as degenerate (depth 0).
    """
    s = _check_sigmas(sigmas)
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    d = p.grid.ndim
    deltas = (2.0 ** -np.arange(m_cap + 1, dtype=float)) * np.sqrt(d)
    omegas = np.array([modulus_of_continuity(p, dl) for dl in deltas])
    if omegas[0] == 0.0:
        rows = tuple(
            ScheduleRow(k=k, sigma=float(sig), N=1, eta=0.0, alpha=1.0,
                        zeta=0.0, depth=0)
            for k, sig in enumerate(s)
        )
        return Schedule(kind="dyadic-degenerate", rows=rows, alphas_summable=False)
    inv2 = np.where(omegas > 0, omegas ** -2.0, np.inf)
    cum = np.cumsum(inv2)
    rows = []
    for k, sigma in enumerate(s):
        found = None
        for m in range(m_cap + 1):
            lhs = (m + 1) / cum[m]
            rhs = sigma ** 2 * m * d * np.log(2.0)
            if lhs <= rhs:
                found = m
                break
        if found is None:
            raise RuntimeError(f"no admissible depth below cap {m_cap} for sigma={sigma}")
        eta = sigma * np.sqrt(found * d * np.log(2.0))
        alpha = float(np.exp(-((kappa * eta / sigma) ** 2)))
        zeta = float(eta * max(np.sqrt(d), kappa))
        N = (2 ** (d * (found + 1)) - 1) // (2 ** d - 1)
        rows.append(ScheduleRow(k=k, sigma=float(sigma), N=int(N), eta=float(eta),
                                alpha=alpha, zeta=zeta, depth=found))
    return Schedule(kind="dyadic", rows=tuple(rows),
                    alphas_summable=_ratio_summable([r.alpha for r in rows]))
