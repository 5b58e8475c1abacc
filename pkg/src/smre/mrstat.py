"""Additive multiresolution statistics.

A statistic family assigns to a coefficient magnitude ``s`` and an atom
norm ``r`` the calibrated value ``t(s, r) = s - f(r)``; the statistic of a
signal is the maximum of ``t(|inner(v, phi_n*)|, ||phi_n||)`` over the
dictionary.  Three envelope choices are supported:

* ``penalized_logN``: ``f = sqrt(2 log N)`` with ``N`` the dictionary size
  (extreme-value calibration for orthonormal systems),
* ``scale_calibrated``: ``f = sqrt(-2 gamma log r)`` (scale-adaptive
  calibration for cube systems; ``gamma = d`` for dyadic cubes),
* ``threshold``: ``f = 0``, the plain scan maximum used for short-interval
  residual scans.  This one sits at the boundary of the admissible class
  (its lower envelope is 0, not strictly negative), which
  :func:`check_mr_axioms` reports.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MrFamily",
    "StatValue",
    "eval_t",
    "eval_T",
    "lambda_inf",
    "check_mr_axioms",
]


@dataclass(frozen=True)
class MrFamily:
    kind: str
    gamma: float = None
    lipschitz: float = 1.0

    def __post_init__(self):
        if self.kind not in ("penalized_logN", "scale_calibrated", "threshold"):
            raise ValueError(f"unknown statistic kind {self.kind!r}")
        if self.kind == "scale_calibrated":
            if self.gamma is None or not self.gamma > 0:
                raise ValueError("scale_calibrated requires gamma > 0")

    def envelope(self, N, r):
        """Penalty ``f(r)`` subtracted from coefficient magnitudes."""
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0) or np.any(r > 1 + 1e-12):
            raise ValueError("atom norms must lie in (0, 1]")
        if self.kind == "penalized_logN":
            if N < 2:
                raise ValueError("penalized_logN needs N >= 2")
            return np.broadcast_to(np.sqrt(2.0 * np.log(N)), r.shape).copy()
        if self.kind == "scale_calibrated":
            return np.sqrt(-2.0 * self.gamma * np.log(np.minimum(r, 1.0)))
        return np.zeros_like(r)


@dataclass(frozen=True)
class StatValue:
    value: float
    argmax_atom: int
    per_atom_margins: np.ndarray = field(default=None, repr=False)


def eval_t(family, N, s, r):
    """Single calibrated value ``t(s, r) = s - f(r)``."""
    if s < 0:
        raise ValueError("coefficient magnitude s must be nonnegative")
    return float(s - family.envelope(N, np.asarray([r]))[0])


def eval_T(dico, family, v, margins=False, one_sided=False):
    """Statistic maximum over the dictionary, lowest-index tie break.

    With `one_sided` the signed coefficients enter instead of their
    absolute values (the convention under which short-interval scan
    quantiles are calibrated).
    """
    coeffs = dico.project_all(v)
    s = coeffs if one_sided else np.abs(coeffs)
    terms = s - family.envelope(len(dico), dico.norms)
    idx = int(np.argmax(terms))
    return StatValue(
        value=float(terms[idx]),
        argmax_atom=idx,
        per_atom_margins=terms if margins else None,
    )


def eval_T_batch(dico, family, values, one_sided=False):
    """Statistic maxima for a batch of flat value rows, shape (B,).

    Exploits that the envelope is constant on equal-norm atom groups, so
    only per-group coefficient maxima are materialised.
    """
    gmax = dico.coeff_group_max(values, one_sided=one_sided)
    f = family.envelope(len(dico), dico.group_norms)
    return (gmax - f[None, :]).max(axis=1)


def lambda_inf(dico, family):
    """``inf_n lambda(||phi_n||) = -max_n f(||phi_n||)`` over the dictionary."""
    return -float(family.envelope(len(dico), dico.norms).max())


def check_mr_axioms(family, N, s_samples, r_samples, sigma0=0.5,
                    lipschitz=1.0, tol=1e-10):
    """Numerically verify the admissibility axioms on a sample grid.

    Checks, for each ``r`` in `r_samples` over the sorted `s_samples`:
    monotonicity and midpoint convexity in ``s``; the Lipschitz bound;
    finiteness and strict negativity of the lower envelope
    ``inf_s t(s, r)``; and the noise-domination inequality
    ``t(s, r) >= c1 s + c2 t(sigma s, r)`` with ``c1 = 1 - sigma0``,
    ``c2 = 1`` for ``sigma`` sampled in ``(0, sigma0)``.

    `family` may be an :class:`MrFamily` or any callable ``t(s, r)``.
    Returns a dict with one boolean per axiom plus worst-case margins.
    """
    if isinstance(family, MrFamily):
        def t(s, r):
            return s - float(family.envelope(N, np.asarray([r]))[0])
    else:
        t = family

    s = np.sort(np.asarray(s_samples, dtype=float))
    rs = np.asarray(r_samples, dtype=float)
    c1 = 1.0 - sigma0
    report = {
        "monotone": True,
        "convex": True,
        "lipschitz": True,
        "lower_bounded": True,
        "lower_envelope_negative": True,
        "noise_inequality": True,
        "worst": {},
    }
    worst_mono = worst_conv = worst_lip = worst_ineq = -np.inf
    env_max = -np.inf
    for r in rs:
        vals = np.array([t(si, r) for si in s])
        if not np.all(np.isfinite(vals)):
            report["lower_bounded"] = False
            continue
        if s.size >= 2:
            ds = np.diff(s)
            dv = np.diff(vals)
            worst_mono = max(worst_mono, float((-dv).max()))
            worst_lip = max(worst_lip, float((np.abs(dv) - lipschitz * ds).max()))
        for i in range(s.size - 2):
            mid = t(0.5 * (s[i] + s[i + 2]), r)
            worst_conv = max(worst_conv, mid - 0.5 * (vals[i] + vals[i + 2]))
        env = t(0.0, r)  # monotone families attain the envelope at s = 0
        env_max = max(env_max, env)
        for sigma in (0.25 * sigma0, 0.5 * sigma0, 0.9 * sigma0):
            lhs = vals
            rhs = c1 * s + np.array([t(sigma * si, r) for si in s])
            worst_ineq = max(worst_ineq, float((rhs - lhs).max()))
    report["monotone"] = worst_mono <= tol
    report["convex"] = worst_conv <= tol
    report["lipschitz"] = worst_lip <= tol
    report["lower_envelope_negative"] = env_max < 0.0
    report["noise_inequality"] = worst_ineq <= tol
    report["worst"] = {
        "monotone": worst_mono,
        "convex": worst_conv,
        "lipschitz": worst_lip,
        "envelope": env_max,
        "noise_inequality": worst_ineq,
    }
    report["all_pass"] = all(
        report[k]
        for k in (
            "monotone",
            "convex",
            "lipschitz",
            "lower_bounded",
            "lower_envelope_negative",
            "noise_inequality",
        )
    )
    return report
