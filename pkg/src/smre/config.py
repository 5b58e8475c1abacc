"""TOML experiment configuration and object builders.

A config file has nested sections, e.g.::

    [problem.grid]
    dims = [1024]

    [problem.dictionary]
    kind = "intervals"
    max_len = 20

    [problem.statistic]
    kind = "threshold"          # or penalized_logN / scale_calibrated

    [problem.operator]
    kind = "identity"           # or convolution / diagonal_svd

    [problem.penalty]
    kind = "sq_h1"

    [noise]
    sigma = 0.05
    sigma_per_cell = true
    seed = 2026

    [quantile]
    alpha = 0.99
    draws = 10000
    seed = 7
    one_sided = true

See the README for the full schema.
"""

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from smre.dictionary import build_dyadic, build_intervals, build_trigonometric
from smre.grid import Grid
from smre.mrstat import MrFamily
from smre.operators import ConvolutionOperator, DiagonalOperator, IdentityOperator, make_kernel
from smre.penalties import make_penalty
from smre.solver import SolverConfig

__all__ = [
    "ConfigError",
    "load_config",
    "build_grid",
    "build_dictionary",
    "build_family",
    "build_operator",
    "build_penalty",
    "build_solver_config",
    "noise_level",
]


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def load_config(path):
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}")
    if "problem" not in cfg:
        raise ConfigError("config needs a [problem] section")
    return cfg


def _section(cfg, *keys, required=True):
    node = cfg
    for k in keys:
        if k not in node:
            if required:
                raise ConfigError(f"missing config section {'.'.join(keys)}")
            return {}
        node = node[k]
    return node


def build_grid(cfg):
    sec = _section(cfg, "problem", "grid")
    dims = sec.get("dims")
    if not dims:
        raise ConfigError("problem.grid.dims is required")
    try:
        return Grid(tuple(dims))
    except ValueError as exc:
        raise ConfigError(str(exc))


def build_dictionary(cfg, grid):
    sec = _section(cfg, "problem", "dictionary")
    kind = sec.get("kind")
    try:
        if kind == "intervals":
            return build_intervals(grid, int(sec["max_len"]))
        if kind == "dyadic":
            return build_dyadic(grid, int(sec["max_level"]))
        if kind == "trigonometric":
            return build_trigonometric(grid, int(sec["count"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"problem.dictionary: {exc}")
    raise ConfigError(f"unknown dictionary kind {kind!r}")


def build_family(cfg):
    sec = _section(cfg, "problem", "statistic")
    kind = sec.get("kind")
    try:
        return MrFamily(kind=kind, gamma=sec.get("gamma"))
    except ValueError as exc:
        raise ConfigError(f"problem.statistic: {exc}")


def build_operator(cfg, grid, dico=None):
    sec = _section(cfg, "problem", "operator", required=False) or {"kind": "identity"}
    kind = sec.get("kind", "identity")
    if kind == "identity":
        return IdentityOperator(grid)
    if kind == "convolution":
        kernel = make_kernel(grid, sec.get("kernel", "gaussian"),
                             width=float(sec.get("width", 0.05)))
        return ConvolutionOperator(kernel, padded=bool(sec.get("padded", False)))
    if kind == "diagonal_svd":
        basis = dico
        if basis is None or not basis.orthonormal:
            raise ConfigError("diagonal_svd needs an orthonormal problem.dictionary")
        if "svals" in sec:
            svals = np.asarray(sec["svals"], dtype=float)
        else:
            decay = float(sec.get("sval_decay", 0.0))
            svals = np.arange(1, len(basis) + 1, dtype=float) ** -decay
        try:
            return DiagonalOperator(basis, svals)
        except ValueError as exc:
            raise ConfigError(f"problem.operator: {exc}")
    raise ConfigError(f"unknown operator kind {kind!r}")


def build_penalty(cfg):
    sec = _section(cfg, "problem", "penalty")
    kind = sec.get("kind")
    opts = {k: v for k, v in sec.items() if k != "kind"}
    try:
        return make_penalty(kind, **opts)
    except ValueError as exc:
        raise ConfigError(str(exc))


def build_solver_config(cfg):
    sec = _section(cfg, "solver", required=False)
    kwargs = {}
    for name in ("rho", "tol_primal", "tol_dual", "dykstra_tol", "inner_prox_tol"):
        if name in sec:
            kwargs[name] = float(sec[name])
    for name in ("max_outer", "dykstra_max", "inner_prox_max"):
        if name in sec:
            kwargs[name] = int(sec[name])
    if "adapt_rho" in sec:
        kwargs["adapt_rho"] = bool(sec["adapt_rho"])
    return SolverConfig(**kwargs)


def noise_level(cfg, grid):
    """White-noise level and seed from the [noise] section.

    ``sigma_per_cell = true`` interprets sigma as the per-cell standard
    deviation of the data noise (plain regression convention) and converts
    it to the white-noise level ``sigma * sqrt(h)``.
    """
    sec = _section(cfg, "noise", required=False)
    sigma = float(sec.get("sigma", 0.05))
    if sigma <= 0:
        raise ConfigError("noise.sigma must be positive")
    if bool(sec.get("sigma_per_cell", False)):
        sigma = sigma * np.sqrt(grid.h)
    return sigma, int(sec.get("seed", 0))
