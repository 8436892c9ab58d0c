"""Built-in test functions, addressable by name from configs.

Names: constant, sign, log_abs, abs_power(a), random_seeded(seed),
polynomial(c0,c1,...), chi_ball(c...,r). Parameters default to
abs_power(0.5), random_seeded(1234), polynomial(0.5,1,0.25). In 2D the
polynomial evaluates in u = x1 + x2 (same total degree) and |x| is Euclidean.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ConfigError
from .grid import Ball, Grid, GridFunction, indicator

__all__ = ["corpus", "corpus_names", "DEFAULT_CORPUS"]

DEFAULT_CORPUS = (
    "constant",
    "sign",
    "log_abs",
    "abs_power(0.4)",
    "random_seeded(1234)",
    "polynomial(0.5,1,0.25)",
)

_NAME_RE = re.compile(r"^([a-z_]+)(?:\(([^)]*)\))?$")


def corpus_names() -> tuple[str, ...]:
    return (
        "constant",
        "sign",
        "log_abs",
        "abs_power(a)",
        "random_seeded(seed)",
        "polynomial(c0,c1,...)",
        "chi_ball(center...,radius)",
    )


def corpus(name: str, grid: Grid) -> GridFunction:
    match = _NAME_RE.match(name.strip())
    if not match:
        raise ConfigError(f"cannot parse corpus name {name!r}")
    base, argtext = match.group(1), match.group(2)
    args = []
    if argtext:
        try:
            args = [float(a) for a in argtext.split(",") if a.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad corpus arguments in {name!r}") from exc

    nodes = grid.nodes
    if base == "constant":
        vals = np.ones(nodes.shape[0])
    elif base == "sign":
        vals = np.sign(nodes[:, 0])
    elif base == "log_abs":
        vals = np.log(np.linalg.norm(nodes, axis=1))
    elif base == "abs_power":
        a = args[0] if args else 0.5
        vals = np.linalg.norm(nodes, axis=1) ** a
    elif base == "random_seeded":
        seed = int(args[0]) if args else 1234
        rng = np.random.default_rng(seed)
        vals = rng.standard_normal(nodes.shape[0])
    elif base == "polynomial":
        coeffs = args if args else [0.5, 1.0, 0.25]
        u = nodes.sum(axis=1)
        vals = np.zeros(nodes.shape[0])
        for k, c in enumerate(coeffs):
            vals += c * u**k
    elif base == "chi_ball":
        if len(args) != grid.n + 1:
            raise ConfigError(
                f"chi_ball wants {grid.n + 1} arguments (center..., radius)"
            )
        ball = Ball(center=tuple(args[:-1]), radius=args[-1])
        return indicator(grid, ball)
    else:
        raise ConfigError(f"unknown corpus function {base!r}")
    if not np.all(np.isfinite(vals)):
        raise ConfigError(f"corpus function {name!r} hit a singular node")
    return GridFunction(grid, vals.reshape(grid.shape))
