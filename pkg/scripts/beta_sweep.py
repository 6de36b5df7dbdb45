"""Sweep beta for the 1D beta-scheme: sup error, beta * error and Lipschitz growth."""

import math
from dataclasses import dataclass

import numpy as np
from _common import emit, parse_config

from cvxenvelope.exprlang import field_from_source
from cvxenvelope.field import Axis, lipschitz_seminorm
from cvxenvelope.legendre import convexify
from cvxenvelope.obstacle import berman_convexify_1d


@dataclass
class Config:
    targets: tuple = ("x^2", "min(x^2,(x-1)^2)", "abs(x)-0.5*x^2")
    betas: tuple = (10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0)
    n: int = 1501
    x_min: float = -1.0
    x_max: float = 2.0
    csv: str = ""


def sweep(cfg: Config):
    ax = Axis(cfg.x_min, cfg.x_max, cfg.n)
    rows = []
    for src in cfg.targets:
        v = field_from_source(src, [ax])
        hull = convexify(v).values
        lip = lipschitz_seminorm(v)
        prev = None
        for beta in cfg.betas:
            u = berman_convexify_1d(v, beta)
            err = float(np.abs(u.values - hull).max())
            rows.append({
                "target": src, "beta": beta, "error": err, "beta_x_error": beta * err,
                "ratio": prev / err if prev else float("nan"),
                "lipschitz_excess": lipschitz_seminorm(u) - lip,
            })
            prev = err
    return rows


def main(argv=None):
    cfg = parse_config(Config, __doc__, argv)
    emit(sweep(cfg), ["target", "beta", "error", "beta_x_error", "ratio", "lipschitz_excess"], cfg.csv)
    print(f"\nfor x^2 the error is ln2/beta: beta * error -> {math.log(2):.6f}")


if __name__ == "__main__":
    main()
