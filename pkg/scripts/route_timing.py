"""Wall-clock timing of the conjugate and the three geodesic routes as the grid grows."""

import time
from dataclasses import dataclass

import numpy as np
from _common import emit, parse_config

from cvxenvelope import geodesic as geo
from cvxenvelope.exprlang import field_from_source
from cvxenvelope.field import Axis, ScalarField
from cvxenvelope.legendre import legendre_brute, legendre_classical


@dataclass
class Config:
    sizes: tuple = (257, 513, 1025, 2049)
    s_n: int = 65
    repeats: int = 3
    seed: int = 0
    csv: str = ""


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times) * 1000


def rows(cfg: Config):
    rng = np.random.default_rng(cfg.seed)
    out = []
    for n in cfg.sizes:
        X = Axis(-2, 3, n)
        f = ScalarField([X], np.concatenate([[0.0], np.cumsum(rng.uniform(-2, 2, n - 1) * X.h)]))
        dual = Axis(-3, 3, n)
        p0, p1 = field_from_source("x^2", [X]), field_from_source("(x-1)^2", [X])
        S = Axis(0, 1, cfg.s_n)
        sigma = geo.default_sigma_axis(p0, p1, n + 1)
        out.append({
            "n": n,
            "fast_ms": best_of(lambda: legendre_classical(f, dual), cfg.repeats),
            "brute_ms": best_of(lambda: legendre_brute(f, dual), cfg.repeats),
            "semmes_ms": best_of(lambda: geo.geodesic_semmes(p0, p1, S), cfg.repeats),
            "infconv_ms": best_of(lambda: geo.geodesic_infconv(p0, p1, S), cfg.repeats),
            "rooftop_ms": best_of(lambda: geo.geodesic_rooftop(p0, p1, S, sigma), cfg.repeats),
        })
    return out


def main(argv=None):
    cfg = parse_config(Config, __doc__, argv)
    emit(rows(cfg), ["n", "fast_ms", "brute_ms", "semmes_ms", "infconv_ms", "rooftop_ms"], cfg.csv)


if __name__ == "__main__":
    main()
