"""Built-in configurations.

All lattices here have generators 2 pi e_i, so the dual lattice is Z^d.
The 2D presets other than ``square-2d`` use tau close to 1 and epsilon at
its upper limit delta / (1 + tau) so that the large-|k| cut is inactive for
the unit modes once |xi| exceeds about 13, inside a 28-radius truncation.
"""
from __future__ import annotations

import copy
import math

from .config import RunConfig

TWO_PI = 2.0 * math.pi


def _identity_rows(d: int) -> list[list[float]]:
    return [[TWO_PI if i == j else 0.0 for j in range(d)] for i in range(d)]


_PRESETS = {
    "mathieu-1d": RunConfig(
        name="mathieu-1d",
        basis_rows=_identity_rows(1),
        M=2.0,
        perturbation=[([1], "1"), ([-1], "1")],
        nf={"frak_e": 2.0, "delta": 0.75, "tau": 0.5, "epsilon": 0.5, "gamma": 0.4,
            "n_target": 2, "J_max": 6, "order_floor": None},
        R_trunc=128.0,
        census={"R_list": [50, 100, 200, 400], "mc_samples": 100_000, "seed": 0},
        probe=[[16.0], [24.0], [32.0], [48.0], [64.0]],
    ),
    "square-2d": RunConfig(
        name="square-2d",
        basis_rows=_identity_rows(2),
        M=2.0,
        perturbation=[([1, 0], "1"), ([-1, 0], "1"), ([0, 1], "1"), ([0, -1], "1")],
        nf={"frak_e": 2.0, "delta": 0.75, "tau": 2.0, "epsilon": 0.25, "gamma": 0.4,
            "n_target": 2, "J_max": 6, "order_floor": None},
        R_trunc=24.0,
        census={"R_list": [50, 100, 200, 400], "mc_samples": 100_000, "seed": 0},
        probe=[[13.0, 7.0], [7.0, 13.0]],
    ),
    "unbounded-2d": RunConfig(
        name="unbounded-2d",
        basis_rows=_identity_rows(2),
        M=2.0,
        perturbation=[([1, 0], "0.5*jap(0.5)"), ([-1, 0], "0.5*jap(0.5)")],
        nf={"frak_e": 1.5, "delta": 0.8, "tau": 1.2, "epsilon": 0.3636, "gamma": 0.35,
            "n_target": 2, "J_max": 6, "order_floor": None},
        R_trunc=28.0,
        census={"R_list": [50, 100, 200], "mc_samples": 100_000, "seed": 0},
        probe=[[12.0, 5.0], [13.0, 8.0]],
    ),
    "floquet-2d": RunConfig(
        name="floquet-2d",
        basis_rows=_identity_rows(2),
        M=2.0,
        perturbation=[([1, 0], "1"), ([-1, 0], "1"), ([0, 1], "1"), ([0, -1], "1")],
        kappa=[0.3, 0.0],
        nf={"frak_e": 2.0, "delta": 0.75, "tau": 1.2, "epsilon": 0.3409, "gamma": 0.4,
            "n_target": 2, "J_max": 6, "order_floor": None},
        R_trunc=28.0,
        census={"R_list": [50, 100, 200], "mc_samples": 100_000, "seed": 0},
        probe=[[12.0, 5.0], [13.0, 8.0]],
    ),
}


def names() -> list[str]:
    return list(_PRESETS)


def get(name: str) -> RunConfig:
    try:
        return copy.deepcopy(_PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(_PRESETS)}") from None
