"""Run configuration: one YAML document drives every command.

Layout::

    lattice:
      basis: [[6.283185307179586, 0.0], [0.0, 6.283185307179586]]   # one generator per row
    operator:
      M: 2
      perturbation:                    # list of [k, coefficient]; k in dual-basis coordinates
        - [[1, 0], "1"]
        - [[-1, 0], "1"]
      symmetric: null                  # true / false / null (= detect)
      kappa: null                      # Floquet parameter, or null
    nf: {frak_e: 2, delta: 0.75, tau: 2, epsilon: 0.25, gamma: 0.4,
         n_target: 2, J_max: 6, order_floor: null}
    truncation: {R_trunc: 24}
    census: {R_list: [50, 100, 200, 400], mc_samples: 100000, seed: 0}
    probe: {xi: [[13, 8], [8, 13]]}    # frequencies for expand / quasimode
    output: {dir: out}
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .cutoffs import NFParams
from .lattice import DualLattice, Lattice, dual_basis
from .normalform import Perturbation
from .symexpr.fourier import FourierSymbol
from .symexpr.parser import parse


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class RunConfig:
    basis_rows: list[list[float]]
    M: float
    perturbation: list[tuple[list[int], str]]
    nf: dict[str, Any]
    R_trunc: float = 24.0
    symmetric: bool | None = None
    kappa: list[float] | None = None
    census: dict[str, Any] = field(default_factory=lambda: {"R_list": [50, 100, 200, 400],
                                                             "mc_samples": 100_000, "seed": 0})
    probe: list[list[float]] = field(default_factory=list)
    out_dir: str = "out"
    name: str = "custom"

    # ------------------------------------------------------------- building
    @property
    def d(self) -> int:
        return len(self.basis_rows)

    def lattice(self) -> Lattice:
        return Lattice.from_rows(self.basis_rows)

    def dual(self) -> DualLattice:
        return dual_basis(self.lattice())

    def params(self) -> NFParams:
        nf = self.nf
        return NFParams(
            M=float(self.M),
            frak_e=float(nf["frak_e"]),
            delta=float(nf["delta"]),
            tau=float(nf["tau"]),
            epsilon=float(nf["epsilon"]),
            gamma=float(nf["gamma"]),
            d=self.d,
            n_target=int(nf.get("n_target", 3)),
            j_max=int(nf.get("J_max", 6)),
            floor=None if nf.get("order_floor") is None else float(nf["order_floor"]),
        )

    def symbol(self, dual: DualLattice | None = None) -> FourierSymbol:
        dual = self.dual() if dual is None else dual
        p = self.params()
        terms: dict[tuple, Any] = {}
        for k, text in self.perturbation:
            key = tuple(int(v) for v in k)
            e = parse(str(text), self.d)
            terms[key] = e if key not in terms else terms[key] + e
        return FourierSymbol(dual, terms, p.M - p.frak_e, p.delta)

    def perturbation_obj(self, dual: DualLattice | None = None) -> Perturbation:
        return Perturbation(self.symbol(dual), kappa=self.kappa, symmetric_flag=self.symmetric)

    def validate(self) -> "RunConfig":
        problems = []
        try:
            dual = self.dual()
        except Exception as exc:  # invalid lattice
            raise ConfigError([f"lattice: {exc}"]) from exc
        try:
            p = self.params()
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError([f"nf: {exc}"]) from exc
        problems += [f"nf: {m}" for m in p.problems(dual)]
        bad_modes = [k for k, _ in self.perturbation if len(k) != self.d]
        problems += [f"perturbation: mode {k} has wrong dimension" for k in bad_modes]
        if self.kappa is not None and len(self.kappa) != self.d:
            problems.append("operator.kappa has wrong dimension")
        if self.R_trunc <= 0:
            problems.append("truncation.R_trunc must be positive")
        for xi in self.probe:
            if len(xi) != self.d:
                problems.append(f"probe: point {xi} has wrong dimension")
        if not bad_modes:
            try:
                self.perturbation_obj(dual)
            except Exception as exc:
                problems.append(f"perturbation: {exc}")
        if problems:
            raise ConfigError(problems)
        return self

    # ---------------------------------------------------------- (de)serialize
    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lattice": {"basis": [[float(v) for v in row] for row in self.basis_rows]},
            "operator": {
                "M": float(self.M),
                "perturbation": [[list(map(int, k)), str(c)] for k, c in self.perturbation],
                "symmetric": self.symmetric,
                "kappa": None if self.kappa is None else [float(v) for v in self.kappa],
            },
            "nf": copy.deepcopy(self.nf),
            "truncation": {"R_trunc": float(self.R_trunc)},
            "census": copy.deepcopy(self.census),
            "probe": {"xi": [[float(v) for v in xi] for xi in self.probe]},
            "output": {"dir": self.out_dir},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        try:
            op = doc["operator"]
            nf = dict(doc["nf"])
            return cls(
                basis_rows=[list(map(float, r)) for r in doc["lattice"]["basis"]],
                M=float(op["M"]),
                perturbation=[(list(map(int, k)), str(c)) for k, c in op.get("perturbation", [])],
                nf=nf,
                R_trunc=float(doc.get("truncation", {}).get("R_trunc", 24.0)),
                symmetric=op.get("symmetric"),
                kappa=None if op.get("kappa") is None else list(map(float, op["kappa"])),
                census=dict(doc.get("census", {"R_list": [50, 100, 200, 400],
                                               "mc_samples": 100_000, "seed": 0})),
                probe=[list(map(float, x)) for x in doc.get("probe", {}).get("xi", [])],
                out_dir=str(doc.get("output", {}).get("dir", "out")),
                name=str(doc.get("name", "custom")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError([f"malformed config: {exc!r}"]) from exc

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def loads(cls, text: str) -> "RunConfig":
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError([f"YAML: {exc}"]) from exc
        if not isinstance(doc, dict):
            raise ConfigError(["config must be a mapping"])
        return cls.from_dict(doc)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.loads(Path(path).read_text())

    def with_seed(self, seed: int | None) -> "RunConfig":
        if seed is None:
            return self
        c = copy.deepcopy(self)
        c.census["seed"] = int(seed)
        return c


def probe_points(cfg: RunConfig) -> np.ndarray:
    return np.array(cfg.probe, dtype=float).reshape(-1, cfg.d)
