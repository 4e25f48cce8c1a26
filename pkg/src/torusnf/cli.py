"""Command-line entry point: ``torusnf <command> [--preset NAME | --config PATH] ...``."""
from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, presets
from . import normalform as N
from . import report
from .config import ConfigError, RunConfig, probe_points
from .lattice import modes_in_ball

log = logging.getLogger("torusnf")

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_BAD_CONFIG = 2


def _diagnostic(kind: str, problems: list[str]) -> None:
    print(json.dumps({"error": kind, "problems": problems}, indent=2), file=sys.stderr)


def load_config(args) -> RunConfig:
    if args.config and args.preset:
        raise ConfigError(["give either --config or --preset, not both"])
    if args.config:
        try:
            cfg = RunConfig.load(args.config)
        except OSError as exc:
            raise ConfigError([f"cannot read {args.config}: {exc}"]) from exc
    elif args.preset:
        try:
            cfg = presets.get(args.preset)
        except KeyError as exc:
            raise ConfigError([str(exc.args[0])]) from exc
    else:
        raise ConfigError(["no configuration: pass --config PATH or --preset NAME"])
    cfg = cfg.with_seed(args.seed)
    if args.out:
        cfg.out_dir = args.out
    return cfg.validate()


# ------------------------------------------------------------------ commands


def cmd_dual(cfg: RunConfig, args) -> int:
    dual = cfg.dual()
    doc = {"basis_rows": dual.basis.T.tolist(), "r": dual.min_gap_r}
    for row in dual.basis.T:
        print(" ".join(f"{v:.12g}" for v in row))
    print(f"r = {dual.min_gap_r:.12g}")
    report.write_json(Path(cfg.out_dir) / "dual.json", doc)
    return EXIT_OK


def cmd_census(cfg: RunConfig, args) -> int:
    from .resonance import census

    seed = cfg.census.get("seed")
    rows = census(cfg.params(), cfg.dual(), cfg.census["R_list"], kappa=cfg.kappa, seed=seed)
    text = report.csv_text([dataclasses.asdict(r) for r in rows], report.CENSUS_FIELDS)
    report.write_text(Path(cfg.out_dir) / "census.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def _probe_or_default(cfg: RunConfig) -> np.ndarray:
    pts = probe_points(cfg)
    if len(pts) == 0:
        raise ConfigError(["probe.xi is empty; list the frequencies to tabulate"])
    return pts


def cmd_expand(cfg: RunConfig, args) -> int:
    p = cfg.params()
    pert = cfg.perturbation_obj()
    state = N.run(pert, p)
    pts = _probe_or_default(cfg)
    z = np.real_if_close(state.z_mean_values(pts), tol=1e6)
    lam = N.lambda_n(state, pts)
    fields = [f"xi_{i + 1}" for i in range(cfg.d)] + [f"z_{j}" for j in range(len(z))] + ["lambda"]
    rows = []
    for i, xi in enumerate(pts):
        row = {f"xi_{a + 1}": float(xi[a]) for a in range(cfg.d)}
        row.update({f"z_{j}": float(np.real(z[j, i])) for j in range(len(z))})
        row["lambda"] = float(lam[i])
        rows.append(row)
    text = report.csv_text(rows, fields)
    out = Path(cfg.out_dir)
    report.write_text(out / "expand.csv", text)
    report.write_text(out / "nf_state.json", N.export_json(state, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(text)
    return EXIT_OK


def _operator(cfg: RunConfig):
    from . import spectra as S

    p = cfg.params()
    pert = cfg.perturbation_obj()
    modes = modes_in_ball(cfg.dual(), cfg.R_trunc)
    return p, pert, S.operator_for(pert, p.M, modes)


def cmd_spectrum(cfg: RunConfig, args) -> int:
    from . import spectra as S

    _, _, H = _operator(cfg)
    eig = S.eigensolve(H)
    cluster = np.empty(len(eig.values), dtype=int)
    for c, members in enumerate(eig.clusters):
        cluster[members] = c
    rows = [{"index": i, "eigenvalue": float(v), "cluster": int(cluster[i])} for i, v in enumerate(eig.values)]
    report.write_csv(Path(cfg.out_dir) / "spectrum.csv", rows, report.SPECTRUM_FIELDS)
    print(f"{len(H)} modes; lowest eigenvalues: " + " ".join(f"{v:.10g}" for v in eig.values[:8]))
    return EXIT_OK


def cmd_quasimode(cfg: RunConfig, args) -> int:
    from . import quantize as Q
    from . import spectra as S

    p, pert, H = _operator(cfg)
    state = N.run(pert, p)
    pts = _probe_or_default(cfg)
    shift = np.zeros(cfg.d) if pert.kappa is None else pert.kappa
    lookup = {tuple(np.round(q, 9)): i for i, q in enumerate(H.modes.points + shift)}
    idx = []
    for xi in pts:
        key = tuple(np.round(xi, 9))
        if key not in lookup:
            raise ConfigError([f"probe point {xi.tolist()} is not a lattice point of the truncation"])
        idx.append(lookup[key])
    U = Q.conjugation_unitary(state.g_list, H.modes)
    matched = S.match_many(state, H, idx, None, U)
    rows = []
    for m in matched:
        row = m.as_row()
        row["abs_error"] = abs(m.lambda_pred - m.lambda_matched)
        rows.append(row)
    text = report.csv_text(rows, report.QUASIMODE_FIELDS)
    report.write_text(Path(cfg.out_dir) / "quasimodes.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    from . import checks

    numbers = None
    if args.criteria:
        try:
            numbers = sorted({int(s) for s in args.criteria.split(",")})
        except ValueError:
            raise ConfigError([f"--criteria must be a comma-separated list of integers, got {args.criteria!r}"])
        unknown = [n for n in numbers if n not in checks.CRITERIA]
        if unknown:
            raise ConfigError([f"unknown criteria {unknown}"])
    seed = int(cfg.census.get("seed") or 0)
    results = checks.run_all(numbers, seed=seed, on_result=lambda r: print(r.line(), flush=True))
    doc = report.verify_report(results, seed, __version__)
    path = report.write_json(Path(cfg.out_dir) / "verify.json", doc)
    print(f"{doc['passed']} passed, {doc['failed']} failed; report at {path}")
    return EXIT_OK if doc["failed"] == 0 else EXIT_FAILED_CHECKS


COMMANDS = {
    "dual": cmd_dual,
    "census": cmd_census,
    "expand": cmd_expand,
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
    "quasimode": cmd_quasimode,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="torusnf", description="Normal forms and spectra of periodic operators.")
    ap.add_argument("--version", action="version", version=f"torusnf {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--preset", help=f"built-in configuration: {', '.join(presets.names())}")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--threads", type=int, help="BLAS thread limit")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "dual": "print the dual basis and its shortest-vector bound",
        "census": "count nonresonant lattice points per radius (CSV)",
        "expand": "tabulate the normal-form corrections at the probe frequencies",
        "spectrum": "diagonalize the truncated operator",
        "verify": "run the acceptance checks and write a JSON report",
        "quasimode": "quasimode residuals and matched eigenvalues at the probe frequencies",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "verify":
            sp.add_argument("--criteria", help="comma-separated subset, e.g. 1,2,6")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    limit = contextlib.nullcontext()
    if args.threads is not None:
        from threadpoolctl import threadpool_limits

        limit = threadpool_limits(limits=max(1, args.threads))
    try:
        cfg = load_config(args)
        with limit:
            return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        _diagnostic("invalid config", exc.problems)
        return EXIT_BAD_CONFIG
    except OSError as exc:
        _diagnostic("i/o error", [str(exc)])
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
