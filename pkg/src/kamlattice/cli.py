"""Command-line front end.

Every subcommand prints a JSON report ``{schema_version, config, results,
wall_time, version}`` to stdout. With ``--out DIR`` the report is also
written to ``DIR/report.json`` together with CSV tables (and a JSON-lines
trace for ``kam``). Exit codes: 0 success, 2 invalid input, 3 domain error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import DomainError, ValidationError

SCHEMA_VERSION = "1.0"
OUT_ENV = "KAMLATTICE_OUT_DIR"


@dataclass
class Report:
    command: str
    config: dict
    results: dict
    wall_time: float | None = None
    version: str = __version__
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "wall_time": self.wall_time,
            "version": self.version,
        }

    def to_json(self) -> str:
        return json.dumps(_plain(self.to_dict()), indent=2, sort_keys=True, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        raw = json.loads(text)
        return cls(raw["command"], raw["config"], raw["results"], raw["wall_time"], raw["version"], raw["schema_version"])


def _plain(obj):
    """Convert numpy scalars, tuples and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# parsing helpers ----------------------------------------------------------------


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _box(text: str) -> list[tuple[float, float]]:
    """``lo:hi,lo:hi,...``"""
    try:
        out = []
        for part in text.split(","):
            lo, hi = part.split(":")
            out.append((float(lo), float(hi)))
        return out
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi pairs, got {text!r}") from None


# commands -------------------------------------------------------------------------


def cmd_genericity(args) -> tuple[dict, dict, dict]:
    from .lattice import check_genericity, density_experiment

    config = {"support": args.support, "L": args.L, "norm": args.norm, "d": args.d, "R": args.R,
              "mode": args.mode, "samples": args.samples, "seed": args.seed, "workers": args.workers}
    results: dict = {"support": list(args.support) if args.support else None, "L": args.L}
    if args.support is None and args.R is None:
        raise ValidationError("give --support and/or --R")
    if args.support is not None:
        rep = check_genericity(args.support, args.L, norm=args.norm)
        results.update(rep.to_dict())
        results["d"] = len(args.support)
    if args.R is not None:
        d = args.d if args.d is not None else (len(args.support) if args.support else None)
        if d is None:
            raise ValidationError("--R needs --d or --support")
        dens = density_experiment(d, args.R, args.L, mode=args.mode, samples=args.samples, seed=args.seed,
                                  norm=args.norm, workers=args.workers)
        results.update({"d": d, "R": args.R, "fraction": dens.fraction, "total": dens.total,
                        "generic_count": dens.generic_count})
    tables = {"violations": (["kind", "witness"], [[v["kind"], " ".join(map(str, v["witness"]))]
                                                    for v in results.get("violations", [])])}
    return config, results, tables


def cmd_spectra(args):
    import itertools

    from .spectra import find_domain_O1, reality_diagnostics, spectral_data

    config = {"lambda": args.lam, "O1_box": args.o1_box, "grid": args.grid, "gap_min": args.gap_min}
    sd = spectral_data(args.lam)
    results = sd.to_dict()
    results["reality_diagnostics"] = {
        f"{i},{k}": reality_diagnostics(args.lam[i], args.lam[k])
        for i, k in itertools.combinations(range(len(args.lam)), 2)
    }
    box = args.o1_box or [(0.5, 1.0)] * len(args.lam)
    dom = find_domain_O1(box, args.grid, gap_min=args.gap_min)
    results["O1_sample"] = dom["feasible_points"][:20]
    results["O1_empty"] = dom["empty"]
    results["O1_feasible_count"] = len(dom["feasible_points"])
    rows = [[i, v] for i, v in enumerate(sd.mu)]
    return config, results, {"mu": (["index", "mu"], rows)}


def cmd_resonances(args):
    from .lattice import enumerate_birkhoff_resonant

    config = {"support": args.support, "n_cutoff": args.n_cutoff}
    mons = enumerate_birkhoff_resonant(args.support, args.n_cutoff)
    results = {"monomials": [m.to_dict() for m in mons], "count": len(mons),
               "per_family": {f: sum(m.family == f for m in mons) for f in ("i", "ii", "iii")}}
    rows = [[m.family, " ".join(map(str, m.ell)), " ".join(f"{s.m}:{s.n}:{g}" for s, g in m.factors)] for m in mons]
    return config, results, {"resonances": (["family", "ell", "factors"], rows)}


def cmd_melnikov(args):
    from .frequencies import CorrectionBudget, FrequencyContext
    from .melnikov import ScanBounds, melnikov_scan

    ctx = FrequencyContext.build(args.support, args.lam, args.eps)
    bounds = ScanBounds(args.ell_max, args.m_box, args.n_box)
    rep = melnikov_scan(ctx, args.order, args.gamma, args.tau, CorrectionBudget(args.M0), bounds, N=args.N,
                        use_large_k_skip=not args.no_large_k_skip, require_L=args.require_L, workers=args.workers)
    results = rep.to_dict()
    config = results.pop("config")
    rows = [[json.dumps(v["tuple"], sort_keys=True), v["value"], v["threshold"], v["case"]] for v in rep.violations]
    return config, results, {"violations": (["tuple", "value", "threshold", "case"], rows)}


def cmd_measure(args):
    from .melnikov import ScanBounds, measure_estimate

    res = measure_estimate(args.support, args.gamma, tau=args.tau, eps=args.eps,
                           bounds=ScanBounds(args.ell_max, args.m_box, args.n_box), nsamples=args.samples,
                           seed=args.seed, box=args.box, order=args.order, workers=args.workers)
    results = res.to_dict()
    config = results.pop("config")
    config["workers"] = args.workers
    rows = [[r["gamma"], r["excluded_fraction"], r["ci_lo"], r["ci_hi"]] for r in res.rows]
    return config, results, {"measure": (["gamma", "excluded_fraction", "ci_lo", "ci_hi"], rows)}


def _kam_config(args) -> dict:
    cfg = {
        "support": list(args.support), "lambda": list(args.lam), "eps": args.eps, "gamma": args.gamma,
        "tau": args.tau, "eta0": args.eta0, "s": args.s, "nu_max": args.nu_max, "tol_lie": args.tol_lie,
        "grid": {"Mx": args.Mx, "Ny": args.Ny, "d": len(args.support), "Lmax": args.Lmax, "p": args.p},
    }
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        grid = {**cfg["grid"], **loaded.pop("grid", {})}
        cfg.update(loaded)
        cfg["grid"] = grid
    return cfg


def cmd_kam(args):
    from .kam import DiagHam, KamConfig, build_H1_Z1, kam_iterate
    from .quadham import TruncationGrid, majorant_norm

    cfg = _kam_config(args)
    g = cfg["grid"]
    if g.get("d", len(cfg["support"])) != len(cfg["support"]) or len(cfg["lambda"]) != len(cfg["support"]):
        raise ValidationError("support, lambda and grid.d must agree")
    grid = TruncationGrid(tuple(cfg["support"]), int(g["Mx"]), int(g["Ny"]), int(g["Lmax"]), float(g["p"]))
    kc = KamConfig(s=cfg["s"], eta0=cfg["eta0"], gamma=cfg["gamma"], tau=cfg["tau"], eps=cfg["eps"],
                   nu_max=int(cfg["nu_max"]), tol_lie=cfg["tol_lie"])
    parts = build_H1_Z1(grid.s0, cfg["lambda"], cfg["eps"], grid)
    Q0 = parts["H1"] - parts["Z1"]
    q = majorant_norm(Q0, kc.s)
    if q > 0:
        Q0 = Q0 * (kc.eta0 * kc.gamma**2 * kc.eps / q)
    omega = np.array([m * m for m in grid.s0.sites], dtype=float) - kc.eps * np.asarray(cfg["lambda"])
    trace = kam_iterate(DiagHam.squared_norms(grid, omega), Q0, kc)
    results = trace.to_dict()
    results.pop("config")
    results["unscaled_q0_norm"] = q
    rows = [[r.nu, r.s_nu, r.N_nu, r.q_norm, r.freq_drift] for r in trace.records]
    tables = {"trace": (["nu", "s_nu", "N_nu", "q_norm", "drift"], rows)}
    return cfg, results, tables


COMMANDS = {
    "genericity": cmd_genericity,
    "spectra": cmd_spectra,
    "resonances": cmd_resonances,
    "melnikov": cmd_melnikov,
    "measure": cmd_measure,
    "kam": cmd_kam,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} if set)")
    common.add_argument("--record-time", action="store_true", help="store wall time in the report")

    p = argparse.ArgumentParser(prog="kamlattice", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("genericity", parents=[common], help="genericity check and density experiment")
    g.add_argument("--support", type=_ints)
    g.add_argument("--L", type=int, default=0)
    g.add_argument("--norm", choices=["l1", "linf"], default="l1")
    g.add_argument("--d", type=int)
    g.add_argument("--R", type=int)
    g.add_argument("--mode", choices=["exhaustive", "sampled"], default="sampled")
    g.add_argument("--samples", type=int, default=10_000)

    s = sub.add_parser("spectra", parents=[common], help="eigenvalues and reality diagnostics")
    s.add_argument("--lambda", dest="lam", type=_floats, required=True)
    s.add_argument("--O1-box", dest="o1_box", type=_box)
    s.add_argument("--grid", type=int, default=20)
    s.add_argument("--gap-min", type=float, default=0.0)

    r = sub.add_parser("resonances", parents=[common], help="Birkhoff-resonant quadratic monomials")
    r.add_argument("--support", type=_ints, required=True)
    r.add_argument("--n-cutoff", type=int, default=2)

    def scan_flags(q, default_support=None):
        q.add_argument("--support", type=_ints, required=default_support is None, default=default_support)
        q.add_argument("--eps", type=float, default=1e-3)
        q.add_argument("--tau", type=float, default=None)
        q.add_argument("--order", type=int, choices=[2, 3], default=3)
        q.add_argument("--ell-max", type=int, default=2)
        q.add_argument("--m-box", type=int, default=4)
        q.add_argument("--n-box", type=int, default=2)

    m = sub.add_parser("melnikov", parents=[common], help="Melnikov scan at fixed lambda")
    scan_flags(m)
    m.add_argument("--lambda", dest="lam", type=_floats, required=True)
    m.add_argument("--gamma", type=float, default=0.1)
    m.add_argument("--M0", type=float, default=0.0)
    m.add_argument("--N", type=int, default=None)
    m.add_argument("--require-L", type=int, default=0)
    m.add_argument("--no-large-k-skip", action="store_true")

    e = sub.add_parser("measure", parents=[common], help="Monte-Carlo excluded measure")
    scan_flags(e, default_support=(-1, 3))
    e.add_argument("--gamma", type=_floats, default=(0.04, 0.02, 0.01, 0.005))
    e.add_argument("--samples", type=int, default=20_000)
    e.add_argument("--box", type=_box, default=None)
    e.set_defaults(ell_max=4, m_box=5)

    k = sub.add_parser("kam", parents=[common], help="reducibility iteration on the first-order Hamiltonian")
    k.add_argument("--config", default=None, help="JSON run configuration (overrides flags)")
    k.add_argument("--support", type=_ints, default=(-1, 3))
    k.add_argument("--lambda", dest="lam", type=_floats, default=(0.6, 0.9))
    k.add_argument("--eps", type=float, default=1e-3)
    k.add_argument("--gamma", type=float, default=0.1)
    k.add_argument("--tau", type=float, default=4.0)
    k.add_argument("--eta0", type=float, default=1e-3)
    k.add_argument("--s", type=float, default=1.0)
    k.add_argument("--nu-max", type=int, default=4)
    k.add_argument("--tol-lie", type=float, default=1e-14)
    k.add_argument("--Mx", type=int, default=6)
    k.add_argument("--Ny", type=int, default=2)
    k.add_argument("--Lmax", type=int, default=4)
    k.add_argument("--p", type=float, default=2.0)
    return p


def emit(report: Report, out_dir: str | os.PathLike, tables: dict, trace: list | None = None) -> list[Path]:
    """Write ``report.json``, one CSV per table and optionally ``trace.jsonl``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "report.json"]
        written[0].write_text(report.to_json() + "\n")
        for name, (header, rows) in tables.items():
            path = out / f"{name}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                w.writerows(_plain(rows))
            written.append(path)
        if trace is not None:
            path = out / "trace.jsonl"
            with path.open("w") as fh:
                for rec in trace:
                    fh.write(json.dumps(_plain(rec), sort_keys=True) + "\n")
            written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write output to {out}: {exc}") from exc
    return written


_LIST_FLAGS = {"--support", "--lambda", "--gamma", "--box", "--O1-box"}
_NUMBER = re.compile(r"^-\.?\d")


def _join_negative_lists(argv: Sequence[str]) -> list[str]:
    """Let ``--support -1,3`` through: argparse would read ``-1,3`` as an option."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in _LIST_FLAGS:
            nxt = next(it, None)
            if nxt is not None and _NUMBER.match(nxt):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(tok)
    return out


def run(argv: Sequence[str] | None = None) -> tuple[int, Report | None]:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_negative_lists(argv))
    start = time.perf_counter()
    try:
        config, results, tables = COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2, None
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3, None
    config = {**_plain(config), "seed": args.seed, "workers": args.workers}
    wall = time.perf_counter() - start if args.record_time else None
    report = Report(args.command, config, _plain(results), wall)
    out_dir = args.out or os.environ.get(OUT_ENV)
    if out_dir:
        trace = results.get("records") if args.command == "kam" else None
        emit(report, out_dir, tables, trace)
    print(report.to_json())
    return 0, report


def main(argv: Sequence[str] | None = None) -> int:
    try:
        code, _ = run(argv)
    except SystemExit as exc:  # argparse
        return int(exc.code or 0)
    return code


if __name__ == "__main__":
    sys.exit(main())
