"""Command-line front end: config in, plot-ready CSV or JSON out."""
from __future__ import annotations

import argparse
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .errors import ConfigError, WQEDError
from .model import build_effective, build_h1, build_h2
from .observables import SweepResult, loss_sweep, mobility_map, scaling_curves
from .spectral import eig_biorthogonal, eig_hermitian
from .verification import ORACLE_MAX_N, run_suites, sw_comparison

log = logging.getLogger("wqed")

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_VERIFY = 0, 1, 2, 3

MAP_COLUMNS = ("h_over_J", "alpha", "value", "flags")
COLUMNS = {
    "spectrum": ("sector", "alpha", "re_E", "im_E"),
    "t2-map": MAP_COLUMNS,
    "pr-map": MAP_COLUMNS,
    "t2coh-map": MAP_COLUMNS,
    "scaling": ("N", "h_over_J", "alpha", "log_pr", "inv_lambda2", "flags"),
    "loss-map": ("gamma", "h_over_J", "alpha", "value", "flags"),
    "sw-check": ("index", "E_sw", "E_exact", "abs_error"),
    "verify": ("suite", "status", "max_deviation", "tolerance"),
}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest string that round-trips exactly
    return "" if v is None else str(v)


def render(command: str, rows: list[dict], config: dict, meta: dict, fmt: str,
           columns: tuple | None = None) -> str:
    cols = columns or COLUMNS[command]
    if fmt == "json":
        doc = {"command": command, "code_version": __version__, "config": config,
               "metadata": meta, "columns": list(cols),
               "records": [{c: r.get(c) for c in cols} for r in rows]}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    buf.write(f"# code_version: {json.dumps(__version__)}\n")
    for k in sorted(set(meta) - {"code_version"}):
        buf.write(f"# {k}: {json.dumps(meta[k], sort_keys=True)}\n")
    buf.write(",".join(cols) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(r.get(c)) for c in cols) + "\n")
    return buf.getvalue()


def _map_rows(result: SweepResult, quantity: str) -> list[dict]:
    return [{**r, "value": r.get(quantity)} for r in result.records]


def _require(cfg: RunConfig, attr: str, name: str):
    if not getattr(cfg, attr):
        raise ConfigError(f"grids/{name} is required for this subcommand")


def cmd_spectrum(cfg: RunConfig):
    p = cfg.params
    rows = []
    for sector in (1, 2):
        if cfg.spectrum == "effective":
            vals = eig_biorthogonal(build_effective(p, sector), check_condition=False).values
        else:
            vals = eig_hermitian(build_h1(p) if sector == 1 else build_h2(p)).values.astype(complex)
        rows += [{"sector": sector, "alpha": a, "re_E": float(v.real), "im_E": float(v.imag)}
                 for a, v in enumerate(vals, start=1)]
    return rows, {"spectrum": cfg.spectrum}


def _map(cfg: RunConfig, quantity: str):
    _require(cfg, "h_over_J", "h_over_J")
    res = mobility_map(cfg.params, cfg.h_over_J, cfg.alpha, (quantity,), cfg.pulse,
                       cfg.rel_tol, cfg.max_subdivisions, cfg.workers)
    return _map_rows(res, quantity), {"quantity": quantity, **res.metadata}


def cmd_t2_map(cfg):
    return _map(cfg, "T2")


def cmd_pr_map(cfg):
    return _map(cfg, "log_pr")


def cmd_t2coh_map(cfg):
    return _map(cfg, "T2_coh")


def cmd_scaling(cfg: RunConfig):
    _require(cfg, "h_over_J", "h_over_J")
    _require(cfg, "N_list", "N")
    if not isinstance(cfg.alpha, str) or cfg.alpha == "all":
        raise ConfigError("scaling needs grids/alpha to be lowest, middle or highest")
    res = scaling_curves(cfg.params, cfg.N_list, cfg.alpha, cfg.h_over_J, cfg.pulse,
                         cfg.rel_tol, cfg.max_subdivisions, cfg.workers)
    return res.records, res.metadata


def cmd_loss_map(cfg: RunConfig):
    _require(cfg, "h_over_J", "h_over_J")
    _require(cfg, "gamma", "gamma")
    res = loss_sweep(cfg.params, cfg.gamma, cfg.h_over_J, cfg.alpha, cfg.pulse,
                     cfg.rel_tol, cfg.max_subdivisions, cfg.workers)
    return _map_rows(res, "T2"), res.metadata


def cmd_sw_check(cfg: RunConfig):
    cmp = sw_comparison(cfg.params)
    rows = [{"index": k, "E_sw": float(a), "E_exact": float(b), "abs_error": float(abs(a - b))}
            for k, (a, b) in enumerate(zip(cmp.sw_values, cmp.exact_values), start=1)]
    meta = {"predicted_transition": cmp.predicted_transition, "max_abs_error": cmp.max_error,
            "bound": cmp.bound, "within_bound": cmp.within_bound}
    return rows, meta


def cmd_verify(cfg: RunConfig):
    if cfg.params.N > ORACLE_MAX_N:
        raise ConfigError(f"verify is limited to N <= {ORACLE_MAX_N}")
    results = run_suites(cfg.params, cfg.suites)
    rows = [{"suite": r.suite, "status": "PASS" if r.passed else "FAIL",
             "max_deviation": r.max_deviation, "tolerance": r.tolerance} for r in results]
    return rows, {"all_passed": all(r.passed for r in results)}


COMMANDS = {
    "spectrum": cmd_spectrum,
    "t2-map": cmd_t2_map,
    "pr-map": cmd_pr_map,
    "t2coh-map": cmd_t2coh_map,
    "scaling": cmd_scaling,
    "loss-map": cmd_loss_map,
    "sw-check": cmd_sw_check,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    # usage errors are config errors, not argparse's default exit status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wqed", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", help="output file (default: output.path or stdout)")
        sp.add_argument("--workers", type=int, help="worker processes (1 = serial reference)")
        sp.add_argument("--pulse", choices=("lorentzian", "delta"))
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    kw = {}
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        kw["workers"] = args.workers
    if args.pulse:
        kw["pulse"] = args.pulse
    if args.format:
        kw["out_format"] = args.format
    if args.out:
        kw["out_path"] = args.out
    return replace(cfg, **kw)


def _all_cells_failed(rows: list[dict]) -> bool:
    flagged = [r for r in rows if "flags" in r]
    return bool(flagged) and all(str(r["flags"]).startswith("error:") or ";error:" in str(r["flags"])
                                 for r in flagged)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(RunConfig.load(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows, meta = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WQEDError, np.linalg.LinAlgError) as exc:
        print(f"compute failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    text = render(args.command, rows, cfg.resolved(), meta, cfg.out_format)
    if cfg.out_path:
        Path(cfg.out_path).write_text(text, newline="\n")
    else:
        sys.stdout.write(text)
    if args.command == "verify" and not meta["all_passed"]:
        return EXIT_VERIFY
    if _all_cells_failed(rows):
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
