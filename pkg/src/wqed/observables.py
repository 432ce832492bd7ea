"""Headline quantities assembled from spectra and scattering probabilities."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .errors import IntegrationFailure, ParameterError, WQEDError
from .model import LatticeParams, TwoParticleBasis, build_h1, build_h2
from .scattering import TRANSMISSION, GreenEvaluator, PortPair, two_photon_probability
from .spectral import HermitianSpectrum, eig_hermitian, participation_ratios

log = logging.getLogger(__name__)

UNDERFLOW = 1e-300
QUANTITIES = ("T2", "T2_coh", "log_pr", "inv_lambda2")


@dataclass(frozen=True, eq=False)
class Evaluators:
    """Closed-system spectra (resonance energies) plus the open-system Green evaluator."""

    params: LatticeParams
    closed1: HermitianSpectrum
    closed2: HermitianSpectrum
    green: GreenEvaluator

    @property
    def d1(self) -> int:
        return self.closed1.dim

    @property
    def d2(self) -> int:
        return self.closed2.dim


def _cache_path(params: LatticeParams) -> Path | None:
    root = os.environ.get("WQED_CACHE_DIR")
    if not root:
        return None
    key = json.dumps({**params.as_dict(), "version": __version__}, sort_keys=True)
    digest = hashlib.sha256(key.encode()).hexdigest()[:24]
    return Path(root) / f"evaluators-{digest}.pkl"


@lru_cache(maxsize=64)
def build_evaluators(params: LatticeParams) -> Evaluators:
    path = _cache_path(params)
    if path is not None and path.exists():
        with path.open("rb") as fh:
            return pickle.load(fh)
    basis = TwoParticleBasis(params.N)
    ev = Evaluators(params, eig_hermitian(build_h1(params)),
                    eig_hermitian(build_h2(params, basis)), GreenEvaluator(params))
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(f".{os.getpid()}.tmp")
        with tmp.open("wb") as fh:
            pickle.dump(ev, fh)
        tmp.replace(path)
    return ev


@dataclass(frozen=True)
class ResonantPathSet:
    alpha: int
    paths: tuple

    @classmethod
    def build(cls, alpha: int, evs: Evaluators) -> "ResonantPathSet":
        if not 1 <= alpha <= evs.d2:
            raise ParameterError(f"alpha must be in [1, {evs.d2}], got {alpha}")
        E2 = evs.closed2.values[alpha - 1]
        return cls(alpha, tuple((float(e), float(E2 - e)) for e in evs.closed1.values))


def t2(alpha: int, params: LatticeParams, evaluators: Evaluators | None = None,
       pulse: str = "lorentzian", ports: PortPair = TRANSMISSION, rel_tol: float = 1e-6,
       max_subdivisions: int = 200) -> float:
    """Two-photon transmission averaged over the d1 resonant paths of eigenstate alpha."""
    evs = evaluators or build_evaluators(params)
    paths = ResonantPathSet.build(alpha, evs).paths
    total = 0.0
    for mu, (k1, k2) in enumerate(paths, start=1):
        try:
            total += two_photon_probability(k1, k2, ports, evs.green, pulse, rel_tol, max_subdivisions)
        except IntegrationFailure as exc:
            raise IntegrationFailure(f"alpha={alpha}, path mu={mu}: {exc}") from exc
    return total / len(paths)


def t2_coherent(alpha: int, params: LatticeParams, evaluators: Evaluators | None = None,
                pulse: str = "lorentzian", ports: PortPair = TRANSMISSION, rel_tol: float = 1e-6,
                max_subdivisions: int = 200) -> float:
    """Transmission for two photons of identical momentum E_alpha / 2."""
    evs = evaluators or build_evaluators(params)
    if not 1 <= alpha <= evs.d2:
        raise ParameterError(f"alpha must be in [1, {evs.d2}], got {alpha}")
    k = float(evs.closed2.values[alpha - 1]) / 2
    return two_photon_probability(k, k, ports, evs.green, pulse, rel_tol, max_subdivisions)


def effective_lambda2(alpha: int, t2_value: float, N: int) -> float:
    """1/Lambda_2 = -ln T2 / (2(N - 1)); +inf once T2 underflows."""
    if N < 2:
        raise ParameterError("effective localisation length needs N >= 2")
    if t2_value < 0:
        raise ParameterError("T2 must be non-negative")
    if t2_value < UNDERFLOW:
        return float("inf")
    return float(-np.log(t2_value) / (2 * (N - 1)))


def resolve_alphas(spec, d2: int) -> list[int]:
    """alpha spec: list of 1-based indices, 'all', 'lowest', 'middle' or 'highest'."""
    if isinstance(spec, str):
        table = {"all": list(range(1, d2 + 1)), "lowest": [1],
                 "middle": [max(1, d2 // 2)], "highest": [d2]}
        if spec not in table:
            raise ParameterError(f"unknown alpha selector {spec!r}")
        return table[spec]
    out = [int(a) for a in spec]
    bad = [a for a in out if not 1 <= a <= d2]
    if bad:
        raise ParameterError(f"alpha values {bad} outside [1, {d2}]")
    return out


@dataclass
class SweepResult:
    axes: dict
    records: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.records], dtype=float)

    def select(self, **match) -> list[dict]:
        return [r for r in self.records if all(r.get(k) == v for k, v in match.items())]


@dataclass(frozen=True)
class _CellTask:
    params: LatticeParams
    alphas: tuple
    quantities: tuple
    pulse: str
    rel_tol: float
    max_subdivisions: int
    h_over_J: float = 0.0
    extra: tuple = ()


def _run_h_cell(task: _CellTask) -> list[dict]:
    """All requested alphas at one parameter point; failures land in `flags`."""
    p = task.params
    out = []
    try:
        evs = build_evaluators(p)
        _, log_pr = participation_ratios(evs.closed2)
        alphas = resolve_alphas(list(task.alphas) if not isinstance(task.alphas, str) else task.alphas,
                                evs.d2) if task.alphas else []
    except WQEDError as exc:
        return [{**dict(task.extra), "h_over_J": task.h_over_J, "alpha": a, "flags": f"error:{type(exc).__name__}"}
                for a in (task.alphas if not isinstance(task.alphas, str) else [])]
    for a in alphas:
        rec = {**dict(task.extra), "h_over_J": task.h_over_J, "alpha": a,
               "energy": float(evs.closed2.values[a - 1])}
        flags = []
        try:
            if "log_pr" in task.quantities:
                rec["log_pr"] = float(log_pr[a - 1])
            if "T2" in task.quantities or "inv_lambda2" in task.quantities:
                val = t2(a, p, evs, task.pulse, rel_tol=task.rel_tol,
                         max_subdivisions=task.max_subdivisions)
                rec["T2"] = val
                if "inv_lambda2" in task.quantities and p.N >= 2:
                    rec["inv_lambda2"] = effective_lambda2(a, val, p.N)
                    if val < UNDERFLOW:
                        flags.append("underflow")
            if "T2_coh" in task.quantities:
                rec["T2_coh"] = t2_coherent(a, p, evs, task.pulse, rel_tol=task.rel_tol,
                                            max_subdivisions=task.max_subdivisions)
        except WQEDError as exc:
            flags.append(f"error:{type(exc).__name__}")
            log.warning("cell h=%g alpha=%d failed: %s", p.h, a, exc)
        rec["flags"] = ";".join(flags)
        out.append(rec)
    return out


def _execute(tasks: list[_CellTask], workers: int | None) -> list[dict]:
    workers = workers or os.cpu_count() or 1
    if workers == 1 or len(tasks) <= 1:
        chunks = [_run_h_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_h_cell, tasks))
    return [r for chunk in chunks for r in chunk]


def _at_h(params: LatticeParams, h_over_J: float, **kw) -> LatticeParams:
    # with J = 0 there is no hopping scale, so grid values are taken as absolute h
    scale = params.J if params.J != 0 else 1.0
    return params.with_(h=h_over_J * scale, **kw)


def _metadata(params: LatticeParams, pulse: str, rel_tol: float, max_subdivisions: int, **extra) -> dict:
    return {"params": params.as_dict(), "pulse": pulse,
            "integration": {"rel_tol": rel_tol, "max_subdivisions": max_subdivisions},
            "code_version": __version__, **extra}


def mobility_map(params: LatticeParams, h_grid, alpha_set, quantities=("T2", "log_pr"),
                 pulse: str = "lorentzian", rel_tol: float = 1e-6, max_subdivisions: int = 200,
                 workers: int | None = 1) -> SweepResult:
    """(h/J, alpha) map of the requested quantities, in grid order."""
    bad = set(quantities) - set(QUANTITIES)
    if bad:
        raise ParameterError(f"unknown quantities {sorted(bad)}")
    h_grid = [float(h) for h in h_grid]
    alphas = alpha_set if isinstance(alpha_set, str) else tuple(int(a) for a in alpha_set)
    tasks = [_CellTask(_at_h(params, h), alphas, tuple(quantities), pulse, rel_tol,
                       max_subdivisions, h) for h in h_grid]
    records = _execute(tasks, workers) if alphas else []
    return SweepResult({"h_over_J": h_grid, "alpha": alpha_set if isinstance(alpha_set, str) else list(alphas)},
                       records, _metadata(params, pulse, rel_tol, max_subdivisions,
                                          quantities=list(quantities)))


def scaling_curves(params_base: LatticeParams, N_list, alpha_selector: str, h_grid,
                   pulse: str = "lorentzian", rel_tol: float = 1e-6, max_subdivisions: int = 200,
                   workers: int | None = 1) -> SweepResult:
    """log_{d2} R and 1/Lambda_2 versus h/J for one eigenstate per system size."""
    N_list = [int(n) for n in N_list]
    if N_list != sorted(N_list):
        raise ParameterError("N_list must be sorted ascending")
    if alpha_selector not in ("lowest", "middle", "highest"):
        raise ParameterError(f"alpha_selector must be lowest, middle or highest, got {alpha_selector!r}")
    h_grid = [float(h) for h in h_grid]
    tasks = [_CellTask(_at_h(params_base, h, N=n), alpha_selector,
                       ("log_pr", "T2", "inv_lambda2"), pulse, rel_tol, max_subdivisions, h,
                       (("N", n),))
             for n in N_list for h in h_grid]
    records = _execute(tasks, workers)
    J, U = params_base.J, params_base.U
    aa = [2 * np.log(h / (2 * J)) if h > 2 * J else None for h in h_grid]
    meta = _metadata(params_base, pulse, rel_tol, max_subdivisions, alpha_selector=alpha_selector,
                     aa_reference=aa, sw_transition=(2 * J / U if U > 0 else None))
    return SweepResult({"N": N_list, "h_over_J": h_grid, "alpha": alpha_selector}, records, meta)


def loss_sweep(params: LatticeParams, gamma_list, h_grid, alpha_set, pulse: str = "lorentzian",
               rel_tol: float = 1e-6, max_subdivisions: int = 200,
               workers: int | None = 1) -> SweepResult:
    """T2 maps for each loss rate; each record notes whether T2 is non-increasing in gamma."""
    gammas = [float(g) for g in gamma_list]
    if any(g < 0 for g in gammas):
        raise ParameterError("loss rates must be >= 0")
    h_grid = [float(h) for h in h_grid]
    alphas = alpha_set if isinstance(alpha_set, str) else tuple(int(a) for a in alpha_set)
    tasks = [_CellTask(_at_h(params, h, gamma=g), alphas, ("T2",), pulse, rel_tol,
                       max_subdivisions, h, (("gamma", g),))
             for g in gammas for h in h_grid]
    records = _execute(tasks, workers)
    by_cell: dict = {}
    for r in records:
        by_cell.setdefault((r["h_over_J"], r["alpha"]), []).append(r)
    for cell in by_cell.values():
        cell.sort(key=lambda r: r["gamma"])
        vals = [r.get("T2", np.nan) for r in cell]
        ok = all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(vals, vals[1:]))
        for r in cell:
            if not ok:
                r["flags"] = ";".join(filter(None, [r["flags"], "non_monotone_in_gamma"]))
    return SweepResult({"gamma": gammas, "h_over_J": h_grid,
                        "alpha": alpha_set if isinstance(alpha_set, str) else list(alphas)},
                       records, _metadata(params, pulse, rel_tol, max_subdivisions))
