"""Experiment driver: (d, nu) sweeps, error measurement, budget checks.

For every combination of spectrum file, degree and taper scale the sweep fits
an approximant, computes the two error budgets (the L1-spectrum form
(eps1 + eps2) / 2pi and the tone point-mass form
sum_j 2|c_j| (|1 - r_nu(w_j)| + eps2)), runs the requested predictor
realizations on a measurement grid, and records the sup error against the
exact future values together with an itemized numerical slack.  A row passes
when the measured sup error stays below the bound matching its spectrum kind
plus the slack.

Rows are computed serially in a fixed order and all output formatting is
fixed-width, so identical configs produce byte-identical reports.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .approx import fit_approximant, sup_error
from .predictor import (EtaState, PredictorConfig, fit_eta,
                        iterated_integrals, predict_convolution,
                        predict_eta_grid)
from .signal import (SpectrumSpec, bump_density, epsilon1, exact_hk,
                     l1_budget, load_spectrum, sample, sample_grid, select_nu,
                     _quad, _support)
from .taper import TaperSpec, eval_taper

__all__ = ["ExperimentConfig", "ErrorRow", "run_sweep", "emit_report",
           "write_reports", "ConvergenceVerdict", "convergence_check"]

CSV_COLUMNS = ("spec", "d", "nu", "eps1", "eps2", "bound_paper",
               "bound_tones", "sup_err", "slack", "pass")

_MODES = ("conv", "eta", "fit-eta")


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: which signals, which (d, nu) combinations, which predictor
    realizations, and the measurement grid."""

    spec_files: tuple
    T: float
    omega_gap: float
    taper_family: str
    d_list: tuple
    t_start: float
    t_end: float
    dt: float
    modes: tuple = ("eta",)
    nu_list: Optional[tuple] = None
    eps1_target: Optional[float] = None
    fit_nodes: Optional[int] = None
    fit_node_factor: Optional[int] = None
    dense_factor: int = 8
    history_length: Optional[float] = None
    quadrature_step: Optional[float] = None
    fit_dbar_factor: int = 2
    out_dir: Optional[str] = None

    def __post_init__(self):
        if self.T <= 0 or self.omega_gap <= 0:
            raise ValueError("T and omega_gap must be positive")
        if not self.spec_files:
            raise ValueError("spec_files must be nonempty")
        if list(self.d_list) != sorted(self.d_list):
            raise ValueError("d_list must be sorted ascending")
        if (self.nu_list is None) == (self.eps1_target is None):
            raise ValueError("exactly one of nu_list / eps1_target is required")
        if not (self.t_end > self.t_start and self.dt > 0):
            raise ValueError("need t_end > t_start and dt > 0")
        bad = [m for m in self.modes if m not in _MODES]
        if bad or not self.modes:
            raise ValueError(f"modes must be a nonempty subset of {_MODES}")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        base = os.path.dirname(os.path.abspath(path))
        specs = tuple(p if os.path.isabs(p) else os.path.join(base, p)
                      for p in data["spec_files"])
        kwargs = {k: data[k] for k in data if k != "spec_files"}
        for key in ("d_list", "nu_list", "modes"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(kwargs[key])
        return cls(spec_files=specs, **kwargs)


@dataclass
class ErrorRow:
    spec: str
    d: int
    nu: float
    eps1: float = math.nan
    eps2: float = math.nan
    bound_paper: float = math.nan
    bound_tones: float = math.nan
    sup_err: float = math.nan
    slack: float = math.nan
    passed: bool = False
    slack_items: dict = field(default_factory=dict)
    mode_sup: dict = field(default_factory=dict)
    error: Optional[str] = None


def _kernel_abs(a, delta):
    # sum_k |a_k| delta^(k-1)/(k-1)!  -- growth scale of the kernel at lag delta
    acc, term = 0.0, 1.0
    for k, coeff in enumerate(np.abs(a), start=1):
        acc += coeff * term
        term *= delta / k
    return acc


def _second_moment(spec: SpectrumSpec) -> float:
    # bound on |x''|: sum |c_j| w_j^2 for tones, (1/pi) int w^2 |X| dw for bumps
    if spec.kind == "tones":
        return sum(abs(t.amplitude) * t.omega ** 2 for t in spec.tones)
    if not spec.bumps:
        return 0.0
    lo, hi, edges = _support(spec)
    return _quad(lambda om: om ** 2 * abs(bump_density(spec, om)),
                 lo, hi, points=edges) / np.pi


def _measurement_grid(config: ExperimentConfig) -> np.ndarray:
    n = int(round((config.t_end - config.t_start) / config.dt)) + 1
    return config.t_start + config.dt * np.arange(n)


def _future_values(spec, t_grid, T):
    if spec.kind == "tones":
        return sample_grid(spec, t_grid[0] + T, t_grid[1] - t_grid[0], len(t_grid)) \
            if len(t_grid) > 1 else np.array([sample(spec, t_grid[0] + T)])
    return np.array([sample(spec, t + T) for t in t_grid])


def _run_row(config: ExperimentConfig, spec_name: str, spec: SpectrumSpec,
             d: int, nu: float, dense_factor: int, h: float) -> ErrorRow:
    T, gap = config.T, config.omega_gap
    taper = TaperSpec(family=config.taper_family, nu=nu)
    if config.fit_nodes is not None:
        nodes = config.fit_nodes
    elif config.fit_node_factor is not None:
        nodes = config.fit_node_factor * d
    else:
        nodes = None
    approx = fit_approximant(T, gap, taper, d, fit_nodes=nodes,
                             dense_factor=dense_factor)

    eps1 = epsilon1(spec, taper)
    eps2 = approx.eps2
    eps2_hi = sup_error(approx, 2 * dense_factor)
    bound_paper = (eps1 + eps2) / (2.0 * np.pi)
    bound_tones = sum(2.0 * abs(t.amplitude)
                      * (abs(1.0 - float(eval_taper(taper, t.omega))) + eps2)
                      for t in spec.tones)

    t_grid = _measurement_grid(config)
    fut = _future_values(spec, t_grid, T)

    mode_sup: dict = {}
    slack_items: dict = {}
    if spec.kind == "bump":
        slack_items["quad_abs"] = 2e-10
    m2 = _second_moment(spec)

    if "eta" in config.modes:
        t1 = config.t_start
        n = int(round((config.t_end - t1) / h)) + 1
        times = t1 + h * np.arange(n)
        values = sample_grid(spec, t1, h, n)
        eta = np.array([exact_hk(spec, k, t1) for k in range(1, d + 1)])
        state = EtaState.from_window(approx.a, times, values, eta)
        y = predict_eta_grid(state, t_grid)
        mode_sup["eta"] = float(np.abs(fut - y).max())
        delta = config.t_end - t1
        slack_items["eta_trap"] = max(
            slack_items.get("eta_trap", 0.0),
            (h ** 2 / 12.0) * m2 * delta * _kernel_abs(approx.a, delta))

    if "fit-eta" in config.modes:
        t1 = config.t_start - max(4.0 * T, 1.0)
        theta = config.t_start
        dbar = config.fit_dbar_factor * d
        fit_times = np.linspace(t1 + T / 10.0, theta - T, dbar)
        zeta = np.array([sample(spec, tm + T) for tm in fit_times])
        n = int(round((config.t_end - t1) / h)) + 1
        times = t1 + h * np.arange(n)
        values = sample_grid(spec, t1, h, n)
        f = iterated_integrals(times, values, d)
        fitres = fit_eta(approx.a, t1, fit_times, zeta, times, f)
        state = EtaState(t1=t1, eta=fitres.eta, times=times, values=values,
                         f=f, a=approx.a)
        y = predict_eta_grid(state, t_grid)
        mode_sup["fit-eta"] = float(np.abs(fut - y).max())
        delta = config.t_end - t1
        slack_items["eta_trap"] = max(
            slack_items.get("eta_trap", 0.0),
            (h ** 2 / 12.0) * m2 * delta * _kernel_abs(approx.a, delta))

    if "conv" in config.modes:
        L = config.history_length if config.history_length is not None else 10.0 * T
        pconf = PredictorConfig(approximant=approx, history_length=L,
                                quadrature_step=h)
        t_lo = config.t_start - L
        n = int(round((config.t_end - t_lo) / h)) + 1
        times = t_lo + h * np.arange(n)
        values = sample_grid(spec, t_lo, h, n)
        n_lag = int(round(L / h))
        sup, tail_max = 0.0, 0.0
        for t in t_grid:
            i = int(round((t - t_lo) / h))
            pred = predict_convolution(pconf, times[i - n_lag:i + 1],
                                       values[i - n_lag:i + 1])
            truth = sample(spec, times[i] + T)
            sup = max(sup, abs(truth - pred.y_hat))
            tail_max = max(tail_max, pred.tail_diag)
        mode_sup["conv"] = sup
        slack_items["conv_tail"] = tail_max
        slack_items["conv_simpson"] = (h ** 4 / 180.0) * m2 * L * _kernel_abs(approx.a, L)

    # certification slack: how much the dense-grid eps2 moves at twice the density
    d_eps2 = max(0.0, eps2_hi - eps2)
    if spec.kind == "bump":
        slack_items["eps2_grid"] = d_eps2 / (2.0 * np.pi)
    else:
        slack_items["eps2_grid"] = d_eps2 * sum(2.0 * abs(t.amplitude)
                                                for t in spec.tones)

    sup_err = max(mode_sup.values())
    slack = float(sum(slack_items.values()))
    applicable = bound_tones if spec.kind == "tones" else bound_paper
    passed = bool(sup_err <= applicable + slack + 1e-15)
    return ErrorRow(spec=spec_name, d=d, nu=nu, eps1=eps1, eps2=eps2,
                    bound_paper=bound_paper, bound_tones=bound_tones,
                    sup_err=sup_err, slack=slack, passed=passed,
                    slack_items=slack_items, mode_sup=mode_sup)


def run_sweep(config: ExperimentConfig, pin: bool = False) -> list:
    """Run the full sweep; per-row failures are recorded and the run
    continues.  With pin=True the oracle settings are doubled (twice the
    certification density, half the quadrature step) to produce fixture
    values."""
    dense_factor = config.dense_factor * (2 if pin else 1)
    h = config.quadrature_step if config.quadrature_step is not None \
        else 1e-3 * config.T
    if pin:
        h = 0.5 * h
    rows = []
    for path in config.spec_files:
        spec = load_spectrum(path)
        name = os.path.splitext(os.path.basename(path))[0]
        try:
            if config.nu_list is not None:
                nus = list(config.nu_list)
            else:
                nus = [select_nu(spec, config.taper_family, config.eps1_target)]
        except Exception as exc:  # noqa: BLE001 - recorded per row
            rows.extend(ErrorRow(spec=name, d=d, nu=math.nan,
                                 error=f"{type(exc).__name__}: {exc}")
                        for d in config.d_list)
            continue
        for d in config.d_list:
            for nu in nus:
                try:
                    rows.append(_run_row(config, name, spec, d, nu,
                                         dense_factor, h))
                except Exception as exc:  # noqa: BLE001 - recorded per row
                    rows.append(ErrorRow(spec=name, d=d, nu=nu,
                                         error=f"{type(exc).__name__}: {exc}"))
    return rows


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def emit_report(rows, fmt: str, path) -> None:
    """Write the sweep table; same table and format give byte-identical
    files.  CSV columns are fixed; JSON mirrors the fields and lists failing
    row indices in its exit metadata."""
    if not rows:
        raise ValueError("refusing to emit an empty report")
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for row in rows:
            lines.append(",".join([
                row.spec, _fmt(row.d), _fmt(row.nu), _fmt(row.eps1),
                _fmt(row.eps2), _fmt(row.bound_paper), _fmt(row.bound_tones),
                _fmt(row.sup_err), _fmt(row.slack), _fmt(row.passed)]))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        return
    if fmt == "json":
        payload = {
            "rows": [asdict(row) for row in rows],
            "failing_rows": [i for i, row in enumerate(rows) if not row.passed],
            "all_pass": all(row.passed for row in rows),
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return
    raise ValueError(f"unknown report format {fmt!r}")


def write_reports(rows, out_dir, config: ExperimentConfig,
                  pin: bool = False) -> None:
    os.makedirs(out_dir, exist_ok=True)
    emit_report(rows, "csv", os.path.join(out_dir, "report.csv"))
    emit_report(rows, "json", os.path.join(out_dir, "report.json"))
    if pin:
        payload = {
            "settings": {
                "dense_factor": config.dense_factor * 2,
                "quadrature_step": (config.quadrature_step
                                    if config.quadrature_step is not None
                                    else 1e-3 * config.T) * 0.5,
                "pinned": True,
            },
            "rows": [asdict(row) for row in rows],
        }
        with open(os.path.join(out_dir, "fixtures.json"), "w",
                  encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass
class ConvergenceVerdict:
    passed: bool
    failures: list


def convergence_check(rows) -> ConvergenceVerdict:
    """Assert the sweep exhibits the expected convergence shape: sup error
    non-increasing (within 10% of its own value) along each ascending-d sweep
    at fixed nu, and the minimum achieved error strictly decreasing as nu
    decreases with d re-optimized.  Failures identify the offending
    transition."""
    clean = [r for r in rows if r.error is None]
    by_spec: dict = {}
    for row in clean:
        by_spec.setdefault(row.spec, {}).setdefault(row.nu, {})[row.d] = row.sup_err
    if not by_spec:
        raise ValueError("insufficient sweep coverage: no usable rows")
    failures = []
    for spec_name, by_nu in by_spec.items():
        if len(by_nu) < 3:
            raise ValueError(
                f"insufficient sweep coverage: spec {spec_name} has "
                f"{len(by_nu)} nu values, need >= 3")
        for nu, by_d in by_nu.items():
            if len(by_d) < 3:
                raise ValueError(
                    f"insufficient sweep coverage: spec {spec_name}, nu={nu} "
                    f"has {len(by_d)} degrees, need >= 3")
            ds = sorted(by_d)
            for d_prev, d_next in zip(ds, ds[1:]):
                if not by_d[d_next] <= by_d[d_prev] * 1.1 + 1e-15:
                    failures.append(
                        f"spec {spec_name}, nu={nu}: sup error rose from "
                        f"{by_d[d_prev]:.6g} (d={d_prev}) to "
                        f"{by_d[d_next]:.6g} (d={d_next})")
        nus_desc = sorted(by_nu, reverse=True)
        mins = [min(by_nu[nu].values()) for nu in nus_desc]
        for i in range(len(mins) - 1):
            if not mins[i + 1] < mins[i]:
                failures.append(
                    f"spec {spec_name}: min error did not decrease from "
                    f"nu={nus_desc[i]} ({mins[i]:.6g}) to "
                    f"nu={nus_desc[i + 1]} ({mins[i + 1]:.6g})")
    return ConvergenceVerdict(passed=not failures, failures=failures)
