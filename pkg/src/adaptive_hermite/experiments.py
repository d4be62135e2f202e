"""Experiment orchestration: alpha policies, solver runs and table output."""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .basis_transform import AlphaJumpError, RepresentationRangeError, admissible_alpha_interval
from .hermite_core import HermiteBasis, hermite_basis
from .heat_solver import (
    HOMOGENEOUS,
    NONHOMOGENEOUS,
    ProblemSpec,
    SpectralState,
    alpha_homogeneous,
    alpha_nonhomogeneous,
    error_norms,
    run_segment,
    switch_alpha,
)
from .regressors import load_model, predict, train_mlp, train_svr
from .training_data import (
    Representation,
    build_spline_corpus,
    fc_features,
    gen_gaussian_samples,
    pv_features,
    select,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DIVERGED = "does not converge"

PROBLEMS = {"homogeneous": HOMOGENEOUS, "nonhomogeneous": NONHOMOGENEOUS}
ALPHA_LAWS = {"homogeneous": alpha_homogeneous, "nonhomogeneous": alpha_nonhomogeneous}
DEFAULT_UPDATES = {
    "homogeneous": tuple(round(0.1 * k, 10) for k in range(1, 11)),
    "nonhomogeneous": tuple(round(0.1 * k, 10) for k in range(1, 10)),
}
DEFAULT_INITIAL = {"homogeneous": 0.5, "nonhomogeneous": math.sqrt(2.0)}


class ConfigError(ValueError):
    pass


# -- policies -------------------------------------------------------------------


@dataclass
class AlphaPolicy:
    """Chooses the scaling factor at each update instant.

    ``kind`` is one of exact, constant, piecewise, random, ml. Parameters
    that do not apply to a kind are ignored.
    """

    kind: str
    initial_alpha: Optional[float] = None
    value: Optional[float] = None
    values: tuple = ()
    interval: tuple = ()
    seed: Optional[int] = None
    regressor: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.initial_alpha is not None:
            d["initial_alpha"] = self.initial_alpha
        if self.kind == "constant":
            d["value"] = self.value
        elif self.kind == "piecewise":
            d["values"] = list(self.values)
        elif self.kind == "random":
            d["interval"] = list(self.interval)
            d["seed"] = self.seed
        elif self.kind == "ml":
            d["regressor"] = dict(self.regressor)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AlphaPolicy":
        kind = d.get("kind")
        if kind not in ("exact", "constant", "piecewise", "random", "ml"):
            raise ConfigError(f"unknown policy kind {kind!r}")
        pol = cls(
            kind,
            d.get("initial_alpha"),
            d.get("value"),
            tuple(d.get("values", ())),
            tuple(d.get("interval", ())),
            d.get("seed"),
            dict(d.get("regressor", {})),
        )
        pol.validate()
        return pol

    def validate(self):
        positive = [self.initial_alpha, self.value, *self.values, *self.interval]
        if any(v is not None and not v > 0 for v in positive):
            raise ConfigError("policy scaling factors must be positive")
        if self.kind == "constant" and self.value is None:
            raise ConfigError("constant policy needs a value")
        if self.kind == "random" and (len(self.interval) != 2 or self.interval[0] > self.interval[1]):
            raise ConfigError("random policy needs an interval [lo, hi]")
        if self.kind == "ml" and str(self.regressor.get("representation", "")).upper() not in ("PV", "FC"):
            raise ConfigError("ml policy needs regressor.representation PV or FC")


def parse_policy(spec: str) -> AlphaPolicy:
    """Parse the CLI shorthand.

    exact | constant:V[@A0] | piecewise:V1,V2,...[@A0] | random:LO,HI[,SEED][@A0]
    | ml:svr|mlp:FC|PV[@A0]
    """
    body, _, init = spec.partition("@")
    a0 = float(init) if init else None
    kind, _, rest = body.partition(":")
    try:
        if kind == "exact":
            pol = AlphaPolicy("exact", a0)
        elif kind == "constant":
            pol = AlphaPolicy("constant", a0, value=float(rest))
        elif kind == "piecewise":
            pol = AlphaPolicy("piecewise", a0, values=tuple(float(v) for v in rest.split(",")))
        elif kind == "random":
            parts = rest.split(",")
            seed = int(parts[2]) if len(parts) > 2 else None
            pol = AlphaPolicy("random", a0, interval=(float(parts[0]), float(parts[1])), seed=seed)
        elif kind == "ml":
            learner, _, rep = rest.partition(":")
            pol = AlphaPolicy("ml", a0, regressor={"kind": learner, "representation": rep.upper()})
        else:
            raise ConfigError(f"unknown policy {spec!r}")
    except (ValueError, IndexError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed policy {spec!r}") from exc
    pol.validate()
    return pol


# -- configuration --------------------------------------------------------------


@dataclass
class ExperimentConfig:
    label: str
    problem: str
    n: int
    dt: float
    policy: AlphaPolicy
    t_final: float = 1.0
    update_times: Optional[tuple] = None
    seed: int = 0
    record_norms: bool = False

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if not (self.dt > 0 and self.t_final > 0):
            raise ConfigError("dt and t_final must be positive")
        steps = self.t_final / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ConfigError(f"t_final={self.t_final} is not a whole number of steps dt={self.dt}")
        times = self.updates()
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("update times must be strictly increasing")
        if times and (times[0] <= 0 or times[-1] > self.t_final + 1e-12):
            raise ConfigError("update times must lie in (0, t_final]")

    def updates(self) -> tuple:
        if self.update_times is None:
            return DEFAULT_UPDATES[self.problem]
        return tuple(float(t) for t in self.update_times)

    def initial_alpha(self) -> float:
        if self.policy.initial_alpha is not None:
            return float(self.policy.initial_alpha)
        return DEFAULT_INITIAL[self.problem]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "problem": self.problem,
            "n": self.n,
            "dt": self.dt,
            "t_final": self.t_final,
            "update_times": None if self.update_times is None else list(self.update_times),
            "seed": self.seed,
            "record_norms": self.record_norms,
            "policy": self.policy.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            return cls(
                label=str(d["label"]),
                problem=d["problem"],
                n=int(d["n"]),
                dt=float(d["dt"]),
                policy=AlphaPolicy.from_dict(d["policy"]),
                t_final=float(d.get("t_final", 1.0)),
                update_times=None if d.get("update_times") is None else tuple(d["update_times"]),
                seed=int(d.get("seed", 0)),
                record_norms=bool(d.get("record_norms", False)),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config key {exc}") from exc


@dataclass
class ExperimentReport:
    label: str
    problem: str
    n: int
    dt: float
    alpha_trajectory: list  # (t, alpha) pairs, starting at t = 0
    norms: Optional[tuple]
    converged: bool
    diverged_time: Optional[float] = None
    wall_time: float = 0.0
    clamp_events: list = field(default_factory=list)
    norms_at_updates: list = field(default_factory=list)
    snapshot: Optional[tuple] = None  # (x, u_N(x)) at the final time

    @property
    def status(self) -> str:
        return "ok" if self.converged else DIVERGED


# -- features and ML policies -----------------------------------------------------


def extract_features(state: SpectralState, representation) -> np.ndarray:
    """PV: u_N at the nodes. FC: its Fourier coefficients at unit scaling."""
    rep = Representation(representation)
    u = state.u_at_nodes()
    if rep is Representation.PV:
        return pv_features(state.basis, u)
    with np.errstate(over="raise", invalid="raise"):
        try:
            return fc_features(state.basis, u)
        except FloatingPointError as exc:
            raise RepresentationRangeError(str(exc)) from exc


_model_cache: dict = {}


def _regressor_key(reg: dict, n: int, seed: int) -> str:
    return json.dumps({"reg": reg, "n": n, "seed": seed}, sort_keys=True)


def train_regressor(reg: dict, basis: HermiteBasis, seed: int):
    """Train the model described by ``reg`` on its synthetic corpus."""
    rep = reg["representation"]
    corpus_kind = reg.get("corpus", "gaussian")
    corpus_seed = int(reg.get("corpus_seed", seed))
    if corpus_kind == "gaussian":
        samples = gen_gaussian_samples(
            basis,
            int(reg.get("count", 40)),
            tuple(reg.get("a_range", (0.2, 0.6))),
            tuple(reg.get("h_range", (0.0, 1.0))),
            corpus_seed,
        )
    elif corpus_kind == "spline":
        samples = build_spline_corpus(
            basis,
            int(reg.get("count", 40)),
            int(reg.get("m_interior", 5)),
            float(reg.get("c", 4.5)),
            float(reg.get("value_cap", 1.0)),
            tuple(reg.get("alpha_interval", (0.5, 1.5))),
            corpus_seed,
            random_support=bool(reg.get("random_support", False)),
        )
    else:
        raise ConfigError(f"unknown corpus {corpus_kind!r}")
    x, y = select(samples, rep)
    kind = reg.get("kind", "svr")
    if kind == "svr":
        return train_svr(x, y, float(reg.get("nu", 0.5)), float(reg.get("c_svr", 1.0)), reg.get("gamma"))
    if kind == "mlp":
        return train_mlp(
            x,
            y,
            tuple(reg.get("hidden", (20, 10))),
            int(reg.get("max_epochs", 500)),
            float(reg.get("target_mse", 1e-6)),
            int(reg.get("train_seed", seed)),
        )
    raise ConfigError(f"unknown regressor kind {kind!r}")


def _model_for(reg: dict, basis: HermiteBasis, seed: int):
    if reg.get("model_path"):
        return load_model(reg["model_path"])
    key = _regressor_key(reg, basis.n, seed)
    if key not in _model_cache:
        _model_cache[key] = train_regressor(reg, basis, seed)
    return _model_cache[key]


class _Chooser:
    """Stateful helper turning an AlphaPolicy into concrete alpha values."""

    def __init__(self, cfg: ExperimentConfig, basis: HermiteBasis, model=None):
        self.cfg = cfg
        self.policy = cfg.policy
        self.basis = basis
        self.law = ALPHA_LAWS[cfg.problem]
        self.rng = np.random.default_rng(cfg.seed if self.policy.seed is None else self.policy.seed)
        self.model = model
        self.clamps: list = []

    def __call__(self, k: int, state: SpectralState) -> float:
        pol = self.policy
        if pol.kind == "exact":
            return float(self.law(state.t))
        if pol.kind == "constant":
            return float(pol.value)
        if pol.kind == "piecewise":
            return float(pol.values[min(k, len(pol.values) - 1)])
        if pol.kind == "random":
            return float(self.rng.uniform(*pol.interval))
        feats = extract_features(state, pol.regressor["representation"])
        raw = float(np.asarray(predict(self.model, feats)).ravel()[0])
        lo, hi = admissible_alpha_interval(self.basis)
        alpha = min(max(raw, lo), hi) if math.isfinite(raw) else self.law(0.0)
        if alpha != raw:
            log.info("%s: clamped alpha %.6g to %.6g at t=%.3g", self.cfg.label, raw, alpha, state.t)
            self.clamps.append((state.t, raw, alpha))
        return alpha


# -- running --------------------------------------------------------------------


def run_experiment(cfg: ExperimentConfig, model=None) -> ExperimentReport:
    """Integrate with Euler between update instants, switching alpha at each.

    Divergence (sentinel hit, overflow on an alpha switch, or non-finite
    features) ends the run with ``converged=False``; it never raises.
    """
    start = time.perf_counter()
    problem: ProblemSpec = PROBLEMS[cfg.problem]
    basis = hermite_basis(cfg.n)
    if cfg.policy.kind == "ml" and model is None:
        model = _model_for(cfg.policy.regressor, basis, cfg.seed)
    choose = _Chooser(cfg, basis, model)

    total = int(round(cfg.t_final / cfg.dt))
    marks = [int(round(t / cfg.dt)) for t in cfg.updates()]
    state = SpectralState.initial(basis, problem, cfg.initial_alpha())
    trajectory = [(0.0, state.alpha)]
    norms_at = []
    done = 0
    diverged_time = None
    for k, mark in enumerate(marks + [total]):
        mark = min(mark, total)
        state = run_segment(state, mark - done, cfg.dt, problem.forcing)
        state = replace(state, t=mark * cfg.dt) if not state.diverged else state
        done = mark
        if state.diverged or not np.all(np.isfinite(state.p_at_nodes)):
            diverged_time = state.t
            break
        if k == len(marks):
            break
        if cfg.record_norms:
            norms_at.append((state.t, error_norms(state, problem.exact_solution)))
        try:
            new_alpha = choose(k, state)
            state = switch_alpha(state, new_alpha)
        except (AlphaJumpError, RepresentationRangeError) as exc:
            log.info("%s: run stopped at t=%.3g (%s)", cfg.label, state.t, exc)
            diverged_time = state.t
            break
        trajectory.append((state.t, state.alpha))

    if diverged_time is not None:
        return ExperimentReport(
            cfg.label, cfg.problem, cfg.n, cfg.dt, trajectory, None, False, diverged_time,
            time.perf_counter() - start, choose.clamps, norms_at,
        )
    norms = error_norms(state, problem.exact_solution)
    x = np.linspace(-8.0, 8.0, 401)
    return ExperimentReport(
        cfg.label, cfg.problem, cfg.n, cfg.dt, trajectory, norms, True, None,
        time.perf_counter() - start, choose.clamps, norms_at, (x, state.evaluate(x)),
    )


def _run_one(cfg_dict: dict) -> ExperimentReport:
    return run_experiment(ExperimentConfig.from_dict(cfg_dict))


def run_batch(configs: Sequence[ExperimentConfig], workers: int = 1) -> list[ExperimentReport]:
    """Run independent experiments, optionally in worker processes.

    Reports come back sorted by label so output does not depend on
    scheduling order.
    """
    if workers <= 1 or len(configs) <= 1:
        reports = [run_experiment(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_one, [c.to_dict() for c in configs]))
    order = {c.label: i for i, c in enumerate(configs)}
    return sorted(reports, key=lambda r: (order.get(r.label, len(order)), r.label))


# -- table files --------------------------------------------------------------------


def load_table_config(path) -> dict:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"{path}: expected schema_version {SCHEMA_VERSION}")
    if "runs" not in d:
        raise ConfigError(f"{path}: no runs listed")
    return d


def expand_runs(
    table: dict,
    dt: Optional[float] = None,
    paper_dt: bool = False,
    seed: Optional[int] = None,
    n: Optional[int] = None,
) -> list[ExperimentConfig]:
    """Merge per-run entries with the table defaults and CLI overrides."""
    defaults = table.get("defaults", {})
    out = []
    for run in table["runs"]:
        d = {**defaults, **run}
        d["policy"] = {**defaults.get("policy", {}), **run.get("policy", {})}
        if paper_dt and "paper_dt" in d:
            d["dt"] = d["paper_dt"]
        if dt is not None:
            d["dt"] = dt
        if n is not None:
            d["n"] = n
        if seed is not None:
            d["seed"] = seed
            d["policy"].pop("seed", None)
        d.pop("paper_dt", None)
        out.append(ExperimentConfig.from_dict(d))
    return out


def _fmt(v: float) -> str:
    return f"{v:.6e}"


def _write_csv(path: Path, header, rows):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _norm_cells(r: ExperimentReport, count: int) -> list:
    if not r.converged:
        return [DIVERGED] * count
    return [_fmt(v) for v in r.norms[:count]]


def _slug(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in label)


def emit_tables(reports: Sequence[ExperimentReport], out_path, layout: str = "policy") -> list[Path]:
    """Write the table CSV plus two-column plot files next to it.

    layouts: ``by_n`` (N, N1, N2, N3), ``grouped`` (label, N, N1, N2),
    ``policy`` (label, N1, N2), ``alpha`` (t, alpha per run).
    """
    out_path = Path(out_path)
    written = [out_path]
    if layout == "by_n":
        _write_csv(out_path, ["N", "N1", "N2", "N3"], [[r.n, *_norm_cells(r, 3)] for r in reports])
    elif layout == "grouped":
        _write_csv(
            out_path, ["policy", "N", "N1", "N2"], [[r.label.rsplit("/", 1)[0], r.n, *_norm_cells(r, 2)] for r in reports]
        )
    elif layout == "policy":
        _write_csv(out_path, ["policy", "N1", "N2"], [[r.label, *_norm_cells(r, 2)] for r in reports])
    elif layout == "alpha":
        times = sorted({round(t, 10) for r in reports for t, _ in r.alpha_trajectory})
        cols = []
        for r in reports:
            lookup = {round(t, 10): a for t, a in r.alpha_trajectory}
            cols.append([f"{lookup[t]:.6f}" if t in lookup else "" for t in times])
        rows = [[f"{t:g}", *(c[i] for c in cols)] for i, t in enumerate(times)]
        _write_csv(out_path, ["t", *(r.label for r in reports)], rows)
    else:
        raise ValueError(f"unknown layout {layout!r}")

    stem = out_path.with_suffix("")
    for r in reports:
        a_path = Path(f"{stem}_alpha_{_slug(r.label)}.dat")
        a_path.write_text("".join(f"{t:.6f} {a:.12e}\n" for t, a in r.alpha_trajectory))
        written.append(a_path)
        if r.snapshot is not None:
            s_path = Path(f"{stem}_solution_{_slug(r.label)}.dat")
            x, u = r.snapshot
            s_path.write_text("".join(f"{xi:.6f} {ui:.12e}\n" for xi, ui in zip(x, u)))
            written.append(s_path)
    return written
