"""Sweep configuration, parallel tau-sweeps and CSV/JSON output."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Optional, TextIO, Union

import numpy as np
import yaml

from .diagnostics import eigenphases, n_steps_floor, participation_ratio, simulation_accuracy, spacing_ratio
from .errors import ConfigError, FloquetLearnError
from .kicked_top import FloquetVariant, ModelParams, build_hamiltonians, floquet_operator
from .learning import constraint_matrix, parameter_distance, reconstruct, sample_initial_states
from .magnus import ANSATZ_LABELS, ansatz_set, project_fm_coefficients
from .rmt_oracle import ise_average_Q, lambda_rmt
from .spin_algebra import SpinSize, coherent_state

SCHEMA_VERSION = 1
DIAGNOSTICS = ("accuracy", "spacing", "pr", "learning", "rmt")


def _labels_for(k: int) -> tuple[str, ...]:
    return tuple(lab for group in ANSATZ_LABELS[: k + 1] for lab in group)


def log_grid(tau_min: float, tau_max: float, points: int) -> tuple[float, ...]:
    return tuple(float(t) for t in np.logspace(math.log10(tau_min), math.log10(tau_max), points))


ANSATZ_SIZES = {k: len(_labels_for(k)) for k in range(3)}


@dataclass(frozen=True)
class SweepConfig:
    two_s: int = 256
    params: ModelParams = ModelParams()
    variant: FloquetVariant = FloquetVariant.THREE_STEP
    tau_grid: tuple[float, ...] = log_grid(1e-2, 10.0, 60)
    ansatz_orders: tuple[int, ...] = (0, 1, 2)
    total_time: Optional[float] = None
    n_con: Optional[int] = None
    seed: int = 0
    diagnostics: tuple[str, ...] = DIAGNOSTICS
    accuracy_theta: float = 0.1
    accuracy_phi: float = 0.2

    @property
    def spin(self) -> SpinSize:
        return SpinSize(self.two_s)

    @property
    def resolved_total_time(self) -> float:
        """Total evolution time; defaults to ``100 / |J_z|``."""
        return 100.0 / abs(self.params.J_z) if self.total_time is None else self.total_time

    @property
    def resolved_n_con(self) -> int:
        return self.two_s + 1 if self.n_con is None else self.n_con

    def enabled(self, name: str) -> bool:
        return name in self.diagnostics

    def validate(self) -> "SweepConfig":
        if not isinstance(self.two_s, int) or self.two_s < 1:
            raise ConfigError("spin", f"2S must be a positive integer, got {self.two_s!r}")
        if self.params.J_z == 0:
            raise ConfigError("params.J_z", "must be nonzero")
        grid = np.asarray(self.tau_grid, dtype=float)
        if grid.size == 0:
            raise ConfigError("tau_grid", "must contain at least one value")
        if not np.all(np.isfinite(grid)) or np.any(grid <= 0):
            raise ConfigError("tau_grid", "all values must be finite and strictly positive")
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("tau_grid", "values must be sorted strictly ascending")
        bad = [k for k in self.ansatz_orders if k not in ANSATZ_SIZES]
        if bad:
            raise ConfigError("ansatz_orders", f"unsupported orders {bad}; allowed 0, 1, 2")
        unknown = [d for d in self.diagnostics if d not in DIAGNOSTICS]
        if unknown:
            raise ConfigError("diagnostics", f"unknown diagnostics {unknown}; allowed {list(DIAGNOSTICS)}")
        if not self.resolved_total_time > 0:
            raise ConfigError("total_time", "must be positive")
        if self.enabled("learning"):
            if not self.ansatz_orders:
                raise ConfigError("ansatz_orders", "learning needs at least one ansatz order")
            need = max(ANSATZ_SIZES[k] for k in self.ansatz_orders)
            if self.resolved_n_con <= need:
                raise ConfigError("n_con", f"must exceed the largest ansatz size {need}, got {self.resolved_n_con}")
        return self

    def to_dict(self) -> dict:
        return {
            "spin": self.two_s / 2,
            "params": self.params.as_dict(),
            "variant": self.variant.value,
            "tau_grid": list(self.tau_grid),
            "ansatz_orders": list(self.ansatz_orders),
            "total_time": self.total_time,
            "n_con": self.n_con,
            "seed": self.seed,
            "diagnostics": list(self.diagnostics),
            "accuracy_state": {"theta": self.accuracy_theta, "phi": self.accuracy_phi},
        }


PRESETS: dict[str, dict] = {
    "fig2": {
        "spin": 128,
        "tau": {"min": 1e-2, "max": 10.0, "points": 60},
        "diagnostics": ["accuracy", "spacing", "pr"],
    },
    "fig3": {
        "spin": 128,
        "tau": {"min": 1e-2, "max": 10.0, "points": 60},
        "ansatz_orders": [0, 1, 2],
        "diagnostics": ["learning", "rmt"],
    },
}


def _spin_to_two_s(value: Any) -> int:
    try:
        two_s = 2 * float(value)
    except (TypeError, ValueError):
        raise ConfigError("spin", f"expected a number, got {value!r}") from None
    if two_s < 1 or abs(two_s - round(two_s)) > 1e-12:
        raise ConfigError("spin", f"must be a positive integer or half-integer, got {value!r}")
    return int(round(two_s))


def _tau_grid(value: Any) -> tuple[float, ...]:
    if isinstance(value, Mapping):
        try:
            lo, hi, n = float(value["min"]), float(value["max"]), int(value["points"])
        except KeyError as exc:
            raise ConfigError(f"tau.{exc.args[0]}", "missing") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError("tau", str(exc)) from None
        spacing = value.get("spacing", "log")
        if n < 1:
            raise ConfigError("tau.points", "must be at least 1")
        if lo <= 0 or hi <= 0:
            raise ConfigError("tau.min", "tau bounds must be positive")
        if n == 1:
            return (lo,)
        if spacing == "log":
            return log_grid(lo, hi, n)
        if spacing == "linear":
            return tuple(float(t) for t in np.linspace(lo, hi, n))
        raise ConfigError("tau.spacing", f"expected 'log' or 'linear', got {spacing!r}")
    try:
        return tuple(float(t) for t in value)
    except (TypeError, ValueError):
        raise ConfigError("tau", f"expected a list of numbers or a min/max/points mapping, got {value!r}") from None


def _params(value: Any) -> ModelParams:
    if isinstance(value, str):
        try:
            return ModelParams.preset(value)
        except ValueError as exc:
            raise ConfigError("params", str(exc)) from None
    if not isinstance(value, Mapping):
        raise ConfigError("params", f"expected a preset name or a mapping, got {value!r}")
    try:
        base = ModelParams.preset(value.get("preset", "paper-default"))
    except ValueError as exc:
        raise ConfigError("params.preset", str(exc)) from None
    fields = {}
    for key, v in value.items():
        if key == "preset":
            continue
        if key not in base.as_dict():
            raise ConfigError(f"params.{key}", "unknown parameter")
        try:
            fields[key] = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"params.{key}", f"expected a number, got {v!r}") from None
    try:
        return replace(base, **fields)
    except ValueError as exc:
        raise ConfigError("params.J_z", str(exc)) from None


def _merge(base: dict, update: Mapping) -> dict:
    out = dict(base)
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def config_from_mapping(data: Mapping) -> SweepConfig:
    """Build a validated config from a nested mapping (parsed YAML/JSON or a preset)."""
    known = {"spin", "params", "variant", "tau", "tau_grid", "ansatz_orders", "total_time",
             "n_con", "seed", "diagnostics", "accuracy_state"}
    for key in data:
        if key not in known:
            raise ConfigError(str(key), "unknown configuration key")
    kw: dict[str, Any] = {}
    if "spin" in data:
        kw["two_s"] = _spin_to_two_s(data["spin"])
    if "params" in data:
        kw["params"] = _params(data["params"])
    if "variant" in data:
        try:
            kw["variant"] = FloquetVariant(data["variant"])
        except ValueError:
            raise ConfigError("variant", f"expected 'two-step' or 'three-step', got {data['variant']!r}") from None
    grid = data.get("tau_grid", data.get("tau"))
    if grid is not None:
        kw["tau_grid"] = _tau_grid(grid)
    if "ansatz_orders" in data:
        try:
            kw["ansatz_orders"] = tuple(int(k) for k in data["ansatz_orders"])
        except (TypeError, ValueError):
            raise ConfigError("ansatz_orders", f"expected a list of integers, got {data['ansatz_orders']!r}") from None
    for key, cast in (("total_time", float), ("seed", int)):
        if data.get(key) is not None:
            try:
                kw[key] = cast(data[key])
            except (TypeError, ValueError):
                raise ConfigError(key, f"expected a number, got {data[key]!r}") from None
    if data.get("n_con") is not None:
        try:
            kw["n_con"] = int(data["n_con"])
        except (TypeError, ValueError):
            raise ConfigError("n_con", f"expected an integer, got {data['n_con']!r}") from None
    if "diagnostics" in data:
        kw["diagnostics"] = tuple(str(d) for d in data["diagnostics"])
    if "accuracy_state" in data:
        state = data["accuracy_state"]
        try:
            kw["accuracy_theta"] = float(state.get("theta", 0.1))
            kw["accuracy_phi"] = float(state.get("phi", 0.2))
        except (AttributeError, TypeError, ValueError):
            raise ConfigError("accuracy_state", f"expected a theta/phi mapping, got {state!r}") from None
    return SweepConfig(**kw).validate()


def load_config(
    preset: Optional[str] = None,
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping] = None,
) -> SweepConfig:
    """Preset, then config file, then explicit overrides; later layers win."""
    data: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("preset", f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        data = _merge(data, PRESETS[preset])
    if path is not None:
        try:
            loaded = yaml.safe_load(Path(path).read_text())
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError("config", f"cannot parse {path}: {exc}") from None
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, Mapping):
            raise ConfigError("config", "top level must be a mapping")
        data = _merge(data, loaded)
    if overrides:
        data = _merge(data, {k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(data)


@dataclass
class TauRecord:
    tau: float
    qbar_e: Optional[float] = None
    r: Optional[float] = None
    pr: Optional[float] = None
    lambda1: dict[int, float] = field(default_factory=dict)
    parameter_distance: dict[int, float] = field(default_factory=dict)
    c_rec: dict[int, list[complex]] = field(default_factory=dict)
    lambda_rmt: dict[int, float] = field(default_factory=dict)
    error: Optional[str] = None


@dataclass
class SweepResult:
    config: SweepConfig
    records: list[TauRecord]
    ansatz_labels: dict[int, list[str]] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    def column(self, name: str, order: Optional[int] = None) -> np.ndarray:
        """Values of one record field across the tau grid (``nan`` where missing)."""
        out = []
        for rec in self.records:
            value = getattr(rec, name)
            if order is not None:
                value = value.get(order)
            out.append(np.nan if value is None else value)
        return np.asarray(out, dtype=float)

    @property
    def taus(self) -> np.ndarray:
        return np.array([rec.tau for rec in self.records])


def rmt_references(config: SweepConfig) -> dict[int, float]:
    return {k: lambda_rmt(ise_average_Q(ansatz_set(config.spin, k))) for k in config.ansatz_orders}


def evaluate_tau(config: SweepConfig, index: int, tau: float, rmt: Optional[dict[int, float]] = None) -> TauRecord:
    """All enabled diagnostics at one Trotter step; failures are recorded, not raised."""
    rec = TauRecord(tau=float(tau))
    if rmt:
        rec.lambda_rmt = dict(rmt)
    s = config.spin
    try:
        step = floquet_operator(config.params, s, tau, config.variant)
        H_target = build_hamiltonians(config.params, s)[3]
        if config.enabled("spacing") or config.enabled("pr"):
            spec = eigenphases(step)
            if config.enabled("spacing"):
                rec.r = spacing_ratio(spec)
            if config.enabled("pr"):
                rec.pr = participation_ratio(spec, H_target)
        if config.enabled("accuracy"):
            psi0 = coherent_state(s, config.accuracy_theta, config.accuracy_phi)
            trace = simulation_accuracy(step, H_target, psi0, n_steps_floor(config.resolved_total_time, tau))
            rec.qbar_e = trace.final_mean
        if config.enabled("learning"):
            rng = np.random.default_rng(np.random.SeedSequence([config.seed, index]))
            states = sample_initial_states(s, config.resolved_n_con, rng)
            for k in config.ansatz_orders:
                ansatz = ansatz_set(s, k, config.variant)
                result = reconstruct(constraint_matrix(step, states, ansatz, config.resolved_total_time))
                c_fm = project_fm_coefficients(config.params, s, k, tau, config.variant)
                rec.lambda1[k] = result.lambda1
                rec.c_rec[k] = [complex(c) for c in result.c_rec]
                rec.parameter_distance[k] = parameter_distance(c_fm, result.c_rec)
    except (FloquetLearnError, np.linalg.LinAlgError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def _version() -> str:
    from . import __version__

    return __version__


def _evaluate_task(args):
    return evaluate_tau(*args)


def run_sweep(config: SweepConfig, workers: int = 1) -> SweepResult:
    """Evaluate every tau in the grid; output is independent of `workers`."""
    config.validate()
    start = time.perf_counter()
    rmt = rmt_references(config) if config.enabled("rmt") else None
    tasks = [(config, i, tau, rmt) for i, tau in enumerate(config.tau_grid)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_evaluate_task, tasks))
    else:
        records = [_evaluate_task(t) for t in tasks]
    labels = {}
    if config.enabled("learning") or config.enabled("rmt"):
        labels = {k: list(_labels_for(k)) for k in config.ansatz_orders}
    metadata = {
        "seed": config.seed,
        "wall_time_s": time.perf_counter() - start,
        "version": _version(),
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "workers": workers,
    }
    return SweepResult(config, records, labels, metadata)


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _record_to_dict(rec: TauRecord) -> dict:
    return {
        "tau": rec.tau,
        "qbar_e": rec.qbar_e,
        "r": rec.r,
        "pr": rec.pr,
        "lambda1": {str(k): v for k, v in rec.lambda1.items()},
        "parameter_distance": {str(k): v for k, v in rec.parameter_distance.items()},
        "c_rec": {str(k): [_complex_pair(z) for z in v] for k, v in rec.c_rec.items()},
        "lambda_rmt": {str(k): v for k, v in rec.lambda_rmt.items()},
        "error": rec.error,
    }


def _record_from_dict(d: Mapping) -> TauRecord:
    return TauRecord(
        tau=d["tau"],
        qbar_e=d.get("qbar_e"),
        r=d.get("r"),
        pr=d.get("pr"),
        lambda1={int(k): v for k, v in d.get("lambda1", {}).items()},
        parameter_distance={int(k): v for k, v in d.get("parameter_distance", {}).items()},
        c_rec={int(k): [complex(re, im) for re, im in v] for k, v in d.get("c_rec", {}).items()},
        lambda_rmt={int(k): v for k, v in d.get("lambda_rmt", {}).items()},
        error=d.get("error"),
    )


def to_json(result: SweepResult, include_metadata: bool = True) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": result.config.to_dict(),
        "ansatz_labels": {str(k): v for k, v in result.ansatz_labels.items()},
        "records": [_record_to_dict(r) for r in result.records],
    }
    if include_metadata:
        doc["metadata"] = result.metadata
    return json.dumps(doc, indent=2) + "\n"


def from_json(text: str) -> SweepResult:
    doc = json.loads(text)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {doc.get('schema_version')!r}")
    return SweepResult(
        config=config_from_mapping(doc["config"]),
        records=[_record_from_dict(r) for r in doc["records"]],
        ansatz_labels={int(k): list(v) for k, v in doc.get("ansatz_labels", {}).items()},
        metadata=doc.get("metadata", {}),
    )


def csv_columns(config: SweepConfig) -> list[str]:
    cols = ["tau", "qbar_e", "r", "pr"]
    for k in config.ansatz_orders:
        cols += [f"lambda1_k{k}", f"lambda_rmt_k{k}", f"param_dist_k{k}"]
    return cols + ["error"]


def to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_columns(result.config))
    for rec in result.records:
        row = [rec.tau, rec.qbar_e, rec.r, rec.pr]
        for k in result.config.ansatz_orders:
            row += [rec.lambda1.get(k), rec.lambda_rmt.get(k), rec.parameter_distance.get(k)]
        row.append(rec.error)
        writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def emit(result: SweepResult, fmt: str = "json", out: Union[str, Path, TextIO, None] = None) -> str:
    """Serialise `result` as ``csv`` or ``json``; write it to `out` if given."""
    if fmt == "json":
        text = to_json(result)
    elif fmt == "csv":
        text = to_csv(result)
    else:
        raise ValueError(f"unknown output format {fmt!r}; expected 'csv' or 'json'")
    if out is None:
        return text
    if hasattr(out, "write"):
        out.write(text)
    else:
        Path(out).write_text(text)
    return text
