"""Parameter sweeps over the state families, threshold detection, serialization."""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
import yaml

from . import __version__
from .channels import coherent_subtract, pure_loss
from .criteria import SteeringDirection, steering_report
from .fock import TruncationWarning
from .states import MixtureParams, SpdcParams, mixture_state, spdc_state, tmsv

WITNESS_COLUMNS = ("s_cm", "s_hz", "s_lr", "s_cr")
BOUNDARY_BAND = 1e-9


class ConfigError(ValueError):
    """Invalid or inconsistent sweep configuration."""


class PhysicsError(RuntimeError):
    """A physics-layer failure, annotated with the offending parameter value."""


_FAMILIES = {"spdc", "subtracted_tmsv", "mixture"}
_PARAMETERS = {"spdc": "xi", "subtracted_tmsv": "eta", "mixture": "p"}


@dataclass(frozen=True)
class SweepConfig:
    experiment: str
    family: str
    start: float
    stop: float
    step: float
    orders: tuple[int, int] = (1, 1)
    steering_party: str = "A"
    r: float = 1.0
    r_a: float = 0.5
    r_b: float = 0.5
    alpha_p: float = 5.0
    cutoff_a: int = 24
    cutoff_b: int = 24
    binning: float = 0.0
    hz_estimator: str = "direct"
    hz_centered: bool = True
    cr_subgrid: int = 1
    cr_order_pairs: tuple[tuple[int, int], ...] = ()
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ConfigError(f"unknown family '{self.family}'")
        if self.step <= 0:
            raise ConfigError("step must be > 0")
        if self.stop < self.start:
            raise ConfigError("empty sweep range")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.cr_subgrid < 0:
            raise ConfigError("cr_subgrid must be >= 0 (0 disables CR)")
        if self.hz_estimator not in ("direct", "standard_form"):
            raise ConfigError("hz_estimator must be direct or standard_form")

    @property
    def parameter(self) -> str:
        return _PARAMETERS[self.family]

    def direction(self, orders: tuple[int, int] | None = None) -> SteeringDirection:
        k, l = orders or self.orders
        return SteeringDirection(self.steering_party, k, l)

    def grid(self) -> np.ndarray:
        count = int(round((self.stop - self.start) / self.step)) + 1
        return self.start + self.step * np.arange(count)


def load_config(path: str) -> SweepConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: not a mapping")
    try:
        sweep = raw.get("sweep", {})
        physics = raw.get("physics", {})
        cutoffs = raw.get("cutoffs", {})
        output = raw.get("output", {})
        pairs = tuple(tuple(p) for p in raw.get("cr_order_pairs", ()))
        return SweepConfig(
            experiment=raw["experiment"],
            family=raw["family"],
            start=float(sweep["start"]),
            stop=float(sweep["stop"]),
            step=float(sweep["step"]),
            orders=tuple(physics.get("orders", (1, 1))),
            steering_party=physics.get("steering_party", "A"),
            r=float(physics.get("r", 1.0)),
            r_a=float(physics.get("r_a", 0.5)),
            r_b=float(physics.get("r_b", 0.5)),
            alpha_p=float(physics.get("alpha_p", 5.0)),
            cutoff_a=int(cutoffs.get("a", 24)),
            cutoff_b=int(cutoffs.get("b", 24)),
            binning=float(raw.get("binning", 0.0)),
            hz_estimator=raw.get("hz_estimator", "direct"),
            hz_centered=bool(raw.get("hz_centered", True)),
            cr_subgrid=int(raw.get("cr_subgrid", 1)),
            cr_order_pairs=pairs,
            out=output.get("path"),
            format=output.get("format", "csv"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc


def build_state(config: SweepConfig, value: float):
    """State of the configured family at one swept-parameter value."""
    if config.family == "spdc":
        return spdc_state(SpdcParams(
            xi=value, cutoff_a=config.cutoff_a, cutoff_b=config.cutoff_b,
            alpha_p=config.alpha_p))
    if config.family == "subtracted_tmsv":
        if not 0.0 <= value <= 1.0:
            raise PhysicsError(f"eta={value} outside [0, 1]")
        psi = tmsv(config.r, (config.cutoff_a, config.cutoff_b))
        rho = pure_loss(psi, 0, value)
        rho = pure_loss(rho, 1, value)
        subtracted, _ = coherent_subtract(rho)
        return subtracted
    if config.family == "mixture":
        return mixture_state(
            MixtureParams(p_tmsv=value, r=config.r, r_a=config.r_a, r_b=config.r_b),
            (config.cutoff_a, config.cutoff_b))
    raise ConfigError(f"unknown family '{config.family}'")


@dataclass(frozen=True)
class SweepRow:
    value: float
    witnesses: dict[str, float | None]
    flags: str


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    rows: tuple[SweepRow, ...]
    thresholds: dict[str, float]
    provenance: dict

    def column_names(self) -> list[str]:
        if self.rows:
            return list(self.rows[0].witnesses.keys())
        if self.config.cr_order_pairs:
            return [f"s_cr_{_order_tag(k, l)}" for k, l in self.config.cr_order_pairs]
        return list(WITNESS_COLUMNS)


def _order_tag(k: int, l: int) -> str:
    total = k + l
    suffix = {1: "st", 2: "nd", 3: "rd"}.get(total if total < 20 else total % 10, "th")
    return f"{total}{suffix}"


def evaluate_point(config: SweepConfig, value: float, with_cr: bool) -> SweepRow:
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", TruncationWarning)
            state = build_state(config, value)
            if config.cr_order_pairs:
                from .conditioning import s_cr as _s_cr

                witnesses: dict[str, float | None] = {}
                for k, l in config.cr_order_pairs:
                    witnesses[f"s_cr_{_order_tag(k, l)}"] = _s_cr(
                        state, config.direction((k, l)), binning=config.binning)
            else:
                report = steering_report(state, config.direction(),
                                         binning=config.binning, include_cr=with_cr,
                                         hz_estimator=config.hz_estimator,
                                         hz_centered=config.hz_centered)
                witnesses = {"s_cm": report.s_cm, "s_hz": report.s_hz,
                             "s_lr": report.s_lr, "s_cr": report.s_cr}
        flags = "truncation" if any(
            issubclass(w.category, TruncationWarning) for w in caught) else ""
        return SweepRow(value=value, witnesses=witnesses, flags=flags)
    except (ConfigError, PhysicsError):
        raise
    except Exception as exc:
        raise PhysicsError(f"{config.parameter}={value:g}: {exc}") from exc


def _point_task(args):
    config, value, with_cr = args
    return evaluate_point(config, value, with_cr)


def run_sweep(config: SweepConfig, workers: int = 1) -> SweepResult:
    values = config.grid()
    tasks = []
    for i, v in enumerate(values):
        with_cr = config.cr_subgrid > 0 and i % config.cr_subgrid == 0
        tasks.append((config, float(v), with_cr))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_point_task, tasks))
    else:
        rows = [_point_task(t) for t in tasks]
    rows.sort(key=lambda r: r.value)
    thresholds = {}
    columns = (list(rows[0].witnesses.keys()) if rows else [])
    for name in columns:
        crossing = _interpolated_crossing(rows, name)
        if crossing is not None:
            thresholds[name] = crossing
    return SweepResult(config=config, rows=tuple(rows),
                       thresholds=thresholds, provenance=_provenance(config))


def _interpolated_crossing(rows, name: str) -> float | None:
    """Linear interpolation of the first sign change in the sampled rows."""
    present = [r for r in rows if r.witnesses.get(name) is not None]
    for lo, hi in zip(present, present[1:]):
        a, b = lo.witnesses[name], hi.witnesses[name]
        if abs(a) <= BOUNDARY_BAND or abs(b) <= BOUNDARY_BAND:
            # boundary point (e.g. the vacuum at zero coupling); not a
            # genuine sign change
            continue
        if (a < 0) != (b < 0):
            return lo.value + (hi.value - lo.value) * (-a) / (b - a)
    return None


def _provenance(config: SweepConfig) -> dict:
    return {
        "version": __version__,
        "cutoffs": [config.cutoff_a, config.cutoff_b],
        "binning": config.binning,
        "hz_estimator": config.hz_estimator,
        "hz_centered": config.hz_centered,
        "classical_pump_approximation": config.family == "spdc",
        "boundary_band": 1e-9,
        "threshold_tolerance": 1e-3,
    }


def _witness_at(config: SweepConfig, name: str, value: float) -> float:
    row = evaluate_point(config, value, with_cr=name.startswith("s_cr"))
    out = row.witnesses.get(name)
    if out is None:
        raise PhysicsError(f"witness {name} unavailable at {value:g}")
    return out


def find_threshold(config: SweepConfig, witness: str,
                   result: SweepResult | None = None,
                   tol: float = 1e-3) -> float:
    """Bisect the sign change of one witness to absolute tolerance in the parameter."""
    if result is None:
        result = run_sweep(config)
    rows = [r for r in result.rows if r.witnesses.get(witness) is not None]
    if len(rows) < 2:
        raise ValueError(f"witness '{witness}' evaluated at fewer than two points")
    bracket = None
    for lo, hi in zip(rows, rows[1:]):
        a, b = lo.witnesses[witness], hi.witnesses[witness]
        if abs(a) <= BOUNDARY_BAND or abs(b) <= BOUNDARY_BAND:
            continue
        if (a < 0) != (b < 0):
            bracket = (lo.value, hi.value, a, b)
            break
    if bracket is None:
        raise ValueError(f"no sign change of '{witness}' in the sweep range")
    lo, hi, f_lo, f_hi = bracket
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = _witness_at(config, witness, mid)
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return 0.5 * (lo + hi)


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    return f"{value:.12g}"


def emit(result: SweepResult, path: str, fmt: str | None = None) -> None:
    """Write the sweep as CSV (param,s_cm,s_hz,s_lr,s_cr,flags) or JSON."""
    fmt = fmt or result.config.format
    if fmt == "csv":
        cols = result.column_names()
        lines = ["param," + ",".join(cols) + ",flags"]
        for row in result.rows:
            cells = [_fmt(row.value)] + [_fmt(row.witnesses.get(c)) for c in cols]
            cells.append(row.flags)
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
    elif fmt == "json":
        payload = {
            "experiment": result.config.experiment,
            "parameter": result.config.parameter,
            "rows": [
                {"param": float(_fmt(row.value)),
                 **{k: (None if v is None else float(_fmt(v)))
                    for k, v in row.witnesses.items()},
                 "flags": row.flags}
                for row in result.rows
            ],
            "thresholds": {k: float(_fmt(v)) for k, v in result.thresholds.items()},
            "provenance": result.provenance,
            "config": {k: v for k, v in asdict(result.config).items() if v is not None},
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        raise ConfigError(f"unknown output format '{fmt}'")
    with open(path, "w") as fh:
        fh.write(text)
