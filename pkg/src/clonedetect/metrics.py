"""Sweeps, CSV I/O, complexity fits and detection-rate reports."""
from __future__ import annotations

import csv
import dataclasses
import math
import typing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .netsim import PROTOCOLS, ConfigError, SimConfig, Trace, run

CSV_HEADER = (
    "protocol,n,degree_D,diameter_s,load,seed,ticks,messages_total,bytes_total,"
    "station_peak_entries,node_peak_memory_entries,clones_injected,clones_detected,"
    "false_positives,mean_detection_latency_ticks"
)
Z95 = 1.959963984540054


class SpecError(ValueError):
    """A sweep spec or CLI input is malformed."""


class CsvIOError(OSError):
    pass


@dataclass(frozen=True)
class MetricsRow:
    protocol: str
    n: int
    degree_D: int
    diameter_s: int
    load: float
    seed: int
    ticks: int
    messages_total: int
    bytes_total: int
    station_peak_entries: int
    node_peak_memory_entries: int
    clones_injected: int
    clones_detected: int
    false_positives: int
    # -1.0 when nothing was detected
    mean_detection_latency_ticks: float

    def __post_init__(self):
        if self.clones_detected > self.clones_injected:
            raise ValueError("clones_detected exceeds clones_injected")

    @classmethod
    def from_trace(cls, trace: Trace) -> "MetricsRow":
        cfg = trace.config
        return cls(
            protocol=cfg.protocol,
            n=cfg.n,
            degree_D=cfg.degree_D,
            diameter_s=trace.diameter_s,
            load=float(cfg.load),
            seed=cfg.seed,
            ticks=cfg.ticks,
            messages_total=trace.transmissions,
            bytes_total=trace.bytes_total,
            station_peak_entries=trace.station_peak_entries,
            node_peak_memory_entries=trace.node_peak_memory_entries,
            clones_injected=trace.clones_injected,
            clones_detected=trace.clones_detected,
            false_positives=trace.false_positives,
            mean_detection_latency_ticks=round(trace.mean_detection_latency, 3),
        )

    @property
    def key(self) -> tuple:
        return (self.protocol, self.n, self.load, self.seed)

    @property
    def detection_rate(self) -> float:
        return self.clones_detected / self.clones_injected if self.clones_injected else math.nan


# -- sweep spec ---------------------------------------------------------------------

_ALIASES = {
    "degree": "degree_D",
    "clones": "clone_count",
    "clone_tick": "clone_injection_tick",
    "period": "generation_period",
    "trials_per_cell": "trials",
}
_SIM_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}
_SIM_HINTS = typing.get_type_hints(SimConfig)


def _coerce(name: str, text: str):
    hint = _SIM_HINTS[name]
    base = next((a for a in typing.get_args(hint) if a is not type(None)), hint)
    if text.lower() in ("none", "") and typing.get_args(hint):
        return None
    if base is bool:
        if text.lower() in ("1", "true", "yes"):
            return True
        if text.lower() in ("0", "false", "no"):
            return False
        raise SpecError(f"{name}: expected a boolean, got {text!r}")
    try:
        return base(text)
    except ValueError as exc:
        raise SpecError(f"{name}: cannot parse {text!r}") from exc


@dataclass(frozen=True)
class SweepSpec:
    protocols: tuple[str, ...]
    n_values: tuple[int, ...]
    load_values: tuple[float, ...]
    trials: int = 1
    base_seed: int = 0
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.protocols or not self.n_values or not self.load_values:
            raise SpecError("protocols, n_values and load_values must be non-empty")
        if self.trials < 1:
            raise SpecError("trials must be >= 1")
        for p in self.protocols:
            if p not in PROTOCOLS:
                raise SpecError(f"unknown protocol {p!r}")
        for key in self.overrides:
            if key not in _SIM_FIELDS or key in ("protocol", "n", "load", "seed"):
                raise SpecError(f"unknown or non-overridable SimConfig field {key!r}")

    def cells(self) -> list[SimConfig]:
        configs = []
        for protocol in sorted(self.protocols):
            for n in sorted(self.n_values):
                for load in sorted(self.load_values):
                    for trial in range(self.trials):
                        configs.append(
                            SimConfig(
                                protocol=protocol,
                                n=n,
                                load=float(load),
                                seed=self.base_seed + trial,
                                **self.overrides,
                            )
                        )
        return configs

    @classmethod
    def parse(cls, text: str) -> "SweepSpec":
        values: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SpecError(f"line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            values[_ALIASES.get(key, key)] = value

        def items(key: str) -> list[str]:
            if key not in values:
                raise SpecError(f"missing required key {key!r}")
            return [v.strip() for v in values.pop(key).split(",") if v.strip()]

        try:
            protocols = tuple(items("protocols"))
            n_values = tuple(int(v) for v in items("n_values"))
            load_values = tuple(float(v) for v in items("load_values"))
            trials = int(values.pop("trials", "1"))
            base_seed = int(values.pop("base_seed", "0"))
        except ValueError as exc:
            raise SpecError(str(exc)) from exc
        overrides = {}
        for key, value in values.items():
            if key not in _SIM_FIELDS:
                raise SpecError(f"unknown key {key!r}")
            overrides[key] = _coerce(key, value)
        return cls(protocols, n_values, load_values, trials, base_seed, overrides)

    @classmethod
    def load(cls, path) -> "SweepSpec":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise CsvIOError(f"cannot read spec {path}: {exc.strerror}") from exc
        return cls.parse(text)


def run_cell(config: SimConfig) -> MetricsRow:
    return MetricsRow.from_trace(run(config))


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[MetricsRow]:
    """One row per (protocol, n, load, trial), sorted by key whatever the execution order."""
    configs = spec.cells()
    for cfg in configs:
        try:
            cfg.validate()
        except ConfigError as exc:
            raise SpecError(f"cell protocol={cfg.protocol} n={cfg.n} load={cfg.load} seed={cfg.seed}: {exc}") from exc
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_cell, configs))
    else:
        rows = [run_cell(cfg) for cfg in configs]
    return sorted(rows, key=lambda r: r.key)


# -- CSV ----------------------------------------------------------------------------


def _format(row: MetricsRow) -> list[str]:
    out = []
    for f in dataclasses.fields(MetricsRow):
        value = getattr(row, f.name)
        if f.name == "mean_detection_latency_ticks":
            out.append(f"{value:.3f}")
        elif isinstance(value, float):
            out.append(repr(value))
        else:
            out.append(str(value))
    return out


def emit_csv(rows: Iterable[MetricsRow], path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            fh.write(CSV_HEADER + "\n")
            for row in rows:
                writer.writerow(_format(row))
    except OSError as exc:
        raise CsvIOError(f"cannot write {path}: {exc.strerror}") from exc
    return path


def parse_csv(path) -> list[MetricsRow]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CsvIOError(f"cannot read {path}: {exc.strerror}") from exc
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise SpecError(f"{path}: unexpected CSV header")
    hints = typing.get_type_hints(MetricsRow)
    rows = []
    for rec in csv.DictReader(lines):
        try:
            rows.append(MetricsRow(**{k: hints[k](v) for k, v in rec.items()}))
        except (TypeError, ValueError) as exc:
            raise SpecError(f"{path}: bad row {rec}: {exc}") from exc
    return rows


# -- complexity fit -------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    protocol: str
    exponent: float
    intercept: float
    r_squared: float
    n_values: tuple[int, ...]


def fit_complexity(rows: Sequence[MetricsRow], protocol: str) -> FitResult:
    """Least-squares slope of log(messages_total) against log(n) on load-0 rows."""
    by_n: dict[int, list[int]] = {}
    for row in rows:
        if row.protocol == protocol and row.load == 0:
            by_n.setdefault(row.n, []).append(row.messages_total)
    if len(by_n) < 4:
        raise SpecError(f"{protocol}: need load-0 rows for >= 4 distinct n values, have {len(by_n)}")
    ns = sorted(by_n)
    x = np.log(ns)
    y = np.log([np.mean(by_n[n]) for n in ns])
    fit = stats.linregress(x, y)
    return FitResult(protocol, float(fit.slope), float(fit.intercept), float(fit.rvalue**2), tuple(ns))


# -- detection report -----------------------------------------------------------------


@dataclass(frozen=True)
class ReportRow:
    protocol: str
    load: float
    trials: int
    mean_rate: float
    std_err: float

    @property
    def interval(self) -> tuple[float, float]:
        return (self.mean_rate - Z95 * self.std_err, self.mean_rate + Z95 * self.std_err)


def detection_report(rows: Sequence[MetricsRow], load_levels: Optional[Sequence[float]] = None) -> list[ReportRow]:
    cells: dict[tuple[float, str], list[float]] = {}
    for row in rows:
        if row.clones_injected == 0:
            continue
        if load_levels is not None and row.load not in load_levels:
            continue
        cells.setdefault((row.load, row.protocol), []).append(row.detection_rate)
    if not cells:
        raise SpecError("no adversarial rows (clones_injected > 0) to report on")
    report = []
    for (load, protocol), rates in sorted(cells.items()):
        r = np.asarray(rates)
        se = float(r.std(ddof=1) / math.sqrt(len(r))) if len(r) > 1 else 0.0
        report.append(ReportRow(protocol, load, len(r), float(r.mean()), se))
    return report


@dataclass(frozen=True)
class OrderingVerdict:
    higher: str
    lower: str
    load: float
    difference: float
    difference_low: float

    @property
    def holds(self) -> bool:
        return self.difference >= 0

    @property
    def confirmed(self) -> bool:
        """The 95% interval of the difference excludes a reversal."""
        return self.difference_low >= -1e-12


DEFAULT_ORDER = ("rmulticast", "ppp", "broadcast")


def ordering_check(
    report: Sequence[ReportRow], order: Sequence[str] = DEFAULT_ORDER, load: Optional[float] = None
) -> list[OrderingVerdict]:
    """Check mean rate(order[0]) >= rate(order[1]) >= ... at ``load`` (default: highest load)."""
    if load is None:
        load = max(r.load for r in report)
    cell = {r.protocol: r for r in report if r.load == load}
    missing = [p for p in order if p not in cell]
    if missing:
        raise SpecError(f"load {load}: no rows for {', '.join(missing)}")
    verdicts = []
    for hi, lo in zip(order, order[1:]):
        a, b = cell[hi], cell[lo]
        diff = a.mean_rate - b.mean_rate
        se = math.hypot(a.std_err, b.std_err)
        verdicts.append(OrderingVerdict(hi, lo, load, diff, diff - Z95 * se))
    return verdicts


# -- Table 1 reference --------------------------------------------------------------------

REFERENCE_TABLE = {
    "EDD": ("O(n)", "O(n)"),
    "SDC": ("O(n) + O(s)", "NAP"),
    "Randomized Multicast": ("O(n²)", "O(n)"),
    "SET": ("O(n)", "O(D)"),
    "RED": ("O(√n)", "O(D)"),
    "PPP": ("O(n)", "O(s)"),
}
_PROTOCOL_ROWS = {"ppp": "PPP", "rmulticast": "Randomized Multicast"}


def reference_table() -> dict[str, tuple[str, str]]:
    return dict(REFERENCE_TABLE)


def lookup(name: str) -> tuple[str, str]:
    """Communication and memory complexity for a protocol name or CLI alias."""
    name = _PROTOCOL_ROWS.get(name, name)
    for key, value in REFERENCE_TABLE.items():
        if key.lower() == name.lower():
            return value
    raise KeyError(name)
