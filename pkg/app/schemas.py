"""
JSON run configuration: pydantic input models plus conversion to domain types

Field names carry their units (supply_current_uA, delta_V, ...). Sweep axes
and encoding channels address a NetworkConfig scalar by parameter path and
state the unit their numbers are written in.
"""

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .config import CONFIG
from .errors import ConfigError, InvalidParametersError, OscLabError
from .network import U64_MAX, CouplingMatrix, ExternalDrive, NetworkConfig, OscillatorParams
from .reservoir import REFERENCE_READOUT, InputEncoding, PipelineConfig, ReadoutNeuron, SpikeSequenceInput
from .sweep import AxisSpec, SweepSpec
from .sync_metrics import MetricConfig

UNITS: Dict[str, Dict[str, float]] = {
    "current": {"A": 1.0, "mA": 1e-3, "uA": 1e-6},
    "capacitance": {"F": 1.0, "uF": 1e-6, "nF": 1e-9},
    "voltage": {"V": 1.0, "mV": 1e-3},
    "resistance": {"ohm": 1.0, "kohm": 1e3},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6},
    "level": {"1": 1.0},
}

_FIELD_DIMENSION = {
    "supply_current": "current",
    "capacitance": "capacitance",
    "threshold_voltage": "voltage",
    "hold_voltage": "voltage",
    "noise_sigma": "voltage",
    "on_resistance": "resistance",
}


def path_dimension(path: str) -> str:
    parts = path.split(".")
    if parts[0] == "oscillators" and len(parts) == 3 and parts[2] in _FIELD_DIMENSION:
        return _FIELD_DIMENSION[parts[2]]
    if parts[0] == "coupling":
        return "voltage"
    if parts[0] == "drives" and len(parts) >= 3:
        return "time" if parts[2] == "pulse_width" else "voltage"
    if parts[0] == "sequences" and len(parts) == 2:
        return "level"
    raise InvalidParametersError(f"unknown parameter path {path!r}")


def unit_scale(path: str, unit: str) -> float:
    dimension = path_dimension(path)
    try:
        return UNITS[dimension][unit]
    except KeyError:
        raise InvalidParametersError(
            f"unit {unit!r} does not fit {path} ({dimension}: {', '.join(UNITS[dimension])})"
        ) from None


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class OscillatorIn(_Model):
    supply_current_uA: float
    capacitance_nF: float = CONFIG.capacitance * 1e9
    threshold_voltage_V: float = CONFIG.threshold_voltage
    hold_voltage_V: float = CONFIG.hold_voltage
    on_resistance_ohm: float = CONFIG.on_resistance
    noise_sigma_mV: float = CONFIG.noise_sigma * 1e3
    initial_voltage_V: float = 0.0


class CouplingIn(_Model):
    delta_V: Optional[float] = None
    matrix_V: Optional[List[List[float]]] = None

    @model_validator(mode="after")
    def _one_form(self) -> "CouplingIn":
        if self.delta_V is not None and self.matrix_V is not None:
            raise ValueError("give either delta_V or matrix_V, not both")
        return self


class DriveIn(_Model):
    spike_times_s: List[float]
    pulse_width_us: float
    delta_ext_V: List[float]


class NetworkIn(_Model):
    seed: int = Field(0, ge=0, le=U64_MAX)
    oscillators: List[OscillatorIn] = Field(min_length=1)
    coupling: CouplingIn = CouplingIn()
    drives: List[DriveIn] = []
    streams: Optional[List[int]] = None


class SimulationIn(_Model):
    warmup_spikes: int = Field(CONFIG.warmup_spikes, ge=0)
    record_spikes: int = Field(CONFIG.record_spikes, ge=1)


class MetricsIn(_Model):
    epsilon_us: Optional[float] = None
    mu_th_percent: float = CONFIG.mu_th
    min_oscillations: int = CONFIG.min_oscillations
    max_oscillations: int = CONFIG.analysis_window
    epsilon_fraction: float = CONFIG.epsilon_fraction


class AxisIn(_Model):
    path: str
    unit: str
    min_value: float
    max_value: float
    steps: int


class SweepIn(_Model):
    axis_x: AxisIn
    axis_y: AxisIn
    observed_pair: Tuple[int, int] = (0, 1)
    base_seed: int = Field(0, ge=0, le=U64_MAX)


class ChannelIn(_Model):
    target: str
    unit: str
    offset: float
    gain: float


class SequenceIn(_Model):
    spike_times_s: List[float]
    pulse_width_us: float
    targets_V: Dict[int, float] = Field(min_length=1)


class ReadoutIn(_Model):
    bias_weight: float
    input_weights: List[float]
    feature_weights: List[float]


class PipelineIn(_Model):
    channels: List[ChannelIn] = Field(min_length=1)
    sequences: List[SequenceIn] = []
    readout: ReadoutIn = ReadoutIn(
        bias_weight=REFERENCE_READOUT.bias_weight,
        input_weights=list(REFERENCE_READOUT.input_weights),
        feature_weights=list(REFERENCE_READOUT.feature_weights),
    )
    pair: Tuple[int, int] = (0, 1)
    feature: Literal["shr", "mu"] = "shr"
    train_readout: bool = False


class RunConfigIn(_Model):
    network: NetworkIn
    simulation: SimulationIn = SimulationIn()
    metrics: MetricsIn = MetricsIn()
    sweep: Optional[SweepIn] = None
    pipeline: Optional[PipelineIn] = None


@dataclass(frozen=True)
class RunConfig:
    network: NetworkConfig
    warmup_spikes: int
    record_spikes: int
    metric_cfg: MetricConfig
    sweep: Optional[SweepSpec]
    pipeline: Optional[PipelineConfig]
    resolved: Dict[str, Any]  # validated document with defaults filled in

    def with_seed(self, seed: int) -> "RunConfig":
        """Override the network seed and the sweep base seed"""
        resolved = json.loads(json.dumps(self.resolved))
        resolved["network"]["seed"] = int(seed)
        if resolved.get("sweep") is not None:
            resolved["sweep"]["base_seed"] = int(seed)
        return replace(
            self,
            network=replace(self.network, seed=int(seed)),
            sweep=None if self.sweep is None else replace(self.sweep, template=replace(self.sweep.template, seed=int(seed)), base_seed=int(seed)),
            pipeline=None if self.pipeline is None else replace(self.pipeline, template=replace(self.pipeline.template, seed=int(seed))),
            resolved=resolved,
        )


# Line lookup ---------------------------------------------------------------

_WS = re.compile(r"[ \t\n\r]*")


def key_positions(text: str) -> Dict[Tuple, int]:
    """Character offset of every key / array element of a valid JSON document, by loc path"""
    positions: Dict[Tuple, int] = {}
    decoder = json.JSONDecoder()

    def skip(i: int) -> int:
        return _WS.match(text, i).end()

    def value(i: int, path: Tuple) -> int:
        i = skip(i)
        positions.setdefault(path, i)
        ch = text[i]
        if ch == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                i = skip(i)
                key_at = i
                key, i = json.decoder.scanstring(text, i + 1)
                positions[path + (key,)] = key_at
                i = skip(i) + 1  # colon
                i = skip(value(i, path + (key,)))
                if text[i] == ",":
                    i += 1
                    continue
                return i + 1
        if ch == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = skip(value(i, path + (k,)))
                k += 1
                if text[i] == ",":
                    i += 1
                    continue
                return i + 1
        _, end = decoder.raw_decode(text, i)
        return end

    value(0, ())
    return positions


def _line_of(text: str, positions: Dict[Tuple, int], loc: Tuple) -> int:
    loc = tuple(loc)
    while loc and loc not in positions:
        loc = loc[:-1]
    return text.count("\n", 0, positions.get(loc, 0)) + 1


# Conversion ----------------------------------------------------------------


def _oscillator(o: OscillatorIn) -> OscillatorParams:
    return OscillatorParams(
        supply_current=o.supply_current_uA * 1e-6,
        capacitance=o.capacitance_nF * 1e-9,
        threshold_voltage=o.threshold_voltage_V,
        hold_voltage=o.hold_voltage_V,
        on_resistance=o.on_resistance_ohm,
        noise_sigma=o.noise_sigma_mV * 1e-3,
    )


def _network(doc: NetworkIn, oscillators: Tuple[OscillatorParams, ...]) -> NetworkConfig:
    n = len(oscillators)
    if doc.coupling.matrix_V is not None:
        coupling = CouplingMatrix.from_rows(doc.coupling.matrix_V)
    else:
        coupling = CouplingMatrix.uniform(n, doc.coupling.delta_V or 0.0)
    drives = tuple(
        ExternalDrive(tuple(d.spike_times_s), d.pulse_width_us * 1e-6, tuple(d.delta_ext_V)) for d in doc.drives
    )
    volts = tuple(o.initial_voltage_V for o in doc.oscillators)
    return NetworkConfig(
        oscillators=oscillators,
        coupling=coupling,
        drives=drives,
        seed=doc.seed,
        initial_voltages=volts if any(volts) else None,
        streams=None if doc.streams is None else tuple(doc.streams),
    )


def _metric_cfg(doc: MetricsIn) -> MetricConfig:
    return MetricConfig(
        epsilon=None if doc.epsilon_us is None else doc.epsilon_us * 1e-6,
        mu_th=doc.mu_th_percent,
        min_oscillations=doc.min_oscillations,
        max_oscillations=doc.max_oscillations,
        epsilon_fraction=doc.epsilon_fraction,
    )


def _axis(doc: AxisIn) -> AxisSpec:
    scale = unit_scale(doc.path, doc.unit)
    return AxisSpec(doc.path, doc.min_value * scale, doc.max_value * scale, doc.steps)


def _pipeline(doc: PipelineIn, network: NetworkConfig, metric_cfg: MetricConfig, sim: SimulationIn) -> PipelineConfig:
    scales = [unit_scale(c.target, c.unit) for c in doc.channels]
    encoding = InputEncoding(
        offsets=tuple(c.offset * s for c, s in zip(doc.channels, scales)),
        gains=tuple(c.gain * s for c, s in zip(doc.channels, scales)),
        targets=tuple(c.target for c in doc.channels),
        sequences=tuple(
            SpikeSequenceInput(tuple(s.spike_times_s), s.pulse_width_us * 1e-6, tuple(sorted(s.targets_V.items())))
            for s in doc.sequences
        ),
    )
    readout = ReadoutNeuron(doc.readout.bias_weight, tuple(doc.readout.input_weights), tuple(doc.readout.feature_weights))
    return PipelineConfig(
        encoding=encoding,
        template=network,
        readout=readout,
        metric_cfg=metric_cfg,
        pair=tuple(doc.pair),
        feature=doc.feature,
        warmup_spikes=sim.warmup_spikes,
        record_spikes=sim.record_spikes,
        train_readout=doc.train_readout,
    )


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno, source) from None
    positions = key_positions(text)
    try:
        doc = RunConfigIn.model_validate(raw)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = ".".join(str(p) for p in err["loc"])
        raise ConfigError(f"{loc}: {err['msg']}", _line_of(text, positions, err["loc"]), source) from None

    section: Tuple = ("network",)
    label = "network"
    try:
        oscillators = []
        for k, o in enumerate(doc.network.oscillators):
            section, label = ("network", "oscillators", k), f"oscillator {k}"
            oscillators.append(_oscillator(o))
        section, label = ("network",), "network"
        network = _network(doc.network, tuple(oscillators))
        section, label = ("metrics",), "metrics"
        metric_cfg = _metric_cfg(doc.metrics)
        section, label = ("sweep",), "sweep"
        sweep = None
        if doc.sweep is not None:
            sweep = SweepSpec(
                axis_x=_axis(doc.sweep.axis_x),
                axis_y=_axis(doc.sweep.axis_y),
                template=network,
                metric_cfg=metric_cfg,
                observed_pair=tuple(doc.sweep.observed_pair),
                base_seed=doc.sweep.base_seed,
                warmup_spikes=doc.simulation.warmup_spikes,
                record_spikes=doc.simulation.record_spikes,
            )
        section, label = ("pipeline",), "pipeline"
        pipeline = None if doc.pipeline is None else _pipeline(doc.pipeline, network, metric_cfg, doc.simulation)
    except OscLabError as exc:
        line = _line_of(text, positions, section)
        raise type(exc)(f"{source}:{line}: {label}: {exc}") from None

    return RunConfig(
        network=network,
        warmup_spikes=doc.simulation.warmup_spikes,
        record_spikes=doc.simulation.record_spikes,
        metric_cfg=metric_cfg,
        sweep=sweep,
        pipeline=pipeline,
        resolved=doc.model_dump(mode="json"),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return parse_config(text, str(path))
