from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .config import CONFIG
from .errors import InvalidParametersError

U64_MAX = 2**64 - 1


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidParametersError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class OscillatorParams:
    """Lumped relaxation oscillator: current source, capacitor and a two-state switch"""

    supply_current: float
    capacitance: float = CONFIG.capacitance
    threshold_voltage: float = CONFIG.threshold_voltage
    hold_voltage: float = CONFIG.hold_voltage
    on_resistance: float = CONFIG.on_resistance
    noise_sigma: float = CONFIG.noise_sigma

    def __post_init__(self) -> None:
        for f in fields(self):
            object.__setattr__(self, f.name, _finite(f.name, getattr(self, f.name)))
        if self.capacitance <= 0:
            raise InvalidParametersError(f"capacitance must be > 0, got {self.capacitance}")
        if self.supply_current <= 0:
            raise InvalidParametersError(f"supply_current must be > 0, got {self.supply_current}")
        if self.on_resistance <= 0:
            raise InvalidParametersError(f"on_resistance must be > 0, got {self.on_resistance}")
        if self.noise_sigma < 0:
            raise InvalidParametersError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if not self.threshold_voltage > self.hold_voltage:
            raise InvalidParametersError(
                f"U_th > U_h violated: threshold_voltage={self.threshold_voltage} V, "
                f"hold_voltage={self.hold_voltage} V"
            )
        if not self.hold_voltage > self.discharge_asymptote:
            raise InvalidParametersError(
                f"U_h > I_p*R_on violated: hold_voltage={self.hold_voltage} V, "
                f"I_p*R_on={self.discharge_asymptote:.6g} V (switch would never turn off)"
            )

    @property
    def charge_rate(self) -> float:
        """dV/dt while the switch is off (V/s)"""
        return self.supply_current / self.capacitance

    @property
    def discharge_asymptote(self) -> float:
        """Voltage the capacitor decays toward while the switch is on"""
        return self.supply_current * self.on_resistance

    @property
    def time_constant(self) -> float:
        return self.on_resistance * self.capacitance

    def charge_time(self, v_from: float, v_to: float) -> float:
        return (v_to - v_from) * self.capacitance / self.supply_current

    def discharge_time(self, v_from: float) -> float:
        """On-phase duration when the switch closes at v_from and opens at U_h"""
        a = self.discharge_asymptote
        return self.time_constant * math.log((v_from - a) / (self.hold_voltage - a))


def own_frequency(params: OscillatorParams) -> float:
    """Free-running frequency F0 of one uncoupled, noise-free oscillator (Hz)"""
    t_charge = params.charge_time(params.hold_voltage, params.threshold_voltage)
    t_discharge = params.discharge_time(params.threshold_voltage)
    return 1.0 / (t_charge + t_discharge)


@dataclass(frozen=True)
class CouplingMatrix:
    """delta[i][j]: threshold reduction (V) applied to oscillator j while switch i is on"""

    n: int
    delta: Tuple[Tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InvalidParametersError(f"coupling needs at least one oscillator, got n={self.n}")
        rows = tuple(tuple(_finite("delta", v) for v in row) for row in self.delta)
        if len(rows) != self.n or any(len(row) != self.n for row in rows):
            raise InvalidParametersError(f"coupling matrix must be {self.n}x{self.n}")
        cleaned = []
        for i, row in enumerate(rows):
            out = []
            for j, value in enumerate(row):
                if i == j:
                    out.append(0.0)
                    continue
                if value < 0:
                    raise InvalidParametersError(f"delta[{i}][{j}] must be >= 0, got {value}")
                out.append(value)
            cleaned.append(tuple(out))
        object.__setattr__(self, "delta", tuple(cleaned))

    @classmethod
    def zeros(cls, n: int) -> "CouplingMatrix":
        return cls(n, tuple((0.0,) * n for _ in range(n)))

    @classmethod
    def uniform(cls, n: int, value: float) -> "CouplingMatrix":
        return cls(n, tuple(tuple(0.0 if i == j else value for j in range(n)) for i in range(n)))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "CouplingMatrix":
        return cls(len(rows), tuple(tuple(float(v) for v in row) for row in rows))

    def incoming(self, j: int) -> float:
        """Worst-case total reduction on oscillator j (all sources on)"""
        return sum(self.delta[i][j] for i in range(self.n))

    def with_entry(self, i: int, j: int, value: float) -> "CouplingMatrix":
        if i == j:
            raise InvalidParametersError("diagonal coupling entries are fixed at 0")
        rows = [list(row) for row in self.delta]
        rows[i][j] = float(value)
        return CouplingMatrix.from_rows(rows)


@dataclass(frozen=True)
class ExternalDrive:
    """Spike-sequence input: each drive spike lowers target thresholds for pulse_width seconds"""

    spike_times: Tuple[float, ...]
    pulse_width: float
    delta_ext: Tuple[float, ...]

    def __post_init__(self) -> None:
        times = tuple(_finite("spike_times", t) for t in self.spike_times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidParametersError("drive spike_times must be strictly increasing")
        width = _finite("pulse_width", self.pulse_width)
        if width <= 0:
            raise InvalidParametersError(f"pulse_width must be > 0, got {width}")
        deltas = tuple(_finite("delta_ext", d) for d in self.delta_ext)
        if any(d < 0 for d in deltas):
            raise InvalidParametersError("delta_ext entries must be >= 0")
        object.__setattr__(self, "spike_times", times)
        object.__setattr__(self, "pulse_width", width)
        object.__setattr__(self, "delta_ext", deltas)

    def max_overlap(self) -> int:
        """Largest number of simultaneously active pulses"""
        best = 0
        start = 0
        for end, t in enumerate(self.spike_times):
            while self.spike_times[start] + self.pulse_width <= t:
                start += 1
            best = max(best, end - start + 1)
        return best


@dataclass(frozen=True)
class NetworkConfig:
    oscillators: Tuple[OscillatorParams, ...]
    coupling: CouplingMatrix
    drives: Tuple[ExternalDrive, ...] = ()
    seed: int = 0
    initial_voltages: Optional[Tuple[float, ...]] = None
    streams: Optional[Tuple[int, ...]] = None  # per-oscillator RNG stream ids, default index

    def __post_init__(self) -> None:
        object.__setattr__(self, "oscillators", tuple(self.oscillators))
        object.__setattr__(self, "drives", tuple(self.drives))
        n = len(self.oscillators)
        if n == 0:
            raise InvalidParametersError("network needs at least one oscillator")
        if self.coupling.n != n:
            raise InvalidParametersError(f"coupling.n={self.coupling.n} does not match {n} oscillators")
        if not (0 <= int(self.seed) <= U64_MAX):
            raise InvalidParametersError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))
        for d, drive in enumerate(self.drives):
            if len(drive.delta_ext) != n:
                raise InvalidParametersError(f"drive {d} has {len(drive.delta_ext)} delta_ext entries, expected {n}")
        if self.initial_voltages is not None:
            volts = tuple(_finite("initial_voltages", v) for v in self.initial_voltages)
            if len(volts) != n:
                raise InvalidParametersError(f"initial_voltages needs {n} entries, got {len(volts)}")
            for j, (v, p) in enumerate(zip(volts, self.oscillators)):
                if not 0.0 <= v < p.threshold_voltage:
                    raise InvalidParametersError(f"initial voltage of oscillator {j} must lie in [0, U_th), got {v}")
            object.__setattr__(self, "initial_voltages", volts)
        if self.streams is not None:
            streams = tuple(int(s) for s in self.streams)
            if len(streams) != n or any(s < 0 for s in streams):
                raise InvalidParametersError(f"streams needs {n} non-negative ids")
            object.__setattr__(self, "streams", streams)

        for j, p in enumerate(self.oscillators):
            worst = p.threshold_voltage - self.coupling.incoming(j)
            worst -= sum(drive.delta_ext[j] * drive.max_overlap() for drive in self.drives)
            worst -= CONFIG.noise_truncation * p.noise_sigma
            if not worst > p.hold_voltage:
                raise InvalidParametersError(
                    f"oscillator {j}: worst-case effective threshold {worst:.6g} V does not exceed "
                    f"U_h={p.hold_voltage} V (U_th - sum(delta[i][{j}]) - drives - jitter must stay above U_h)"
                )

    @property
    def n(self) -> int:
        return len(self.oscillators)

    def initial_voltage(self, j: int) -> float:
        return 0.0 if self.initial_voltages is None else self.initial_voltages[j]

    def stream(self, j: int) -> int:
        return j if self.streams is None else self.streams[j]

    def single(self, j: int) -> "NetworkConfig":
        """Oscillator j on its own, keeping its noise stream and initial voltage"""
        return NetworkConfig(
            oscillators=(self.oscillators[j],),
            coupling=CouplingMatrix.zeros(1),
            seed=self.seed,
            initial_voltages=None if self.initial_voltages is None else (self.initial_voltages[j],),
            streams=(self.stream(j),),
        )


def build_network(
    supply_currents: Iterable[float],
    delta: float = 0.0,
    seed: int = 0,
    **params: float,
) -> NetworkConfig:
    """Identical oscillators with uniform coupling"""
    oscillators = tuple(OscillatorParams(supply_current=i, **params) for i in supply_currents)
    return NetworkConfig(oscillators=oscillators, coupling=CouplingMatrix.uniform(len(oscillators), delta), seed=seed)


@dataclass(frozen=True)
class SpikeTrain:
    oscillator_index: int
    times: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        times = tuple(float(t) for t in self.times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidParametersError(f"spike train {self.oscillator_index} is not strictly increasing")
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    def mean_interval(self) -> float:
        if len(self.times) < 2:
            return float("nan")
        return (self.times[-1] - self.times[0]) / (len(self.times) - 1)

    def rate(self) -> float:
        return 1.0 / self.mean_interval()


# Parameter paths -----------------------------------------------------------

_OSC_FIELDS = {f.name for f in fields(OscillatorParams)}


def _index(token: str, size: int, what: str) -> int:
    try:
        k = int(token)
    except ValueError:
        raise InvalidParametersError(f"{what} index must be an integer, got {token!r}") from None
    if not 0 <= k < size:
        raise InvalidParametersError(f"{what} index {k} out of range 0..{size - 1}")
    return k


def get_parameter(config: NetworkConfig, path: str) -> float:
    parts = path.split(".")
    if parts[0] == "oscillators" and len(parts) == 3 and parts[2] in _OSC_FIELDS:
        return getattr(config.oscillators[_index(parts[1], config.n, "oscillator")], parts[2])
    if parts[0] == "coupling" and len(parts) == 3:
        return config.coupling.delta[_index(parts[1], config.n, "coupling")][_index(parts[2], config.n, "coupling")]
    if parts[0] == "drives" and len(parts) >= 3:
        drive = config.drives[_index(parts[1], len(config.drives), "drive")]
        if parts[2] == "pulse_width" and len(parts) == 3:
            return drive.pulse_width
        if parts[2] == "delta_ext" and len(parts) == 4:
            return drive.delta_ext[_index(parts[3], config.n, "delta_ext")]
    raise InvalidParametersError(f"unknown parameter path {path!r}")


def with_parameter(config: NetworkConfig, path: str, value: float) -> NetworkConfig:
    """Copy of config with the scalar at path replaced (all invariants re-checked)"""
    parts = path.split(".")
    value = float(value)
    if parts[0] == "oscillators" and len(parts) == 3 and parts[2] in _OSC_FIELDS:
        k = _index(parts[1], config.n, "oscillator")
        oscillators = list(config.oscillators)
        oscillators[k] = replace(oscillators[k], **{parts[2]: value})
        return replace(config, oscillators=tuple(oscillators))
    if parts[0] == "coupling" and len(parts) == 3:
        i = _index(parts[1], config.n, "coupling")
        j = _index(parts[2], config.n, "coupling")
        return replace(config, coupling=config.coupling.with_entry(i, j, value))
    if parts[0] == "drives" and len(parts) >= 3:
        d = _index(parts[1], len(config.drives), "drive")
        drives = list(config.drives)
        if parts[2] == "pulse_width" and len(parts) == 3:
            drives[d] = replace(drives[d], pulse_width=value)
            return replace(config, drives=tuple(drives))
        if parts[2] == "delta_ext" and len(parts) == 4:
            j = _index(parts[3], config.n, "delta_ext")
            deltas = list(drives[d].delta_ext)
            deltas[j] = value
            drives[d] = replace(drives[d], delta_ext=tuple(deltas))
            return replace(config, drives=tuple(drives))
    raise InvalidParametersError(f"unknown parameter path {path!r}")


def validate_path(config: NetworkConfig, path: str) -> None:
    get_parameter(config, path)
