"""
Event-driven simulator for thermally coupled relaxation oscillators

Each oscillator alternates between two closed-form phases:
- switch off: linear charge ramp dV/dt = I_p / C
- switch on:  exponential decay toward I_p * R_on until V reaches U_h

The next event time is always solved analytically, so there is no step size.
While a switch is on it lowers the threshold of its neighbours by delta[i][j];
active external drive pulses do the same with delta_ext[j].
"""

import logging
import math
from bisect import bisect_right
from typing import List, Optional

import numpy as np

from .config import CONFIG
from .errors import InvalidParametersError, StalledNetworkError
from .network import NetworkConfig, SpikeTrain, own_frequency

logger = logging.getLogger("Simulator")


def _stream_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


class NetworkState:
    """Mutable integration state of one run; never shared between runs"""

    def __init__(self, config: NetworkConfig) -> None:
        self.config = config
        n = config.n
        self.time = 0.0
        self.on: List[bool] = [False] * n
        self.anchor_time: List[float] = [0.0] * n
        self.anchor_voltage: List[float] = [config.initial_voltage(j) for j in range(n)]
        self.off_time: List[float] = [math.inf] * n
        self.jitter: List[float] = [0.0] * n
        self.fired: List[int] = [0] * n
        self.active_pulses: List[int] = [0] * len(config.drives)
        self.rngs = [_stream_rng(config.seed, config.stream(j)) for j in range(n)]

    def draw_jitter(self, j: int) -> float:
        # one draw per charging cycle, even at zero sigma, keeps streams aligned
        z = float(self.rngs[j].standard_normal())
        cut = CONFIG.noise_truncation
        z = min(max(z, -cut), cut)
        self.jitter[j] = self.config.oscillators[j].noise_sigma * z
        return self.jitter[j]

    def voltage(self, j: int, t: float) -> float:
        p = self.config.oscillators[j]
        dt = t - self.anchor_time[j]
        if self.on[j]:
            a = p.discharge_asymptote
            return a + (self.anchor_voltage[j] - a) * math.exp(-dt / p.time_constant)
        return self.anchor_voltage[j] + p.charge_rate * dt

    def pulses_active(self, d: int, t: float) -> int:
        if t == self.time:
            return self.active_pulses[d]
        drive = self.config.drives[d]
        return bisect_right(drive.spike_times, t) - bisect_right(drive.spike_times, t - drive.pulse_width)

    def reduction(self, j: int, t: Optional[float] = None) -> float:
        t = self.time if t is None else t
        delta = self.config.coupling.delta
        total = 0.0
        for i, is_on in enumerate(self.on):
            if is_on:
                total += delta[i][j]
        for d, drive in enumerate(self.config.drives):
            count = self.pulses_active(d, t)
            if count:
                total += count * drive.delta_ext[j]
        return total

    def threshold(self, j: int, t: Optional[float] = None) -> float:
        p = self.config.oscillators[j]
        return (p.threshold_voltage + self.jitter[j]) - self.reduction(j, t)


def effective_threshold(j: int, t: float, state: NetworkState) -> float:
    """U_th,j minus all active reductions plus this cycle's jitter"""
    if not 0 <= j < state.config.n:
        raise InvalidParametersError(f"oscillator index {j} out of range")
    return state.threshold(j, t)


class EventDrivenSimulator:
    """Runs one NetworkConfig; each run() starts from a fresh NetworkState"""

    def __init__(
        self,
        config: NetworkConfig,
        budget_factor: float = None,
        max_events: int = None,
    ) -> None:
        self.config = config
        self.budget_factor = budget_factor or CONFIG.budget_factor
        self.max_events = max_events or CONFIG.max_events

        drive_events = []
        for d, drive in enumerate(config.drives):
            for s in drive.spike_times:
                drive_events.append((s, 1, d))
                drive_events.append((s + drive.pulse_width, 0, d))
        # ends sort before starts at equal timestamps; drives in index order
        drive_events.sort(key=lambda e: (e[0], e[1], e[2]))
        self.drive_events = drive_events

        self.slowest_period = max(1.0 / own_frequency(p) for p in config.oscillators)

    def _sim_time_budget(self, warmup_spikes: int, record_spikes: int) -> float:
        horizon = self.budget_factor * (warmup_spikes + record_spikes + 1) * self.slowest_period
        if self.drive_events:
            horizon += self.drive_events[-1][0]
        return horizon

    def run(self, warmup_spikes: int = None, record_spikes: int = None) -> List[SpikeTrain]:
        warmup_spikes = CONFIG.warmup_spikes if warmup_spikes is None else int(warmup_spikes)
        record_spikes = CONFIG.record_spikes if record_spikes is None else int(record_spikes)
        if record_spikes < 1:
            raise InvalidParametersError(f"record_spikes must be >= 1, got {record_spikes}")
        if warmup_spikes < 0:
            raise InvalidParametersError(f"warmup_spikes must be >= 0, got {warmup_spikes}")

        config = self.config
        n = config.n
        params = config.oscillators
        state = NetworkState(config)
        for j in range(n):
            state.draw_jitter(j)

        recorded: List[List[float]] = [[] for _ in range(n)]
        horizon = self._sim_time_budget(warmup_spikes, record_spikes)
        next_drive = 0
        events = 0
        t = 0.0

        while True:
            # thresholds are constant between events
            candidates = []
            for j in range(n):
                if state.on[j]:
                    candidates.append(state.off_time[j])
                    continue
                p = params[j]
                threshold = state.threshold(j)
                t_cross = state.anchor_time[j] + (threshold - state.anchor_voltage[j]) / p.charge_rate
                candidates.append(t_cross if t_cross > t else t)

            t_osc = min(candidates)
            t_drive = self.drive_events[next_drive][0] if next_drive < len(self.drive_events) else math.inf

            if t_drive <= t_osc:
                t = t_drive
                while next_drive < len(self.drive_events) and self.drive_events[next_drive][0] == t_drive:
                    _, starts, d = self.drive_events[next_drive]
                    state.active_pulses[d] += 1 if starts else -1
                    next_drive += 1
                state.time = t
                continue

            t = t_osc
            state.time = t
            if t > horizon or events > self.max_events:
                raise StalledNetworkError(self._stall_message(state, recorded, record_spikes, horizon))

            for j in range(n):
                if candidates[j] != t_osc:
                    continue
                events += 1
                p = params[j]
                if state.on[j]:
                    state.on[j] = False
                    state.anchor_time[j] = t
                    state.anchor_voltage[j] = p.hold_voltage
                    state.off_time[j] = math.inf
                    state.draw_jitter(j)
                else:
                    v_fire = state.anchor_voltage[j] + p.charge_rate * (t - state.anchor_time[j])
                    state.on[j] = True
                    state.anchor_time[j] = t
                    state.anchor_voltage[j] = v_fire
                    state.off_time[j] = t + p.discharge_time(v_fire)
                    state.fired[j] += 1
                    if state.fired[j] > warmup_spikes:
                        recorded[j].append(t)

            if min(len(r) for r in recorded) >= record_spikes:
                break

        logger.debug(
            f"Simulated {n} oscillators to t={t:.6g}s: {events} events, "
            f"spikes={[len(r) for r in recorded]}"
        )
        return [SpikeTrain(j, tuple(recorded[j])) for j in range(n)]

    def _stall_message(self, state: NetworkState, recorded, record_spikes: int, horizon: float) -> str:
        lagging = [j for j, r in enumerate(recorded) if len(r) < record_spikes]
        details = ", ".join(
            f"osc {j}: I_p={self.config.oscillators[j].supply_current:.6g} A, "
            f"U_th={self.config.oscillators[j].threshold_voltage} V, fired={state.fired[j]}"
            for j in lagging
        )
        return (
            f"stalled network: simulated time budget {horizon:.6g}s or event budget "
            f"{self.max_events} exhausted before all oscillators recorded {record_spikes} spikes ({details})"
        )


def simulate(config: NetworkConfig, warmup_spikes: int = None, record_spikes: int = None) -> List[SpikeTrain]:
    """Spike trains after each oscillator's first warmup_spikes switch-on events"""
    return EventDrivenSimulator(config).run(warmup_spikes, record_spikes)
