"""Tests for the event-driven oscillator simulator"""

import numpy as np
import pytest

from app.errors import InvalidParametersError, StalledNetworkError
from app.network import CouplingMatrix, ExternalDrive, NetworkConfig, OscillatorParams, build_network, own_frequency
from app.simulator import EventDrivenSimulator, NetworkState, effective_threshold, simulate
from app.sync_metrics import compute_shr_mu


def quiet(current: float, **kwargs) -> OscillatorParams:
    return OscillatorParams(supply_current=current, noise_sigma=0.0, **kwargs)


@pytest.mark.parametrize("current", [200e-6, 500e-6, 900e-6, 1400e-6])
def test_free_running_frequency_matches_closed_form(current):
    p = quiet(current)
    config = NetworkConfig((p,), CouplingMatrix.zeros(1))
    (train,) = simulate(config, warmup_spikes=5, record_spikes=200)
    assert len(train) == 200
    assert 1.0 / train.mean_interval() == pytest.approx(own_frequency(p), rel=1e-9)


def test_first_spike_after_charging_from_zero():
    p = quiet(500e-6)
    (train,) = simulate(NetworkConfig((p,), CouplingMatrix.zeros(1)), warmup_spikes=0, record_spikes=1)
    assert train.times[0] == pytest.approx(5.0 * 100e-9 / 500e-6, rel=1e-12)


def test_initial_voltage_shortens_first_cycle():
    p = quiet(500e-6)
    config = NetworkConfig((p,), CouplingMatrix.zeros(1), initial_voltages=(2.5,))
    (train,) = simulate(config, warmup_spikes=0, record_spikes=1)
    assert train.times[0] == pytest.approx(0.5e-3, rel=1e-12)


def test_spike_rate_increases_with_current():
    rates = []
    for current in (300e-6, 450e-6, 600e-6, 750e-6):
        (train,) = simulate(NetworkConfig((quiet(current),), CouplingMatrix.zeros(1)), 5, 100)
        rates.append(train.rate())
    assert all(a < b for a, b in zip(rates, rates[1:]))


def test_same_seed_same_trains():
    config = build_network([500e-6, 560e-6], delta=0.4, seed=1234, noise_sigma=0.02)
    assert simulate(config, 10, 200) == simulate(config, 10, 200)


def test_different_seeds_differ_under_noise():
    a = simulate(build_network([500e-6, 560e-6], delta=0.4, seed=1, noise_sigma=0.02), 10, 200)
    b = simulate(build_network([500e-6, 560e-6], delta=0.4, seed=2, noise_sigma=0.02), 10, 200)
    assert a != b


def test_every_oscillator_reaches_the_record_count():
    trains = simulate(build_network([400e-6, 800e-6, 1200e-6], delta=0.3, seed=5), 10, 150)
    assert [t.oscillator_index for t in trains] == [0, 1, 2]
    assert min(len(t) for t in trains) == 150
    # the fastest oscillator keeps firing while the slowest catches up
    assert len(trains[2]) > len(trains[0])


def test_uncoupled_network_matches_isolated_runs():
    config = NetworkConfig(
        tuple(OscillatorParams(supply_current=i, noise_sigma=0.02) for i in (420e-6, 610e-6, 730e-6)),
        CouplingMatrix.zeros(3),
        seed=99,
    )
    trains = simulate(config, 20, 120)
    for j in range(3):
        (alone,) = simulate(config.single(j), 20, 120)
        assert trains[j].times[:120] == alone.times


def test_coupling_locks_equal_oscillators():
    config = build_network([600e-6, 600e-6], delta=0.5, seed=3, on_resistance=100.0, noise_sigma=0.002)
    a, b = simulate(config, 50, 300)
    m = compute_shr_mu(a, b)
    assert m.state == (1, 1)
    assert m.mu == pytest.approx(100.0)


def test_effective_threshold_subtracts_active_sources():
    osc = quiet(500e-6)
    config = NetworkConfig(
        (osc, osc),
        CouplingMatrix.from_rows([[0.0, 0.4], [0.0, 0.0]]),
        drives=(ExternalDrive((1e-3,), 1e-4, (0.0, 0.25)),),
    )
    state = NetworkState(config)
    assert effective_threshold(1, 0.0, state) == pytest.approx(5.0)
    state.on[0] = True
    assert effective_threshold(1, 0.0, state) == pytest.approx(4.6)
    assert effective_threshold(1, 1.05e-3, state) == pytest.approx(4.35)
    # oscillator 1 never couples into oscillator 0
    state.on[1] = True
    assert effective_threshold(0, 0.0, state) == pytest.approx(5.0)
    with pytest.raises(InvalidParametersError):
        effective_threshold(2, 0.0, state)


def test_drive_pulse_triggers_early_spike():
    osc = quiet(500e-6)
    # V reaches 2.5 V at 0.5 ms, above the 2 V threshold the pulse leaves
    drive = ExternalDrive((0.5e-3,), 1e-4, (3.0,))
    config = NetworkConfig((osc,), CouplingMatrix.zeros(1), drives=(drive,))
    (train,) = simulate(config, 0, 1)
    assert train.times[0] == 0.5e-3


def test_drive_pulse_too_late_has_no_effect():
    osc = quiet(500e-6)
    drive = ExternalDrive((2.0,), 1e-4, (1.0,))
    with_drive = simulate(NetworkConfig((osc,), CouplingMatrix.zeros(1), drives=(drive,)), 0, 20)
    without = simulate(NetworkConfig((osc,), CouplingMatrix.zeros(1)), 0, 20)
    assert with_drive == without


def test_event_budget_raises_stalled_network():
    config = build_network([500e-6, 520e-6])
    with pytest.raises(StalledNetworkError, match="I_p="):
        EventDrivenSimulator(config, max_events=10).run(0, 100)


def test_time_budget_raises_stalled_network():
    config = build_network([500e-6])
    with pytest.raises(StalledNetworkError):
        EventDrivenSimulator(config, budget_factor=1e-3).run(0, 100)


@pytest.mark.parametrize("warmup,record", [(-1, 10), (0, 0)])
def test_invalid_counts(warmup, record):
    with pytest.raises(InvalidParametersError):
        simulate(build_network([500e-6]), warmup, record)


def test_noise_jitters_intervals_within_truncation():
    config = build_network([500e-6], seed=8, noise_sigma=0.02)
    (train,) = simulate(config, 0, 300)
    intervals = np.diff(train.array)
    nominal = 1.0 / own_frequency(config.oscillators[0])
    assert intervals.std() > 0
    # each threshold moves by at most 4 sigma, so an interval moves by at most 8 sigma of charge time
    slack = 8 * 0.02 * 100e-9 / 500e-6
    assert np.all(np.abs(intervals - nominal) <= slack * 1.01)


def test_run_loop_uses_effective_threshold(monkeypatch):
    osc = OscillatorParams(supply_current=500e-6, noise_sigma=0.02)
    config = NetworkConfig(
        (osc, osc),
        CouplingMatrix.uniform(2, 0.4),
        drives=(ExternalDrive((1e-3, 3e-3, 5e-3), 2e-4, (0.3, 0.0)),),
        seed=11,
    )
    seen = []
    original = NetworkState.threshold

    def recording(self, j, t=None):
        value = original(self, j, t)
        if t is None:
            seen.append((value, effective_threshold(j, self.time, self)))
        return value

    monkeypatch.setattr(NetworkState, "threshold", recording)
    simulate(config, 0, 30)
    assert seen
    assert all(a == b for a, b in seen)
    # a neighbour's reduction was in effect at some event
    assert min(a for a, _ in seen) < 4.7


def test_interval_never_shorter_than_fastest_discharge():
    config = build_network([500e-6, 560e-6, 620e-6], delta=0.4, seed=21, noise_sigma=0.02)
    trains = simulate(config, 10, 300)
    for train, p in zip(trains, config.oscillators):
        # the switch closes at or above the lowest reachable threshold
        v_min = p.threshold_voltage - 2 * 0.4 - 4 * p.noise_sigma
        assert np.diff(train.array).min() >= p.discharge_time(v_min)


def test_identical_quiet_oscillators_fire_together():
    config = build_network([600e-6, 600e-6], delta=0.3, seed=4, noise_sigma=0.0)
    a, b = simulate(config, 5, 200)
    assert a.times == b.times


def _counts_in_common_span(a, b):
    start, end = max(a.times[0], b.times[0]), min(a.times[-1], b.times[-1])
    return (
        int(np.sum((a.array >= start) & (a.array <= end))),
        int(np.sum((b.array >= start) & (b.array <= end))),
    )


def test_locked_rate_ratio_matches_shr():
    checked = 0
    for current in (600e-6, 700e-6, 900e-6, 1100e-6, 1300e-6):
        config = build_network([600e-6, current], delta=0.5, seed=3, on_resistance=100.0, noise_sigma=0.002)
        a, b = simulate(config, 50, 300)
        m = compute_shr_mu(a, b)
        if not m.synchronized or m.mu < 99.0:
            continue
        n_a, n_b = _counts_in_common_span(a, b)
        assert n_b / n_a == pytest.approx(m.m_j / m.m_i, rel=0.02)
        checked += 1
    # equal currents lock 1:1 with mu = 100
    assert checked >= 1
