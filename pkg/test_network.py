"""Tests for oscillator parameters, coupling, drives, network configs and parameter paths"""

import math

import pytest

from app.errors import InvalidParametersError
from app.network import (
    CouplingMatrix,
    ExternalDrive,
    NetworkConfig,
    OscillatorParams,
    SpikeTrain,
    build_network,
    get_parameter,
    own_frequency,
    with_parameter,
)


def test_threshold_must_exceed_hold():
    with pytest.raises(InvalidParametersError, match="U_th > U_h"):
        OscillatorParams(supply_current=500e-6, threshold_voltage=1.0, hold_voltage=1.5)


def test_hold_must_exceed_discharge_asymptote():
    # 2 mA through 1 kOhm settles at 2 V, above U_h = 1.5 V
    with pytest.raises(InvalidParametersError, match=r"U_h > I_p\*R_on"):
        OscillatorParams(supply_current=2e-3, on_resistance=1000.0)


@pytest.mark.parametrize("field,value", [("supply_current", 0.0), ("capacitance", -1e-9), ("noise_sigma", -0.1)])
def test_non_physical_values_rejected(field, value):
    kwargs = {"supply_current": 500e-6, field: value}
    with pytest.raises(InvalidParametersError):
        OscillatorParams(**kwargs)


def test_own_frequency_closed_form():
    p = OscillatorParams(supply_current=500e-6, capacitance=100e-9, on_resistance=1000.0)
    t_charge = (5.0 - 1.5) * 100e-9 / 500e-6
    tau = 1000.0 * 100e-9
    t_discharge = tau * math.log((5.0 - 0.5) / (1.5 - 0.5))
    assert own_frequency(p) == pytest.approx(1.0 / (t_charge + t_discharge), rel=1e-12)


def test_own_frequency_grows_with_current():
    freqs = [own_frequency(OscillatorParams(supply_current=i * 1e-6)) for i in (200, 400, 800, 1200)]
    assert freqs == sorted(freqs)


def test_coupling_diagonal_forced_to_zero():
    m = CouplingMatrix.from_rows([[0.7, 0.2], [0.3, 0.9]])
    assert m.delta == ((0.0, 0.2), (0.3, 0.0))
    assert m.incoming(1) == pytest.approx(0.2)


def test_coupling_rejects_negative_entries():
    with pytest.raises(InvalidParametersError):
        CouplingMatrix.from_rows([[0.0, -0.1], [0.0, 0.0]])


def test_drive_overlap_counts_simultaneous_pulses():
    drive = ExternalDrive((0.0, 0.5e-3, 0.8e-3, 5e-3), 1e-3, (0.1,))
    assert drive.max_overlap() == 3


def test_drive_requires_increasing_times():
    with pytest.raises(InvalidParametersError):
        ExternalDrive((1.0, 1.0), 1e-3, (0.1,))


def test_network_rejects_threshold_pushed_below_hold():
    # 5 V - 2 * 1.8 V of coupling leaves 1.4 V < U_h
    osc = OscillatorParams(supply_current=500e-6, noise_sigma=0.0)
    with pytest.raises(InvalidParametersError, match="oscillator 0"):
        NetworkConfig((osc, osc, osc), CouplingMatrix.uniform(3, 1.8))


def test_network_counts_drive_and_noise_in_worst_case():
    osc = OscillatorParams(supply_current=500e-6, noise_sigma=0.1)
    drive = ExternalDrive((0.0,), 1e-3, (3.2,))
    # 5 - 3.2 - 4 * 0.1 = 1.4 < 1.5
    with pytest.raises(InvalidParametersError):
        NetworkConfig((osc,), CouplingMatrix.zeros(1), drives=(drive,))


def test_initial_voltage_must_stay_below_threshold():
    osc = OscillatorParams(supply_current=500e-6)
    with pytest.raises(InvalidParametersError):
        NetworkConfig((osc,), CouplingMatrix.zeros(1), initial_voltages=(5.0,))


def test_seed_must_be_unsigned_64_bit():
    with pytest.raises(InvalidParametersError):
        build_network([500e-6], seed=-1)
    assert build_network([500e-6], seed=2**64 - 1).seed == 2**64 - 1


def test_single_keeps_stream_and_initial_voltage():
    config = NetworkConfig(
        tuple(OscillatorParams(supply_current=i) for i in (400e-6, 500e-6)),
        CouplingMatrix.uniform(2, 0.3),
        seed=11,
        initial_voltages=(1.0, 2.0),
    )
    alone = config.single(1)
    assert alone.n == 1
    assert alone.stream(0) == 1
    assert alone.initial_voltage(0) == 2.0
    assert alone.seed == 11


def test_parameter_paths_round_trip():
    config = build_network([400e-6, 500e-6], delta=0.2)
    updated = with_parameter(config, "oscillators.1.supply_current", 700e-6)
    assert get_parameter(updated, "oscillators.1.supply_current") == 700e-6
    assert get_parameter(config, "oscillators.1.supply_current") == 500e-6

    coupled = with_parameter(config, "coupling.0.1", 0.6)
    assert get_parameter(coupled, "coupling.0.1") == 0.6
    assert get_parameter(coupled, "coupling.1.0") == 0.2


def test_parameter_path_revalidates_invariants():
    config = build_network([400e-6, 500e-6])
    with pytest.raises(InvalidParametersError, match=r"U_h > I_p\*R_on"):
        with_parameter(config, "oscillators.0.supply_current", 5e-3)


@pytest.mark.parametrize("path", ["oscillators.2.supply_current", "oscillators.0.colour", "coupling.0", "drives.0.pulse_width", "nothing"])
def test_unknown_parameter_paths(path):
    with pytest.raises(InvalidParametersError):
        get_parameter(build_network([400e-6, 500e-6]), path)


def test_drive_parameter_paths():
    osc = OscillatorParams(supply_current=500e-6)
    config = NetworkConfig((osc, osc), CouplingMatrix.zeros(2), drives=(ExternalDrive((0.001,), 1e-4, (0.0, 0.0)),))
    updated = with_parameter(config, "drives.0.delta_ext.1", 0.4)
    assert updated.drives[0].delta_ext == (0.0, 0.4)
    assert get_parameter(with_parameter(config, "drives.0.pulse_width", 2e-4), "drives.0.pulse_width") == 2e-4


def test_spike_train_must_increase():
    with pytest.raises(InvalidParametersError):
        SpikeTrain(0, (0.0, 1.0, 1.0))
    train = SpikeTrain(0, (0.0, 0.5, 1.0))
    assert len(train) == 3
    assert train.mean_interval() == pytest.approx(0.5)
    assert train.rate() == pytest.approx(2.0)
