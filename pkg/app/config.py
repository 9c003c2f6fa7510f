from dataclasses import dataclass


import os

@dataclass
class AppConfig:
    # Oscillator model (SI units)
    threshold_voltage: float = 5.0
    hold_voltage: float = 1.5
    on_resistance: float = 1_000.0
    capacitance: float = 100e-9
    noise_sigma: float = 0.020
    noise_truncation: float = 4.0  # jitter clipped to +/- this many sigma

    # Simulation
    warmup_spikes: int = 50
    record_spikes: int = 1000
    budget_factor: float = 100.0  # simulated-time budget in slowest natural periods per spike
    max_events: int = int(os.getenv("OSCLAB_MAX_SIM_EVENTS", "5000000"))

    # Sync metrics
    mu_th: float = 90.0
    min_oscillations: int = 50
    max_oscillations: int = 10_000
    analysis_window: int = 1000
    epsilon_fraction: float = 0.05  # of the faster train's mean inter-spike interval
    oracle_max_spikes: int = 500

    # Readout trainer
    learning_rate: float = 1.0
    max_epochs: int = 1000

    # Sweep
    workers: int = int(os.getenv("OSCLAB_WORKERS", "1"))
    progress_every: float = 0.10  # fraction of cells between progress log lines

    # PGM rendering
    pgm_shr_min: float = 1.0 / 8.0
    pgm_shr_max: float = 8.0

    # Logging
    log_level: str = os.getenv("OSCLAB_LOG_LEVEL", "INFO")


CONFIG = AppConfig()
