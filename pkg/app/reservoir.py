"""
Reservoir computing on coupled oscillators

Inputs are mapped affinely onto network parameters (supply currents or
coupling strengths), the network is simulated, the synchronization metric of
one oscillator pair becomes the reservoir feature Z, and a single threshold
neuron reads out Q = 1 if Sigma < 0 else 0.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import CONFIG
from .errors import ArityError, EncodingDomainError, InvalidParametersError
from .network import ExternalDrive, NetworkConfig, with_parameter
from .simulator import simulate
from .sync_metrics import MetricConfig, SyncMetrics, compute_shr_mu

logger = logging.getLogger("Reservoir")

FEATURE_KINDS = ("shr", "mu")


@dataclass(frozen=True)
class SpikeSequenceInput:
    """Input spike sequence gated by one channel; the channel value scales every target's delta_ext"""

    spike_times: Tuple[float, ...]
    pulse_width: float
    targets: Tuple[Tuple[int, float], ...]  # (oscillator, delta_ext at level 1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "spike_times", tuple(float(t) for t in self.spike_times))
        object.__setattr__(self, "targets", tuple((int(j), float(d)) for j, d in self.targets))
        if not self.targets:
            raise InvalidParametersError("spike sequence input needs at least one target oscillator")

    def drive(self, n_oscillators: int, level: float) -> ExternalDrive:
        return spike_sequence_drive(
            self.spike_times, self.pulse_width, n_oscillators, {j: level * delta for j, delta in self.targets}
        )


@dataclass(frozen=True)
class InputEncoding:
    """value[k] = offsets[k] + gains[k] * input[k], written to targets[k]

    A target "sequences.<s>" switches sequences[s] on with the value as its
    level; a zero value leaves the sequence off.
    """

    offsets: Tuple[float, ...]
    gains: Tuple[float, ...]
    targets: Optional[Tuple[str, ...]] = None
    sequences: Tuple[SpikeSequenceInput, ...] = ()

    def __post_init__(self) -> None:
        offsets = tuple(float(v) for v in self.offsets)
        gains = tuple(float(v) for v in self.gains)
        if len(offsets) != len(gains) or not offsets:
            raise ArityError(f"encoding needs matching offsets/gains, got {len(offsets)} and {len(gains)}")
        if not all(math.isfinite(v) for v in offsets + gains):
            raise InvalidParametersError("encoding constants must be finite")
        targets = self.targets
        if targets is None:
            targets = tuple(f"oscillators.{k}.supply_current" for k in range(len(offsets)))
        targets = tuple(targets)
        if len(targets) != len(offsets):
            raise ArityError(f"encoding has {len(offsets)} channels but {len(targets)} targets")
        sequences = tuple(self.sequences)
        for target in targets:
            if target.startswith("sequences.") and not 0 <= _sequence_index(target) < len(sequences):
                raise InvalidParametersError(f"{target} names one of {len(sequences)} spike sequence inputs")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "sequences", sequences)

    @property
    def arity(self) -> int:
        return len(self.offsets)

    def allows_zero(self, k: int) -> bool:
        # coupling strengths and input sequences may be switched off entirely, currents may not
        target = self.targets[k]
        return target.startswith(("coupling.", "sequences.")) or ".delta_ext." in target


@dataclass(frozen=True)
class ReadoutNeuron:
    bias_weight: float
    input_weights: Tuple[float, ...]
    feature_weights: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bias_weight", float(self.bias_weight))
        object.__setattr__(self, "input_weights", tuple(float(w) for w in self.input_weights))
        object.__setattr__(self, "feature_weights", tuple(float(w) for w in self.feature_weights))
        if not all(math.isfinite(w) for w in self.weights):
            raise InvalidParametersError("readout weights must be finite")

    @property
    def weights(self) -> Tuple[float, ...]:
        return (self.bias_weight,) + self.input_weights + self.feature_weights

    @classmethod
    def from_weights(cls, weights: Sequence[float], n_inputs: int) -> "ReadoutNeuron":
        weights = [float(w) for w in weights]
        return cls(weights[0], tuple(weights[1 : 1 + n_inputs]), tuple(weights[1 + n_inputs :]))

    def scaled(self, c: float) -> "ReadoutNeuron":
        return ReadoutNeuron(self.bias_weight * c, tuple(w * c for w in self.input_weights), tuple(w * c for w in self.feature_weights))


@dataclass(frozen=True)
class XorCase:
    x: int
    y: int
    expected_q: int


# Reference encoding, readout weights and per-case SHR features
REFERENCE_ENCODING = InputEncoding(offsets=(638e-6, 574e-6), gains=(343e-6, 416e-6))
REFERENCE_READOUT = ReadoutNeuron(1.12, (-0.8, 0.78), (-1.0,))
XOR_CASES = (XorCase(1, 1, 0), XorCase(1, 0, 1), XorCase(0, 1, 1), XorCase(0, 0, 0))
REFERENCE_SHR: Dict[Tuple[int, int], float] = {(1, 1): 1.0, (1, 0): 1.0 / 3.0, (0, 1): 2.0, (0, 0): 2.0 / 3.0}


def encode_inputs(inputs: Sequence[float], enc: InputEncoding) -> Tuple[float, ...]:
    if len(inputs) != enc.arity:
        raise ArityError(f"expected {enc.arity} inputs, got {len(inputs)}")
    values = []
    for k, (x, offset, gain) in enumerate(zip(inputs, enc.offsets, enc.gains)):
        value = offset + gain * float(x)
        if value < 0 or (value == 0 and not enc.allows_zero(k)) or not math.isfinite(value):
            raise EncodingDomainError(
                f"input {k}={x} maps to {value:.6g} for {enc.targets[k]}, outside the parameter domain"
            )
        values.append(value)
    return tuple(values)


def _sequence_index(target: str) -> int:
    try:
        return int(target.split(".", 1)[1])
    except ValueError:
        raise InvalidParametersError(f"bad spike sequence target {target!r}") from None


def apply_inputs(template: NetworkConfig, inputs: Sequence[float], enc: InputEncoding) -> NetworkConfig:
    config = template
    for path, value in zip(enc.targets, encode_inputs(inputs, enc)):
        if path.startswith("sequences."):
            if value > 0:
                drive = enc.sequences[_sequence_index(path)].drive(config.n, value)
                config = replace(config, drives=config.drives + (drive,))
            continue
        config = with_parameter(config, path, value)
    return config


def spike_sequence_drive(
    spike_times: Sequence[float],
    pulse_width: float,
    n_oscillators: int,
    targets: Dict[int, float],
) -> ExternalDrive:
    """Drive that lowers the thresholds of the targeted oscillators after every input spike"""
    delta_ext = [0.0] * n_oscillators
    for j, delta in targets.items():
        if not 0 <= j < n_oscillators:
            raise InvalidParametersError(f"drive target {j} out of range")
        delta_ext[j] = float(delta)
    return ExternalDrive(tuple(spike_times), pulse_width, tuple(delta_ext))


def _check_pair(config: NetworkConfig, pair: Tuple[int, int]) -> None:
    i, j = pair
    if not (0 <= i < config.n and 0 <= j < config.n) or i == j:
        raise InvalidParametersError(f"pair {pair} invalid for {config.n} oscillators")


def reservoir_metrics(
    config: NetworkConfig,
    pair: Tuple[int, int],
    metric_cfg: MetricConfig = None,
    warmup_spikes: int = None,
    record_spikes: int = None,
) -> SyncMetrics:
    _check_pair(config, pair)
    trains = simulate(config, warmup_spikes, record_spikes)
    return compute_shr_mu(trains[pair[0]], trains[pair[1]], metric_cfg or MetricConfig())


def reservoir_feature(
    config: NetworkConfig,
    pair: Tuple[int, int],
    metric_cfg: MetricConfig = None,
    warmup_spikes: int = None,
    record_spikes: int = None,
    feature: str = "shr",
) -> float:
    """Z for the pair: SHR (0 when unsynchronized) or mu in percent"""
    if feature not in FEATURE_KINDS:
        raise InvalidParametersError(f"feature must be one of {FEATURE_KINDS}, got {feature!r}")
    metrics = reservoir_metrics(config, pair, metric_cfg, warmup_spikes, record_spikes)
    return metrics.shr_value if feature == "shr" else metrics.mu


def _sums(vectors: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # row-wise products summed along the row, so one sample and a batch round alike
    return (vectors * weights).sum(axis=1)


def readout_sum(inputs: Sequence[float], features: Sequence[float], neuron: ReadoutNeuron) -> float:
    if len(inputs) != len(neuron.input_weights) or len(features) != len(neuron.feature_weights):
        raise ArityError(
            f"readout expects {len(neuron.input_weights)} inputs and {len(neuron.feature_weights)} "
            f"features, got {len(inputs)} and {len(features)}"
        )
    vector = np.array([[1.0, *map(float, inputs), *map(float, features)]])
    return float(_sums(vector, np.asarray(neuron.weights, dtype=float))[0])


def activation(sigma: float) -> int:
    if not math.isfinite(sigma):
        raise InvalidParametersError(f"activation needs a finite sum, got {sigma}")
    return 1 if sigma < 0 else 0


@dataclass(frozen=True)
class PipelineConfig:
    encoding: InputEncoding
    template: NetworkConfig
    readout: ReadoutNeuron = REFERENCE_READOUT
    metric_cfg: MetricConfig = field(default_factory=MetricConfig)
    pair: Tuple[int, int] = (0, 1)
    feature: str = "shr"
    warmup_spikes: int = CONFIG.warmup_spikes
    record_spikes: int = CONFIG.record_spikes
    train_readout: bool = False


FeatureSource = Callable[[int, int], Sequence[float]]


def injected_features(table: Dict[Tuple[int, int], float]) -> FeatureSource:
    """Feature source returning fixed Z values instead of simulating"""
    return lambda x, y: (table[(x, y)],)


def _simulated_features(pipeline: PipelineConfig) -> FeatureSource:
    def source(x: int, y: int) -> Sequence[float]:
        config = apply_inputs(pipeline.template, (x, y), pipeline.encoding)
        z = reservoir_feature(
            config, pipeline.pair, pipeline.metric_cfg, pipeline.warmup_spikes, pipeline.record_spikes, pipeline.feature
        )
        return (z,)

    return source


def _binary(value: int, name: str) -> int:
    if value not in (0, 1):
        raise InvalidParametersError(f"{name} must be 0 or 1, got {value!r}")
    return int(value)


def run_xor(x: int, y: int, pipeline: PipelineConfig, feature_source: FeatureSource = None) -> int:
    x, y = _binary(x, "x"), _binary(y, "y")
    source = feature_source or _simulated_features(pipeline)
    return activation(readout_sum((x, y), source(x, y), pipeline.readout))


@dataclass
class TrainingReport:
    neuron: ReadoutNeuron
    correct: int
    total: int
    epochs: int
    converged: bool

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


Sample = Tuple[Sequence[float], Sequence[float], int]


def _predict(vectors: np.ndarray, weights: np.ndarray) -> np.ndarray:
    sums = _sums(vectors, weights)
    if not np.all(np.isfinite(sums)):
        raise InvalidParametersError("activation needs a finite sum")
    return np.where(sums < 0, 1, 0)


def train_readout(dataset: Sequence[Sample], learning_rate: float = None, max_epochs: int = None) -> TrainingReport:
    """Perceptron rule on (1, inputs, features) with the Q = [Sigma < 0] activation"""
    learning_rate = learning_rate or CONFIG.learning_rate
    max_epochs = max_epochs or CONFIG.max_epochs
    if not dataset:
        raise ArityError("training dataset is empty")
    n_inputs = len(dataset[0][0])
    n_features = len(dataset[0][1])
    rows: List[Tuple[float, ...]] = []
    labels: List[int] = []
    for row, (inputs, features, label) in enumerate(dataset):
        if len(inputs) != n_inputs or len(features) != n_features:
            raise ArityError(f"row {row}: expected {n_inputs} inputs and {n_features} features")
        labels.append(_binary(label, f"label of row {row}"))
        rows.append((1.0, *map(float, inputs), *map(float, features)))
    X = np.array(rows, dtype=float)
    y = np.array(labels, dtype=int)
    total = len(y)

    weights = np.zeros(X.shape[1])
    best = weights.copy()
    best_correct = int(np.sum(_predict(X, weights) == y))
    epochs = 0
    converged = best_correct == total

    while not converged and epochs < max_epochs:
        epochs += 1
        for x, label in zip(X, y):
            if _predict(x[None, :], weights)[0] == label:
                continue
            # label 1 wants Sigma < 0, label 0 wants Sigma >= 0
            sign = -1.0 if label == 1 else 1.0
            weights += learning_rate * sign * x
        correct = int(np.sum(_predict(X, weights) == y))
        if correct > best_correct:
            best, best_correct = weights.copy(), correct
        converged = correct == total

    neuron = ReadoutNeuron.from_weights(best, n_inputs)
    logger.info(
        f"Readout trained: {best_correct}/{total} correct after {epochs} epochs "
        f"({'converged' if converged else 'not separable within budget'})"
    )
    return TrainingReport(neuron, best_correct, total, epochs, converged)


@dataclass
class XorRow:
    x: int
    y: int
    values: Tuple[float, ...]
    feature: float
    sigma: float
    q: int
    expected_q: int


@dataclass
class XorReport:
    rows: List[XorRow]
    neuron: ReadoutNeuron
    training: Optional[TrainingReport] = None

    @property
    def correct(self) -> int:
        return sum(1 for r in self.rows if r.q == r.expected_q)


def xor_table(pipeline: PipelineConfig, feature_source: FeatureSource = None) -> XorReport:
    """All four XOR cases in truth-table order, retraining the readout when requested"""
    source = feature_source or _simulated_features(pipeline)
    features = {}
    for case in XOR_CASES:
        features[(case.x, case.y)] = tuple(source(case.x, case.y))
        logger.info(f"XOR case X={case.x} Y={case.y}: Z={features[(case.x, case.y)]}")

    neuron = pipeline.readout
    training = None
    if pipeline.train_readout:
        dataset = [((c.x, c.y), features[(c.x, c.y)], c.expected_q) for c in XOR_CASES]
        training = train_readout(dataset)
        neuron = training.neuron

    rows = []
    for case in XOR_CASES:
        z = features[(case.x, case.y)]
        sigma = readout_sum((case.x, case.y), z, neuron)
        rows.append(
            XorRow(
                x=case.x,
                y=case.y,
                values=encode_inputs((case.x, case.y), pipeline.encoding),
                feature=z[0],
                sigma=sigma,
                q=activation(sigma),
                expected_q=case.expected_q,
            )
        )
    return XorReport(rows, neuron, training)
