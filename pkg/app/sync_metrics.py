"""
High-order synchronization metrics for pairs of spike trains

- SHR_{i,j} = M_j : M_i, the reduced ratio of periods between synchronous spikes
- mu_{i,j}, the percentage of analysed spikes that follow the dominant pattern

Coincidences are matched greedily, earliest first, inside +/- epsilon. The
periods between consecutive coincidences are counted per train, each
(M_i, M_j) pair is reduced by its gcd, and the most frequent reduced pattern
defines SHR.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import CONFIG
from .errors import InsufficientDataError, InvalidParametersError
from .network import SpikeTrain

logger = logging.getLogger("SyncMetrics")

TrainLike = Union[SpikeTrain, Sequence[float], np.ndarray]
Pattern = Tuple[int, int]


@dataclass(frozen=True)
class MetricConfig:
    epsilon: Optional[float] = None  # seconds; None derives it per pair
    mu_th: float = CONFIG.mu_th
    min_oscillations: int = CONFIG.min_oscillations
    max_oscillations: int = CONFIG.analysis_window
    epsilon_fraction: float = CONFIG.epsilon_fraction
    bounded: bool = True  # enforce the 50..10000 oscillation band

    def __post_init__(self) -> None:
        if self.epsilon is not None and not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidParametersError(f"epsilon must be > 0, got {self.epsilon}")
        if not 0 < self.mu_th <= 100:
            raise InvalidParametersError(f"mu_th must lie in (0, 100], got {self.mu_th}")
        if not 0 < self.epsilon_fraction < 1:
            raise InvalidParametersError(f"epsilon_fraction must lie in (0, 1), got {self.epsilon_fraction}")
        if not 2 <= self.min_oscillations <= self.max_oscillations:
            raise InvalidParametersError(
                f"need 2 <= min_oscillations <= max_oscillations, got "
                f"{self.min_oscillations}, {self.max_oscillations}"
            )
        if self.bounded and not (
            CONFIG.min_oscillations <= self.min_oscillations <= self.max_oscillations <= CONFIG.max_oscillations
        ):
            raise InvalidParametersError(
                f"oscillation window must satisfy {CONFIG.min_oscillations} <= min <= max <= "
                f"{CONFIG.max_oscillations} (pass bounded=False to override)"
            )


@dataclass(frozen=True)
class SyncMetrics:
    m_i: int
    m_j: int
    shr_value: float
    mu: float
    synchronized: bool
    pattern_histogram: Dict[Pattern, int] = field(default_factory=dict)
    coincidences: int = 0
    epsilon: float = 0.0

    @property
    def shr_label(self) -> str:
        """SHR written as M_j:M_i"""
        return f"{self.m_j}:{self.m_i}"

    @property
    def state(self) -> Optional[Pattern]:
        return (self.m_i, self.m_j) if self.synchronized else None

    def swapped(self) -> "SyncMetrics":
        return SyncMetrics(
            m_i=self.m_j,
            m_j=self.m_i,
            shr_value=(self.m_i / self.m_j) if self.synchronized else 0.0,
            mu=self.mu,
            synchronized=self.synchronized,
            pattern_histogram={(b, a): c for (a, b), c in self.pattern_histogram.items()},
            coincidences=self.coincidences,
            epsilon=self.epsilon,
        )


def unsynchronized(coincidences: int = 0, epsilon: float = 0.0) -> SyncMetrics:
    return SyncMetrics(0, 0, 0.0, 0.0, False, {}, coincidences, epsilon)


def _times(train: TrainLike) -> np.ndarray:
    if isinstance(train, SpikeTrain):
        return train.array
    return np.asarray(train, dtype=float)


def _mean_interval(times: np.ndarray) -> float:
    if len(times) < 2:
        return math.inf
    return (times[-1] - times[0]) / (len(times) - 1)


def analysis_window(train_i: TrainLike, train_j: TrainLike, cfg: MetricConfig) -> Tuple[np.ndarray, np.ndarray, float]:
    """Cropped times of both trains plus the coincidence half-window to use"""
    ti = _times(train_i)
    tj = _times(train_j)
    for label, times in (("train_i", ti), ("train_j", tj)):
        if len(times) < cfg.min_oscillations:
            raise InsufficientDataError(
                f"insufficient data: {label} has {len(times)} spikes, "
                f"min_oscillations={cfg.min_oscillations}"
            )

    window = cfg.max_oscillations
    starts = [times[-window] for times in (ti, tj) if len(times) > window]
    if starts:
        start = max(starts)
        ti = ti[ti >= start]
        tj = tj[tj >= start]

    if cfg.epsilon is not None:
        eps = float(cfg.epsilon)
    else:
        eps = cfg.epsilon_fraction * min(_mean_interval(ti), _mean_interval(tj))
        if not math.isfinite(eps):
            eps = 0.0
    return ti, tj, eps


def _match(ti: np.ndarray, tj: np.ndarray, epsilon: float) -> List[Tuple[int, int]]:
    pairs: List[Tuple[int, int]] = []
    a = b = 0
    na, nb = len(ti), len(tj)
    while a < na and b < nb:
        x = ti[a]
        y = tj[b]
        if abs(x - y) <= epsilon:
            pairs.append((a, b))
            a += 1
            b += 1
        elif x < y:
            a += 1
        else:
            b += 1
    return pairs


def detect_synchronous_events(train_i: TrainLike, train_j: TrainLike, epsilon: float) -> List[Tuple[int, int]]:
    """Chronological, non-overlapping (index_i, index_j) pairs with |t_i - t_j| <= epsilon"""
    return _match(_times(train_i), _times(train_j), float(epsilon))


def modal_pattern(patterns: Sequence[Pattern], coverage: Sequence[int]) -> Pattern:
    """Most frequent pattern; ties by covered spikes, then by earliest first occurrence"""
    stats: Dict[Pattern, List[int]] = {}
    for k, (pattern, covered) in enumerate(zip(patterns, coverage)):
        entry = stats.setdefault(pattern, [0, 0, k])
        entry[0] += 1
        entry[1] += covered
    return max(stats, key=lambda p: (stats[p][0], stats[p][1], -stats[p][2]))


def metrics_from_events(
    pairs: Sequence[Tuple[int, int]], epsilon: float, mu_th: float
) -> SyncMetrics:
    if len(pairs) < 2:
        return unsynchronized(len(pairs), epsilon)

    idx = np.asarray(pairs, dtype=np.int64)
    m_i = np.diff(idx[:, 0])
    m_j = np.diff(idx[:, 1])
    g = np.gcd(m_i, m_j)
    reduced = list(zip((m_i // g).tolist(), (m_j // g).tolist()))
    coverage = (m_i + m_j).tolist()

    histogram: Dict[Pattern, int] = {}
    for pattern in reduced:
        histogram[pattern] = histogram.get(pattern, 0) + 1
    modal = modal_pattern(reduced, coverage)
    covered = sum(c for p, c in zip(reduced, coverage) if p == modal)
    total = int(m_i.sum() + m_j.sum())
    mu = 100.0 * covered / total
    synchronized = mu >= mu_th
    return SyncMetrics(
        m_i=modal[0],
        m_j=modal[1],
        shr_value=(modal[1] / modal[0]) if synchronized else 0.0,
        mu=mu,
        synchronized=synchronized,
        pattern_histogram=histogram,
        coincidences=len(pairs),
        epsilon=epsilon,
    )


def compute_shr_mu(train_i: TrainLike, train_j: TrainLike, cfg: MetricConfig = None) -> SyncMetrics:
    cfg = cfg or MetricConfig()
    ti, tj, eps = analysis_window(train_i, train_j, cfg)
    result = metrics_from_events(_match(ti, tj, eps), eps, cfg.mu_th)
    logger.debug(
        f"SHR={result.shr_label} mu={result.mu:.2f}% coincidences={result.coincidences} eps={eps:.3g}s"
    )
    return result


def is_synchronized(metrics: SyncMetrics, mu_th: float) -> bool:
    return metrics.mu >= mu_th


def pairwise_metrics(
    trains: Sequence[SpikeTrain],
    cfg: MetricConfig = None,
    pairs: Optional[Iterable[Tuple[int, int]]] = None,
) -> Dict[Tuple[int, int], SyncMetrics]:
    """SyncMetrics for the requested (i, j) pairs, all i < j by default"""
    cfg = cfg or MetricConfig()
    if pairs is None:
        pairs = [(i, j) for i in range(len(trains)) for j in range(i + 1, len(trains))]
    return {(i, j): compute_shr_mu(trains[i], trains[j], cfg) for i, j in pairs}


def print_summary(results: Dict[Tuple[int, int], SyncMetrics], labels: Optional[Sequence[str]] = None) -> None:
    """Print a pairwise SHR / mu table"""
    print("\n" + "=" * 60)
    print("SYNCHRONIZATION SUMMARY")
    print("=" * 60)
    print(f"  {'pair':<24}{'SHR':>8}{'value':>10}{'mu %':>10}  sync")
    for (i, j), m in results.items():
        name = f"{labels[i]} ~ {labels[j]}" if labels else f"{i} ~ {j}"
        print(f"  {name:<24}{m.shr_label:>8}{m.shr_value:>10.4f}{m.mu:>10.2f}  {'yes' if m.synchronized else 'no'}")
    print("=" * 60)
