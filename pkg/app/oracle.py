"""
Exhaustive reference for compute_shr_mu, used to cross-check it in tests

Nothing here is incremental and nothing is shared with the fast path beyond
the result types: the analysis window and epsilon are derived again from the
raw spike times, every pair within epsilon is enumerated, the matching is
chosen by rescanning the full candidate list for each coincidence, and the
period counts are taken by counting spikes interval by interval.
"""

import math
from math import gcd
from typing import Dict, List, Tuple

from .config import CONFIG
from .errors import InsufficientDataError, OracleSizeError
from .network import SpikeTrain
from .sync_metrics import MetricConfig, Pattern, SyncMetrics, TrainLike, unsynchronized


def _as_list(train: TrainLike) -> List[float]:
    if isinstance(train, SpikeTrain):
        return list(train.times)
    return [float(t) for t in train]


def _window(ti: List[float], tj: List[float], cfg: MetricConfig) -> Tuple[List[float], List[float], float]:
    for label, times in (("train_i", ti), ("train_j", tj)):
        if len(times) < cfg.min_oscillations:
            raise InsufficientDataError(
                f"insufficient data: {label} has {len(times)} spikes, "
                f"min_oscillations={cfg.min_oscillations}"
            )

    # both trains start at the later of the two window starts
    start = None
    for times in (ti, tj):
        if len(times) > cfg.max_oscillations:
            candidate = times[len(times) - cfg.max_oscillations]
            if start is None or candidate > start:
                start = candidate
    if start is not None:
        ti = [t for t in ti if t >= start]
        tj = [t for t in tj if t >= start]

    if cfg.epsilon is not None:
        return ti, tj, float(cfg.epsilon)
    means = []
    for times in (ti, tj):
        means.append((times[-1] - times[0]) / (len(times) - 1) if len(times) >= 2 else math.inf)
    eps = cfg.epsilon_fraction * min(means)
    return ti, tj, eps if math.isfinite(eps) else 0.0


def _all_candidates(ti: List[float], tj: List[float], epsilon: float) -> List[Tuple[float, float, int, int]]:
    candidates = []
    for a, x in enumerate(ti):
        for b, y in enumerate(tj):
            if abs(x - y) <= epsilon:
                candidates.append((min(x, y), max(x, y), a, b))
    return candidates


def _matching(candidates: List[Tuple[float, float, int, int]]) -> List[Tuple[int, int]]:
    """Repeatedly take the earliest candidate that follows every pair taken so far"""
    events: List[Tuple[int, int]] = []
    last_a = last_b = -1
    while True:
        eligible = [c for c in candidates if c[2] > last_a and c[3] > last_b]
        if not eligible:
            return events
        _, _, last_a, last_b = min(eligible)
        events.append((last_a, last_b))


def shr_brute_force_oracle(train_i: TrainLike, train_j: TrainLike, cfg: MetricConfig = None) -> SyncMetrics:
    cfg = cfg or MetricConfig()
    ti, tj, eps = _window(_as_list(train_i), _as_list(train_j), cfg)
    cap = CONFIG.oracle_max_spikes
    if len(ti) > cap or len(tj) > cap:
        raise OracleSizeError(f"oracle refuses trains above {cap} spikes (got {len(ti)}, {len(tj)})")

    events = _matching(_all_candidates(ti, tj, eps))
    if len(events) < 2:
        return unsynchronized(len(events), eps)

    intervals: List[Tuple[Pattern, int, int]] = []
    for k in range(len(events) - 1):
        (a0, b0), (a1, b1) = events[k], events[k + 1]
        count_i = sum(1 for a in range(len(ti)) if a0 <= a < a1)
        count_j = sum(1 for b in range(len(tj)) if b0 <= b < b1)
        g = gcd(count_i, count_j)
        intervals.append(((count_i // g, count_j // g), count_i + count_j, k))

    histogram: Dict[Pattern, int] = {}
    covered: Dict[Pattern, int] = {}
    first: Dict[Pattern, int] = {}
    for pattern, spikes, k in intervals:
        histogram[pattern] = histogram.get(pattern, 0) + 1
        covered[pattern] = covered.get(pattern, 0) + spikes
        first.setdefault(pattern, k)

    ranked = sorted(histogram, key=lambda p: (-histogram[p], -covered[p], first[p]))
    modal = ranked[0]
    total = sum(spikes for _, spikes, _ in intervals)
    mu = 100.0 * covered[modal] / total
    synchronized = mu >= cfg.mu_th
    return SyncMetrics(
        m_i=modal[0],
        m_j=modal[1],
        shr_value=(modal[1] / modal[0]) if synchronized else 0.0,
        mu=mu,
        synchronized=synchronized,
        pattern_histogram=histogram,
        coincidences=len(events),
        epsilon=eps,
    )
