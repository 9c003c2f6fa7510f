"""
Arnold-tongue sweeps over two scalar network parameters

Every grid cell is an independent simulation seeded from (base_seed, ix, iy)
through splitmix64, so a map does not depend on worker count or on the order
in which cells finish. Cells that fail carry the error category instead of
metrics.
"""

import logging
import multiprocessing as mp
from dataclasses import dataclass, field, replace
from functools import partial
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import CONFIG
from .errors import InvalidParametersError, OscLabError
from .network import U64_MAX, NetworkConfig, validate_path, with_parameter
from .reservoir import XOR_CASES, InputEncoding, ReadoutNeuron, TrainingReport, train_readout
from .simulator import simulate
from .sync_metrics import MetricConfig, Pattern, SyncMetrics, compute_shr_mu

logger = logging.getLogger("Sweep")

MASK64 = U64_MAX
MAX_PATTERN_OSCILLATORS = 16


def splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def cell_seed(base_seed: int, ix: int, iy: int) -> int:
    """splitmix64(splitmix64(splitmix64(base_seed) ^ ix) ^ iy)"""
    return splitmix64(splitmix64(splitmix64(int(base_seed) & MASK64) ^ int(ix)) ^ int(iy))


@dataclass(frozen=True)
class AxisSpec:
    path: str
    min_value: float
    max_value: float
    steps: int

    def __post_init__(self) -> None:
        if int(self.steps) < 2:
            raise InvalidParametersError(f"axis {self.path}: steps must be >= 2, got {self.steps}")
        if not float(self.min_value) < float(self.max_value):
            raise InvalidParametersError(f"axis {self.path}: min must be < max, got {self.min_value}, {self.max_value}")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "min_value", float(self.min_value))
        object.__setattr__(self, "max_value", float(self.max_value))

    @property
    def values(self) -> Tuple[float, ...]:
        # inclusive linear spacing
        return tuple(float(v) for v in np.linspace(self.min_value, self.max_value, self.steps))


@dataclass(frozen=True)
class SweepSpec:
    axis_x: AxisSpec
    axis_y: AxisSpec
    template: NetworkConfig
    metric_cfg: MetricConfig = field(default_factory=MetricConfig)
    observed_pair: Tuple[int, int] = (0, 1)
    base_seed: int = 0
    warmup_spikes: int = CONFIG.warmup_spikes
    record_spikes: int = CONFIG.record_spikes

    def __post_init__(self) -> None:
        validate_path(self.template, self.axis_x.path)
        validate_path(self.template, self.axis_y.path)
        if self.axis_x.path == self.axis_y.path:
            raise InvalidParametersError(f"both axes address {self.axis_x.path}")
        i, j = self.observed_pair
        n = self.template.n
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise InvalidParametersError(f"observed_pair {self.observed_pair} invalid for {n} oscillators")
        if not 0 <= int(self.base_seed) <= U64_MAX:
            raise InvalidParametersError(f"base_seed must be an unsigned 64-bit integer, got {self.base_seed}")
        object.__setattr__(self, "observed_pair", (int(i), int(j)))
        object.__setattr__(self, "base_seed", int(self.base_seed))


@dataclass(frozen=True)
class CellResult:
    ix: int
    iy: int
    x_value: float
    y_value: float
    metrics: Optional[SyncMetrics] = None
    error: Optional[str] = None  # error category name when the cell failed
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def synchronized(self) -> bool:
        return self.ok and self.metrics.synchronized


@dataclass
class ArnoldMap:
    """Cells in row-major order, axis_y outer"""

    x_path: str
    y_path: str
    x_values: Tuple[float, ...]
    y_values: Tuple[float, ...]
    cells: List[CellResult]
    spec: Optional[SweepSpec] = None

    def __post_init__(self) -> None:
        if len(self.cells) != len(self.x_values) * len(self.y_values):
            raise InvalidParametersError(
                f"map has {len(self.cells)} cells for a {len(self.x_values)}x{len(self.y_values)} grid"
            )

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.y_values), len(self.x_values)

    def __len__(self) -> int:
        return len(self.cells)

    def cell(self, ix: int, iy: int) -> CellResult:
        return self.cells[iy * len(self.x_values) + ix]

    def shr_grid(self) -> np.ndarray:
        """shr_value per cell (0 when unsynchronized, NaN for failed cells), shape (ny, nx)"""
        grid = np.full(self.shape, np.nan)
        for c in self.cells:
            if c.ok:
                grid[c.iy, c.ix] = c.metrics.shr_value
        return grid

    def synchronized_grid(self) -> np.ndarray:
        grid = np.zeros(self.shape, dtype=bool)
        for c in self.cells:
            grid[c.iy, c.ix] = c.synchronized
        return grid


def _evaluate(
    template: NetworkConfig,
    assignments: Sequence[Tuple[str, float]],
    seed: int,
    pair: Tuple[int, int],
    metric_cfg: MetricConfig,
    warmup_spikes: int,
    record_spikes: int,
) -> Tuple[Optional[SyncMetrics], Optional[str], str]:
    try:
        config = template
        for path, value in assignments:
            config = with_parameter(config, path, value)
        config = replace(config, seed=seed)
        trains = simulate(config, warmup_spikes, record_spikes)
        return compute_shr_mu(trains[pair[0]], trains[pair[1]], metric_cfg), None, ""
    except OscLabError as exc:
        logger.warning(f"cell {list(assignments)} failed: {type(exc).__name__}: {exc}")
        return None, type(exc).__name__, str(exc)


def evaluate_cell(spec: SweepSpec, ix: int, iy: int) -> CellResult:
    x = spec.axis_x.values[ix]
    y = spec.axis_y.values[iy]
    metrics, error, message = _evaluate(
        spec.template,
        ((spec.axis_x.path, x), (spec.axis_y.path, y)),
        cell_seed(spec.base_seed, ix, iy),
        spec.observed_pair,
        spec.metric_cfg,
        spec.warmup_spikes,
        spec.record_spikes,
    )
    return CellResult(ix, iy, x, y, metrics, error, message)


def _cell_task(spec: SweepSpec, task: Tuple[int, int, int]) -> Tuple[int, CellResult]:
    k, ix, iy = task
    return k, evaluate_cell(spec, ix, iy)


def _run_tasks(worker_fn, tasks: Sequence, workers: int, label: str) -> List:
    """Apply worker_fn to (k, ...) tasks, returning results placed by k"""
    total = len(tasks)
    results: List = [None] * total
    step = max(1, int(total * CONFIG.progress_every))
    done = 0

    def collect(item) -> None:
        nonlocal done
        k, result = item
        results[k] = result
        done += 1
        if done % step == 0 or done == total:
            logger.info(f"{label}: {done}/{total} cells ({100.0 * done / total:.0f}%)")

    if workers <= 1 or total <= 1:
        for task in tasks:
            collect(worker_fn(task))
    else:
        with mp.Pool(processes=min(workers, total)) as pool:
            # chunksize 1 keeps load balancing dynamic; placement is by index
            for item in pool.imap_unordered(worker_fn, tasks, chunksize=1):
                collect(item)
    return results


def arnold_sweep(spec: SweepSpec, workers: int = None) -> ArnoldMap:
    workers = CONFIG.workers if workers is None else int(workers)
    if workers < 1:
        raise InvalidParametersError(f"workers must be >= 1, got {workers}")
    nx, ny = spec.axis_x.steps, spec.axis_y.steps
    tasks = [(iy * nx + ix, ix, iy) for iy in range(ny) for ix in range(nx)]
    logger.info(
        f"Sweeping {spec.axis_x.path} x {spec.axis_y.path}: {nx}x{ny} cells, "
        f"pair {spec.observed_pair}, {workers} worker(s)"
    )
    cells = _run_tasks(partial(_cell_task, spec), tasks, workers, "sweep")
    failed = sum(1 for c in cells if not c.ok)
    if failed:
        logger.warning(f"{failed} of {len(cells)} cells failed; see error_flag")
    return ArnoldMap(spec.axis_x.path, spec.axis_y.path, spec.axis_x.values, spec.axis_y.values, cells, spec)


@dataclass
class SyncStateCount:
    n_s: int
    occupancy: Dict[Pattern, int]


def count_sync_states(cells: Union[ArnoldMap, Iterable[CellResult]]) -> SyncStateCount:
    """Distinct reduced (m_i, m_j) states among synchronized cells, with cell tallies"""
    if isinstance(cells, ArnoldMap):
        cells = cells.cells
    occupancy: Dict[Pattern, int] = {}
    for c in cells:
        if c.synchronized:
            occupancy[c.metrics.state] = occupancy.get(c.metrics.state, 0) + 1
    return SyncStateCount(len(occupancy), dict(sorted(occupancy.items())))


@dataclass
class XorOperatingPoint:
    encoding: InputEncoding
    corners: Dict[Tuple[int, int], CellResult]
    training: TrainingReport

    @property
    def neuron(self) -> ReadoutNeuron:
        return self.training.neuron

    def features(self) -> Dict[Tuple[int, int], float]:
        return {xy: c.metrics.shr_value for xy, c in self.corners.items()}


def _rectangle_candidates(amap: ArnoldMap, limit: int) -> Tuple[np.ndarray, int]:
    """
    Best `limit` (c, e, a, b) index rows plus the number of separable rectangles

    Rows are ordered by preference: all corners synchronized, then |d|
    descending, then (c, e, a, b). Only one row pair is held at a time.
    """
    z = amap.shr_grid()
    sync = amap.synchronized_grid()
    ny, nx = z.shape
    a_idx, b_idx = np.triu_indices(nx, k=1)
    best = np.empty((0, 4), dtype=np.int64)
    best_absd = np.empty(0)
    best_unsync = np.empty(0, dtype=bool)
    total = 0
    for c in range(ny - 1):
        for e in range(c + 1, ny):
            # d = z11 + z00 - z10 - z01 with X on columns a<b and Y on rows c<e
            d = z[e, b_idx] + z[c, a_idx] - z[c, b_idx] - z[e, a_idx]
            absd = np.abs(d)
            ok = np.isfinite(d) & (absd > 1e-12)
            count = int(ok.sum())
            if not count:
                continue
            total += count
            all_sync = sync[e, b_idx] & sync[c, a_idx] & sync[c, b_idx] & sync[e, a_idx]
            rows = np.column_stack(
                [np.full(count, c), np.full(count, e), a_idx[ok], b_idx[ok]]
            ).astype(np.int64)
            rows = np.concatenate([best, rows])
            absd = np.concatenate([best_absd, absd[ok]])
            unsync = np.concatenate([best_unsync, ~all_sync[ok]])
            order = np.lexsort((rows[:, 3], rows[:, 2], rows[:, 1], rows[:, 0], -absd, unsync))[:limit]
            best, best_absd, best_unsync = rows[order], absd[order], unsync[order]
    return best, total


def find_xor_operating_points(amap: ArnoldMap, max_candidates: int = 20) -> Optional[XorOperatingPoint]:
    """
    Search two X levels and two Y levels whose SHR corners make XOR linearly separable

    X maps onto the x axis and Y onto the y axis through the affine encoding
    value = offset + gain * input; candidates are confirmed by training the
    readout on the four corners. Returns None when no rectangle works.
    """
    if max_candidates < 1:
        raise InvalidParametersError(f"max_candidates must be >= 1, got {max_candidates}")
    candidates, total = _rectangle_candidates(amap, max_candidates)
    logger.info(f"{total} separable rectangles, confirming up to {len(candidates)}")
    for c, e, a, b in candidates.tolist():
        corners = {
            (0, 0): amap.cell(a, c),
            (1, 0): amap.cell(b, c),
            (0, 1): amap.cell(a, e),
            (1, 1): amap.cell(b, e),
        }
        dataset = [((k.x, k.y), (corners[(k.x, k.y)].metrics.shr_value,), k.expected_q) for k in XOR_CASES]
        report = train_readout(dataset)
        if report.correct != report.total:
            continue
        x0, x1 = amap.x_values[a], amap.x_values[b]
        y0, y1 = amap.y_values[c], amap.y_values[e]
        encoding = InputEncoding(offsets=(x0, y0), gains=(x1 - x0, y1 - y0), targets=(amap.x_path, amap.y_path))
        logger.info(
            f"XOR operating point: X in ({x0:.6g}, {x1:.6g}), Y in ({y0:.6g}, {y1:.6g}), "
            f"features {[round(corners[k].metrics.shr_value, 4) for k in ((1, 1), (1, 0), (0, 1), (0, 0))]}"
        )
        return XorOperatingPoint(encoding, corners, report)
    logger.info("No XOR operating point found")
    return None


def on_off_patterns(template: NetworkConfig, i_on: float, i_off: float) -> List[Tuple[Tuple[int, ...], NetworkConfig]]:
    """All 2^N supply-current patterns, bit k = 1 meaning oscillator k runs at i_on"""
    n = template.n
    if n > MAX_PATTERN_OSCILLATORS:
        raise InvalidParametersError(f"pattern enumeration supports at most {MAX_PATTERN_OSCILLATORS} oscillators, got {n}")
    patterns = []
    for bits in product((0, 1), repeat=n):
        config = template
        for k, bit in enumerate(bits):
            config = with_parameter(config, f"oscillators.{k}.supply_current", i_on if bit else i_off)
        patterns.append((bits, config))
    return patterns


@dataclass(frozen=True)
class PatternResult:
    bits: Tuple[int, ...]
    metrics: Optional[SyncMetrics] = None
    error: Optional[str] = None
    message: str = ""


def _pattern_task(
    template: NetworkConfig,
    i_on: float,
    i_off: float,
    pair: Tuple[int, int],
    metric_cfg: MetricConfig,
    base_seed: int,
    warmup_spikes: int,
    record_spikes: int,
    task: Tuple[int, Tuple[int, ...]],
) -> Tuple[int, PatternResult]:
    k, bits = task
    assignments = [(f"oscillators.{j}.supply_current", i_on if bit else i_off) for j, bit in enumerate(bits)]
    metrics, error, message = _evaluate(
        template, assignments, cell_seed(base_seed, k, 0), pair, metric_cfg, warmup_spikes, record_spikes
    )
    return k, PatternResult(bits, metrics, error, message)


def pattern_sweep(
    template: NetworkConfig,
    i_on: float,
    i_off: float,
    pair: Tuple[int, int] = (0, 1),
    metric_cfg: MetricConfig = None,
    base_seed: int = 0,
    warmup_spikes: int = None,
    record_spikes: int = None,
    workers: int = None,
) -> List[PatternResult]:
    """SyncMetrics of one pair under every ON/OFF current pattern, in binary counting order"""
    if template.n > MAX_PATTERN_OSCILLATORS:
        raise InvalidParametersError(
            f"pattern enumeration supports at most {MAX_PATTERN_OSCILLATORS} oscillators, got {template.n}"
        )
    i, j = pair
    if not (0 <= i < template.n and 0 <= j < template.n) or i == j:
        raise InvalidParametersError(f"pair {pair} invalid for {template.n} oscillators")
    workers = CONFIG.workers if workers is None else int(workers)
    tasks = list(enumerate(product((0, 1), repeat=template.n)))
    fn = partial(
        _pattern_task,
        template,
        float(i_on),
        float(i_off),
        (i, j),
        metric_cfg or MetricConfig(),
        int(base_seed),
        CONFIG.warmup_spikes if warmup_spikes is None else warmup_spikes,
        CONFIG.record_spikes if record_spikes is None else record_spikes,
    )
    return _run_tasks(fn, tasks, max(1, workers), "patterns")
