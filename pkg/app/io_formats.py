"""
File formats: spike trains, Arnold map CSV/PGM, metric tables, readout weights, datasets

All writers are deterministic so reruns of a fixed configuration give
byte-identical files. Floats are written with repr() precision.
"""

import io
import json
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import CONFIG
from .errors import ParseError
from .network import SpikeTrain
from .reservoir import ReadoutNeuron, Sample, XorReport
from .sweep import ArnoldMap, CellResult, PatternResult
from .sync_metrics import SyncMetrics

MAP_COLUMNS = ["x_value", "y_value", "m_i", "m_j", "shr_value", "mu_percent", "synchronized", "error_flag"]


# Spike trains ---------------------------------------------------------------


def format_spike_train(train: SpikeTrain, comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(f"# oscillator {train.oscillator_index}, {len(train)} spikes, seconds")
    lines.extend(repr(t) for t in train.times)
    return "\n".join(lines) + "\n"


def parse_spike_train(text: str, oscillator_index: int = 0, source: str = "<train>") -> SpikeTrain:
    times: List[float] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            t = float(line)
        except ValueError:
            raise ParseError(f"not a timestamp: {line!r}", lineno, source) from None
        if not math.isfinite(t):
            raise ParseError(f"timestamp must be finite, got {line!r}", lineno, source)
        if times and t <= times[-1]:
            raise ParseError(f"timestamps must be strictly increasing ({t!r} after {times[-1]!r})", lineno, source)
        times.append(t)
    return SpikeTrain(oscillator_index, tuple(times))


def write_spike_train(path, train: SpikeTrain, comments: Sequence[str] = ()) -> Path:
    path = Path(path)
    path.write_text(format_spike_train(train, comments), encoding="utf-8")
    return path


def read_spike_train(path, oscillator_index: int = 0) -> SpikeTrain:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read spike train: {exc.strerror}", source=str(path)) from None
    return parse_spike_train(text, oscillator_index, str(path))


# Arnold maps ----------------------------------------------------------------


def map_to_frame(amap: ArnoldMap) -> pd.DataFrame:
    rows = []
    for c in amap.cells:
        m = c.metrics
        rows.append(
            {
                "x_value": c.x_value,
                "y_value": c.y_value,
                "m_i": m.m_i if c.ok else pd.NA,
                "m_j": m.m_j if c.ok else pd.NA,
                "shr_value": m.shr_value if c.ok else np.nan,
                "mu_percent": m.mu if c.ok else np.nan,
                "synchronized": c.synchronized,
                "error_flag": c.error or "",
            }
        )
    frame = pd.DataFrame(rows, columns=MAP_COLUMNS)
    return frame.astype({"m_i": "Int64", "m_j": "Int64"})


def format_map_csv(amap: ArnoldMap) -> str:
    buffer = io.StringIO()
    map_to_frame(amap).to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def write_map_csv(path, amap: ArnoldMap) -> Path:
    path = Path(path)
    path.write_text(format_map_csv(amap), encoding="utf-8")
    return path


def parse_map_csv(text: str, x_path: str = "x", y_path: str = "y", source: str = "<map>") -> ArnoldMap:
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            dtype={"m_i": "Int64", "m_j": "Int64", "error_flag": str},
            keep_default_na=False,
            na_values={"m_i": [""], "m_j": [""], "shr_value": [""], "mu_percent": [""]},
            float_precision="round_trip",
        )
    except (ValueError, pd.errors.ParserError) as exc:
        raise ParseError(f"malformed map CSV: {exc}", source=source) from None
    if list(frame.columns) != MAP_COLUMNS:
        raise ParseError(f"map CSV columns must be {MAP_COLUMNS}, got {list(frame.columns)}", 1, source)

    x_values = tuple(dict.fromkeys(float(v) for v in frame["x_value"]))
    y_values = tuple(dict.fromkeys(float(v) for v in frame["y_value"]))
    nx = len(x_values)
    if len(frame) != nx * len(y_values):
        raise ParseError(f"{len(frame)} rows do not form a {nx}x{len(y_values)} grid", source=source)

    cells = []
    for k, row in enumerate(frame.itertuples(index=False)):
        ix, iy = k % nx, k // nx
        if float(row.x_value) != x_values[ix] or float(row.y_value) != y_values[iy]:
            raise ParseError("rows are not in row-major order (y outer)", k + 2, source)
        if row.error_flag:
            cells.append(CellResult(ix, iy, x_values[ix], y_values[iy], None, row.error_flag))
            continue
        synchronized = str(row.synchronized) == "True"
        metrics = SyncMetrics(
            m_i=int(row.m_i),
            m_j=int(row.m_j),
            shr_value=float(row.shr_value),
            mu=float(row.mu_percent),
            synchronized=synchronized,
        )
        cells.append(CellResult(ix, iy, x_values[ix], y_values[iy], metrics))
    return ArnoldMap(x_path, y_path, x_values, y_values, cells)


def read_map_csv(path, x_path: str = "x", y_path: str = "y") -> ArnoldMap:
    path = Path(path)
    return parse_map_csv(path.read_text(encoding="utf-8"), x_path, y_path, str(path))


def shr_gray_level(cell: CellResult) -> int:
    """0 for unsynchronized or failed cells, else 1..255 on a log2 scale clamped to the configured SHR range"""
    if not cell.synchronized:
        return 0
    lo, hi = math.log2(CONFIG.pgm_shr_min), math.log2(CONFIG.pgm_shr_max)
    level = min(max(math.log2(cell.metrics.shr_value), lo), hi)
    return 1 + int(round(254 * (level - lo) / (hi - lo)))


def _gray_scale_comment() -> str:
    lo, hi = math.log2(CONFIG.pgm_shr_min), math.log2(CONFIG.pgm_shr_max)
    shift = f"+ {abs(lo):g}" if lo <= 0 else f"- {lo:g}"
    return (
        "# shr_value -> gray: 0 unsynchronized or failed, "
        f"1 + round(254 * (log2(clamp(shr, {CONFIG.pgm_shr_min:g}, {CONFIG.pgm_shr_max:g})) {shift}) / {hi - lo:g})"
    )


def format_map_pgm(amap: ArnoldMap) -> str:
    ny, nx = amap.shape
    lines = [
        "P2",
        _gray_scale_comment(),
        f"# x: {amap.x_path} (columns), y: {amap.y_path} (rows, first row = lowest y)",
        f"{nx} {ny}",
        "255",
    ]
    for iy in range(ny):
        lines.append(" ".join(str(shr_gray_level(amap.cell(ix, iy))) for ix in range(nx)))
    return "\n".join(lines) + "\n"


def write_map_pgm(path, amap: ArnoldMap) -> Path:
    path = Path(path)
    path.write_text(format_map_pgm(amap), encoding="ascii")
    return path


def parse_pgm(text: str, source: str = "<pgm>") -> np.ndarray:
    tokens = []
    for raw in text.splitlines():
        tokens.extend(raw.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P2":
        raise ParseError("not a plain PGM (P2) file", 1, source)
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        pixels = [int(t) for t in tokens[4:]]
    except (IndexError, ValueError):
        raise ParseError("malformed PGM header or pixel data", source=source) from None
    if len(pixels) != width * height or any(not 0 <= p <= maxval for p in pixels):
        raise ParseError(f"expected {width * height} pixels in 0..{maxval}", source=source)
    return np.asarray(pixels, dtype=np.int64).reshape(height, width)


# Metric tables --------------------------------------------------------------


def metrics_frame(results: Dict[Tuple[int, int], SyncMetrics], labels: Optional[Sequence[str]] = None) -> pd.DataFrame:
    rows = []
    for (i, j), m in results.items():
        rows.append(
            {
                "i": i,
                "j": j,
                "train_i": labels[i] if labels else str(i),
                "train_j": labels[j] if labels else str(j),
                "m_i": m.m_i,
                "m_j": m.m_j,
                "shr": m.shr_label,
                "shr_value": m.shr_value,
                "mu_percent": m.mu,
                "synchronized": m.synchronized,
                "coincidences": m.coincidences,
                "epsilon_s": m.epsilon,
            }
        )
    return pd.DataFrame(rows)


def patterns_frame(results: Sequence[PatternResult], pair: Tuple[int, int]) -> pd.DataFrame:
    """One row per ON/OFF current pattern; bit k of `pattern` is oscillator k"""
    rows = []
    for r in results:
        m = r.metrics
        rows.append(
            {
                "pattern": "".join(str(b) for b in r.bits),
                "i": pair[0],
                "j": pair[1],
                "m_i": m.m_i if m else "",
                "m_j": m.m_j if m else "",
                "shr": m.shr_label if m else "",
                "shr_value": m.shr_value if m else "",
                "mu_percent": m.mu if m else "",
                "synchronized": m.synchronized if m else False,
                "error_flag": r.error or "",
            }
        )
    return pd.DataFrame(rows)


def write_frame(path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


# Readout weights and datasets -----------------------------------------------


def format_weights(neuron: ReadoutNeuron) -> str:
    doc = {
        "bias_weight": neuron.bias_weight,
        "input_weights": list(neuron.input_weights),
        "feature_weights": list(neuron.feature_weights),
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_weights(text: str, source: str = "<weights>") -> ReadoutNeuron:
    try:
        doc = json.loads(text)
        return ReadoutNeuron(doc["bias_weight"], tuple(doc["input_weights"]), tuple(doc["feature_weights"]))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, source) from None
    except (KeyError, TypeError) as exc:
        raise ParseError(f"weights file needs bias_weight, input_weights, feature_weights ({exc})", source=source) from None


def write_weights(path, neuron: ReadoutNeuron) -> Path:
    path = Path(path)
    path.write_text(format_weights(neuron), encoding="utf-8")
    return path


def read_weights(path) -> ReadoutNeuron:
    path = Path(path)
    return parse_weights(path.read_text(encoding="utf-8"), str(path))


def parse_dataset(text: str, source: str = "<dataset>") -> List[Sample]:
    """CSV with in_* input columns, feat_* feature columns and a 0/1 label column"""
    try:
        frame = pd.read_csv(io.StringIO(text), comment="#", dtype=str, keep_default_na=False)
    except (ValueError, pd.errors.ParserError) as exc:
        raise ParseError(f"malformed dataset CSV: {exc}", source=source) from None
    inputs = [c for c in frame.columns if c.startswith("in_")]
    features = [c for c in frame.columns if c.startswith("feat_")]
    if "label" not in frame.columns or not inputs:
        raise ParseError("dataset needs in_* columns and a label column", 1, source)
    unknown = [c for c in frame.columns if c not in inputs + features + ["label"]]
    if unknown:
        raise ParseError(f"unknown dataset columns {unknown}", 1, source)

    data_lines = [k for k, line in enumerate(text.splitlines(), start=1) if line.strip() and not line.lstrip().startswith("#")]
    samples: List[Sample] = []
    for k, row in enumerate(frame.itertuples(index=False)):
        values = dict(zip(frame.columns, row))
        lineno = data_lines[k + 1] if k + 1 < len(data_lines) else None
        try:
            x = tuple(float(values[c]) for c in inputs)
            z = tuple(float(values[c]) for c in features)
            label = int(values["label"])
        except ValueError:
            raise ParseError(f"non-numeric value in row {values}", lineno, source) from None
        if label not in (0, 1):
            raise ParseError(f"label must be 0 or 1, got {label}", lineno, source)
        samples.append((x, z, label))
    return samples


def read_dataset(path) -> List[Sample]:
    path = Path(path)
    return parse_dataset(path.read_text(encoding="utf-8"), str(path))


# XOR report -----------------------------------------------------------------


def _value_column(target: str, k: int) -> Tuple[str, float]:
    parts = target.split(".")
    if parts[0] == "oscillators" and parts[-1] == "supply_current":
        return f"I_p{int(parts[1]) + 1}_uA", 1e6
    if parts[0] == "coupling":
        return f"delta_{int(parts[1]) + 1}{int(parts[2]) + 1}_V", 1.0
    if parts[0] == "sequences":
        return f"sequence_{int(parts[1]) + 1}_level", 1.0
    return f"input_{k + 1}", 1.0


def xor_frame(report: XorReport, targets: Sequence[str], feature: str = "shr") -> pd.DataFrame:
    """Rows (X, Y, encoded values, feature, sigma, Q) in truth-table order"""
    columns = [_value_column(t, k) for k, t in enumerate(targets)]
    rows = []
    for r in report.rows:
        row = {"X": r.x, "Y": r.y}
        for (name, scale), value in zip(columns, r.values):
            row[name] = value * scale
        row["SHR" if feature == "shr" else "mu_percent"] = r.feature
        row["sigma"] = r.sigma
        row["Q"] = r.q
        row["expected_Q"] = r.expected_q
        rows.append(row)
    return pd.DataFrame(rows)


def print_xor_table(frame: pd.DataFrame, correct: int, neuron: ReadoutNeuron) -> None:
    print("\n" + "=" * 72)
    print("XOR TRUTH TABLE")
    print("=" * 72)
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.4f}"))
    print("-" * 72)
    print(
        f"Readout: w0={neuron.bias_weight:.4f} inputs={[round(w, 4) for w in neuron.input_weights]} "
        f"features={[round(w, 4) for w in neuron.feature_weights]}"
    )
    print(f"Accuracy: {correct}/{len(frame)}")
    print("=" * 72)
