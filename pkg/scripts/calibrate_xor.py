"""
Calibration driver for data/calibrated_xor.json

Sweeps the XOR current rectangle of a config, reports the synchronous states
it finds, evaluates the four corners used by the pipeline and searches the
map for a separable operating point.

Usage:
    python scripts/calibrate_xor.py --config data/sweep_xor_window.json --steps 20 --workers 8
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

# Add project root to path
project_root = Path(__file__).resolve().parent.parent
sys.path.append(str(project_root))

from app.errors import OscLabError
from app.schemas import load_config
from app.sweep import AxisSpec, arnold_sweep, count_sync_states, find_xor_operating_points

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
logger = logging.getLogger("CalibrateXOR")


def main() -> int:
    parser = argparse.ArgumentParser(description="Sweep the XOR current rectangle and look for an operating point")
    parser.add_argument("--config", default="data/sweep_xor_window.json", help="Config with a sweep section")
    parser.add_argument("--steps", type=int, default=None, help="Override the steps of both axes")
    parser.add_argument("--workers", type=int, default=None)
    args = parser.parse_args()

    try:
        run = load_config(args.config)
        if run.sweep is None:
            logger.error("Config has no sweep section")
            return 2
        spec = run.sweep
        if args.steps:
            spec = replace(
                spec,
                axis_x=AxisSpec(spec.axis_x.path, spec.axis_x.min_value, spec.axis_x.max_value, args.steps),
                axis_y=AxisSpec(spec.axis_y.path, spec.axis_y.min_value, spec.axis_y.max_value, args.steps),
            )

        corners = replace(
            spec,
            axis_x=AxisSpec(spec.axis_x.path, spec.axis_x.min_value, spec.axis_x.max_value, 2),
            axis_y=AxisSpec(spec.axis_y.path, spec.axis_y.min_value, spec.axis_y.max_value, 2),
        )
        corner_map = arnold_sweep(corners, args.workers)
        print("\n--- Rectangle corners ---")
        for c in corner_map.cells:
            label = c.metrics.shr_label if c.synchronized else ("unsync" if c.ok else c.error)
            mu = f"{c.metrics.mu:.1f}%" if c.ok else "-"
            print(f"  x={c.x_value * 1e6:8.2f} uA  y={c.y_value * 1e6:8.2f} uA  SHR={label:<8} mu={mu}")

        amap = arnold_sweep(spec, args.workers)
        states = count_sync_states(amap)
        print(f"\n--- {len(amap)} cells, N_s = {states.n_s} ---")
        for (m_i, m_j), count in states.occupancy.items():
            print(f"  SHR {m_j}:{m_i}  {count} cells")

        point = find_xor_operating_points(amap)
        if point is None:
            print("\n[-] No XOR operating point in this map")
            return 0
        enc = point.encoding
        print("\n[+] XOR operating point")
        print(f"    offsets (uA): {[round(v * 1e6, 3) for v in enc.offsets]}")
        print(f"    gains   (uA): {[round(v * 1e6, 3) for v in enc.gains]}")
        print(f"    features:     {point.features()}")
        print(f"    weights:      {list(point.neuron.weights)}")
        return 0
    except OscLabError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
