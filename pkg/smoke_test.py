import sys

print("🔥 Starting Smoke Test...")

try:
    print("1. Testing Imports...")
    from app.config import CONFIG
    print(f"   Config loaded. mu_th={CONFIG.mu_th}%, workers={CONFIG.workers}")

    from app.simulator import simulate
    from app.sync_metrics import compute_shr_mu
    print("   Simulator and metrics imported.")

    from app.reservoir import REFERENCE_SHR, injected_features, run_xor
    print("   Reservoir imported.")

    print("2. Testing Scientific Stack...")
    import numpy
    import pandas
    import pydantic
    print(f"   numpy {numpy.__version__}, pandas {pandas.__version__}, pydantic {pydantic.VERSION}")

    print("3. Testing A Tiny Run...")
    from app.network import build_network
    config = build_network([600e-6, 600e-6], delta=0.5, seed=3, on_resistance=100.0, noise_sigma=0.002)
    a, b = simulate(config, 20, 200)
    metrics = compute_shr_mu(a, b)
    print(f"   SHR {metrics.shr_label}, mu={metrics.mu:.1f}%")
    if metrics.state != (1, 1):
        raise RuntimeError(f"expected 1:1 locking, got {metrics.shr_label}")

    print("4. Testing XOR Readout...")
    from app.reservoir import XOR_CASES, PipelineConfig, REFERENCE_ENCODING
    pipeline = PipelineConfig(encoding=REFERENCE_ENCODING, template=config)
    outputs = [run_xor(c.x, c.y, pipeline, injected_features(REFERENCE_SHR)) for c in XOR_CASES]
    print(f"   Q = {outputs}")
    if outputs != [c.expected_q for c in XOR_CASES]:
        raise RuntimeError("readout does not reproduce XOR")

    print("✅ SMOKE TEST PASSED")

except ImportError as e:
    print(f"❌ IMPORT ERROR: {e}")
    sys.exit(1)
except Exception as e:
    print(f"❌ RUNTIME ERROR: {e}")
    sys.exit(1)
