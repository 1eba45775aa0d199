"""Batch experiments and checkpoints.

The ``fracpme`` command runs JSON experiment configurations (or named presets)
and writes a report.json plus CSV tables per experiment.  The same runner is
available from Python.  Fields can be stored as checkpoints: one JSON header
line followed by the raw complex Fourier coefficients (docs/checkpoint.md).

Run:  python demos/06_batch_runs_and_checkpoints.py
"""

import json
import tempfile
from pathlib import Path

from fracpme import FracParams, PMEConfig, evolve, load_checkpoint, make_torus, random_field, save_checkpoint
from fracpme.cli import main
from fracpme.presets import list_presets

print("presets:")
for name, desc in list_presets():
    print(f"  {name:26s} {desc[:70]}...")

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    config = {
        "name": "demo-run",
        "kind": "evolve",
        "manifold": {"dim": 1, "grid": [64]},
        "initial": {"recipe": "random", "seed": 1, "band": 4, "offset": 0.5},
        "pde": {"m": 3.0, "sigma": 0.25, "horizon": 1.0, "steps": 50},
        "checks": {"mass": {}, "contraction": {}, "energy": {}},
        "output": {"checkpoint": True},
    }
    path = tmp / "demo.json"
    path.write_text(json.dumps(config, indent=2))
    status = main(["run", "--config", str(path), "--out-dir", str(tmp / "out")])
    print(f"\nexit status {status}; files:", sorted(p.name for p in (tmp / "out" / "demo-run").iterdir()))

    ck = load_checkpoint(next((tmp / "out" / "demo-run").glob("*.ckpt")))
    print(f"checkpoint: t = {ck.time}, m = {ck.config.m}, grid = {ck.coeffs.spec.grid}")

    # resume from the checkpoint by hand
    u = evolve(ck.field, PMEConfig(3.0, FracParams(0.25), horizon=1.0, steps=50)).final
    save_checkpoint(tmp / "t2.ckpt", u, time=2.0)
    print(f"resumed to t = {load_checkpoint(tmp / 't2.ckpt').time}, "
          f"mean {u.values.mean():.12f} (started at {ck.field.values.mean():.12f})")
