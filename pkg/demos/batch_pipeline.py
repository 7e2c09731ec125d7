"""Drive the bqc command line end to end from one script.

Writes a config, synthesizes a transfer, simulates the result at a higher
truncation order, and prints the reports.  Everything lands in ./pipeline_out.

Run:  python3 demos/batch_pipeline.py
"""

import json
import os

from bqcontrol.cli import dispatch

OUT = "pipeline_out"
os.makedirs(OUT, exist_ok=True)

config = {
    "system": {
        "lambda": [0.0, 1.0, 2.414213562373095],
        "W": [[0.0, 0.4, 0.1], [0.4, 0.0, 0.4], [0.1, 0.4, 0.0]],
    },
    "synthesize": {
        "from": "e1",
        "to": "e3",
        "delta": 0.1,
        "tol": 1e-3,
        "seed": 1,
        "verify_order": 6,
    },
    "simulate": {
        "control": os.path.join("synth", "control.json"),
        "state": "e1",
        "target": "e3",
        "order": 6,
        "samples": 32,
    },
    "bound": {"from": "e1", "to": "e3", "eps": 0.05, "delta": 10.0},
}
cfg_path = os.path.join(OUT, "config.json")
with open(cfg_path, "w") as fh:
    json.dump(config, fh, indent=2)

for cmd, sub in (("synthesize", "synth"), ("simulate", "sim"),
                 ("bound", "bound")):
    out_dir = os.path.join(OUT, sub)
    code = dispatch([cmd, "--config", cfg_path, "--out", out_dir, "--plot"])
    with open(os.path.join(out_dir, "report.json")) as fh:
        report = json.load(fh)
    print(f"$ bqc {cmd}  -> exit {code}")
    print(json.dumps(report["result"], indent=2))
    print()

print(f"artifacts in {OUT}/: control.json, trajectory.csv, *.plot.dat")
