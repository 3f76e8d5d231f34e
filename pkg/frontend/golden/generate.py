"""Regenerate gsf_golden.json from the server-side scale-function evaluator.

Run from the repository root after `pip install -e .`:

    python frontend/golden/generate.py
"""

import json
import os

from guidewalk import GSF, SpatialMask, TemporalProfile, eval_gsf

PROFILES = [
    {"kind": "constant", "m": 2.5},
    {"kind": "constant", "m": -0.75},
    {"kind": "ramp_up", "m": 2.0, "a": 1.0},
    {"kind": "ramp_up", "m": 2.0, "a": 0.6},
    {"kind": "ramp_up", "m": 3.0, "a": 1.4},
    {"kind": "ramp_down", "m": 3.0},
    {"kind": "piecewise", "knots": [[1.0, 4.0], [0.5, 1.0], [0.2, 1.0]]},
]

TS = [round(0.1 * i, 1) for i in range(11)]


def profile(doc):
    kind = doc["kind"]
    if kind == "constant":
        return TemporalProfile.constant(doc["m"])
    if kind == "ramp_up":
        return TemporalProfile.ramp_up(doc["m"], doc["a"])
    if kind == "ramp_down":
        return TemporalProfile.ramp_down(doc["m"])
    return TemporalProfile.piecewise([tuple(k) for k in doc["knots"]])


def main():
    cases = []
    for doc in PROFILES:
        gsf = GSF(profile(doc), SpatialMask.uniform())
        cases.append({"profile": doc, "values": [eval_gsf(gsf, t) for t in TS]})
    out = {"ts": TS, "cases": cases}
    path = os.path.join(os.path.dirname(__file__), "gsf_golden.json")
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2)
        fh.write("\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
