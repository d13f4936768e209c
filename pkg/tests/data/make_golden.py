"""Regenerate the frozen golden vectors.  Run only on a deliberate format change.

    python3 tests/data/make_golden.py
"""

import json
from pathlib import Path

import numpy as np

from pfvc.codec import EncodeConfig, encode
from pfvc.entropy import ContextSet, encode_ints, encode_symbols
from pfvc.media import synth_sequence

HERE = Path(__file__).parent


def entropy_cases():
    rng = np.random.default_rng(20240601)
    cases = [
        ("empty", [], 0),
        ("single-zero", [0], 0),
        ("ramp", list(range(-8, 9)), 0),
        ("zeros-64", [0] * 64, 0),
        ("escapes", [0, 300, -300, 2**31 - 1, -2**31, 5], 0),
        ("laplace-256", rng.laplace(0, 2, 256).round().astype(int).tolist(), 0),
        ("tail-start-144", rng.integers(-3, 4, 112).tolist(), 144),
    ]
    out = []
    for name, values, start in cases:
        ctx = ContextSet()
        data = encode_symbols(np.array(values, dtype=np.int64), ctx, start)
        out.append({"name": name, "start": start, "values": values, "hex": data.hex()})
    # persistence across calls: two frames through one context set
    ctx = ContextSet()
    a = encode_symbols(np.array([1, -1, 0, 2] * 4), ctx)
    b = encode_symbols(np.array([1, -1, 0, 2] * 4), ctx)
    out.append({"name": "second-frame", "start": 0, "values": [1, -1, 0, 2] * 4,
                "hex": b.hex(), "after_hex": a.hex()})
    return out


def main():
    lines = ",\n".join(" " + json.dumps(c) for c in entropy_cases())
    (HERE / "entropy_golden.json").write_text("[\n" + lines + "\n]\n")
    seq = synth_sequence("translating-texture", 6, 64, 64, seed=11)
    data = encode(seq, EncodeConfig(granularity=[16, 256, 64, 144, 16]))
    (HERE / "container_64x64.pfvc").write_bytes(data)
    data = encode(seq, EncodeConfig(granularity=64, key_budget=3))
    (HERE / "container_64x64_dct.pfvc").write_bytes(data)


if __name__ == "__main__":
    main()
