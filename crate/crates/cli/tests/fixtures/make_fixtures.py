"""Regenerates the CLI test fixtures with a scalar reference implementation.

Run from this directory: python3 make_fixtures.py
"""

import json
import math
import random
import struct

import numpy as np


def write_container(path, kind, rows):
    n, d = len(rows), len(rows[0])
    with open(path, "wb") as f:
        f.write(b"NEGL" + bytes([1, kind, 1, 0]) + struct.pack("<II", n, d))
        f.write(np.asarray(rows, dtype="<f4").tobytes())


def unit_rows(rng, n, d):
    out = []
    for _ in range(n):
        v = [rng.uniform(-1.0, 1.0) for _ in range(d)]
        norm = math.sqrt(sum(x * x for x in v))
        out.append([float(np.float32(x / norm)) for x in v])
    return out


def cosine(a, b):
    s = 0.0
    for x, y in zip(a, b):
        s += x * y
    c = float(np.float32(s))
    return min(1.0, max(-1.0, c))


def mining_oracle(id_rows, cand_rows, eta, m):
    k = len(id_rows)
    pick = math.floor(eta * (k - 1) + 1e-9)
    dist = []
    for c in cand_rows:
        negs = sorted(-cosine(c, r) for r in id_rows)
        dist.append(negs[pick])
    order = sorted(range(len(cand_rows)), key=lambda i: (-dist[i], i))[:m]
    return order, [dist[i] for i in order]


def desk():
    rng = random.Random(20240501)
    id_rows = unit_rows(rng, 5, 16)
    cand_rows = unit_rows(rng, 50, 16)
    write_container("desk_id.negl", 0, id_rows)
    write_container("desk_cand.negl", 0, cand_rows)
    with open("desk_cand_labels.txt", "w") as f:
        f.write("".join(f"word{i}\n" for i in range(50)))
    indices, distances = mining_oracle(id_rows, cand_rows, 0.05, 10)
    with open("desk_expected.json", "w") as f:
        json.dump({"eta": 0.05, "m": 10, "indices": indices, "distances": distances}, f, indent=1)
        f.write("\n")


def sum_softmax(ids, negs, tau):
    a = sum(math.exp(v / tau) for v in ids)
    return a / (a + sum(math.exp(v / tau) for v in negs))


def sims():
    rng = random.Random(7)
    n, k, m, groups, tau = 20, 3, 14, 3, 0.01
    rows = [[float(np.float32(rng.uniform(-0.1, 0.4))) for _ in range(k + m)] for _ in range(n)]
    write_container("sims.negl", 1, rows)
    size = m // groups
    with open("sims_expected.csv", "w") as f:
        f.write("sample_index,score\n")
        for i, r in enumerate(rows):
            ids, negs = r[:k], r[k:]
            parts = [sum_softmax(ids, negs[g * size:(g + 1) * size], tau) for g in range(groups)]
            f.write(f"{i},{sum(parts) / groups!r}\n")


if __name__ == "__main__":
    desk()
    sims()
