#!/usr/bin/env python3
"""Reference values for the fixture pipeline, computed with numpy/scipy.

Inputs are the brute-force catalog and feature table plus the fixture
outcomes. Writes the fitted model, scores, one-sided p-values and PEG values
that the CLI test compares against.

usage: pipeline_oracle.py TESTS_DIR
"""
import json
import math
import os
import sys

import numpy as np
from scipy import optimize, stats

TRAIN_MODELS = ["m1", "m2"]
PEG_MODELS = ["m1", "m2"]
GRID = [0.2, 0.4]
REG_C = 1.0


def load(tests):
    catalog = [line.split("\t")[0] for line in open(os.path.join(tests, "golden/fixture_catalog.txt")) if line.strip()]
    rows = {}
    for line in open(os.path.join(tests, "golden/fixture_features.txt")):
        if line.strip():
            qid, bits = line.rstrip("\n").split("\t")
            rows[qid] = [int(b) for b in bits]
    outcomes = {}
    for line in open(os.path.join(tests, "fixtures/outcomes.jsonl")):
        if line.strip():
            r = json.loads(line)
            outcomes[(r["question_id"], r["model_id"])] = int(r["correct"])
    return catalog, rows, outcomes


def fit(rows, outcomes):
    qids, X, y, v = [], [], [], []
    for qid in sorted(rows):
        present = [outcomes[(qid, m)] for m in TRAIN_MODELS if (qid, m) in outcomes]
        if not present:
            continue
        qids.append(qid)
        X.append(rows[qid])
        y.append(sum(present) / len(present))
        v.append(len(present))
    X, y, v = np.array(X, float), np.array(y), np.array(v, float)
    V = v.sum()
    d = X.shape[1]

    def f(p):
        w, b = p[:d], p[d]
        z = X @ w + b
        # log(1+e^z) - y z  is the cross-entropy in logit form
        ce = np.logaddexp(0, z) - y * z
        return (v * ce).sum() / V + w @ w / (2 * REG_C * V)

    def grad(p):
        w, b = p[:d], p[d]
        r = v * (1 / (1 + np.exp(-(X @ w + b))) - y) / V
        return np.concatenate([X.T @ r + w / (REG_C * V), [r.sum()]])

    def hess(p):
        w, b = p[:d], p[d]
        s = 1 / (1 + np.exp(-(X @ w + b)))
        D = v * s * (1 - s) / V
        A = np.hstack([X, np.ones((len(y), 1))])
        H = A.T @ (A * D[:, None])
        H[:d, :d] += np.eye(d) / (REG_C * V)
        return H

    res = optimize.minimize(f, np.zeros(d + 1), jac=grad, hess=hess, method="trust-exact",
                            options={"gtol": 1e-13, "maxiter": 1000})
    x = res.x
    for _ in range(5):
        x = x - np.linalg.solve(hess(x), grad(x))
    assert np.linalg.norm(grad(x)) < 1e-14, grad(x)
    return x[:d].tolist(), float(x[d])


def p_value(sw, nw, so, no):
    r = so / no
    if min(nw * r, nw * (1 - r), no * r, no * (1 - r)) < 5:
        return float(stats.hypergeom.cdf(sw, nw + no, sw + so, nw))
    p1, pool = sw / nw, (sw + so) / (nw + no)
    z = (p1 - r) / math.sqrt(pool * (1 - pool) * (1 / nw + 1 / no))
    return float(stats.norm.cdf(z))


def main():
    tests = sys.argv[1]
    catalog, rows, outcomes = load(tests)
    weights, bias = fit(rows, outcomes)
    scores = {q: -1 / (1 + math.exp(-(bias + sum(w for w, x in zip(weights, rows[q]) if x)))) for q in rows}

    models = sorted({m for _, m in outcomes})
    analysis = {}
    for m in models:
        per = {}
        for k, pat in enumerate(catalog):
            cells = [(rows[q][k], outcomes[(q, m)]) for q in sorted(rows) if (q, m) in outcomes]
            nw = sum(1 for x, _ in cells if x)
            no = len(cells) - nw
            if nw == 0 or no == 0:
                continue
            sw = sum(o for x, o in cells if x)
            so = sum(o for x, o in cells if not x)
            per[pat] = p_value(sw, nw, so, no)
        analysis[m] = per

    order = sorted(rows, key=lambda q: (-scores[q], q))
    peg = {}
    for m in PEG_MODELS:
        seq = [outcomes[(q, m)] for q in order if (q, m) in outcomes]
        vals = []
        for a in GRID:
            n = math.floor(a * len(seq) + 1e-9)
            vals.append(100 * (sum(seq[-n:]) / n - sum(seq[:n]) / n))
        peg[m] = {"peg": vals, "mpeg": sum(vals) / len(vals)}

    out = {"weights": weights, "bias": bias, "scores": scores, "p_values": analysis, "peg": peg}
    with open(os.path.join(tests, "golden/fixture_pipeline.json"), "w") as f:
        json.dump(out, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()
