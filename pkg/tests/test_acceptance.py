"""End-to-end acceptance checks.

Each test prints one pass/fail line (visible with ``pytest -s`` or in the
captured output of a failing run) and asserts the criterion at its stated
tolerance:

1. exactness of both engines against brute-force enumeration,
2. submodularity of the split value function over all binary pairs,
3. traced chains match independent box-QP evaluations,
4. breakpoint budget (2n nonnegative / 4n general, exact counts),
5. monotone iterate sequence along the whole path,
6. cubic chain scaling vs. super-cubic naive evaluation,
7. extension exactness at vertices plus convexity probes,
8. recovery of planted gross outliers in robust mode.
"""

import itertools
import json
import time

import numpy as np
import pytest

import submodqp as sq
from submodqp import boxqp, model, pathtrace
from submodqp.cli import bench_rows
from submodqp.lattice import bounds_for_binary, split


def _report(num, name, ok, detail=""):
    print(f"criterion {num} [{name}]: {'PASS' if ok else 'FAIL'} {detail}")


def _model_instance(mode, regime, idx):
    """Seeded random instance; sizes keep the split dimension enumerable."""
    rng = np.random.default_rng([77, idx])
    if mode == "sparse":
        n = 2 + idx % 11 if regime != "mixed" else 2 + idx % 4
    else:
        n = 2 + idx % 2
    edges = [(i, i + 1, float(rng.uniform(0.2, 1.2))) for i in range(n - 1)]
    a = rng.normal(0, 2, n)
    nw = rng.uniform(0.5, 2.0, n)
    c = rng.uniform(0.0, 1.5, n)
    lo, up = np.empty(n), np.empty(n)
    for i in range(n):
        r = regime if regime != "mixed" else ("nonnegative", "negative", "straddle")[int(rng.integers(3))]
        if r == "nonnegative":
            lo[i] = float(rng.choice([0.0, rng.uniform(0.0, 0.3)]))
            up[i] = lo[i] + rng.uniform(0.5, 2.5)
        elif r == "negative":
            up[i] = -float(rng.choice([0.0, rng.uniform(0.0, 0.3)]))
            lo[i] = up[i] - rng.uniform(0.5, 2.5)
        else:
            lo[i] = -rng.uniform(0.3, 2.0)
            up[i] = rng.uniform(0.3, 2.0)
    return sq.ProblemInstance(sq.Graph(n, tuple(edges)), a, nw, c, lo, up, mode=mode)


def test_criterion_1_exactness_vs_oracle():
    t0 = time.time()
    worst_ex = worst_mnp = 0.0
    for idx in range(200):
        mode = ("sparse", "sparse", "robust")[idx % 3]
        regime = ("nonnegative", "mixed", "negative")[(idx // 3) % 3]
        problem = sq.compile_instance(_model_instance(mode, regime, idx), ridge=1e-8)
        bf = sq.brute_force(problem)
        ex = sq.solve_full(problem, engine="exhaustive")
        mn = sq.solve_full(problem, engine="mnp")
        worst_ex = max(worst_ex, abs(ex.value - bf.value))
        worst_mnp = max(worst_mnp, abs(mn.value - bf.value))
    elapsed = time.time() - t0
    ok = worst_ex <= 1e-6 and worst_mnp <= 1e-6 and elapsed < 300.0
    _report(1, "exactness vs oracle", ok,
            f"(200 instances, worst gaps exhaustive {worst_ex:.2e} / mnp {worst_mnp:.2e}, {elapsed:.0f}s)")
    assert worst_ex <= 1e-6
    assert worst_mnp <= 1e-6
    assert elapsed < 300.0


def test_criterion_2_value_function_submodularity():
    violations = 0
    for seed in range(50):
        prob = sq.InstanceSampler(n=4, regime="mixed", seed=seed).draw(0)
        smap, _ = split(prob.lo, prob.up)
        m = smap.binary_dim
        assert m <= 8
        vals = np.empty(2**m)
        for code in range(2**m):
            z = np.array([(code >> (m - 1 - b)) & 1 for b in range(m)], dtype=int)
            vals[code] = boxqp.value_function(prob.quad, prob.lo, prob.up, smap, z)
        codes = np.arange(2**m)
        p, q = np.meshgrid(codes, codes, indexing="ij")
        lhs = vals[p] + vals[q]
        rhs = vals[p & q] + vals[p | q]
        violations += int(np.sum(lhs < rhs - 1e-8))
    _report(2, "value-function submodularity", violations == 0,
            f"(50 seeds, all binary pairs, {violations} violations)")
    assert violations == 0


@pytest.fixture(scope="module")
def chain_runs():
    """50 seeded chain runs of each kind, shared by criteria 3-5."""
    runs = []
    for seed in range(50):
        n = 5 + (seed * 7) % 46
        prob = sq.InstanceSampler(n=n, regime="nonnegative", seed=seed, density=0.4).draw(0)
        smap, _ = split(prob.lo, prob.up)
        chain = pathtrace.chain_nonnegative(prob.quad, prob.lo, prob.up)
        runs.append((prob, smap, chain, "nonnegative"))

        ng = 3 + (seed * 5) % 23
        prob = sq.InstanceSampler(n=ng, regime="mixed", seed=1000 + seed, density=0.4).draw(0)
        smap, _ = split(prob.lo, prob.up)
        chain = pathtrace.chain_general(prob.quad, prob.lo, prob.up, smap)
        runs.append((prob, smap, chain, "general"))
    return runs


def test_criterion_3_chain_matches_oracle(chain_runs):
    worst = 0.0
    for prob, smap, chain, kind in chain_runs:
        z = np.zeros(smap.binary_dim, dtype=int)
        for k in range(chain.m + 1):
            if k:
                z[chain.order[k - 1]] = 1
            ref = boxqp.value_function(prob.quad, prob.lo, prob.up, smap, z)
            worst = max(worst, abs(ref - chain.values[k]))
    ok = worst <= 1e-8
    _report(3, "chain correctness", ok, f"(100 chains, n up to 50, worst gap {worst:.2e})")
    assert worst <= 1e-8


def test_criterion_4_breakpoint_budget(chain_runs):
    worst_ratio = 0.0
    ok = True
    for prob, smap, chain, kind in chain_runs:
        budget = (2 if kind == "nonnegative" else 4) * prob.n
        count = len(chain.breakpoints)
        worst_ratio = max(worst_ratio, count / budget)
        if count > budget:
            ok = False
    _report(4, "breakpoint budget", ok, f"(max count/budget ratio {worst_ratio:.2f})")
    assert ok


def test_criterion_5_monotone_path(chain_runs):
    worst_drop = 0.0
    for prob, smap, chain, kind in chain_runs:
        pts = chain.iterate_sequence()
        for t in range(1, len(pts)):
            worst_drop = max(worst_drop, float(np.max(pts[t - 1] - pts[t])))
    ok = worst_drop <= 1e-10
    _report(5, "monotone path", ok, f"(worst componentwise drop {worst_drop:.2e})")
    assert worst_drop <= 1e-10


def test_criterion_6_cubic_scaling():
    t0 = time.time()
    rows = bench_rows([100, 200, 400], reps=3, seed=0)
    elapsed = time.time() - t0
    chain_ratio = rows[2]["t_chain_ms"] / rows[1]["t_chain_ms"]
    naive_ratio = rows[2]["t_naive_ms"] / rows[1]["t_naive_ms"]
    ok = 4.0 <= chain_ratio <= 16.0 and naive_ratio > chain_ratio and elapsed < 120.0
    _report(6, "cubic scaling", ok,
            f"(chain x{chain_ratio:.2f}, naive x{naive_ratio:.2f}, {elapsed:.0f}s)")
    for r in rows:
        assert r["breakpoints"] <= 2 * r["n"]
    assert 4.0 <= chain_ratio <= 16.0
    assert naive_ratio > chain_ratio
    assert elapsed < 120.0


def test_criterion_7_lovasz_probes():
    rng = np.random.default_rng(123)
    probes = 0
    violations = 0
    seed = 0
    while probes < 1000:
        prob = sq.InstanceSampler(n=4, regime="mixed", seed=5000 + seed).draw(0)
        seed += 1
        oracle = sq.IndicatorOracle(prob.quad, prob.lo, prob.up, prob.costs)
        chain = oracle.value_chain(np.arange(oracle.m))
        # exactness at the vertices the chain interpolates
        z = np.zeros(oracle.m)
        for k in range(oracle.m + 1):
            got = pathtrace.lovasz(chain, z)
            probes += 1
            if abs(got - chain.values[k]) > 1e-12 * (1.0 + abs(chain.values[k])):
                violations += 1
            if k < oracle.m:
                z[chain.order[k]] = 1.0
        # convexity probes on the costed extension
        f0 = oracle.eval(np.zeros(oracle.m, dtype=int))

        def ext(zf):
            return f0 + float(sq.greedy_subgradient(oracle, zf) @ zf)

        for _ in range(15):
            z1, z2 = rng.random(oracle.m), rng.random(oracle.m)
            lam = float(rng.uniform(0.05, 0.95))
            probes += 1
            if ext(lam * z1 + (1 - lam) * z2) > lam * ext(z1) + (1 - lam) * ext(z2) + 1e-8:
                violations += 1
    _report(7, "extension exactness and convexity", violations == 0,
            f"({probes} probes, {violations} violations)")
    assert violations == 0


def test_criterion_8_robust_recovery(tmp_path):
    hits = 0
    witnesses = []
    for seed in range(20):
        inst, truth = sq.generate(
            "chain", (30,), signal_sparsity=0.0, outlier_fraction=0.1,
            noise_sd=0.25, seed=9000 + seed, mode="robust", cost=4.0,
        )
        problem = sq.compile_instance(inst, ridge=1e-8)
        res = sq.solve_full(problem, engine="mnp", tol=1e-6)
        planted = set(truth["outliers"])
        if planted.issubset(set(res.discarded)):
            hits += 1
        else:
            witness = {
                "check": "robust_recovery",
                "instance": model.instance_to_json_dict(inst),
                "truth": truth,
                "got_discarded": res.discarded,
                "replay": "submodqp solve <instance.json> --engine mnp",
            }
            path = tmp_path / f"witness_seed{9000 + seed}.json"
            path.write_text(json.dumps(witness, indent=2))
            witnesses.append(str(path))
    ok = hits >= 18
    _report(8, "robust outlier recovery", ok, f"({hits}/20 runs contained all planted outliers)")
    if witnesses:
        print("witnesses:", *witnesses, sep="\n  ")
    assert hits >= 18
