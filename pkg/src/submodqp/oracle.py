"""Independent verification: brute-force enumeration and a property harness.

:func:`brute_force` solves small indicator problems by enumerating every
original binary assignment and box-QP-solving each; it shares no code path
with the chain/SFM machinery beyond the box oracle, so agreement is a real
cross-check.  :func:`run_property_suite` samples random Stieltjes instances
and executes the package-wide invariants on them, reporting the first failing
witness per check as a replayable JSON payload (see :func:`replay_witness`).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import boxqp, pathtrace, sfm
from .exceptions import InputError
from .lattice import NBOTH, bounds_for_binary, split
from .model import IndicatorProblem, QuadraticForm
from .sfm import BRUTE_TIE_TOL, IndicatorOracle, SfmResult

BRUTE_GUARD = 14

REGIMES = ("nonnegative", "mixed", "negative")


def brute_force(problem, tie_tol=BRUTE_TIE_TOL):
    """Exact optimum by enumerating all 2^n original indicator vectors.

    Each assignment fixes the box to [l*z, u*z] and is solved by the box-QP
    oracle; ties within ``tie_tol`` resolve to the lexicographically smallest
    vector.  Guarded at n <= 14 variables.
    """
    n = problem.n
    if n > BRUTE_GUARD:
        raise InputError(f"brute force guarded at n <= {BRUTE_GUARD}, got {n}")
    lo, up, c = problem.lo, problem.up, problem.costs
    best_z, best, best_x = None, np.inf, None
    for bits in itertools.product((0, 1), repeat=n):
        z = np.array(bits, dtype=int)
        blo = np.where(z == 1, lo, 0.0)
        bup = np.where(z == 1, up, 0.0)
        sol = boxqp.solve(problem.quad, blo, bup)
        val = sol.value + float(c @ z)
        if best_z is None or val < best - tie_tol:
            best_z, best, best_x = z, val, sol.x
    discarded = None
    if problem.mode == "robust":
        slack = problem.slack_vertices()
        discarded = sorted(slack[k] for k in range(n) if k in slack and best_z[k] == 1)
    return SfmResult(
        z=best_z,
        value=float(best),
        x=best_x,
        certificate="exhaustive",
        engine="brute_force",
        discarded=discarded,
    )


@dataclass(frozen=True)
class InstanceSampler:
    """Reproducible random Stieltjes indicator problems.

    Q is built as diag + weighted-Laplacian with a diagonal margin of at
    least 1e-3, so the Stieltjes property holds by construction.  Regimes
    steer the bounds: ``nonnegative`` (0 <= l <= u), ``negative``
    (l <= u <= 0) and ``mixed`` (each variable draws one of the three
    patterns, exercising every split branch).  Draws are deterministic in
    (seed, trial).
    """

    n: int = 6
    density: float = 0.5
    regime: str = "mixed"
    seed: int = 0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise InputError(f"regime must be one of {REGIMES}")
        if self.n < 1:
            raise InputError("n must be positive")

    def draw(self, trial):
        rng = np.random.default_rng([self.seed, int(trial)])
        n = self.n
        Q = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < self.density:
                    w = rng.uniform(0.1, 1.0)
                    Q[i, i] += w
                    Q[j, j] += w
                    Q[i, j] -= w
                    Q[j, i] -= w
        Q[np.diag_indices(n)] += 1e-3 + rng.uniform(0.2, 2.0, size=n)
        a = rng.normal(0.0, 1.5, size=n)
        c = rng.uniform(0.0, 1.0, size=n)
        lo = np.empty(n)
        up = np.empty(n)
        for i in range(n):
            r = self.regime
            if r == "mixed":
                r = ("nonnegative", "negative", "straddle")[rng.integers(3)]
            if r == "nonnegative":
                lo[i] = rng.choice([0.0, rng.uniform(0.0, 0.4)])
                up[i] = lo[i] + rng.uniform(0.5, 2.5)
            elif r == "negative":
                up[i] = -rng.choice([0.0, rng.uniform(0.0, 0.4)])
                lo[i] = up[i] - rng.uniform(0.5, 2.5)
            else:
                lo[i] = -rng.uniform(0.3, 2.0)
                up[i] = rng.uniform(0.3, 2.0)
        return IndicatorProblem(QuadraticForm(Q, a), c, lo, up)


@dataclass
class CheckOutcome:
    name: str
    passes: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures


@dataclass
class PropertyReport:
    trials: int
    checks: dict

    @property
    def ok(self):
        return all(c.ok for c in self.checks.values())

    def summary_lines(self):
        lines = []
        for name, c in sorted(self.checks.items()):
            state = "ok" if c.ok else f"FAIL ({len(c.failures)} witnesses)"
            lines.append(f"{name:32s} passes={c.passes:<5d} {state}")
        return lines

    def to_json_dict(self):
        return {
            "trials": self.trials,
            "ok": self.ok,
            "checks": {
                name: {"passes": c.passes, "failures": c.failures}
                for name, c in self.checks.items()
            },
        }


def _witness(problem, **extra):
    w = {"instance": problem.to_json_dict()}
    w.update(extra)
    return w


# --- individual checks; each returns (ok, detail_dict_or_None) --------------

def _check_stieltjes(problem, rng):
    v = problem.quad.stieltjes_violation()
    return v == 0.0, None if v == 0.0 else {"violation": v}


def _check_boxqp_kkt(problem, rng):
    sol = boxqp.solve(problem.quad, problem.lo, problem.up)
    res = boxqp.kkt_residual(problem.quad, problem.lo, problem.up, sol.x)
    tol = boxqp.KKT_TOL_FACTOR * (1.0 + float(np.abs(problem.quad.a).max()))
    return res <= tol, None if res <= tol else {"residual": res, "tol": tol}


def _check_boxqp_permutation(problem, rng):
    n = problem.n
    perm = rng.permutation(n)
    sol = boxqp.solve(problem.quad, problem.lo, problem.up)
    qp = QuadraticForm(
        problem.quad.Q[np.ix_(perm, perm)], problem.quad.a[perm], problem.quad.k0
    )
    solp = boxqp.solve(qp, problem.lo[perm], problem.up[perm])
    back = np.empty(n)
    back[perm] = solp.x
    gap = float(np.max(np.abs(back - sol.x)))
    return gap <= 1e-8, None if gap <= 1e-8 else {"gap": gap, "perm": perm.tolist()}


def _check_boxqp_isotone(problem, rng):
    i = int(rng.integers(problem.n))
    delta = float(rng.uniform(0.1, 1.0))
    base = boxqp.solve(problem.quad, problem.lo, problem.up).x
    a2 = problem.quad.a.copy()
    a2[i] += delta
    bumped = boxqp.solve(QuadraticForm(problem.quad.Q, a2, problem.quad.k0), problem.lo, problem.up).x
    drop = float(np.max(base - bumped))
    return drop <= 1e-10, None if drop <= 1e-10 else {"i": i, "delta": delta, "drop": drop}


def _chain_for(problem, order=None):
    smap, _ = split(problem.lo, problem.up, problem.costs)
    oracle = IndicatorOracle(problem.quad, problem.lo, problem.up, problem.costs, smap=smap)
    if order is None:
        order = np.arange(smap.binary_dim)
    return oracle, smap, oracle.value_chain(order), order


def _check_chain_matches_oracle(problem, rng):
    oracle, smap, vc, order = _chain_for(problem)
    z = np.zeros(smap.binary_dim, dtype=int)
    worst, at = 0.0, -1
    for k in range(len(order) + 1):
        if k:
            z[order[k - 1]] = 1
        ref = boxqp.value_function(problem.quad, problem.lo, problem.up, smap, z)
        gap = abs(ref - vc.values[k])
        if gap > worst:
            worst, at = gap, k
    return worst <= 1e-8, None if worst <= 1e-8 else {"worst_gap": worst, "stage": at}


def _check_monotone_path(problem, rng):
    _, _, vc, _ = _chain_for(problem)
    pts = vc.iterate_sequence()
    for t in range(1, len(pts)):
        drop = float(np.max(pts[t - 1] - pts[t]))
        if drop > 1e-10:
            return False, {"step": t, "drop": drop}
    return True, None


def _check_breakpoint_budget(problem, rng):
    _, smap, vc, _ = _chain_for(problem)
    general = any(r == NBOTH for r in smap.regimes) or np.any(problem.lo < 0)
    budget = (4 if general else 2) * problem.n
    count = len(vc.breakpoints)
    return count <= budget, None if count <= budget else {"count": count, "budget": budget}


def _check_value_submodular(problem, rng):
    smap, bincost = split(problem.lo, problem.up, problem.costs)
    m = smap.binary_dim
    if m > 10:
        return True, None  # too large to enumerate here; covered at small dims
    vals = np.empty(2**m)
    for code in range(2**m):
        z = np.array([(code >> (m - 1 - b)) & 1 for b in range(m)], dtype=int)
        vals[code] = boxqp.value_function(problem.quad, problem.lo, problem.up, smap, z)
    for p in range(2**m):
        for q in range(p + 1, 2**m):
            meet, join = p & q, p | q
            if vals[p] + vals[q] < vals[meet] + vals[join] - 1e-8:
                return False, {
                    "pair": [p, q],
                    "lhs": float(vals[p] + vals[q]),
                    "rhs": float(vals[meet] + vals[join]),
                }
    return True, None


def _check_lovasz_vertices(problem, rng):
    _, smap, vc, order = _chain_for(problem)
    z = np.zeros(smap.binary_dim)
    for k in range(len(order) + 1):
        got = pathtrace.lovasz(vc, z)
        if abs(got - vc.values[k]) > 1e-8:
            return False, {"stage": k, "gap": abs(got - vc.values[k])}
        if k < len(order):
            z[order[k]] = 1.0
    return True, None


def _check_lovasz_convexity(problem, rng):
    oracle, smap, _, _ = _chain_for(problem)
    f0 = oracle.eval(np.zeros(smap.binary_dim, dtype=int))

    def extension(zf):
        w = sfm.greedy_subgradient(oracle, zf)
        return f0 + float(w @ zf)

    m = smap.binary_dim
    z1 = rng.random(m)
    z2 = rng.random(m)
    lam = float(rng.uniform(0.1, 0.9))
    mid = extension(lam * z1 + (1 - lam) * z2)
    bound = lam * extension(z1) + (1 - lam) * extension(z2)
    ok = mid <= bound + 1e-8
    return ok, None if ok else {"mid": mid, "bound": bound, "lambda": lam}


def _check_mnp_matches_exhaustive(problem, rng):
    smap, _ = split(problem.lo, problem.up, problem.costs)
    if smap.binary_dim > 12:
        return True, None
    ex = sfm.solve_full(problem, engine="exhaustive")
    mn = sfm.solve_full(problem, engine="mnp")
    gap = abs(ex.value - mn.value)
    return gap <= 1e-6, None if gap <= 1e-6 else {"gap": gap, "exhaustive": ex.value, "mnp": mn.value}


def _check_brute_matches_solver(problem, rng):
    if problem.n > 10:
        return True, None
    bf = brute_force(problem)
    ex = sfm.solve_full(problem, engine="exhaustive")
    gap = abs(bf.value - ex.value)
    return gap <= 1e-6, None if gap <= 1e-6 else {"gap": gap}


def _check_segment_affine(problem, rng):
    """Between consecutive breakpoints the path is affine: interior samples
    (recomputed independently by pinning the parametric coordinate) must be
    collinear with the segment endpoints."""
    if problem.n > 8:
        return True, None
    _, smap, vc, order = _chain_for(problem)
    if len(vc.breakpoints) < 1:
        return True, None
    seen = 0
    z = np.zeros(smap.binary_dim, dtype=int)
    bps = list(zip(vc.breakpoints, vc.breakpoint_points))
    for k, cidx in enumerate(order, start=1):
        z[cidx] = 1
        stage_bps = [(b, p) for b, p in bps if b.stage == k]
        if len(stage_bps) < 2 or seen > 3:
            continue
        seen += 1
        j = smap.coords[int(cidx)][0]
        (b0, p0), (b1, p1) = stage_bps[0], stage_bps[1]
        if b1.x - b0.x <= 1e-9:
            continue
        blo, bup = bounds_for_binary(smap, z, problem.lo, problem.up)
        for frac in (0.25, 0.5, 0.75):
            xs = b0.x + frac * (b1.x - b0.x)
            blo2, bup2 = blo.copy(), bup.copy()
            blo2[j] = bup2[j] = xs
            mid = boxqp.solve(problem.quad, blo2, bup2).x
            interp = p0 + frac * (p1 - p0)
            resid = float(np.max(np.abs(mid - interp)))
            if resid > 1e-8:
                return False, {"stage": k, "x": xs, "residual": resid}
    return True, None


CHECKS = {
    "stieltjes": _check_stieltjes,
    "boxqp_kkt": _check_boxqp_kkt,
    "boxqp_permutation_invariance": _check_boxqp_permutation,
    "boxqp_isotonicity": _check_boxqp_isotone,
    "chain_matches_oracle": _check_chain_matches_oracle,
    "monotone_path": _check_monotone_path,
    "breakpoint_budget": _check_breakpoint_budget,
    "value_function_submodular": _check_value_submodular,
    "lovasz_vertex_exactness": _check_lovasz_vertices,
    "lovasz_convexity": _check_lovasz_convexity,
    "mnp_matches_exhaustive": _check_mnp_matches_exhaustive,
    "brute_matches_solver": _check_brute_matches_solver,
    "segment_affinity": _check_segment_affine,
}

# checks that only make sense once the matrix structure is certified
_GATED_BY_STIELTJES = [k for k in CHECKS if k != "stieltjes"]


def run_property_suite(sampler, trials, checks=None):
    """Run every registered invariant on ``trials`` sampled instances.

    Failures never raise: each produces a replayable witness (instance JSON
    plus check name and detail) in the report.  A Stieltjes failure on an
    instance skips that instance's downstream checks, since they presuppose
    the structure.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    names = list(CHECKS) if checks is None else list(checks)
    report = PropertyReport(trials=trials, checks={n: CheckOutcome(n) for n in names})
    seed = int(getattr(sampler, "seed", 0))
    for t in range(trials):
        problem = sampler.draw(t)
        rng = np.random.default_rng([seed, t, 7])
        gate_ok = True
        for name in names:
            if name != "stieltjes" and not gate_ok:
                continue
            ok, detail = CHECKS[name](problem, rng)
            if ok:
                report.checks[name].passes += 1
            else:
                report.checks[name].failures.append(
                    _witness(problem, check=name, trial=t, seed=seed, detail=detail)
                )
                if name == "stieltjes":
                    gate_ok = False
    return report


def replay_witness(witness):
    """Re-run the named check on a witness payload; returns (ok, detail)."""
    name = witness.get("check")
    if name not in CHECKS:
        raise InputError(f"unknown check {name!r}")
    problem = IndicatorProblem.from_json_dict(witness["instance"])
    rng = np.random.default_rng([witness.get("seed", 0), witness.get("trial", 0), 7])
    return CHECKS[name](problem, rng)
