import numpy as np
import pytest

import submodqp as sq
from submodqp import oracle
from submodqp.exceptions import InputError


def test_brute_force_matches_solver_on_corner_instance():
    quad = sq.QuadraticForm([[2, -1], [-1, 2]], [1, 0])
    problem = sq.IndicatorProblem(quad, np.array([0.1, 0.1]), np.zeros(2), np.full(2, 10.0))
    bf = sq.brute_force(problem)
    ex = sq.solve_full(problem, engine="exhaustive")
    assert bf.value == pytest.approx(-0.15, abs=1e-12)
    assert ex.value == pytest.approx(bf.value, abs=1e-9)
    assert np.array_equal(bf.z, [1, 0])


def test_brute_force_separable_closed_form():
    # diagonal Q decomposes: per coordinate, keep 0 or pay c_i for the 1-d min
    rng = np.random.default_rng(8)
    for _ in range(10):
        n = 5
        qd = rng.uniform(0.5, 3.0, size=n)
        a = rng.normal(0, 2, size=n)
        c = rng.uniform(0, 1, size=n)
        lo = -rng.uniform(0.5, 3.0, size=n)
        up = rng.uniform(0.5, 3.0, size=n)
        problem = sq.IndicatorProblem(sq.QuadraticForm(np.diag(qd), a), c, lo, up)
        expected = 0.0
        for i in range(n):
            xopt = np.clip(a[i] / qd[i], lo[i], up[i])
            expected += min(0.0, -a[i] * xopt + 0.5 * qd[i] * xopt**2 + c[i])
        assert sq.brute_force(problem).value == pytest.approx(expected, abs=1e-9)


def test_brute_force_free_indicators():
    # zero costs and l = 0: every indicator box nests inside [0, u], so the
    # optimum is the plain box solve over [0, u]
    prob = sq.InstanceSampler(n=5, regime="nonnegative", seed=2).draw(0)
    lo = np.zeros(5)
    problem = sq.IndicatorProblem(prob.quad, np.zeros(5), lo, prob.up)
    from submodqp import boxqp

    ref = boxqp.solve(prob.quad, lo, prob.up)
    assert sq.brute_force(problem).value == pytest.approx(ref.value, abs=1e-9)


def test_brute_force_guard():
    prob = sq.InstanceSampler(n=15, regime="mixed", seed=0).draw(0)
    with pytest.raises(InputError):
        sq.brute_force(prob)


def test_sampler_determinism():
    s1 = sq.InstanceSampler(n=6, regime="mixed", seed=42)
    s2 = sq.InstanceSampler(n=6, regime="mixed", seed=42)
    a, b = s1.draw(3), s2.draw(3)
    assert np.array_equal(a.quad.Q, b.quad.Q)
    assert np.array_equal(a.quad.a, b.quad.a)
    assert np.array_equal(a.lo, b.lo) and np.array_equal(a.up, b.up)
    c = s1.draw(4)
    assert not np.array_equal(a.quad.a, c.quad.a)


def test_sampler_regimes():
    nn = sq.InstanceSampler(n=6, regime="nonnegative", seed=1).draw(0)
    assert np.all(nn.lo >= 0)
    neg = sq.InstanceSampler(n=6, regime="negative", seed=1).draw(0)
    assert np.all(neg.up <= 0)
    with pytest.raises(InputError):
        sq.InstanceSampler(n=6, regime="sideways", seed=1)


def test_sampler_always_stieltjes():
    for t in range(20):
        prob = sq.InstanceSampler(n=7, regime="mixed", seed=9).draw(t)
        assert prob.quad.stieltjes_violation() == 0.0


def test_property_suite_passes_on_clean_instances():
    report = sq.run_property_suite(sq.InstanceSampler(n=5, regime="mixed", seed=13), trials=4)
    assert report.ok
    assert report.checks["chain_matches_oracle"].passes == 4


def test_property_suite_rejects_zero_trials():
    with pytest.raises(InputError):
        sq.run_property_suite(sq.InstanceSampler(n=4, seed=0), trials=0)


class _AdversarialSampler:
    """Returns a non-Stieltjes instance (positive off-diagonal)."""

    seed = 0

    def draw(self, trial):
        Q = np.array([[2.0, 0.5], [0.5, 2.0]])
        quad = sq.QuadraticForm(Q, np.array([1.0, 1.0]))
        return sq.IndicatorProblem(quad, np.zeros(2), np.zeros(2), np.ones(2))


def test_property_suite_gates_on_stieltjes():
    report = sq.run_property_suite(_AdversarialSampler(), trials=1)
    assert not report.ok
    assert len(report.checks["stieltjes"].failures) == 1
    # downstream checks were skipped, not failed
    assert report.checks["boxqp_kkt"].passes == 0
    assert report.checks["boxqp_kkt"].failures == []


def test_witness_replay_reproduces_failure():
    report = sq.run_property_suite(_AdversarialSampler(), trials=1)
    witness = report.checks["stieltjes"].failures[0]
    ok, detail = sq.replay_witness(witness)
    assert not ok
    assert detail["violation"] == pytest.approx(0.5)


def test_witness_replay_rejects_unknown_check():
    with pytest.raises(InputError):
        sq.replay_witness({"check": "nope", "instance": {}})


def test_report_serialization():
    report = sq.run_property_suite(sq.InstanceSampler(n=4, regime="nonnegative", seed=5), trials=2)
    d = report.to_json_dict()
    assert d["ok"] is True
    assert d["trials"] == 2
    assert set(d["checks"]) == set(oracle.CHECKS)
