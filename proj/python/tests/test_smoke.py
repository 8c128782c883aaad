import math

import numpy as np
import pytest

import gcgm


def test_lmo_and_gauge():
    basis = gcgm.AtomicSet.signed_basis(3)
    assert gcgm.lmo(basis, np.array([3.0, -1.0, 2.0])) == (0, 3.0)
    assert gcgm.gauge(basis, np.array([1.0, -2.0, 0.0])) == pytest.approx(3.0)
    cube = gcgm.AtomicSet.hypercube(2)
    assert gcgm.lmo(cube, np.array([2.0, -5.0]))[1] == pytest.approx(7.0)
    atom, sigma = gcgm.lmo(basis, np.array([3.0, -1.0, 2.0]), active=[2, 3, 4, 5])
    assert (atom, sigma) == (4, 2.0)
    value, coeffs = gcgm.gauge_decomposition(basis.symmetrized(), np.array([0.5, 0.0, -1.0]))
    assert value == pytest.approx(1.5)
    assert sum(coeffs.values()) == pytest.approx(1.5)


def test_penalties():
    assert gcgm.Penalty.power(2.0, 1.0).conjugate(3.0) == 4.5
    barrier = gcgm.Penalty.log_barrier(10.0, 1.0, 1.0)
    assert barrier.conjugate(1.0) == pytest.approx(10.0 - math.log(11.0))
    assert barrier.xi_step(1.0) == pytest.approx(100.0 / 11.0)
    assert gcgm.Penalty.power(1.2, 0.01).growth["convergence_guaranteed"] is False
    with pytest.raises(gcgm.UnboundedStepError):
        gcgm.Penalty.power(1.0, 1.0).xi_step(2.0)
    with pytest.raises(gcgm.ContractViolation):
        gcgm.Penalty.power(0.5)


def test_solve_with_screening_keeps_reference_support():
    A, b = gcgm.gen_synthetic(0, 60, 12)
    problem = gcgm.Problem(gcgm.Loss.logistic(A, b), gcgm.Penalty.power(2.0, 1.0),
                           gcgm.AtomicSet.signed_basis(12))
    ref = gcgm.reference_solve(problem, iters=200000)
    assert ref["gap"] <= 1e-10
    out = gcgm.solve(problem, max_iters=3000, screening="prune")
    assert out["status"] == "max-iterations"
    assert out["t"] == 3000
    assert set(ref["support"]) <= set(out["active"])
    trace = out["trace"]
    assert len(trace["t"]) == 3000
    assert np.all(np.diff(trace["min_gap"]) <= 0)
    assert problem.objective(out["x"]) - ref["objective"] <= out["min_gap"] + 1e-12


def test_divergence_and_unbounded_are_reported():
    A, b = gcgm.gen_synthetic(0)
    weak = gcgm.Problem(gcgm.Loss.logistic(A, b), gcgm.Penalty.power(1.2, 0.01),
                        gcgm.AtomicSet.signed_basis(50))
    assert gcgm.solve(weak, max_iters=10000)["status"] == "diverged"
    one = gcgm.Problem(gcgm.Loss.quadratic(np.ones((1, 1)), np.array([2.0])),
                       gcgm.Penalty.power(1.0, 1.0), gcgm.AtomicSet.signed_basis(1))
    out = gcgm.solve(one, max_iters=10)
    assert out["status"] == "unbounded-step"
    assert out["t"] == 1


def test_screen_rule_and_delta():
    basis = gcgm.AtomicSet.signed_basis(1)
    removed, threshold, active = gcgm.screen(basis, np.array([-2.0]), 2.0, 2.0, 1.0)
    assert removed == [1]
    assert threshold == pytest.approx(2.0 * math.sqrt(2.0))
    assert active == [0]
    assert gcgm.delta(basis, np.array([-1.0]), [0]) == 2.0
    assert gcgm.identification_reached(1.0, 0.06, 1.0)


def test_rate_slope_and_errors(tmp_path):
    t = np.geomspace(1, 1e4, 50)
    assert gcgm.rate_slope(t, 3.0 / t, 10, 1e4) == pytest.approx(-1.0, abs=1e-9)
    with pytest.raises(gcgm.ContractViolation):
        gcgm.rate_slope(t[:3], 1.0 / t[:3], 1, 10)
    bad = tmp_path / "atoms.txt"
    bad.write_text("atoms 2 2\n1 0\n0 x\n")
    with pytest.raises(gcgm.FormatError):
        gcgm.AtomicSet.load(str(bad))
