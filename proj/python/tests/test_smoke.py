import math

import numpy as np
import pytest

import rigidity as rg


def test_scalar_chain():
    xi = rg.find_xi(2.0)
    assert abs(xi - 1.2564312086) < 1e-9
    assert abs(rg.eval_f(xi, 2.0)) < 1e-13
    chain = rg.constant_chain(2.0, 4.0, 1.0, math.sqrt(2.0))
    assert chain["c0"] == pytest.approx(2 * math.log(2) - 1, abs=1e-12)
    assert chain["eps0"] == pytest.approx(4 * chain["c1"] / math.pi, abs=1e-12)
    assert rg.lipschitz_k(2.0, 2.0) == pytest.approx(math.e**2 - 2, abs=1e-12)


def test_operator_and_eigenpair():
    op = rg.rectangle(32, 32)
    assert op.size == 33 * 33
    assert op.lumped_mass.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.abs(op.apply_stiffness(np.ones(op.size))).max() < 1e-12
    assert op.stiffness().shape == (op.size, op.size)
    mode = rg.first_mode(op)
    assert abs(mode.mu1 - math.pi**2) / math.pi**2 < 0.01
    assert mode.degenerate
    assert abs(op.lumped_mass @ mode.phi1) < 1e-10


def test_newton_and_diagnostics():
    op = rg.rectangle(24, 24)
    xi = rg.find_xi(2.0)
    sol = rg.newton_solve(np.full(op.size, 0.9 * xi), 1.0, 2.0, op)
    assert sol.is_constant
    assert sol.mean == pytest.approx(xi, abs=1e-9)
    x = op.nodes[:, 0]
    pattern = rg.newton_solve(xi + 0.35 * np.cos(np.pi * x), 0.14, 2.0, op)
    assert pattern.classification == "nonconstant"
    report = rg.run_diagnostics(pattern.u, pattern.epsilon, 2.0, op)
    assert report["all_pass"]


def test_multi_start_rigidity():
    op = rg.rectangle(12, 12)
    sols = rg.multi_start(1.0, 2.0, op, n_starts=10, seed=3)
    means = sorted(s.mean for s in sols)
    assert len(sols) == 2
    assert means[0] == pytest.approx(0.0, abs=1e-9)
    assert means[1] == pytest.approx(rg.find_xi(2.0), abs=1e-9)
    assert all(s.diagnostics["all_pass"] for s in sols)


def test_bifurcation_and_branch():
    op = rg.rectangle(16, 16)
    mode = rg.first_mode(op)
    eps_star = rg.detect_bifurcation(2.0, op, 0.1, 0.2)
    assert eps_star * mode.mu1 == pytest.approx(rg.eval_f_prime(rg.find_xi(2.0), 2.0), rel=1e-8)
    sw = rg.branch_switch(eps_star, 2.0, op, 0.3 * rg.find_xi(2.0), mode.phi1)
    assert sw.sup_fluct > 0.01
    pts = rg.continue_branch(sw, [1.1 * eps_star], op)
    assert pts[-1][1].sup_fluct < 1e-6


def test_sweep_row_shape():
    op = rg.rectangle(10, 10)
    out = rg.rigidity_sweep([10.0], 2.0, op, n_starts=5)
    assert len(out["rows"]) == 1
    assert not out["rows"][0]["any_nonconstant"]


def test_errors():
    with pytest.raises(ValueError):
        rg.find_xi(0.5)
    op = rg.rectangle(8, 8)
    with pytest.raises(rg.NumericalError) as info:
        rg.detect_bifurcation(2.0, op, 0.5, 0.6)
    assert info.value.kind == "InvalidBracket"
    with pytest.raises(OSError):
        rg.read_mesh("/nonexistent/mesh.txt")
