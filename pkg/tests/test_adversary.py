import csv
import io

import numpy as np
import pytest

from conftest import random_method
from optrecovery.adversary import (VerificationReport, envelope, grid_minimax_oracle, holder_violation,
                                   linear_interpolation_rival, random_data, sample_feasible, verify_optimality)
from optrecovery.domains import Disk, Interval, QuadratureGrid
from optrecovery.errors import InconsistentDataError
from optrecovery.modulus import ModulusSpec
from optrecovery.operators import FullDomain, KernelOp, OperatorMatrix, identity_problem, optimal_error
from optrecovery.recovery import InfoSpec, RecoveryMethod

UNIT = Interval(0, 1)


def method(q, e=0.0, variant="plain", domain=UNIT):
    return RecoveryMethod(ModulusSpec.lipschitz(), InfoSpec(q, e), domain, variant)


def test_envelope_at_zero_data_is_tau():
    rng = np.random.default_rng(3)
    for domain in (UNIT, Disk()):
        for variant in ("plain", "tilde"):
            m = random_method(rng, domain, variant)
            grid = domain.build_grid(40)
            env = envelope(m, np.zeros(m.n), grid)
            phi = m.phi(grid.nodes)
            assert np.max(np.abs(env.upper - phi)) <= 1e-12
            assert np.max(np.abs(env.lower + phi)) <= 1e-12
            assert np.max(np.abs(env.half_width - phi)) <= 1e-12


def test_envelope_single_point():
    grid = UNIT.build_grid(50)
    env = envelope(method([0.5]), [1.0], grid)
    t = grid.nodes[:, 0]
    np.testing.assert_allclose(env.upper, 1 + np.abs(t - 0.5), atol=1e-15)
    np.testing.assert_allclose(env.lower, 1 - np.abs(t - 0.5), atol=1e-15)


def test_inconsistent_data():
    with pytest.raises(InconsistentDataError):
        envelope(method([0.4, 0.6]), [0.0, 10.0], UNIT.build_grid(20))
    with pytest.raises(InconsistentDataError):
        sample_feasible(method([0.4, 0.6]), [0.0, 10.0], UNIT.build_grid(20))


def test_feasible_samples_stay_in_class():
    rng = np.random.default_rng(5)
    for domain in (UNIT, Disk()):
        m = random_method(rng, domain)
        grid = domain.build_grid(24 if domain.dim == 2 else 120)
        z = random_data(m, rng)
        env = envelope(m, z, grid)
        for seed in range(100):
            x = sample_feasible(m, z, grid, seed=seed)
            assert np.all(x <= env.upper + 1e-12) and np.all(x >= env.lower - 1e-12)
            assert holder_violation(m, grid, x) <= 1e-12
            x_q = sample_feasible(m, z, q_grid(m), seed=seed)
            assert np.all(np.abs(x_q - z) <= m.errors + 1e-12)


def q_grid(m):
    return QuadratureGrid(m.points, np.ones(m.n))


def test_sampling_is_deterministic_per_seed():
    m = method([0.2, 0.8], [0.1, 0.0])
    grid = UNIT.build_grid(64)
    a = sample_feasible(m, [0.3, 0.1], grid, seed=9)
    b = sample_feasible(m, [0.3, 0.1], grid, seed=9)
    np.testing.assert_array_equal(a, b)


def test_zero_data_samples_below_tau():
    m = method([0.3, 0.6], [0.05, 0.0])
    grid = UNIT.build_grid(200)
    tau = m.tau(grid.nodes)
    for seed in range(20):
        assert np.all(np.abs(sample_feasible(m, np.zeros(2), grid, seed=seed)) <= tau + 1e-12)


def test_verify_identity_problem():
    m = method([0.25, 0.75])
    rep = verify_optimality(identity_problem(UNIT), [m], trials=200, seed=0, resolution=200)
    assert isinstance(rep, VerificationReport)
    assert rep.passed, rep.failures()
    assert rep.optimal_error == pytest.approx(0.125, abs=1e-9)
    b = [r for r in rep.rows if r.clause == "b"][0]
    assert abs(b.value - b.bound) <= 1e-9
    assert sum(r.clause == "a" for r in rep.rows) == 200


def test_verify_kernel_problem_with_errors():
    k = KernelOp(lambda s, t: 1.0 + np.exp(-np.abs(s[:, :1] - t[None, :, 0])), name="k")
    mat = OperatorMatrix.single(k, FullDomain(UNIT)).with_signs((-1,))
    m = method([0.1, 0.5, 0.8], [0.02, 0.0, 0.1])
    rep = verify_optimality(mat, [m], trials=40, seed=2, resolution=120)
    assert rep.passed, rep.failures()


def test_linear_rival_on_witness():
    m = method([0.25, 0.75])
    grid = UNIT.build_grid(400)
    tau = m.tau(grid.nodes)
    rival = linear_interpolation_rival(m, np.zeros(2), grid)
    err = grid.integrate(np.abs(tau - rival))
    assert err >= optimal_error(identity_problem(UNIT), [m], resolution=400).value - 1e-9


def test_verify_report_csv():
    rep = verify_optimality(identity_problem(UNIT), [method([0.5])], trials=3, seed=1, resolution=50)
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["trial", "clause", "value", "bound", "pass"]
    assert len(rows) == 1 + 1 + 3 + 2
    again = verify_optimality(identity_problem(UNIT), [method([0.5])], trials=3, seed=1, resolution=50)
    assert again.to_csv() == rep.to_csv()


def test_grid_minimax_examples():
    m = method([0.5])
    assert grid_minimax_oracle(m, 101) == pytest.approx(0.25, abs=1e-3)
    shifted = method([0.5], 0.1)
    assert grid_minimax_oracle(shifted, 101) == pytest.approx(grid_minimax_oracle(m, 101) + 0.1, abs=1e-12)


@pytest.mark.parametrize("q", [0.3, 0.31, 0.5, 0.777])
def test_grid_minimax_refinement_converges(q):
    # only the cell holding the kink of |t - q| is integrated inexactly, so the
    # deviation is below h^2 / 2 and the bound at least halves per refinement
    m = method([q])
    exact = (q ** 2 + (1 - q) ** 2) / 2
    for res in (25, 50, 100, 200):
        assert abs(grid_minimax_oracle(m, res) - exact) <= 0.5 / res ** 2
