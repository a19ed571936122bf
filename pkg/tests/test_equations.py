import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad, simpson, solve_ivp

from optrecovery.domains import Box, Circle, Disk, Interval, SpacetimeBox
from optrecovery.equations import (exp_integral, fredholm_resolvent, heat_k1, heat_k2, heat_operator,
                                   heat_optimal_error, heat_solution, is_metzler, matrix_exponential,
                                   ode_optimal_error, ode_recovery, ode_solution, poisson_cross_check,
                                   poisson_disk_error, poisson_disk_solution, poisson_kernel_disk,
                                   poisson_operator, ray_prefactor_shortcut, ray_time_integral,
                                   resolvent_l1_error, resolvent_operator, solve_second_kind,
                                   volterra_resolvent, wave1d_kernel_operator, wave_fixed_time_error,
                                   wave_solution, wave_solution_and_error)
from optrecovery.equations.heat import output_space_box
from optrecovery.equations.poisson import green_disk
from optrecovery.errors import ConfigurationError, PreconditionError, UnsupportedError
from optrecovery.modulus import ModulusSpec
from optrecovery.operators import FixedTime, optimal_error
from optrecovery.recovery import InfoSpec, RecoveryMethod

UNIT = Interval(0, 1)
LIP = ModulusSpec.lipschitz()


def method(q, e=0.0, domain=UNIT, variant="plain", modulus=LIP):
    return RecoveryMethod(modulus, InfoSpec(q, e), domain, variant)


# ---------------------------------------------------------------- resolvents


def test_volterra_unit_kernel():
    table = volterra_resolvent(1.0, n=200)
    assert table(1.0, 0.0) == pytest.approx(math.e, abs=1e-6)


def test_volterra_constant_two():
    table = volterra_resolvent(2.0, n=200)
    assert table(1.0, 0.0) == pytest.approx(2 * math.e ** 2, abs=1e-5)


@pytest.mark.parametrize("build", [volterra_resolvent, fredholm_resolvent])
def test_zero_kernel_zero_resolvent(build):
    table = build(0.0, n=20)
    assert np.all(table.values == 0.0)


def test_volterra_is_causal():
    table = volterra_resolvent(lambda t, s: 1 + t * s, n=60)
    i, j = np.triu_indices(table.nodes.size, k=1)
    assert np.all(table.values[i, j] == 0.0)
    assert table(0.2, 0.7) == 0.0


def test_fredholm_half_kernel():
    table = fredholm_resolvent(0.5, n=100)
    assert np.max(np.abs(table.values - 1.0)) <= 1e-8


def test_fredholm_premise_enforced():
    with pytest.raises(PreconditionError, match="square-integrab"):
        fredholm_resolvent(1.0, n=50)


def volterra_k(t, s):
    return np.exp(-(t - s)) * (1 + 0.5 * s)


def fredholm_k(t, s):
    return 0.3 + 0.4 * t * s


@pytest.mark.parametrize("kind", ["volterra", "fredholm"])
def test_resolvent_fixed_point_identity(kind):
    k = volterra_k if kind == "volterra" else fredholm_k
    build = volterra_resolvent if kind == "volterra" else fredholm_resolvent
    table = build(k, n=200)
    x = table.nodes
    for i, j in [(200, 0), (150, 40), (120, 119), (37, 10), (10, 37), (200, 200)]:
        t, s = x[i], x[j]
        if kind == "volterra" and s > t:
            continue
        rows = slice(j, i + 1) if kind == "volterra" else slice(None)
        u = x[rows]
        integrand = k(t, u) * table.values[rows, j]
        rhs = k(t, s) + (simpson(integrand, x=u) if u.size > 1 else 0.0)
        assert table.values[i, j] == pytest.approx(rhs, abs=1e-6)


def test_solve_second_kind_examples():
    vt = volterra_resolvent(1.0, n=200)
    assert solve_second_kind("volterra", vt, lambda s: np.ones_like(s), 1.0) == pytest.approx(math.e, abs=1e-5)
    assert np.all(solve_second_kind("volterra", vt, np.zeros_like, [0.3, 0.9]) == 0.0)
    ft = fredholm_resolvent(0.5, n=50)
    np.testing.assert_allclose(solve_second_kind("fredholm", ft, lambda s: np.ones_like(s), [0.0, 0.4, 1.0]),
                               2.0, atol=1e-10)
    with pytest.raises(ConfigurationError):
        solve_second_kind("fredholm", vt, np.zeros_like, 0.5)


@pytest.mark.parametrize("kind", ["volterra", "fredholm"])
def test_resolvent_error_matches_generic(kind):
    table = (volterra_resolvent(volterra_k, n=100) if kind == "volterra"
             else fredholm_resolvent(fredholm_k, n=100))
    m = method([0.2, 0.6, 0.9], [0.0, 0.05, 0.0])
    closed = resolvent_l1_error(table, m, resolution=400)
    generic = optimal_error(resolvent_operator(table), [m], resolution=400)
    assert generic.value == pytest.approx(closed.value, rel=1e-4)


# ---------------------------------------------------------------- ODE systems


def test_matrix_exponential_examples():
    np.testing.assert_array_equal(matrix_exponential(np.zeros((3, 3)), 2.0), np.eye(3))
    c, s = math.cosh(1), math.sinh(1)
    np.testing.assert_allclose(matrix_exponential([[0, 1], [1, 0]], 1.0), [[c, s], [s, c]], rtol=1e-14)


def random_metzler(rng, d=4):
    S = rng.uniform(0, 2, (d, d)) * (rng.random((d, d)) < 0.5)
    S[np.diag_indices(d)] = rng.uniform(-5, 2, d)
    return S


def test_metzler_positivity_random():
    rng = np.random.default_rng(0)
    for _ in range(50):
        S = random_metzler(rng)
        for h in (0.1, 1.0):
            assert matrix_exponential(S, h).min() >= -1e-12


metzler_entries = arrays(np.float64, (3, 3), elements=st.floats(-4, 4, allow_nan=False))


@given(metzler_entries, st.floats(0, 2))
@settings(max_examples=60, deadline=None)
def test_metzler_positivity_property(S, h):
    S = np.where(np.eye(3, dtype=bool), S, np.abs(S))
    assert is_metzler(S)
    assert matrix_exponential(S, h).min() >= -1e-12


def test_semigroup():
    rng = np.random.default_rng(1)
    for _ in range(10):
        S = rng.normal(size=(4, 4))
        a, b = rng.uniform(0, 1, 2)
        np.testing.assert_allclose(matrix_exponential(S, a + b),
                                   matrix_exponential(S, a) @ matrix_exponential(S, b), rtol=1e-9, atol=1e-12)


def test_exp_integral_against_quadrature():
    S = np.array([[-1.0, 0.5], [0.2, 0.3]])
    want = np.array([[quad(lambda v: matrix_exponential(S, v)[i, j], 0, 0.7)[0] for j in range(2)]
                     for i in range(2)])
    np.testing.assert_allclose(exp_integral(S, 0.7), want, rtol=1e-10)


def test_ode_frozen_system():
    ms = [method([0.5]), method([0.5])]
    out = ode_recovery(np.zeros((2, 2)), [1.0, -2.0], [0.0, 0.0], ms, [[0.0], [0.0]], [0.0, 0.5, 1.0])
    np.testing.assert_allclose(out.values, [[1, -2]] * 3, atol=1e-14)


def test_ode_scalar_error_example():
    rep = ode_optimal_error([[0.0]], [0.0], [method([0.5])], 0.0, 1.0, resolution=2000)
    assert rep.value == pytest.approx(0.125, abs=1e-6)


def test_ode_non_metzler_rejected():
    ms = [method([0.5]), method([0.5])]
    with pytest.raises(PreconditionError, match=r"S\[0\]\[1\]"):
        ode_recovery([[0, -1], [1, 0]], [0, 0], [0, 0], ms, [[0.0], [0.0]], [1.0])


def test_ode_solution_matches_solve_ivp():
    S = np.array([[-0.5, 0.3], [0.8, -1.0]])
    q = lambda u: np.column_stack([np.sin(3 * u), np.ones_like(u)])
    ref = solve_ivp(lambda t, x: S @ x + q(np.array([t]))[0], (0, 1), [1.0, 2.0], rtol=1e-11, atol=1e-12)
    got = ode_solution(S, [1.0, 2.0], q, 1.0, resolution=4000)[0]
    np.testing.assert_allclose(got, ref.y[:, -1], atol=1e-6)


def test_ode_error_grows_with_initial_error():
    S = [[0.0, 1.0], [1.0, 0.0]]
    ms = [method([0.5]), method([0.5])]
    base = ode_optimal_error(S, [0, 0], ms, 0, 1, resolution=500).value
    more = ode_optimal_error(S, [0.1, 0], ms, 0, 1, resolution=500).value
    # int_0^1 (cosh v + sinh v) dv = e - 1
    assert more - base == pytest.approx(0.1 * (math.e - 1), rel=1e-10)


# ---------------------------------------------------------------- heat


@pytest.mark.parametrize("d", [1, 2, 3])
def test_heat_kernel_mass(d):
    u, t = np.full(d, 0.3), 0.2
    box = Box(u - 12 * math.sqrt(2 * t), u + 12 * math.sqrt(2 * t))
    grid = box.build_grid({1: 400, 2: 120, 3: 50}[d])
    mass = grid.integrate(heat_k2(d, np.append(u, t)[None, :], grid.nodes)[0])
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_heat_kernel_values():
    assert heat_k2(1, [[0.4, 1 / (4 * math.pi)]], [[0.4]])[0, 0] == pytest.approx(1.0, rel=1e-14)
    assert heat_k1(1, [[0.0, 0.5]], [[0.0, 0.5], [0.0, 0.7]]).tolist() == [[0.0, 0.0]]


def test_heat_fixed_time_sum():
    m1 = SpacetimeBox([0, 0], [1, 0.5])
    m2 = Box([0], [1])
    rep = heat_optimal_error("fixed-time", 1, 0.25, 0.25, m1=m1, m2=m2, t0=1.0, resolution=50)
    assert rep.value == pytest.approx(0.125 + 0.25, abs=1e-12)


def test_heat_fixed_time_only_counts_the_past():
    m1 = SpacetimeBox([0, 0], [1, 2])
    rep = heat_optimal_error("fixed-time", 1, 1.0, 0.0, m1=m1, m2=Box([0], [1]), t0=0.5, resolution=50)
    assert rep.value == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_heat_ray_constant(R):
    oracle = quad(lambda t: heat_k2(3, [[R, 0, 0, t]], [[0, 0, 0]])[0, 0], 0, np.inf)[0]
    assert float(ray_time_integral(3, R)) == pytest.approx(oracle, rel=1e-6)


def test_heat_ray_case():
    m2 = Box([1, 1, 1], [2, 2, 2])
    m1 = SpacetimeBox([1, 1, 1, 0], [2, 2, 2, 1])
    rep = heat_optimal_error("fixed-point-ray", 3, 0.0, 1.0, m1=m1, m2=m2, u0=[0, 0, 0], resolution=30)
    grid = m2.build_grid(30)
    want = grid.integrate(1 / (4 * math.pi * np.linalg.norm(grid.nodes, axis=-1)))
    assert rep.value == pytest.approx(want, rel=1e-12)
    ratio = rep.extras["shortcut_value"] / rep.value
    assert ratio == pytest.approx(ray_prefactor_shortcut(3) / float(ray_time_integral(3, 1.0)))
    with pytest.raises(UnsupportedError):
        heat_optimal_error("fixed-point-ray", 2, 0.0, 1.0, m1=SpacetimeBox([0, 0, 0], [1, 1, 1]),
                           m2=Box([0, 0], [1, 1]), u0=[0, 0])


def test_heat_single_point_mass():
    t0, u0, delta = 1 / (4 * math.pi), 0.3, 0.01
    m2 = Box([u0 - delta], [u0 + delta])
    m1 = SpacetimeBox([0, 0], [1, 1])
    rep = heat_optimal_error("single-point", 1, 0.0, 1 / (2 * delta), m1=m1, m2=m2, t0=t0, u0=[u0],
                             resolution=200)
    assert rep.value == pytest.approx(1.0, abs=1e-3)


def test_heat_requires_tilde_variant():
    m1 = method([[0.5, 0.5]], domain=SpacetimeBox([0, 0], [1, 1]))
    m2 = method([[0.5]], domain=Box([0], [1]), variant="tilde")
    with pytest.raises(ConfigurationError):
        heat_optimal_error("fixed-time", 1, m1, m2, t0=0.5)


def heat_methods():
    m1 = method([[0.3, 0.2], [0.7, 0.6]], [0.02, 0.0], SpacetimeBox([0, 0], [1, 1]), "tilde")
    m2 = method([[0.25], [0.75]], [0.0, 0.05], Box([0], [1]), "tilde")
    return m1, m2


def test_heat_closed_form_matches_generic():
    m1, m2 = heat_methods()
    t0 = 0.5
    closed = heat_optimal_error("fixed-time", 1, m1, m2, t0=t0, resolution=100)
    out = FixedTime(output_space_box(1, [m1.domain, m2.domain], t0), t0)
    generic = optimal_error(heat_operator(1, out, analytic=False), [m1, m2], resolution=100, out_resolution=2000)
    assert generic.value == pytest.approx(closed.value, rel=1e-4)


def test_heat_solution_constant_initial_value():
    m1 = method([[0.5, 0.5]], 0.0, SpacetimeBox([-1, 0], [2, 1]), "tilde")
    m2 = method([[0.5]], 0.0, Box([-30], [30]), "tilde")
    # boundary cell of M2 is tiny compared with the kernel width at u = 0.5, t = 0.1
    vals = heat_solution(1, [m1, m2], [[0.0], [2.0]], [[0.5, 0.1]], resolution=3000)
    assert vals[0] == pytest.approx(2.0, abs=1e-6)


# ---------------------------------------------------------------- wave


@pytest.mark.parametrize("d", [1, 2, 3])
def test_wave_elementary_data(d):
    pts = np.array([[*np.full(d, 0.2), 0.7], [*np.zeros(d), 1.5]])
    one = lambda p: np.ones(p.shape[0])
    np.testing.assert_allclose(wave_solution(d, pts, h=one, nq=16), pts[:, -1], rtol=1e-12)
    np.testing.assert_allclose(wave_solution(d, pts, f=one, nq=16), pts[:, -1] ** 2 / 2, rtol=1e-12)


def test_wave_1d_pde_residual():
    f = lambda p: np.sin(p[:, 0]) * np.cos(p[:, 1])
    g = lambda p: np.exp(-p[:, 0] ** 2)
    h = lambda p: np.cos(2 * p[:, 0])
    x = lambda u, t: wave_solution(1, [[u, t]], f, g, h, nq=40)[0]
    u, t, d = 0.3, 0.8, 1e-3
    xtt = (x(u, t + d) - 2 * x(u, t) + x(u, t - d)) / d ** 2
    xuu = (x(u + d, t) - 2 * x(u, t) + x(u - d, t)) / d ** 2
    assert xtt - xuu == pytest.approx(math.sin(u) * math.cos(t), abs=1e-5)
    assert x(u, 0.0) == pytest.approx(math.exp(-u ** 2), abs=1e-14)


def test_wave_error_examples():
    src = SpacetimeBox([0, 0], [1, 1])
    rep = wave_fixed_time_error(1, 1.0, [(src, 1.0), (Box([0], [1]), 0.0), (Box([0], [1]), 0.0)], 200)
    assert rep.extras["terms"][0] == pytest.approx(0.5, abs=1e-4)
    rep = wave_fixed_time_error(1, 2.0, [(src, 0.0), (Box([0], [1]), 0.25), (Box([0], [1]), 0.25)], 50)
    assert rep.value == pytest.approx(0.75, abs=1e-14)


def test_wave_2d_3d_error_formula():
    src = SpacetimeBox([0, 0, 0], [1, 1, 2])
    rep = wave_fixed_time_error(2, 1.5, [(src, 1.0), (Box([0, 0], [1, 1]), 0.2)], 40)
    # int_0^1.5 s ds over the unit square, the source only lives up to time 1.5
    assert rep.value == pytest.approx(1.5 ** 2 / 2 + 1.5 * 0.2, rel=1e-9)
    with pytest.raises(UnsupportedError):
        wave_fixed_time_error(4, 1.0, [(src, 1.0), (Box([0, 0], [1, 1]), 0.2)])


def test_wave_dalembert_constant():
    f = method([[0.5, 0.5]], 0.0, SpacetimeBox([0, 0], [1, 1]))
    g = method([[0.0]], 0.0, Interval(-5, 5))
    h = method([[0.0]], 0.0, Interval(-5, 5))
    values, rep = wave_solution_and_error(1, [f, g, h], [[0.0], [3.0], [0.0]], [[0.2], [-1.0]], 1.0, nq=16)
    np.testing.assert_allclose(values, 3.0, atol=1e-12)
    assert rep.value > 0


def test_wave_closed_form_matches_generic():
    t0 = 1.0
    f = method([[0.3, 0.4], [0.7, 0.8]], [0.0, 0.1], SpacetimeBox([0, 0], [1, 1]))
    h = method([[0.5]], 0.05, Interval(0, 1))
    closed = wave_fixed_time_error(1, t0, [f, (Interval(0, 1), 0.0), h], 200)
    generic = optimal_error(wave1d_kernel_operator(t0, Box([-1.5], [2.5])), [f, h], resolution=100,
                            out_resolution=4000)
    assert generic.value == pytest.approx(closed.value, rel=1e-4)


# ---------------------------------------------------------------- Poisson


def test_poisson_shortcut_form_examples():
    disk = Disk()
    rep = poisson_disk_error(disk, 1.0, 1.0, resolution=32, cross_check=False)
    assert rep.value == pytest.approx(5 * math.pi / 4, rel=1e-3)
    assert rep.extras["green_form"] == pytest.approx(9 * math.pi / 8, rel=1e-3)
    assert poisson_disk_error(disk, 0.0, 0.0, cross_check=False).value == 0.0
    big = Disk((1, -1), 2.0)
    assert poisson_disk_error(big, 0.0, 0.7, cross_check=False).value == pytest.approx(0.7 * math.pi * 4, rel=1e-12)


def test_poisson_kernels():
    disk = Disk((0.5, 0.0), 1.5)
    inner = np.array([[0.5, 0.0], [1.2, 0.3], [-0.2, -0.6], [0.0, 0.9], [1.0, -1.0], [0.6, 0.2]])
    bgrid = disk.boundary().build_grid(400)
    for p in inner:
        mass = bgrid.integrate(poisson_kernel_disk(disk, p[None, :], bgrid.nodes)[0])
        assert mass == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(green_disk(disk, inner[:3], inner[3:6]), green_disk(disk, inner[3:6], inner[:3]).T,
                               rtol=1e-12)
    assert np.all(green_disk(disk, inner[:3], inner[3:6]) > 0)


def test_poisson_cross_check_converges_first_order():
    disk = Disk()
    vals = {n: poisson_cross_check(disk, 1.0, 1.0, n) for n in (8, 16, 32)}
    ratio = (vals[16] - vals[8]) / (vals[32] - vals[16])
    assert 1.6 < ratio < 2.4
    richardson = 2 * vals[32] - vals[16]
    assert richardson == pytest.approx(9 * math.pi / 8, abs=3e-3)


def test_poisson_generic_matches_green_form():
    disk = Disk()
    m1 = method([[0.0, 0.0], [0.5, 0.2]], [0.0, 0.1], disk)
    m2 = method([[1.0, 0.0], [-1.0, 0.0]], [0.05, 0.0], Circle())
    # the closed form puts 3n nodes on the circle, the generic path n
    rep = poisson_disk_error(disk, m1, m2, resolution=192, cross_check=False)
    generic = optimal_error(poisson_operator(disk), [m1, m2], resolution=192, estimate=False)
    assert generic.value == pytest.approx(rep.extras["green_form"], rel=1e-4)


def test_poisson_solution_constant_boundary():
    disk = Disk()
    m1 = method([[0.0, 0.0]], 0.0, disk)
    m2 = method([[1.0, 0.0]], 0.0, Circle())
    vals = poisson_disk_solution(disk, [m1, m2], [[0.0], [1.5]], [[0.1, 0.2], [-0.4, 0.0]], resolution=64)
    np.testing.assert_allclose(vals, 1.5, atol=1e-6)
