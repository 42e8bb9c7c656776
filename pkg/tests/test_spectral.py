import math

import numpy as np
import pytest

from invsq import ParameterError, endpoint_coupling, lp_norm, make_log_grid, make_params
from invsq.kernels import heat_sector_matrix
from invsq.operators import log_derivatives
from invsq.profiles import log_gaussian_bump
from invsq.spectral import (
    Multiplier,
    apply_multiplier,
    band_pass,
    dyadic_range,
    frac_power,
    gaussian_symbol,
    get_plan,
    heat_band,
    identity_check,
    low_pass,
    lp_proj,
    make_plan,
    smooth_cutoffs,
    square_function,
)


@pytest.fixture(scope="module")
def grid3():
    return make_log_grid(1e-4, 1e3, 1024, 3)


@pytest.fixture(scope="module")
def free3(grid3):
    return make_params(3, 0.0), grid3


@pytest.fixture(scope="module")
def quarter3(grid3):
    return make_params(3, -0.25), grid3


def rel_l2(grid, got, expect):
    num = math.sqrt(float(grid.weights @ (got - expect) ** 2))
    den = math.sqrt(float(grid.weights @ expect ** 2))
    return num / den


def test_plan_constructs_across_couplings(grid3):
    for a in (0.0, -0.25, 1.0, endpoint_coupling(3)):
        get_plan(make_params(3, a), 0, grid3)


def test_plan_roundtrip_gaussian(free3):
    params, grid = free3
    plan = get_plan(params, 0, grid)
    f = np.exp(-0.5 * grid.nodes ** 2)
    back = plan.inverse_transform(plan.transform(f))
    assert rel_l2(grid, back, f) < 1e-6


def test_transform_of_zero(free3):
    params, grid = free3
    plan = get_plan(params, 0, grid)
    assert np.all(plan.transform(np.zeros(len(grid))) == 0.0)


def test_gaussian_is_self_dual_under_sine_transform(free3):
    # order-1/2 Hankel transform agrees with the radial 3D Fourier sine
    # transform: e^{-r^2/2} maps to e^{-k^2/2} in this normalization
    params, grid = free3
    plan = get_plan(params, 0, grid)
    fhat = plan.transform(np.exp(-0.5 * grid.nodes ** 2))
    k = plan.freq_grid.nodes
    band = (k > 1e-6) & (k < 3.0)
    expect = np.exp(-0.5 * k[band] ** 2)
    assert np.max(np.abs(fhat[band] - expect) / expect) < 1e-6


def test_identity_multiplier_roundtrip(quarter3):
    params, grid = quarter3
    plan = get_plan(params, 0, grid)
    f = grid.sample(log_gaussian_bump(1.0, 0.4))
    out = apply_multiplier(plan, Multiplier(lambda k: np.ones_like(k)), f)
    assert rel_l2(grid, out.values, f.values) < 1e-6


@pytest.mark.parametrize("a", [0.0, -0.25, 1.0])
def test_heat_multiplier_matches_kernel_quadrature(grid3, a):
    # two-path oracle: spectral e^{-t k^2} vs sector heat kernel quadrature
    params = make_params(3, a)
    plan = get_plan(params, 0, grid3)
    f = grid3.sample(log_gaussian_bump(1.0, 0.4))
    for t in (1e-2, 1.0):
        spec = apply_multiplier(plan, gaussian_symbol(t), f)
        kern = heat_sector_matrix(params, 0, t, grid3) @ f.values
        assert rel_l2(grid3, spec.values, kern) < 1e-5


def test_frac_power_inverse_pair(quarter3):
    params, grid = quarter3
    f = grid.sample(log_gaussian_bump(1.0, 0.4))
    up, flag_up = frac_power(params, 0.7, +1, f)
    back, flag_dn = frac_power(params, 0.7, -1, up)
    assert not flag_up and not flag_dn
    assert rel_l2(grid, back.values, f.values) < 1e-5


def test_frac_power_zero(quarter3):
    params, grid = quarter3
    z = grid.sample(lambda r: 0.0 * r)
    out, _ = frac_power(params, 1.3, +1, z)
    assert np.all(out.values == 0.0)


def test_frac_power_laplacian_oracle(free3):
    # a=0, s=2: k^2 multiplier is -Laplacian; check against log-space
    # finite differences of the radial Laplacian f'' + (d-1)/r f'
    params, grid = free3
    f = grid.sample(log_gaussian_bump(1.0, 0.5))
    out, _ = frac_power(params, 2.0, +1, f)
    _, du, duu = log_derivatives(f, order=2)
    r = grid.nodes
    lap = (duu - du) / r ** 2 + (params.d - 1) / r * (du / r)
    interior = (r > 1e-2) & (r < 1e2)
    scale = np.max(np.abs(lap[interior]))
    assert np.max(np.abs(out.values[interior] + lap[interior])) / scale < 1e-4


def test_multiplier_linearity(quarter3):
    params, grid = quarter3
    plan = get_plan(params, 0, grid)
    m = gaussian_symbol(0.5)
    f = grid.sample(log_gaussian_bump(0.5, 0.3))
    g = grid.sample(log_gaussian_bump(2.0, 0.5))
    lhs = apply_multiplier(plan, m, f.with_values(2.0 * f.values - 3.0 * g.values))
    rhs = 2.0 * apply_multiplier(plan, m, f).values - 3.0 * apply_multiplier(plan, m, g).values
    assert np.max(np.abs(lhs.values - rhs)) <= 1e-12 * np.max(np.abs(rhs))


def test_multiplier_symmetry(quarter3):
    # <m f, g> = <f, m g> for real symbols
    params, grid = quarter3
    plan = get_plan(params, 0, grid)
    m = gaussian_symbol(0.3)
    rng = np.random.default_rng(7)
    env = log_gaussian_bump(1.0, 0.6)(grid.nodes)
    for _ in range(3):
        f = grid.sample(lambda r: env * rng.normal(size=r.size))
        g = grid.sample(lambda r: env * rng.normal(size=r.size))
        mf = apply_multiplier(plan, m, f)
        mg = apply_multiplier(plan, m, g)
        lhs = float(grid.weights @ (mf.values * g.values))
        rhs = float(grid.weights @ (f.values * mg.values))
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-12)


def test_semigroup_property(quarter3):
    params, grid = quarter3
    plan = get_plan(params, 0, grid)
    f = grid.sample(log_gaussian_bump(1.0, 0.4))
    one = apply_multiplier(plan, gaussian_symbol(0.4), apply_multiplier(plan, gaussian_symbol(0.6), f))
    both = apply_multiplier(plan, gaussian_symbol(1.0), f)
    assert rel_l2(grid, one.values, both.values) < 1e-6


def test_multipliers_commute(quarter3):
    params, grid = quarter3
    plan = get_plan(params, 0, grid)
    f = grid.sample(log_gaussian_bump(1.0, 0.4))
    m1, m2 = gaussian_symbol(0.2), band_pass(1.0)
    ab = apply_multiplier(plan, m1, apply_multiplier(plan, m2, f))
    ba = apply_multiplier(plan, m2, apply_multiplier(plan, m1, f))
    assert np.max(np.abs(ab.values - ba.values)) < 1e-10 * max(np.max(np.abs(ab.values)), 1e-30)


def test_partition_of_unity():
    lam = np.geomspace(1e-3, 1e3, 4001)
    total = np.zeros_like(lam)
    for n in dyadic_range(2.0 ** -20, 2.0 ** 20):
        total += band_pass(n)(lam)
    assert np.max(np.abs(total - 1.0)) < 1e-12


def test_cutoff_supports():
    phi, psi = smooth_cutoffs(4.0)
    lam = np.linspace(0, 20, 2001)
    assert np.all(psi(lam)[lam >= 8.0] == 0.0)
    assert np.all(psi(lam)[lam <= 2.0] == 0.0)
    assert np.all(phi(lam)[lam <= 4.0] == 1.0)
    assert np.all(phi(lam)[lam >= 8.0] == 0.0)


def test_dyadic_validation():
    with pytest.raises(ParameterError):
        low_pass(3.0)
    with pytest.raises(ParameterError):
        low_pass(2.0 ** 25)


def test_heat_kind_projection_definitional(quarter3):
    params, grid = quarter3
    plan = get_plan(params, 0, grid)
    f = grid.sample(log_gaussian_bump(1.0, 0.4))
    got = lp_proj(params, f, 2.0, "heat")
    expect = apply_multiplier(plan, heat_band(2.0), f)
    assert np.array_equal(got.values, expect.values)


def test_heat_projection_spectral_bound(free3):
    # for f with spectrum in [N, 2N] the L2 contraction factor sits between
    # the extrema of the heat-band symbol on that interval
    params, grid = free3
    f0 = grid.sample(log_gaussian_bump(1.0, 0.4))
    n = 2.0
    f = lp_proj(params, f0, n, "smooth")  # spectrum inside [N/2, 2N] = [1, 4]
    proj = lp_proj(params, f, n, "heat")
    ratio = lp_norm(proj, 2) / lp_norm(f, 2)
    k = np.geomspace(1.0, 4.0, 1001)
    sym = heat_band(n)(k)
    assert sym.min() - 1e-6 <= ratio <= sym.max() + 1e-6


def test_smooth_projection_disjoint_support(free3):
    params, grid = free3
    f0 = grid.sample(log_gaussian_bump(1.0, 0.4))
    f = lp_proj(params, f0, 1.0, "smooth")       # spectrum in [1/2, 2]
    far = lp_proj(params, f, 16.0, "smooth")     # symbol lives on [8, 32]
    assert lp_norm(far, 2) < 1e-10 * lp_norm(f, 2)


def test_square_function_zero(free3):
    params, grid = free3
    z = grid.sample(lambda r: 0.0 * r)
    out = square_function(params, z, 0.5, dyadic_range(0.25, 4.0), "smooth")
    assert np.all(out.values == 0.0)


def test_square_function_single_block(free3):
    # spectrum inside one dyadic block: at most two psi_N overlap, so the
    # square function norm sits within [min overlap, 1] of ||f||_2
    params, grid = free3
    f0 = grid.sample(log_gaussian_bump(1.0, 0.3))
    f = lp_proj(params, f0, 2.0, "smooth")
    sq = square_function(params, f, 0.0, dyadic_range(2 ** -6, 2 ** 6), "smooth")
    ratio = lp_norm(sq, 2) / lp_norm(f, 2)
    # pointwise partition bound: 1/2 <= sum psi_N^2 <= 1 on the support
    assert math.sqrt(0.5) - 1e-6 <= ratio <= 1.0 + 1e-6


def test_square_function_generic_bump(free3):
    params, grid = free3
    f = grid.sample(log_gaussian_bump(1.0, 0.5))
    sq = square_function(params, f, 0.0, dyadic_range(2 ** -8, 2 ** 8), "smooth")
    ratio = lp_norm(sq, 2) / lp_norm(f, 2)
    assert 0.5 <= ratio <= 1.5


@pytest.mark.parametrize("kind,a", [("smooth", 0.0), ("smooth", -0.25),
                                    ("heat", 0.0), ("heat", -0.25)])
def test_identity_expansion(grid3, kind, a):
    params = make_params(3, a)
    base = grid3.sample(log_gaussian_bump(1.0, 0.4))
    f = lp_proj(params, base, 0.25, "smooth")  # band [1/8, 1/2]
    n_set = dyadic_range(2.0 ** -10, 2.0 ** 10)
    residual = identity_check(params, f, n_set, 2, kind)
    assert residual < 1e-6 * lp_norm(f, 2)


def test_identity_empty_set(free3):
    params, grid = free3
    f = grid.sample(log_gaussian_bump(1.0, 0.4))
    assert identity_check(params, f, [], 2) == pytest.approx(lp_norm(f, 2))


def test_bernstein_l2_scaling(free3):
    # || L^{s/2} P_N f ||_2 / || P_N f ||_2 must sit inside the symbol
    # support bounds [N/2, 2N] raised to the power s
    params, grid = free3
    f0 = grid.sample(log_gaussian_bump(1.0, 0.5))
    s = 0.8
    for n in (0.5, 1.0, 4.0):
        piece = lp_proj(params, f0, n, "smooth")
        powered, _ = frac_power(params, s, +1, piece)
        ratio = lp_norm(powered, 2) / lp_norm(piece, 2)
        assert (n / 2.0) ** s * (1 - 1e-6) <= ratio <= (2.0 * n) ** s * (1 + 1e-6)


def test_plan_rejects_mismatched_grid(free3):
    params, grid = free3
    other = make_log_grid(1e-3, 1e2, 512, 3)
    plan = get_plan(params, 0, grid)
    with pytest.raises(ParameterError):
        apply_multiplier(plan, gaussian_symbol(), other.sample(lambda r: np.exp(-r)))
