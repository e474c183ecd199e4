"""Multiple-sum kernels: isometry, products, operator powers, contractions."""

import math

import numpy as np
import pytest

from kolbounds import chaos, hoeffding
from kolbounds.dist import Distribution, three_point
from kolbounds.errors import DomainError
from kolbounds.space import OutcomeSpace


def _space(n=4, law=None):
    return OutcomeSpace.iid(law or three_point(), n)


def test_decompose_reconstruct_roundtrip():
    rng = np.random.default_rng(31)
    space = _space()
    for _ in range(8):
        X = space.functional(rng.standard_normal(space.size))
        dec = chaos.decompose(X)
        back = dec.reconstruct()
        assert np.max(np.abs(back.values - X.values)) < 1e-12


def test_decompose_second_moment_matches_enumeration():
    rng = np.random.default_rng(32)
    space = _space()
    X = space.functional(rng.standard_normal(space.size))
    dec = chaos.decompose(X)
    assert dec.second_moment() == pytest.approx(X.moment(2), rel=1e-12)


def test_isometry_within_and_across_orders():
    rng = np.random.default_rng(33)
    space = _space()
    kernels = [chaos.random_kernel(space, 1 + (i % 3), rng) for i in range(12)]
    for i, f in enumerate(kernels):
        for g in kernels[i:]:
            lhs = (f.integral() * g.integral()).expectation()
            if f.order == g.order:
                want = math.factorial(f.order) * f.inner_product(g)
            else:
                want = 0.0
            assert lhs == pytest.approx(want, rel=1e-11, abs=1e-11)


def test_integral_of_random_kernel_is_centered_pure_grade():
    rng = np.random.default_rng(34)
    space = _space()
    for d in (1, 2, 3):
        f = chaos.random_kernel(space, d, rng)
        assert f.degeneracy_violation() < 1e-12
        X = f.integral()
        assert abs(X.expectation()) < 1e-12
        H = hoeffding.project(X)
        assert H.orders_present() == [d]


def test_multiplication_formula_pointwise():
    rng = np.random.default_rng(35)
    space = _space()
    for da, db in [(1, 1), (1, 2), (2, 2), (2, 3), (1, 3)]:
        f = chaos.random_kernel(space, da, rng)
        g = chaos.random_kernel(space, db, rng)
        truth = f.integral() * g.integral()
        got = chaos.multiply(f, g).reconstruct()
        scale = max(1.0, float(np.max(np.abs(truth.values))))
        assert np.max(np.abs(got.values - truth.values)) / scale < 1e-11


def test_multiplication_respects_second_moments():
    rng = np.random.default_rng(36)
    space = _space()
    f = chaos.random_kernel(space, 2, rng)
    g = chaos.random_kernel(space, 2, rng)
    prod = chaos.multiply(f, g)
    direct = (f.integral() * g.integral()).moment(2)
    assert prod.second_moment() == pytest.approx(direct, rel=1e-10)


def test_covariance_identity_for_key_alphas():
    rng = np.random.default_rng(37)
    space = _space()
    for _ in range(6):
        X = space.functional(rng.standard_normal(space.size)).centered()
        Y = space.functional(rng.standard_normal(space.size)).centered()
        for alpha in (0.0, 0.5, 1.0, 0.3):
            assert chaos.covariance_identity_check(X, Y, alpha) < 1e-11


def test_covariance_identity_rejects_uncentered():
    space = _space(3)
    X = space.constant(1.0) + space.coordinate(0)
    with pytest.raises(DomainError):
        chaos.covariance_identity_check(X, X, 0.5)


def test_operator_powers_compose_and_scale_grades():
    rng = np.random.default_rng(38)
    space = _space()
    X = space.functional(rng.standard_normal(space.size)).centered()
    once = chaos.apply_L_power(chaos.apply_L_power(X, -0.5), -0.5)
    direct = chaos.apply_L_power(X, -1.0)
    assert np.max(np.abs(once.values - direct.values)) < 1e-11

    f = chaos.random_kernel(space, 3, rng)
    Z = f.integral()
    scaled = chaos.apply_L_power(Z, -1.0)
    assert np.max(np.abs(scaled.values - (Z * (1.0 / 3.0)).values)) < 1e-11


def test_negative_power_needs_centered_input():
    space = _space(3)
    with pytest.raises(DomainError):
        chaos.apply_L_power(space.constant(2.0), -1.0)


def test_gradient_square_integral_counts_orders():
    # E of the half-weight squared-gradient integral equals the sum over
    # subsets of |J| E[W_J^2], the number operator in quadratic form.
    rng = np.random.default_rng(39)
    space = _space(3)
    X = space.functional(rng.standard_normal(space.size)).centered()
    got = chaos.gradient(X).power_int_half(2).expectation()
    H = hoeffding.project(X)
    want = sum(len(s) * H.term(s).moment(2) for s in H.subsets())
    assert got == pytest.approx(want, rel=1e-12)


def test_gradient_of_pure_integral_freezes_one_slot():
    rng = np.random.default_rng(40)
    space = _space(3)
    f = chaos.random_kernel(space, 2, rng)
    X = f.integral()
    g = chaos.gradient(X)
    for k in range(space.n):
        for t in range(space.shape[k]):
            frozen = f.evaluated_at(k, t)
            want = 2.0 * frozen.integral()
            got = g.component(k, t)
            assert np.max(np.abs(got.values - want.values)) < 1e-11


def test_full_self_contraction_recovers_the_norm():
    rng = np.random.default_rng(41)
    space = _space()
    for d in (1, 2, 3):
        f = chaos.random_kernel(space, d, rng)
        c = chaos.contract(f, f, d, d)
        assert c.free_slots() == 0
        assert c.scalar() == pytest.approx(f.norm_sq(), rel=1e-12)


def test_contraction_validates_depths():
    rng = np.random.default_rng(42)
    space = _space(3)
    f = chaos.random_kernel(space, 2, rng)
    from kolbounds.errors import InputError

    with pytest.raises(InputError):
        chaos.contract(f, f, 3, 0)
    with pytest.raises(InputError):
        chaos.contract(f, f, 1, 2)


def test_contraction_rate_scales_quadratically():
    # Every pairing is bilinear in each argument, so scaling the functional
    # by c scales the bracket's square root by c^2.
    rng = np.random.default_rng(43)
    space = _space(3)
    X = space.functional(rng.standard_normal(space.size)).centered()
    base = chaos.contraction_rate(chaos.decompose(X))
    doubled = chaos.contraction_rate(chaos.decompose(X * 2.0))
    assert base > 0.0
    assert doubled == pytest.approx(4.0 * base, rel=1e-10)
