"""Product outcome spaces and exact functional enumeration."""

import numpy as np
import pytest

from kolbounds.dist import Distribution, three_point
from kolbounds.errors import DomainError, InputError, SpaceTooLargeError
from kolbounds.space import OutcomeSpace


def test_joint_probs_sum_to_one_and_factorize():
    space = OutcomeSpace([three_point(), Distribution.rademacher()])
    jp = space.joint_probs
    assert jp.shape == (3, 2)
    assert float(jp.sum()) == pytest.approx(1.0, abs=1e-15)
    assert jp[0, 1] == pytest.approx(0.25 * 0.5, abs=1e-16)


def test_coordinate_functional_reproduces_law_moments():
    law = three_point()
    space = OutcomeSpace.iid(law, 3)
    m = law.moments()
    for k in range(3):
        X = space.coordinate(k)
        for j in range(1, 7):
            assert X.moment(j) == pytest.approx(m.mu[j], abs=1e-14)


def test_sum_of_coordinates_mean_and_variance():
    law = Distribution.finite([(-1.0, 0.5), (0.0, 0.25), (2.0, 0.25)])
    space = OutcomeSpace.iid(law, 4)
    S = space.coordinate(0) + space.coordinate(1) + space.coordinate(2) + space.coordinate(3)
    assert S.expectation() == pytest.approx(0.0, abs=1e-14)
    assert S.variance() == pytest.approx(4 * 1.5, rel=1e-13)


def test_conditional_expectation_against_brute_force():
    rng = np.random.default_rng(9)
    law = three_point()
    space = OutcomeSpace.iid(law, 3)
    X = space.functional(rng.standard_normal(space.shape))
    got = X.conditional([0, 2]).grid
    # Average over the middle axis by hand.
    p = law.probs_array()
    want = np.einsum("abc,b->ac", X.grid, p)[:, None, :]
    assert np.max(np.abs(got - np.broadcast_to(want, space.shape))) < 1e-14


def test_conditional_tower_property():
    rng = np.random.default_rng(10)
    space = OutcomeSpace.iid(three_point(), 4)
    X = space.functional(rng.standard_normal(space.size))
    inner = X.conditional([0, 1, 3])
    outer = inner.conditional([0, 3])
    direct = X.conditional([0, 3])
    assert np.max(np.abs(outer.values - direct.values)) < 1e-13


def test_gradient_grid_is_centered_per_coordinate():
    rng = np.random.default_rng(11)
    space = OutcomeSpace.iid(three_point(), 3)
    X = space.functional(rng.standard_normal(space.size))
    p = three_point().probs_array()
    for k in range(3):
        acc = np.zeros_like(X.grad_grid(k, 0))
        for t in range(3):
            acc = acc + p[t] * X.grad_grid(k, t)
        assert np.max(np.abs(acc)) < 1e-14


def test_replace_grid_forces_an_atom():
    space = OutcomeSpace.iid(Distribution.rademacher(), 2)
    X = space.coordinate(0) * space.coordinate(1)
    forced = X.replace_grid(0, 1)  # X_0 pinned to +1
    assert np.allclose(forced.reshape(-1), space.coordinate(1).grid[0])


def test_arithmetic_and_scalar_ops():
    space = OutcomeSpace.iid(Distribution.rademacher(), 2)
    X = space.coordinate(0)
    Y = space.coordinate(1)
    Z = 2.0 * X - Y + 1.0
    assert Z.expectation() == pytest.approx(1.0, abs=1e-15)
    assert (X**2).moment(1) == pytest.approx(1.0, abs=1e-15)
    assert (-X).expectation() == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        other = OutcomeSpace.iid(three_point(), 2)
        _ = X + other.coordinate(0)


def test_functional_shape_validation():
    space = OutcomeSpace.iid(three_point(), 2)
    with pytest.raises(InputError):
        space.functional(np.zeros(5))
    ok = space.functional(np.zeros((3, 3)))
    assert ok.values.shape == (9,)


def test_space_size_cap():
    with pytest.raises(SpaceTooLargeError):
        OutcomeSpace.iid(three_point(), 12)  # 3^12 exceeds the cap


def test_values_are_immutable():
    space = OutcomeSpace.iid(Distribution.rademacher(), 2)
    X = space.coordinate(0)
    with pytest.raises(ValueError):
        X.values[0] = 5.0
