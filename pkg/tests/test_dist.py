"""Laws and their exact moment tables."""

import json

import numpy as np
import pytest

from kolbounds import mc
from kolbounds.dist import Distribution, three_point
from kolbounds.errors import InputError


def test_rademacher_moments():
    m = Distribution.rademacher().moments()
    assert m.mu[0] == 1.0
    assert m.mu[1] == 0.0
    assert m.mu[2] == 1.0
    assert m.mu[3] == 0.0
    assert m.mu[4] == 1.0
    assert m.abs3 == 1.0
    # X^2 is constant, so all centered square moments vanish.
    assert m.mu_tilde4 == 0.0
    assert m.mu_tilde6 == 0.0
    assert m.mu_tilde8 == 0.0


def test_three_point_moments():
    law = three_point()
    assert law.values == (-1.0, 0.0, 1.0)
    assert law.probs == (0.25, 0.5, 0.25)
    m = law.moments()
    assert m.mu[2] == 0.5
    assert m.mu[3] == 0.0
    assert m.mu[4] == 0.5
    # X^2 is Bernoulli(1/2): E[(X^2 - 1/2)^2] = 1/4.
    assert m.mu_tilde4 == 0.25
    assert m.abs3 == 0.5


def test_asymmetric_law_moments_by_hand():
    # Atoms (-1, 1/2), (0, 1/4), (2, 1/4): centered with mu2 = 3/2,
    # mu3 = 3/2, mu4 = 9/2, E|X|^3 = 5/2, and
    # mu_tilde4 = E[(X^2 - 3/2)^2] = mu4 - mu2^2 = 9/4.
    law = Distribution.finite([(-1.0, 0.5), (0.0, 0.25), (2.0, 0.25)])
    assert law.is_centered()
    m = law.moments()
    assert m.mu[2] == pytest.approx(1.5, abs=1e-15)
    assert m.mu[3] == pytest.approx(1.5, abs=1e-15)
    assert m.mu[4] == pytest.approx(4.5, abs=1e-15)
    assert m.abs3 == pytest.approx(2.5, abs=1e-15)
    assert m.mu_tilde4 == pytest.approx(2.25, abs=1e-14)


def test_moment_powers_match_direct_sums():
    rng = np.random.default_rng(3)
    for _ in range(20):
        k = int(rng.integers(2, 6))
        vals = np.sort(rng.standard_normal(k))
        probs = rng.random(k) + 0.1
        probs /= probs.sum()
        law = Distribution.finite(zip(vals, probs))
        m = law.moments()
        for j in range(9):
            direct = float(np.sum(law.values_array() ** j * law.probs_array()))
            assert m.mu[j] == pytest.approx(direct, rel=1e-13, abs=1e-13)


def test_finite_merges_duplicate_atoms():
    law = Distribution.finite([(1.0, 0.25), (1.0, 0.25), (-1.0, 0.5)])
    assert law.values == (-1.0, 1.0)
    assert law.probs == (0.5, 0.5)


def test_centered_subtracts_the_mean():
    law = Distribution.finite([(0.0, 0.5), (2.0, 0.5)])
    assert not law.is_centered()
    c = law.centered()
    assert c.is_centered()
    assert c.values == (-1.0, 1.0)


def test_json_roundtrip_and_fraction_strings(tmp_path):
    law = Distribution.from_json(
        {"type": "finite", "atoms": [[-2.0, "1/3"], [1.0, "2/3"]]}
    )
    assert law.probs[0] == pytest.approx(1.0 / 3.0, abs=1e-16)
    again = Distribution.from_json(law.to_json())
    assert again == law
    p = tmp_path / "law.json"
    p.write_text(json.dumps(law.to_json()))
    assert Distribution.load(str(p)) == law


def test_rejects_bad_input():
    with pytest.raises(InputError):
        Distribution((1.0,), (0.5,))  # mass does not sum to one
    with pytest.raises(InputError):
        Distribution((1.0, 2.0), (1.2, -0.2))
    with pytest.raises(InputError):
        Distribution.from_json({"atoms": [[0, 1]]})
    with pytest.raises(InputError):
        Distribution.from_json({"type": "gaussian"})
    with pytest.raises(InputError):
        Distribution.from_json({"type": "finite", "atoms": []})


def test_sampling_frequencies_track_probabilities():
    law = three_point()
    rng = mc.stream(2024, 7)
    draws = law.sample(rng, 40_000)
    for v, p in zip(law.values, law.probs):
        freq = float(np.mean(draws == v))
        # Binomial standard error is about 0.0025 here; allow four of them.
        assert abs(freq - p) < 0.01


def test_sample_scalar_and_array_shapes():
    law = Distribution.rademacher()
    rng = mc.stream(1, 1)
    one = law.sample(rng)
    assert one in (-1.0, 1.0)
    arr = law.sample(rng, 17)
    assert arr.shape == (17,)
    assert set(np.unique(arr)) <= {-1.0, 1.0}
