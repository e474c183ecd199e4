"""Distances, the normal CDF, Philox streams, chunked drawing, dumps."""

import math

import numpy as np
import pytest

from kolbounds import mc, qform
from kolbounds.dist import Distribution, three_point
from kolbounds.errors import InputError
from kolbounds.space import OutcomeSpace


def _exact_reference(X):
    # Independent tiny implementation of the same supremum: walk the atoms
    # and compare both one-sided gaps at each jump.
    probs = X.space.joint_probs.reshape(-1)
    pairs = sorted(zip(X.values.tolist(), probs.tolist()))
    merged = {}
    for v, pr in pairs:
        merged[v] = merged.get(v, 0.0) + pr
    best = 0.0
    running = 0.0
    for v in sorted(merged):
        phi = mc.normal_cdf(v)
        best = max(best, abs(phi - running))
        running += merged[v]
        best = max(best, abs(running - phi))
    return best


def test_exact_kdist_single_symmetric_atom_pair():
    # F jumps from 0 to 1/2 at -1 and to 1 at +1; the sup is attained at the
    # jump and equals Phi(1) - 1/2.
    space = OutcomeSpace.iid(Distribution.rademacher(), 1)
    X = space.functional(np.array([-1.0, 1.0]))
    report = mc.exact_kdist(X)
    assert report.method == "exact"
    assert report.value == pytest.approx(0.3413447460685429, abs=1e-12)


def test_exact_kdist_constant_functional():
    space = OutcomeSpace.iid(Distribution.rademacher(), 1)
    X = space.functional(np.array([0.0, 0.0]))
    assert mc.exact_kdist(X).value == pytest.approx(0.5, abs=1e-15)


def test_exact_kdist_matches_reference_scan():
    rng = np.random.default_rng(91)
    for law in (three_point(), Distribution.finite([(-1.0, 0.5), (0.0, 0.25), (2.0, 0.25)])):
        space = OutcomeSpace.iid(law, 3)
        for _ in range(4):
            grid = rng.standard_normal(space.shape)
            X = space.functional(grid).centered()
            assert mc.exact_kdist(X).value == pytest.approx(_exact_reference(X), abs=1e-13)


def test_normal_cdf_against_quadrature():
    xs = np.linspace(-6.0, 6.0, 25)
    grid = np.linspace(-12.0, 0.0, 400_001)
    dens = np.exp(-grid * grid / 2.0) / math.sqrt(2.0 * math.pi)
    base = np.trapezoid(dens, grid)
    for x in xs:
        g = np.linspace(-12.0, float(x), 400_001)
        d = np.exp(-g * g / 2.0) / math.sqrt(2.0 * math.pi)
        want = np.trapezoid(d, g) + (0.0 if x <= 0 else 0.0)
        got = mc.normal_cdf(float(x))
        assert abs(got - want) < 1e-10
    assert abs(mc.normal_cdf(0.0) - 0.5) < 1e-15
    assert base == pytest.approx(0.5, abs=1e-10)
    arr = mc.normal_cdf(xs)
    assert arr.shape == xs.shape
    assert np.all(np.diff(arr) > 0)


def test_empirical_kdist_dkw_radius_and_guards():
    draws = mc.stream(92, 0).standard_normal(100_000)
    rep = mc.empirical_kdist(draws, delta=0.01, seed=(92, 0))
    assert rep.dkw_radius == pytest.approx(math.sqrt(math.log(200.0) / 200_000.0), rel=1e-13)
    assert rep.dkw_radius == pytest.approx(0.005147, abs=5e-7)
    # True normals: the statistic should sit well inside the DKW band.
    assert rep.value < rep.dkw_radius
    assert rep.to_json()["seed"] == [92, 0]
    with pytest.raises(InputError):
        mc.empirical_kdist(np.array([]))
    with pytest.raises(InputError):
        mc.empirical_kdist(draws[:10], delta=1.5)


def test_empirical_kdist_known_small_sample():
    # Two points at 0: F_n jumps to 1 there while Phi(0) = 1/2.
    rep = mc.empirical_kdist(np.array([0.0, 0.0]), delta=0.5)
    assert rep.value == pytest.approx(0.5, abs=1e-15)


def test_streams_are_reproducible_and_independent():
    a = mc.stream(93, 0).random(8)
    b = mc.stream(93, 0).random(8)
    c = mc.stream(93, 1).random(8)
    d = mc.stream(94, 0).random(8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_chunked_draws_do_not_depend_on_worker_count(monkeypatch):
    law = three_point()
    A = np.array([[0.0, 1.0, 0.5], [1.0, 0.0, 1.0], [0.5, 1.0, 0.0]])

    def draw(rng, size):
        return qform.q_samples(A, law, rng, size)

    monkeypatch.delenv(mc.WORKERS_ENV, raising=False)
    serial = mc.chunked_draws(draw, 120_001, seed=95, chunk=25_000)
    monkeypatch.setenv(mc.WORKERS_ENV, "4")
    threaded = mc.chunked_draws(draw, 120_001, seed=95, chunk=25_000)
    assert np.array_equal(serial, threaded)
    # Chunk i is pinned to stream(seed, first_stream + i) regardless of layout.
    head = draw(mc.stream(95, 0), 25_000)
    assert np.array_equal(serial[:25_000], head)


def test_chunked_draws_edges_and_guards(monkeypatch):
    def draw(rng, size):
        return rng.random(size)

    assert mc.chunked_draws(draw, 0, seed=1).size == 0
    with pytest.raises(InputError):
        mc.chunked_draws(draw, -1, seed=1)
    with pytest.raises(InputError):
        mc.chunked_draws(draw, 10, seed=1, chunk=0)
    monkeypatch.setenv(mc.WORKERS_ENV, "zero")
    with pytest.raises(InputError):
        mc.worker_count()
    monkeypatch.setenv(mc.WORKERS_ENV, "-2")
    with pytest.raises(InputError):
        mc.worker_count()
    monkeypatch.setenv(mc.WORKERS_ENV, "")
    assert mc.worker_count() == 1


def test_binary_dump_roundtrip(tmp_path):
    path = str(tmp_path / "s.bin")
    data = mc.stream(96, 0).standard_normal(1000)
    mc.write_samples(path, data)
    back = mc.read_samples(path)
    assert np.array_equal(back, data)
    # Truncate the payload; the header count no longer matches.
    raw = open(path, "rb").read()
    open(path, "wb").write(raw[:-8])
    with pytest.raises(InputError):
        mc.read_samples(path)
    open(path, "wb").write(raw[:4])
    with pytest.raises(InputError):
        mc.read_samples(path)


def test_csv_dump_roundtrip(tmp_path):
    path = str(tmp_path / "s.csv")
    data = np.array([0.1, -2.5, 3.25e-17])
    mc.write_samples_csv(path, data)
    back = mc.read_samples_csv(path)
    assert np.array_equal(back, data)
    open(path, "w").write("wrong\n1.0\n")
    with pytest.raises(InputError):
        mc.read_samples_csv(path)
