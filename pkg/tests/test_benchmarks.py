import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abcnas.benchmarks import (
    BENCHMARKS,
    ContinuousBox,
    evaluate_benchmark,
    get_benchmark,
    perturb,
    sample_coordinate,
)
from abcnas.colony import ColonyError, make_rng


def test_sample_coordinate():
    assert sample_coordinate(0.0, 1.0, 0.5) == 0.5
    assert sample_coordinate(-5.0, 5.0, 0.0) == -5.0


def test_random_position_mean():
    box = ContinuousBox.cube(2.0, 4.0, 3)
    rng = make_rng(3)
    samples = np.array([box.random_position(rng) for _ in range(100_000)])
    assert np.all((samples >= 2.0) & (samples < 4.0))
    np.testing.assert_allclose(samples.mean(axis=0), 3.0, atol=0.02)


def test_perturb_substitution():
    out = perturb(np.array([0.0, 2.0]), np.array([9.0, 1.0]), index=1, phi=0.5)
    np.testing.assert_array_equal(out, [0.0, 2.5])


def test_neighbor_identical_partner_is_fixed_point():
    box = ContinuousBox.cube(-5, 5, 4)
    rng = make_rng(0)
    x = box.random_position(rng)
    for _ in range(50):
        np.testing.assert_array_equal(box.neighbor(x, x.copy(), rng), x)


def test_neighbor_clamps():
    box = ContinuousBox.cube(-5, 5, 1)
    assert box.clamp(perturb(np.array([4.9]), np.array([-5.0]), 0, 1.0))[0] == 5.0


def test_neighbor_dimension_mismatch():
    box = ContinuousBox.cube(-1, 1, 3)
    with pytest.raises(ColonyError):
        box.neighbor(np.zeros(3), np.zeros(2), make_rng(0))


@settings(max_examples=200)
@given(st.integers(1, 8), st.integers(0, 2**32))
def test_neighbor_in_box_and_single_coordinate(n, seed):
    box = ContinuousBox(np.linspace(-3, 0, n), np.linspace(1, 4, n))
    rng = make_rng(seed)
    x, partner = box.random_position(rng), box.random_position(rng)
    v = box.neighbor(x, partner, rng)
    assert box.contains(v)
    assert np.count_nonzero(v != x) <= 1


def test_box_validation():
    with pytest.raises(ColonyError):
        ContinuousBox([0, 0], [1])
    with pytest.raises(ColonyError):
        ContinuousBox([0, 1], [1, 1])


def test_encode_round_trip_exact():
    box = ContinuousBox.cube(-1, 1, 5)
    x = box.random_position(make_rng(9))
    np.testing.assert_array_equal(box.decode(box.encode(x)), x)


@pytest.mark.parametrize(
    "name, n, point",
    [("sphere", 10, np.zeros(10)), ("rosenbrock", 5, np.ones(5)), ("rastrigin", 10, np.zeros(10))],
)
def test_known_optima(name, n, point):
    assert evaluate_benchmark(name, point) == 0.0
    fn = get_benchmark(name)
    assert abs(fn.evaluate(fn.optimum(n)) - fn.optimum_value) <= 1e-12


def test_hand_values():
    assert evaluate_benchmark("sphere", [1.0, 2.0]) == 5.0
    # 100 * (1 - 0)^2 + (1 - 0)^2
    assert evaluate_benchmark("rosenbrock", [0.0, 1.0]) == 101.0
    # 10 * 1 + 1 - 10 cos(2 pi) = 1
    assert evaluate_benchmark("rastrigin", [1.0]) == pytest.approx(1.0, abs=1e-12)


def test_purity():
    x = make_rng(1).normal(size=7)
    for fn in BENCHMARKS.values():
        assert fn.evaluate(x) == fn.evaluate(x.copy())


def test_unknown_benchmark():
    with pytest.raises(ColonyError):
        get_benchmark("ackley")
