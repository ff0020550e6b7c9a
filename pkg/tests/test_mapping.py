import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wimax_ici.mapping import constellation, demap_hard, map_bits, nearest_index

ORDERS = (4, 16, 64)


@pytest.mark.parametrize("order", ORDERS)
def test_unit_energy(order):
    c = constellation(order)
    assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1, abs=1e-12)
    assert len(np.unique(np.round(c.points, 12))) == order


def test_named_lookup():
    assert constellation("qam16") is constellation(16)
    with pytest.raises(ValueError):
        constellation("qam8")
    with pytest.raises(ValueError):
        constellation(8)


def test_qpsk_points():
    s = 1 / np.sqrt(2)
    got = map_bits([0, 0, 0, 1, 1, 0, 1, 1], constellation(4))
    np.testing.assert_allclose(got, s * np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]))


def test_qam16_axis_levels():
    # axis labels 00, 01, 11, 10 -> 3, 1, -1, -3 (over sqrt(10))
    c = constellation(16)
    bits = [0, 0, 0, 0, 0, 1, 0, 1, 1, 1, 1, 1, 1, 0, 1, 0]
    np.testing.assert_allclose(map_bits(bits, c) * np.sqrt(10), [3 + 3j, 1 + 1j, -1 - 1j, -3 - 3j])


@pytest.mark.parametrize("order", ORDERS)
def test_gray_neighbours_differ_by_one_bit(order):
    c = constellation(order)
    labels = c.labels()
    d = np.abs(c.points[:, None] - c.points[None, :])
    dmin = c.min_distance
    for i, j in zip(*np.nonzero(np.isclose(d, dmin))):
        assert np.sum(labels[i] != labels[j]) == 1


@pytest.mark.parametrize("order", ORDERS)
@given(data=st.data())
def test_map_demap_round_trip(order, data):
    k = int(np.log2(order))
    n = data.draw(st.integers(1, 40))
    bits = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n * k, max_size=n * k)), np.uint8)
    c = constellation(order)
    np.testing.assert_array_equal(demap_hard(map_bits(bits, c), c), bits)


@pytest.mark.parametrize("order", ORDERS)
def test_small_perturbation_is_harmless(order, rng):
    c = constellation(order)
    idx = rng.integers(0, order, 500)
    noise = 0.45 * c.min_distance * np.exp(2j * np.pi * rng.random(500))
    np.testing.assert_array_equal(nearest_index(c.points[idx] + noise, c), idx)


def test_map_rejects_ragged_length():
    with pytest.raises(ValueError):
        map_bits([0, 1, 1], constellation(4))


def test_batched_shapes(rng):
    c = constellation(64)
    bits = rng.integers(0, 2, (3, 5, 60), dtype=np.uint8)
    syms = map_bits(bits, c)
    assert syms.shape == (3, 5, 10)
    np.testing.assert_array_equal(demap_hard(syms, c), bits)
