import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossnum.algebra import (
    exact_roots,
    inverse_array,
    multiply_array,
    normalize_sign,
    octagon_matrices,
    octagon_order,
    power_coords,
)
from crossnum.ball import (
    OutOfBallError,
    ResourceLimitError,
    are_conjugate,
    enumerate_ball,
    load_or_build_ball,
    word_length,
    word_length_coords,
)
from crossnum.cache import DiskCache
from crossnum.words import alphabet, dehn_reduce, inverse, multiply, parse_word, power, random_word

words = st.lists(st.sampled_from(alphabet(2)), max_size=10).map(tuple)
# spheres of the genus-2 Cayley graph, radii 0..7 (frozen from a BFS run)
SPHERES = [1, 8, 56, 392, 2736, 19096, 133288, 930328]


def test_generators_are_exact_and_satisfy_relator():
    order = octagon_order()
    m = octagon_matrices()
    for g, c in order.letter_coords.items():
        assert np.allclose(order.to_matrix(c), m[g], atol=1e-12)
    rel = order.evaluate((1, 2, -1, -2, 3, 4, -3, -4))
    assert normalize_sign(rel) == order.identity


@settings(max_examples=100)
@given(words, words)
def test_exact_multiplication_is_a_homomorphism(u, v):
    order = octagon_order()
    lhs = order.evaluate(multiply(u, v))
    rhs = order.multiply(order.evaluate(u), order.evaluate(v))
    assert normalize_sign(lhs) == normalize_sign(rhs)
    assert normalize_sign(order.multiply(order.evaluate(u), order.inverse(order.evaluate(u)))) == order.identity


def test_vectorized_arithmetic_matches_scalar():
    order = octagon_order()
    xs = [order.evaluate(random_word(6, s)) for s in range(20)]
    ys = [order.evaluate(random_word(5, s + 100)) for s in range(20)]
    prod = multiply_array(np.array(xs), np.array(ys))
    inv = inverse_array(np.array(xs))
    for i in range(20):
        assert normalize_sign(tuple(prod[i])) == normalize_sign(order.multiply(xs[i], ys[i]))
        assert normalize_sign(tuple(inv[i])) == normalize_sign(order.inverse(xs[i]))


def test_exact_roots():
    order = octagon_order()
    x = order.evaluate(parse_word("a1 b1"))
    cube = power_coords(x, 3)
    roots = exact_roots(cube, 3)
    assert normalize_sign(x) in [normalize_sign(r) for r in roots]
    assert exact_roots(order.evaluate(parse_word("a1 b1 A1 b1")), 2) == []


def test_ball_counts(ball7):
    assert np.diff(ball7.level_offsets).tolist() == SPHERES
    assert len(ball7) == sum(SPHERES)
    # free group sphere 4 would have 8 * 7**3 = 2744 elements
    assert SPHERES[4] < 2744


def test_traversal_orders_agree():
    fwd = enumerate_ball(4, traversal="forward")
    rev = enumerate_ball(4, traversal="reverse")
    assert np.array_equal(fwd.coords, rev.coords)
    assert np.array_equal(fwd.words, rev.words)


def test_ball_words_are_shortlex_geodesics(ball5):
    order = octagon_order()
    for i in range(0, len(ball5), 97):
        w = ball5.word(i)
        assert normalize_sign(order.evaluate(w)) == tuple(ball5.coords[i])
        assert dehn_reduce(w) == w or len(dehn_reduce(w)) == len(w)


def test_adjacency_is_right_multiplication(ball5):
    for i in range(0, ball5.count_within(4), 53):
        for j, x in enumerate(ball5.letters):
            k = ball5.adjacency[i, j]
            assert k >= 0
            assert ball5.locate(ball5.word(i) + (x,)) == k


def test_word_length_examples(ball5):
    assert word_length(parse_word("a1 b1 A1 B1"), ball5) == 4
    assert word_length(parse_word("a1 b1 A1 B1 a2 b2 A2"), ball5) == 1
    assert word_length((), ball5) == 0
    with pytest.raises(OutOfBallError):
        word_length(random_word(20, 3), ball5)


def test_word_length_beyond_ball(ball5):
    order = octagon_order()
    for w in [power((1,), 8), random_word(9, 1), random_word(10, 2)]:
        x = normalize_sign(order.evaluate(w))
        d = word_length_coords(x, ball5)
        assert d is not None and d <= len(w)
        assert word_length_coords(x, enumerate_ball(6)) == d


def test_are_conjugate(ball5):
    u = parse_word("a1 b1")
    g = parse_word("b2 a1")
    v = multiply(g, u, inverse(g))
    h = are_conjugate(u, v, ball5)
    assert h is not None
    assert word_length(multiply(h, u, inverse(h), inverse(v)), ball5) == 0
    assert are_conjugate((1,), (3,), ball5) is None


def test_resource_caps():
    with pytest.raises(ResourceLimitError):
        enumerate_ball(4, max_elements=100)
    with pytest.raises(ResourceLimitError):
        enumerate_ball(9)


def test_ball_cache_roundtrip_and_corruption(tmp_path, caplog):
    cache = DiskCache(tmp_path)
    b1, hit1 = load_or_build_ball(3, cache)
    b2, hit2 = load_or_build_ball(3, cache)
    assert (hit1, hit2) == (False, True)
    assert np.array_equal(b1.coords, b2.coords)
    p = cache.path("ball", ".npz", genus=2, radius=3)
    p.write_bytes(p.read_bytes()[:100])
    b3, hit3 = load_or_build_ball(3, cache)
    assert not hit3 and np.array_equal(b3.coords, b1.coords)
    assert "corrupt cache entry" in caplog.text
    assert p.exists()


@settings(max_examples=60)
@given(st.lists(st.sampled_from(alphabet(2)), min_size=1, max_size=6).map(tuple), st.integers(2, 4))
def test_exact_roots_recover_powers(w, k):
    order = octagon_order()
    x = order.evaluate(w)
    if normalize_sign(x) == order.identity:
        return
    roots = [normalize_sign(r) for r in exact_roots(power_coords(x, k), k)]
    assert normalize_sign(x) in roots
