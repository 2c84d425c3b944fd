import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossnum.crossing import crossing_number
from crossnum.hyperbolic import (
    INF,
    DegenerateConfigurationError,
    GeodesicLine,
    GeodesicSegment,
    GeometryError,
    Isometry,
    NotHyperbolicError,
    PreconditionError,
    axis_and_length,
    estimate_context,
    evaluate,
    hyperbolic_distance,
    linked,
    perturb_segment,
    segment_between,
    stable_intersection_check,
    systole_lowerbound,
    trap_half_length,
    trap_segment,
)
from crossnum.words import alphabet, dehn_reduce, inverse, multiply, parse_word, random_word

GEN_LENGTH = 2 * math.acosh(1 + math.sqrt(2) / 2)
words = st.lists(st.sampled_from(alphabet(2)), max_size=10).map(tuple)


def random_isometry(rng):
    a, b, c = (rng.uniform(-2, 2) for _ in range(3))
    while abs(a) < 0.1:
        a = rng.uniform(-2, 2)
    return Isometry(np.array([[a, b], [c, (1 + b * c) / a]]))


def test_generator_lengths(rep):
    for x in alphabet(2):
        _, ell = axis_and_length(evaluate(rep, (x,)))
        assert ell == pytest.approx(GEN_LENGTH, abs=1e-9)
    assert rep.systole_estimate == pytest.approx(GEN_LENGTH, abs=1e-9)


def test_relator_trace(rep):
    m = evaluate(rep, (1, 2, -1, -2, 3, 4, -3, -4)).matrix
    assert abs(abs(np.trace(m)) - 2) < 1e-9


def test_axis_standard_form():
    axis, ell = axis_and_length(Isometry(np.diag([math.e, 1 / math.e])))
    assert {axis.endpoint_neg, axis.endpoint_pos} == {0.0, INF}
    assert ell == pytest.approx(2.0)
    with pytest.raises(NotHyperbolicError):
        axis_and_length(Isometry(np.array([[1.0, 1.0], [0.0, 1.0]])))


@settings(max_examples=50)
@given(st.integers(0, 10_000))
def test_axis_equivariance(seed):
    rng = random.Random(seed)
    g = random_isometry(rng)
    h = random_isometry(rng)
    if abs(g.trace) <= 2.05:
        return
    ax, ell = axis_and_length(g)
    ax2, ell2 = axis_and_length(h @ g @ h.inverse())
    assert ell2 == pytest.approx(ell, abs=1e-9)
    img = h.line_image(ax)
    for p, q in [(img.endpoint_neg, ax2.endpoint_neg), (img.endpoint_pos, ax2.endpoint_pos)]:
        assert p == pytest.approx(q, rel=1e-6, abs=1e-9)
    inv_ax, inv_ell = axis_and_length(g.inverse())
    assert inv_ell == pytest.approx(ell)
    assert (inv_ax.endpoint_neg, inv_ax.endpoint_pos) == pytest.approx((ax.endpoint_pos, ax.endpoint_neg))


@pytest.mark.parametrize("w", ["a1 b1", "a1 b1 A1 b1", "a2 b1 a1"])
def test_translation_length_of_powers(rep, w):
    u = parse_word(w)
    _, ell = axis_and_length(evaluate(rep, u))
    for n in range(1, 6):
        _, ln = axis_and_length(evaluate(rep, u * n))
        assert ln == pytest.approx(n * ell, abs=n * 1e-9)


@settings(max_examples=100)
@given(words, words)
def test_evaluate_homomorphism_and_dehn(u, v):
    from crossnum.crossing import octagon_rep_cached

    rep = octagon_rep_cached()
    assert evaluate(rep, multiply(u, v)).close_to(evaluate(rep, u) @ evaluate(rep, v), 1e-9)
    assert evaluate(rep, dehn_reduce(u)).close_to(evaluate(rep, u), 1e-9)
    assert evaluate(rep, multiply(u, inverse(u))).close_to(Isometry.identity())


def test_linked_boundary_cases():
    assert linked(GeodesicLine(-1, 1), GeodesicLine(0, INF))
    assert not linked(GeodesicLine(-1, 1), GeodesicLine(2, 3))
    assert linked(GeodesicLine(0, 2), GeodesicLine(1, 3))
    with pytest.raises(DegenerateConfigurationError):
        linked(GeodesicLine(0, 1), GeodesicLine(1, 2))


def test_linked_invariance_trials():
    rng = random.Random(0)
    for _ in range(1000):
        pts = rng.sample(range(-50, 50), 4)
        l1, l2 = GeodesicLine(*map(float, pts[:2])), GeodesicLine(*map(float, pts[2:]))
        g = random_isometry(rng)
        try:
            moved = linked(g.line_image(l1), g.line_image(l2))
        except DegenerateConfigurationError:
            continue
        assert linked(l1, l2) == linked(l2, l1) == moved


def test_trap_half_length_formula_matches_distance():
    # perpendicular case from the closed form
    eps = math.asinh(1) / 2
    assert trap_half_length(math.pi / 2, eps) == pytest.approx(math.asinh(1))
    rng = random.Random(1)
    for _ in range(50):
        alpha = GeodesicLine(0.0, INF)
        beta = GeodesicLine(-rng.uniform(0.1, 5), rng.uniform(0.1, 5))
        eps = rng.uniform(0.01, 0.3)
        trap = trap_segment(alpha, beta, eps)
        for t in (trap.alpha_eps.t0, trap.alpha_eps.t1):
            assert beta.distance_to(alpha.point_at(t)) == pytest.approx(2 * eps, abs=1e-9)


def test_trap_shrinks_with_eps():
    alpha, beta = GeodesicLine(0.0, INF), GeodesicLine(-1.0, 3.0)
    lengths = [trap_segment(alpha, beta, e).alpha_eps.length for e in (0.4, 0.2, 0.1, 0.01, 1e-4)]
    assert lengths == sorted(lengths, reverse=True) and lengths[-1] < 1e-3
    with pytest.raises(PreconditionError):
        trap_segment(alpha, beta, 0.0)
    with pytest.raises(GeometryError):
        trap_segment(alpha, GeodesicLine(1.0, 2.0), 0.1)


def test_segment_between_roundtrip():
    p, q = 0.3 + 0.7j, -1.1 + 2.0j
    s = segment_between(p, q)
    a, b = s.endpoints()
    assert abs(a - p) < 1e-12 and abs(b - q) < 1e-12
    assert s.length == pytest.approx(hyperbolic_distance(p, q))


def test_perturb_segment_stays_close():
    alpha = GeodesicLine(-2.0, 3.0)
    sigma = GeodesicSegment(alpha, -4.0, 5.0)
    for seed in range(20):
        s = perturb_segment(sigma, 0.1, seed)
        for z in s.endpoints():
            assert alpha.distance_to(z) < 0.1


def test_stable_intersection_exact_and_errors(rep, ball5):
    w = parse_word("a1 b1 A1 b1")
    axis, ell = axis_and_length(evaluate(rep, w))
    eps = rep.systole_estimate / 16
    sigma = GeodesicSegment(axis, 0.0, 2 * ell + 4 * eps + 1e-3)
    assert stable_intersection_check(rep, w, sigma, eps, ball5)
    with pytest.raises(PreconditionError, match="too short"):
        stable_intersection_check(rep, w, GeodesicSegment(axis, 0.0, ell), eps, ball5)
    with pytest.raises(PreconditionError, match="too large"):
        stable_intersection_check(rep, w, sigma, rep.systole_estimate / 8, ball5)


def test_lemma_numerics_on_lift_pairs(rep):
    eps = rep.systole_estimate / 16
    for text in ["a1 b1 A1 b1", "a1 a2 B1"]:
        report = crossing_number(parse_word(text), rep)
        _, ell = axis_and_length(evaluate(rep, report.representative))
        for wt in report.witnesses:
            trap = trap_segment(*wt.axes, eps)
            assert trap.alpha_eps.length < ell + 4 * eps
            assert abs(trap.alpha_eps.length - trap.beta_eps.length) < 4 * eps


def test_context_and_systole(rep, ball5):
    ctx = estimate_context(rep, ball5, samples=300)
    assert ctx.qi_K >= 1 and ctx.delta_estimate >= 0
    assert systole_lowerbound(rep, ball5) <= rep.systole_estimate + 1e-12
    with pytest.raises(PreconditionError):
        estimate_context(rep, type("B", (), {"radius": 3})())


def test_nontrivial_elements_are_hyperbolic(rep):
    # closed surface groups have no elliptic or parabolic elements
    for s in range(50):
        w = dehn_reduce(random_word(8, s))
        if w:
            assert abs(evaluate(rep, w).trace) > 2 + 1e-6
