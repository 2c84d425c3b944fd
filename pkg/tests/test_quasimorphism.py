import itertools
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crossnum.algebra import normalize_sign, octagon_order
from crossnum.quasimorphism import (
    CountingQuasimorphism,
    MatchAutomaton,
    NotAxisLikeWarning,
    PathPattern,
    axis_pattern,
    c_sigma,
    count_disjoint_copies,
    defect_estimate,
    group_distance,
    h_sigma,
    homogenize,
    pruning_constants,
    read_pattern_family,
    shortlex_geodesic,
    sub_alphabet_patterns,
)
from crossnum.words import alphabet, free_reduce, inverse, parse_word, power, random_word

from oracles import c_sigma_dfs, c_sigma_table

A1A1 = PathPattern((1, 1))
ABA = PathPattern((1, 2, 1))


def brute_copies(w, p):
    """Largest set of pairwise disjoint occurrences, by exhaustive search."""
    L = p.length
    starts = [i for i in range(len(w) - L + 1) if tuple(w[i:i + L]) == p.word]
    best = 0
    for r in range(len(starts) + 1):
        for pick in itertools.combinations(starts, r):
            if all(b - a >= L for a, b in zip(pick, pick[1:])):
                best = max(best, r)
    return best


def test_pattern_validation():
    with pytest.raises(ValueError):
        PathPattern((1,))
    with pytest.raises(ValueError):
        PathPattern((1, -1, 2))
    assert str(PathPattern((1, -2))) == "a1 B1"
    assert PathPattern((1, 2, 3)).inverse().word == (-3, -2, -1)


def test_count_examples():
    assert count_disjoint_copies((1, 1, 1), A1A1) == 1
    assert count_disjoint_copies((1, 1, 1, 1), A1A1) == 2
    assert count_disjoint_copies((1, 2, 1, 2, 1), ABA) == 1
    assert count_disjoint_copies((1, 2, 1, 1, 2, 1), ABA) == 2
    assert count_disjoint_copies((2,), A1A1) == 0


@settings(max_examples=300)
@given(st.lists(st.sampled_from((1, 2, -1)), max_size=12).map(tuple),
       st.sampled_from([(1, 1), (1, 2, 1), (1, 2), (1, 1, 2), (2, 1, 2)]))
def test_greedy_count_is_optimal(w, p):
    pat = PathPattern(p)
    assert count_disjoint_copies(w, pat) == brute_copies(w, pat)


def test_automaton_resets_after_copy():
    auto = MatchAutomaton(A1A1)
    assert auto.step(0, 1) == (1, False)
    assert auto.step(1, 1) == (0, True)
    assert auto.n_states == 2


def test_pruning_constants():
    assert pruning_constants(3) == (2, 4)
    assert pruning_constants(3, "lemma") == (1.5, 3.0)
    with pytest.raises(ValueError):
        pruning_constants(3, "bogus")


def test_derived_oracle_values(ball5):
    ev = h_sigma(power((1,), 4), A1A1, ball5)
    assert (ev.c_sigma, ev.c_sigma_inv, ev.h_sigma) == (2, 0, 2)
    assert ev.realizing_word == (1, 1, 1, 1)
    assert c_sigma((1, 2, -1), ABA, ball5).value == 0
    assert c_sigma((), ABA, ball5).value == 0


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_axis_equality_for_a1(m, ball5):
    assert CountingQuasimorphism(A1A1, ball5)(power((1,), 2 * m)) == m


@pytest.mark.parametrize("p", [A1A1, ABA, PathPattern((1, 2)), PathPattern((2, 1, 1))])
def test_c_sigma_matches_exhaustive_table(p, ball5):
    table = c_sigma_table(p, ball5, 3)
    for i in range(len(table)):
        assert c_sigma(ball5.word(i), p, ball5).value == table[i]


def test_table_oracle_matches_literal_enumeration(ball5):
    for p in (A1A1, ABA):
        table = c_sigma_table(p, ball5, 1)
        for i in range(ball5.count_within(1)):
            assert c_sigma_dfs(ball5.word(i), p, ball5) == table[i]


def test_realizing_word_evaluates_to_target(ball5):
    order = octagon_order()
    for s in range(10):
        a = random_word(4, s)
        ev = c_sigma(a, ABA, ball5)
        assert normalize_sign(order.evaluate(ev.realizing_word)) == normalize_sign(order.evaluate(a))
        assert len(ev.realizing_word) - count_disjoint_copies(ev.realizing_word, ABA) == ev.cost


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(alphabet(2)), max_size=5).map(tuple))
def test_antisymmetry(a):
    from crossnum.ball import cached_ball

    qm = CountingQuasimorphism(ABA, cached_ball(5))
    assert qm(inverse(a)) == -qm(a)


@pytest.mark.parametrize("p", [A1A1, ABA, PathPattern((1, 1, 2))])
def test_potential_is_admissible(p, ball5):
    from crossnum.quasimorphism import _walker

    m, pot = _walker(ball5).potential(MatchAutomaton(p))
    table = c_sigma_table(p, ball5, 4)
    for i in range(len(table)):
        # a path from y to the identity spells a path from the identity to y^-1
        j = ball5.locate(inverse(ball5.word(i)))
        assert pot[0][j] <= p.length * (int(ball5.lengths[i]) - table[i])
    assert pot[0][0] == 0 and m == len(ball5)


def test_group_distance_beyond_twice_radius():
    from crossnum.ball import cached_ball

    ball = cached_ball(3)
    order = octagon_order()
    x = order.evaluate(power((1,), 8))
    d, word = group_distance(x, ball)
    assert d == 8 and normalize_sign(order.evaluate(word)) == normalize_sign(x)
    assert shortlex_geodesic(x, ball) == power((1,), 8)


def test_axis_pattern(ball5):
    p = axis_pattern((1,), 2, ball5)
    assert p.word == (1, 1) and p.axis_like
    q = axis_pattern(parse_word("a1 b1 A1 b1"), 2, ball5)
    assert q.length == 8 and q.axis_like
    with warnings.catch_warnings():
        warnings.simplefilter("error", NotAxisLikeWarning)
        axis_pattern((1, 2), 2, ball5)
    with pytest.raises(ValueError):
        axis_pattern((), 2, ball5)


def test_homogenize_a1(ball5):
    est = homogenize(A1A1, (1,), ball5, axis_of=((1,), 2))
    assert est.limit == Fraction(1, 2) and est.error == 0
    assert est.values == {1: 0, 2: Fraction(1, 2), 4: Fraction(1, 2), 8: Fraction(1, 2)}
    assert est.axis_check_passed and not est.truncated
    assert est.to_json()["limit"] == "1/2"


def test_homogenize_truncates_on_budget():
    from crossnum.ball import cached_ball

    est = homogenize(A1A1, parse_word("a1 b2"), cached_ball(3), schedule=(1, 2, 4, 8), max_states=2000)
    assert est.truncated and est.schedule == [1, 2, 4]


def test_defect_estimate(ball5):
    samples = [((1,), (1,)), ((1, 1), (1,)), ((1, 2), (-2, 1))]
    assert defect_estimate(A1A1, samples, ball5) == 1


def test_pattern_family_io(tmp_path):
    f = tmp_path / "patterns.txt"
    f.write_text("# family\na1 a1\n\na1 b1 a1  # comment\n")
    assert [p.word for p in read_pattern_family(f)] == [(1, 1), (1, 2, 1)]
    pats = sub_alphabet_patterns()
    assert len(pats) == 12 and pats[0].word == (1, 1) and pats[-1].word == (2, 2, 2)


def test_table_oracle_shape(ball5):
    t = c_sigma_table(A1A1, ball5, 2)
    assert t.shape == (ball5.count_within(2),) and t.dtype == np.int64
    assert t[ball5.locate((1, 1))] == 1
