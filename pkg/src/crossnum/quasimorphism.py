"""Counting quasimorphisms ``h_sigma = c_sigma - c_{sigma^-1}`` on the Cayley graph.

``c_sigma(a) = d(id, a) - min over paths alpha from id to a of
(length(alpha) - |alpha|_sigma)`` where ``|alpha|_sigma`` is the maximal number
of disjoint copies of sigma read along alpha. The minimum is found by an A*
search over (group element, match-automaton state) pairs.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .algebra import SQRT2, normalize_sign, octagon_order, power_coords
from .ball import BallTable, ResourceLimitError, word_length_coords
from .words import Word, alphabet, free_reduce, format_word, inverse, letter_key, parse_word, power

DEFAULT_MAX_STATES = 2_000_000
MEMO_LIMIT = 1_000_000
POTENTIAL_STATES = 1_500_000


class BallTooSmallError(ValueError):
    def __init__(self, message: str, needed_radius: int):
        self.needed_radius = needed_radius
        super().__init__(f"{message}; needs ball radius >= {needed_radius}")


class NotAxisLikeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PathPattern:
    word: Word
    axis_like: bool | None = None  # set by axis_pattern

    def __post_init__(self):
        w = tuple(self.word)
        if free_reduce(w) != w:
            raise ValueError("pattern word must be freely reduced")
        if len(w) < 2:
            raise ValueError("pattern length must be at least 2")
        object.__setattr__(self, "word", w)

    @property
    def length(self) -> int:
        return len(self.word)

    def inverse(self) -> "PathPattern":
        return PathPattern(inverse(self.word))

    def __str__(self) -> str:
        return format_word(self.word)


class MatchAutomaton:
    """KMP automaton for disjoint occurrences; completing a copy resets to the empty prefix."""

    def __init__(self, pattern: PathPattern, genus: int = 2):
        p = pattern.word
        self.pattern = pattern
        self.letters = alphabet(genus)
        n = len(p)
        fail = [0] * (n + 1)
        k = 0
        for i in range(1, n):
            while k and p[i] != p[k]:
                k = fail[k]
            if p[i] == p[k]:
                k += 1
            fail[i + 1] = k
        # delta[q][x] = (next state, completed)
        self.delta: list[dict[int, tuple[int, bool]]] = []
        for q in range(n):
            row = {}
            for x in self.letters:
                s = q
                while s and p[s] != x:
                    s = fail[s]
                if p[s] == x:
                    s += 1
                row[x] = (0, True) if s == n else (s, False)
            self.delta.append(row)

    @property
    def n_states(self) -> int:
        return len(self.delta)

    def step(self, q: int, x: int) -> tuple[int, bool]:
        return self.delta[q][x]


def count_disjoint_copies(w: Word, p: PathPattern) -> int:
    """Maximum number of pairwise disjoint occurrences (greedy leftmost is optimal)."""
    if p.length > len(w):
        return 0
    auto = MatchAutomaton(p, genus=max(2, (max(abs(x) for x in (*w, *p.word)) + 1) // 2))
    q = count = 0
    for x in w:
        q, done = auto.step(q, x)
        count += done
    return count


@dataclass
class CEvaluation:
    value: int
    cost: int
    distance: int
    realizing_word: Word
    expanded: int
    K: float
    eps: float


@dataclass
class QmEvaluation:
    target: Word
    pattern: Word
    c_sigma: int
    c_sigma_inv: int
    realizing_word: Word
    realizing_word_inv: Word
    stats: dict = field(default_factory=dict)

    @property
    def h_sigma(self) -> int:
        return self.c_sigma - self.c_sigma_inv

    def to_json(self) -> dict:
        return {
            "target": format_word(self.target),
            "pattern": format_word(self.pattern),
            "c_sigma": self.c_sigma,
            "c_sigma_inv": self.c_sigma_inv,
            "h_sigma": self.h_sigma,
            "realizing_word": format_word(self.realizing_word),
            "realizing_word_inv": format_word(self.realizing_word_inv),
            "stats": self.stats,
        }


def pruning_constants(L: int, policy: str = "worst_case") -> tuple[float, float]:
    """(K, eps) for realizing paths: L-dependent, or the uniform K <= 2, eps <= 4."""
    if L < 2:
        raise ValueError("pattern length must be at least 2")
    if policy == "worst_case":
        return 2.0, 4.0
    if policy == "lemma":
        return L / (L - 1), 2 * L / (L - 1)
    raise ValueError(f"unknown pruning policy {policy!r}")


class _Walker:
    """Elements as ball indices when inside the ball, exact coordinates outside.

    Inside the ball a step is a table lookup and the distance to the identity
    is exact; outside, the distance is bounded below by ``max(R + 1, hyperbolic
    displacement / generator step)``, which stays 1-Lipschitz across the boundary.
    """

    def __init__(self, ball: BallTable):
        order = octagon_order()
        self.ball = ball
        self.order = order
        self.adj = ball.adjacency.tolist()
        self.lengths = ball.lengths.tolist()
        self.cols = {x: ball.column(x) for x in ball.letters}
        # sparse columns of the right-multiplication matrices
        self.right = {
            x: [[(i, int(c)) for i, c in enumerate(col) if c] for col in order.right_matrix(x).T]
            for x in ball.letters
        }
        b = order.basis.reshape(4, -1)
        self.gram = (b @ b.T).tolist()
        m = [order.to_matrix(order.letter_coords[x]) for x in ball.letters]
        self.step_len = max(float(np.arccosh((mm * mm).sum() / 2)) for mm in m)
        self.outside = ball.radius + 1
        self.dist_memo: dict = {}
        # outside-ball steps and bounds recur across searches; memoized, bounded
        self._step_memo: dict = {}
        self._lb_memo: dict = {}
        self._potentials: dict = {}

    def of_coords(self, x):
        x = normalize_sign(x)
        idx = self.ball.index_of_coords(x)
        return idx if idx >= 0 else x

    def coords(self, e) -> tuple:
        if isinstance(e, int):
            return tuple(int(c) for c in self.ball.coords[e])
        return e

    def step(self, e, letter: int):
        inside = isinstance(e, int)
        if inside:
            j = self.adj[e][self.cols[letter]]
            if j >= 0:
                return j
        key = (e, letter)
        hit = self._step_memo.get(key)
        if hit is not None:
            return hit
        x = self.coords(e)
        r = self.right[letter]
        y = normalize_sign(tuple(sum([x[i] * c for i, c in col]) for col in r))
        # adjacency is complete inside the ball, so from inside y is outside;
        # from outside only the outer sphere can be re-entered, and geometry
        # usually rules that out without a lookup
        if not inside and self._hyp_lb(y) <= self.ball.radius:
            idx = self.ball.index_of_coords(y)
            if idx >= 0:
                y = idx
        if len(self._step_memo) > MEMO_LIMIT:
            self._step_memo.clear()
        self._step_memo[key] = y
        return y

    def potential(self, auto: MatchAutomaton) -> tuple[int, list[list[int]]]:
        """``(m, P)``: ``P[q][y]`` is L times an admissible cost-to-go from (y, q) to the identity.

        Covers ball indices ``y < m``. Value iteration from the counting bound
        ``(L-1) |y| - q``: a state's bound rises to its cheapest successor's
        bound plus the step cost. Successors past ``m`` keep the counting bound,
        so every iterate stays a lower bound on the true remaining cost.
        """
        key = auto.pattern.word
        if key in self._potentials:
            return self._potentials[key]
        L, Q = auto.pattern.length, auto.n_states
        r = self.ball.radius
        while r > 0 and self.ball.count_within(r) * Q > POTENTIAL_STATES:
            r -= 1
        m = self.ball.count_within(r)
        qs = np.arange(Q)[:, None]
        H = np.maximum((L - 1) * self.ball.lengths[:m].astype(np.int64)[None, :] - qs, 0)
        H[:, 0] = 0
        far = np.maximum((L - 1) * (r + 1) - np.arange(Q), 0)
        moves = []
        for x in self.ball.letters:
            j = self.ball.adjacency[:m, self.cols[x]].astype(np.int64)
            inner = (j >= 0) & (j < m)
            moves.append((x, np.where(inner, j, 0), inner))
        for _ in range(4 * r + 8):
            best = np.full_like(H, np.iinfo(np.int64).max)
            for q in range(Q):
                for x, j, inner in moves:
                    q2, done = auto.step(q, x)
                    succ = np.where(inner, H[q2, j], far[q2]) + (0 if done else L)
                    np.minimum(best[q], succ, out=best[q])
            new = np.maximum(H, best)
            new[:, 0] = 0
            if np.array_equal(new, H):
                break
            H = new
        out = (m, H.tolist())
        self._potentials[key] = out
        return out

    def _hyp_lb(self, e) -> int:
        hit = self._lb_memo.get(e)
        if hit is not None:
            return hit
        c = [e[2 * k] + e[2 * k + 1] * SQRT2 for k in range(4)]
        g = self.gram
        fro2 = sum(c[k] * g[k][l] * c[l] for k in range(4) for l in range(4))
        dh = math.acosh(max(fro2 / 2, 1.0))
        out = math.ceil(dh / self.step_len - 1e-9)
        if len(self._lb_memo) > MEMO_LIMIT:
            self._lb_memo.clear()
        self._lb_memo[e] = out
        return out

    def length_lb(self, e) -> int:
        if isinstance(e, int):
            return self.lengths[e]
        return max(self.outside, self._hyp_lb(e))


_WALKERS: dict[int, _Walker] = {}


def _walker(ball: BallTable) -> _Walker:
    w = _WALKERS.get(id(ball))
    if w is None or w.ball is not ball:
        w = _WALKERS[id(ball)] = _Walker(ball)
    return w


def _search(wk: _Walker, target, d_lb: int, auto: MatchAutomaton | None, limit: float, max_states: int):
    """A* from the identity to ``target`` minimising steps minus completed copies.

    Without an automaton this is a plain geodesic search. The heuristic is the
    larger of a lower bound on d(x, target) and ``d_lb - |x|`` (when x is in the
    ball), raised to the walker's potential table when y is covered by it; it
    is admissible but not always consistent, so settled states are
    reopened when a cheaper route turns up. Returns (cost, word, expanded).
    """
    order = octagon_order()
    L = auto.pattern.length if auto else 1
    weight = L - 1 if auto else 1
    step, lb = wk.step, wk.length_lb
    lengths = wk.lengths

    def h(x, ly):
        return max(ly, d_lb - lengths[x]) if isinstance(x, int) else ly

    m, pot = wk.potential(auto) if auto else (0, None)

    def f(x, y, ly, q):
        # L times a lower bound on the remaining cost
        base = weight * h(x, ly) - q
        if isinstance(y, int) and y < m:
            return max(base, pot[q][y])
        return base

    # x = current element, y = target^-1 x; both move by right multiplication
    y0 = wk.of_coords(order.inverse(target))
    start = (0, y0, 0)
    best_g = {start: 0}
    parent: dict = {}
    # priorities scaled by L to stay integral; ties favour the terminal, then
    # depth, then states whose bound comes from the potential table
    heap = [(f(0, y0, lb(y0), 0), 1, 0, 0, 0, 0, start)]
    tie = 1
    expanded = 0
    while heap:
        prio, _, _, _, _, g, node = heapq.heappop(heap)
        if node is None:
            break
        if best_g.get(node, math.inf) < g:
            continue
        expanded += 1
        if expanded > max_states:
            raise ResourceLimitError(f"path search exceeded {max_states} states")
        x, y, q = node
        hp = prio - L * g  # pathmax: a child's bound is at least this minus the step cost
        for letter in wk.ball.letters:
            y2 = step(y, letter)
            ly = lb(y2)
            x2 = step(x, letter)
            if lb(x2) + ly > limit:
                continue
            if auto:
                q2, completed = auto.step(q, letter)
            else:
                q2, completed = 0, False
            g2 = g if completed else g + 1
            if y2 == 0 and best_g.get(None, math.inf) > g2:
                best_g[None] = g2
                parent[None] = (node, letter)
                heapq.heappush(heap, (L * g2, 0, 0, 0, tie, g2, None))
                tie += 1
            key = (x2, y2, q2)
            if best_g.get(key, math.inf) <= g2:
                continue
            best_g[key] = g2
            parent[key] = (node, letter)
            covered = isinstance(y2, int) and y2 < m
            prio2 = L * g2 + max(f(x2, y2, ly, q2), hp - L * (g2 - g))
            heapq.heappush(heap, (prio2, 1, -g2, 0 if covered else 1, tie, g2, key))
            tie += 1
    if None not in best_g:
        raise RuntimeError("search exhausted without reaching the target")
    word = []
    node = None
    while node != start:
        node, letter = parent[node]
        word.append(letter)
    return best_g[None], tuple(reversed(word)), expanded


def group_distance(target, ball: BallTable, max_states: int = DEFAULT_MAX_STATES) -> tuple[int, Word]:
    """Exact ``d(id, target)`` and a geodesic word, for targets of any length.

    Meet in the middle settles lengths up to twice the radius; beyond that an
    A* search seeded with ``d >= 2R + 1`` takes over, which is cheap for
    lengths just past 2R and grows quickly after.
    """
    target = normalize_sign(target)
    idx = ball.index_of_coords(target)
    if idx >= 0:
        return int(ball.lengths[idx]), ball.word(idx)
    wk = _walker(ball)
    if target in wk.dist_memo:
        return wk.dist_memo[target]
    lb = wk._hyp_lb(target)
    d = word_length_coords(target, ball, max(lb, ball.radius + 1)) if lb <= 2 * ball.radius else None
    cost, word, _ = _search(wk, target, d if d is not None else 2 * ball.radius + 1, None, math.inf, max_states)
    wk.dist_memo[target] = (cost, word)
    return cost, word


def c_sigma(
    a: Word,
    p: PathPattern,
    ball: BallTable,
    *,
    policy: str = "worst_case",
    max_states: int = DEFAULT_MAX_STATES,
) -> CEvaluation:
    """Exact ``c_sigma(a)`` with a realizing word.

    A* over states (x, q): x the current element, q the match-automaton state.
    A step costs 1, or 0 when it completes a copy of sigma; from automaton
    state q at distance n from the target at most (n + q)/L more copies fit, so
    ``((L-1) n - q) / L`` bounds the remaining cost from below. States outside
    ``d(id,x) + d(x,a) <= K d(id,a) + eps`` are pruned.
    """
    order = octagon_order()
    K, eps = pruning_constants(p.length, policy)
    target = normalize_sign(order.evaluate(free_reduce(a)))
    d, _ = group_distance(target, ball, max_states)
    if d == 0:
        return CEvaluation(0, 0, 0, (), 0, K, eps)
    auto = MatchAutomaton(p, ball.genus)
    cost, word, expanded = _search(_walker(ball), target, d, auto, K * d + eps, max_states)
    return CEvaluation(d - cost, cost, d, word, expanded, K, eps)


class CountingQuasimorphism:
    """Memoized ``h_sigma`` for one pattern against one ball."""

    def __init__(self, pattern: PathPattern, ball: BallTable, *, policy: str = "worst_case",
                 max_states: int = DEFAULT_MAX_STATES):
        self.pattern = pattern
        self.ball = ball
        self.policy = policy
        self.max_states = max_states
        self._c: dict[tuple, CEvaluation] = {}

    def _key(self, a: Word, p: PathPattern):
        return (normalize_sign(octagon_order().evaluate(free_reduce(a))), p.word)

    def c(self, a: Word, p: PathPattern | None = None) -> CEvaluation:
        p = p or self.pattern
        key = self._key(a, p)
        if key not in self._c:
            self._c[key] = c_sigma(a, p, self.ball, policy=self.policy, max_states=self.max_states)
        return self._c[key]

    def evaluate(self, a: Word) -> QmEvaluation:
        a = free_reduce(a)
        pos = self.c(a, self.pattern)
        neg = self.c(a, self.pattern.inverse())
        stats = {
            "states_expanded": pos.expanded + neg.expanded,
            "K": pos.K,
            "eps": pos.eps,
            "policy": self.policy,
            "distance": pos.distance,
        }
        return QmEvaluation(a, self.pattern.word, pos.value, neg.value, pos.realizing_word,
                            neg.realizing_word, stats)

    def __call__(self, a: Word) -> int:
        return self.evaluate(a).h_sigma


def h_sigma(a: Word, p: PathPattern, ball: BallTable, **kw) -> QmEvaluation:
    return CountingQuasimorphism(p, ball, **kw).evaluate(a)


def axis_pattern(b: Word, N: int, ball: BallTable) -> PathPattern:
    """Shortlex-least geodesic word for ``b^N``, flagged with the one-doubling additivity test."""
    if not free_reduce(b):
        raise ValueError("b must be nontrivial")
    if N < 2:
        raise ValueError("N must be at least 2")
    order = octagon_order()
    bn = order.evaluate(power(free_reduce(b), N))
    word = shortlex_geodesic(bn, ball)
    if len(word) < 2:
        raise ValueError("pattern length must be at least 2")
    l2, _ = group_distance(power_coords(bn, 2), ball)
    axis_like = l2 == 2 * len(word)
    if not axis_like:
        warnings.warn(f"{format_word(word)} is not axis-like at one doubling", NotAxisLikeWarning)
    return PathPattern(word, axis_like=axis_like)


def shortlex_geodesic(target, ball: BallTable) -> Word:
    """Shortlex-least geodesic word, peeling letters off until the rest is in the ball."""
    order = octagon_order()
    target = normalize_sign(target)
    d, _ = group_distance(target, ball)
    prefix = []
    while ball.index_of_coords(target) < 0:
        for s in sorted(ball.letters, key=letter_key):
            rest = normalize_sign(order.multiply(order.letter_coords[-s], target))
            if group_distance(rest, ball)[0] == d - 1:
                prefix.append(s)
                target, d = rest, d - 1
                break
    return tuple(prefix) + ball.word(ball.index_of_coords(target))


@dataclass
class HomogenizationEstimate:
    schedule: list[int]
    values: dict  # n -> Fraction
    limit: Fraction
    error: Fraction
    truncated: bool
    cauchy_monotone: bool
    axis_check: dict | None = None  # m -> (h value, passed)

    @property
    def axis_check_passed(self) -> bool | None:
        if self.axis_check is None:
            return None
        return all(ok for _, ok in self.axis_check.values())

    def to_json(self) -> dict:
        out = {
            "schedule": self.schedule,
            "values": {str(n): str(v) for n, v in self.values.items()},
            "limit": str(self.limit),
            "limit_float": float(self.limit),
            "error": str(self.error),
            "truncated": self.truncated,
            "cauchy_monotone": self.cauchy_monotone,
        }
        if self.axis_check is not None:
            out["axis_check"] = {str(m): {"h": h, "passed": ok} for m, (h, ok) in self.axis_check.items()}
        return out


def homogenize(
    p: PathPattern,
    a: Word,
    ball: BallTable,
    schedule=(1, 2, 4, 8),
    *,
    axis_of: tuple[Word, int] | None = None,
    qm: CountingQuasimorphism | None = None,
    **kw,
) -> HomogenizationEstimate:
    """``h_sigma(a^n)/n`` along a dyadic schedule, stopping where the ball runs out.

    With ``axis_of=(b, N)`` the equality ``h_sigma(b^(N m)) = m`` is checked for
    every ``n = N m`` in the schedule.
    """
    qm = qm or CountingQuasimorphism(p, ball, **kw)
    a = free_reduce(a)
    values: dict[int, Fraction] = {}
    truncated = False
    used = []
    for n in schedule:
        try:
            values[n] = Fraction(qm(power(a, n)), n)
        except (BallTooSmallError, ResourceLimitError):
            truncated = True
            break
        used.append(n)
    if not used:
        raise BallTooSmallError("no schedule point is computable", ball.radius + 1)
    seq = [values[n] for n in used]
    limit = seq[-1]
    error = abs(seq[-1] - seq[-2]) if len(seq) >= 2 else Fraction(0) if not free_reduce(a) else abs(seq[-1])
    diffs = [abs(seq[i + 1] - seq[i]) for i in range(len(seq) - 1)]
    monotone = all(diffs[i + 1] <= diffs[i] for i in range(len(diffs) - 1))
    axis = None
    if axis_of is not None:
        b, N = axis_of
        axis = {}
        for n in used:
            if n % N == 0 and free_reduce(b) == a:
                m = n // N
                h = int(values[n] * n)
                axis[m] = (h, h == m)
    return HomogenizationEstimate(list(used), values, limit, error, truncated, monotone, axis)


def defect_estimate(p: PathPattern, samples, ball: BallTable, *, qm: CountingQuasimorphism | None = None,
                    **kw) -> int:
    """Max of ``|h(x) + h(y) - h(xy)|`` over sample pairs: a lower bound on the defect."""
    qm = qm or CountingQuasimorphism(p, ball, **kw)
    worst = 0
    for x, y in samples:
        worst = max(worst, abs(qm(x) + qm(y) - qm(free_reduce(tuple(x) + tuple(y)))))
    return worst


def read_pattern_family(path: str | Path, genus: int = 2) -> list[PathPattern]:
    """One pattern word per line; blank lines and ``#`` comments are skipped."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(PathPattern(parse_word(line, genus)))
    return out


def sub_alphabet_patterns(letters=(1, 2), lengths=(2, 3)) -> list[PathPattern]:
    """All positive words of the given lengths over a sub-alphabet, in shortlex order."""
    from itertools import product

    out = []
    for n in lengths:
        for w in product(sorted(letters, key=letter_key), repeat=n):
            out.append(PathPattern(tuple(w)))
    return out
