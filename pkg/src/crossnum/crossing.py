"""Crossing numbers: count linked pairs of lifts of a closed geodesic.

For a primitive element ``u`` every pair of crossing lifts is, up to the
deck group, ``{A, h A}`` with ``A = axis(u)``; ``h`` only matters through the
line ``h A`` modulo translation by ``u`` along ``A``.  We conjugate ``A`` to
the imaginary axis, where that class is read off from the crossing height
(mod the translation length) and the crossing angle.  The swap
``{A, hA} -> {h^-1 A, A}`` pairs each class with the class of ``h^-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    SQRT2,
    _tensor,
    embed,
    exact_roots,
    inverse_array,
    multiply_array,
    normalize_sign,
    octagon_order,
    power_coords,
    trace_array,
)
from .ball import BallTable, cached_ball
from .cache import DiskCache
from .hyperbolic import (
    DegenerateConfigurationError,
    FuchsianRep,
    GeodesicLine,
    Isometry,
    hyperbolic_distance,
    axis_and_length,
    crossing_data,
    displacements,
    mobius,
    evaluate,
    octagon_rep,
)
from .words import (
    CyclicWord,
    Word,
    alphabet,
    cyclic_reduce,
    dehn_reduce,
    format_word,
    free_reduce,
    inverse,
    multiply,
    power,
    shortlex_key,
)

COS_TOL = 1e-9
NOISE = 64 * np.finfo(float).eps  # relative error budget for frame entries
TUBE_MARGIN = 1e-6


class SearchBoundError(RuntimeError):
    pass


class NotStabilizedError(RuntimeError):
    pass


# ---------------------------------------------------------------- roots


def group_word(v, genus: int = 2, max_steps: int = 10_000) -> Word | None:
    """A word for the order element ``v`` if it lies in the surface group, else None.

    Dirichlet descent: the regular octagon centred at i is a fundamental domain
    whose sides the generators pair, so while ``g.i`` lies outside it some
    generator strictly shortens ``d(i, g.i)``. The descent stops at the
    identity exactly when ``v`` is a group element.
    """
    order = octagon_order()
    letters = alphabet(genus)
    mats = {x: order.letter_coords[x] for x in letters}

    def size(c):
        m = order.to_matrix(c)
        return float((m * m).sum())

    g, path = normalize_sign(v), []
    cur = size(g)
    for _ in range(max_steps):
        nxt = min(((size(order.multiply(mats[x], g)), x) for x in letters), key=lambda t: t[0])
        if nxt[0] >= cur * (1 - 1e-12):
            break
        g = normalize_sign(order.multiply(mats[nxt[1]], g))
        cur = nxt[0]
        path.append(nxt[1])
    else:
        raise SearchBoundError("Dirichlet descent did not terminate")
    if g != order.identity:
        return None
    return inverse(tuple(reversed(path)))


def _root_word(core: Word, v, k: int, ball: BallTable | None) -> Word | None:
    order = octagon_order()
    n = len(core)
    # syntactic and near-syntactic roots of rotations of the core
    for i in range(n):
        rot = core[i:] + core[:i]
        for m in sorted(range(max(1, n // k - 2), n // k + 3), key=lambda m: abs(m - n // k)):
            cand = rot[:m]
            conj = multiply(core[:i], cand, inverse(core[:i]))
            if normalize_sign(order.evaluate(conj)) == v:
                return conj
    if ball is not None:
        idx = ball.index_of_coords(v)
        if idx >= 0:
            return ball.word(idx)
    return group_word(v)


def primitive_root(w: Word, ball: BallTable | None = None, rep: FuchsianRep | None = None) -> tuple[Word, int]:
    """``(root, k)`` with ``root^k = w`` and ``k`` maximal.

    Candidate roots are found exactly (see :func:`crossnum.algebra.exact_roots`);
    a word for the root is then looked for among rotations of ``w`` and in
    the ball.
    """
    c, core = cyclic_reduce(free_reduce(w))
    core = dehn_reduce(core)
    c2, core = cyclic_reduce(core)
    c = multiply(c, c2)
    if not core:
        raise ValueError("w must be nontrivial")
    order = octagon_order()
    x = order.evaluate(core)
    rep = rep or octagon_rep_cached()
    _, ell = axis_and_length(evaluate(rep, core))
    # factor 2 margin on the systole, which is only an estimate
    k_max = max(1, int(ell / (rep.systole_estimate / 2)))
    for k in range(k_max, 1, -1):
        roots = exact_roots(x, k)
        if not roots:
            continue
        for v in roots:
            word = _root_word(core, v, k, ball)
            if word is not None:
                root = multiply(c, word, inverse(c))
                if dehn_reduce(multiply(power(root, k), inverse(w))):
                    raise ArithmeticError("root verification failed")
                return root, k
    return multiply(c, core, inverse(c)), 1


# ---------------------------------------------------------------- crossings


@dataclass(frozen=True)
class CrossingWitness:
    conjugator: Word
    axes: tuple[GeodesicLine, GeodesicLine]
    crossing_point: complex
    angle: float

    def to_json(self) -> dict:
        z = self.crossing_point
        return {
            "conjugator": format_word(self.conjugator),
            "axes": [[_endpoint(a.endpoint_neg), _endpoint(a.endpoint_pos)] for a in self.axes],
            "crossing_point": [z.real, z.imag],
            "angle": self.angle,
        }


def _endpoint(x: float):
    return "inf" if math.isinf(x) else float(x)


@dataclass(frozen=True)
class CrossingReport:
    element: Word
    primitive_root: Word
    representative: Word  # conjugate of the root whose lifts are enumerated
    power: int
    primitive_crossings: int
    crossing_number: int
    witnesses: tuple[CrossingWitness, ...]
    enumeration_radius: int
    stabilized: bool
    counts_by_radius: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "element": format_word(self.element),
            "primitive_root": format_word(self.primitive_root),
            "representative": format_word(self.representative),
            "power": self.power,
            "primitive_crossings": self.primitive_crossings,
            "crossing_number": self.crossing_number,
            "witnesses": [w.to_json() for w in self.witnesses],
            "enumeration_radius": self.enumeration_radius,
            "stabilized": self.stabilized,
            "counts_by_radius": {str(k): v for k, v in sorted(self.counts_by_radius.items())},
        }


def eigen_frame(U: np.ndarray) -> tuple[np.ndarray, float]:
    """SL2 matrix F with F^-1 U F = +-diag(lam, 1/lam), lam > 1, from unit eigenvectors."""
    m = U if U[0, 0] + U[1, 1] > 0 else -U
    (a, b), (c, d) = m
    tr = a + d
    if tr <= 2:
        raise DegenerateConfigurationError("element is not hyperbolic")
    lam = (tr + math.sqrt(tr * tr - 4)) / 2
    cols = []
    for mu in (lam, 1 / lam):
        v1, v2 = np.array([b, mu - a]), np.array([mu - d, c])
        v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
        cols.append(v / np.linalg.norm(v))
    F = np.stack(cols, axis=1)  # columns: attracting (-> INF), repelling (-> 0)
    det = np.linalg.det(F)
    if det < 0:
        F[:, 1] *= -1
        det = -det
    return F / math.sqrt(det), 2 * math.log(lam)


def _inv2(m: np.ndarray) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


@dataclass
class _Lines:
    """Lifted axes h A in the frame where A is the imaginary axis (0 -> INF)."""

    linked: np.ndarray  # positions (into the input) of lines crossing A
    logy: np.ndarray  # log of the crossing height; u shifts it by ell
    p: np.ndarray
    q: np.ndarray


def _classify(mats: np.ndarray, F: np.ndarray, on_axis: np.ndarray, cosang: np.ndarray) -> _Lines:
    """Lines h A crossing A, decided by the exact angle: |cos| < 1 iff linked.

    For disjoint lines the same expression is +-cosh(distance), so values
    near 1 mean nearly asymptotic lines and are refused.
    """
    near = (np.abs(np.abs(cosang) - 1) < COS_TOL) & ~on_axis
    if np.any(near):
        raise DegenerateConfigurationError("a lifted axis is nearly asymptotic to A; increase precision")
    idx = np.flatnonzero((~on_axis) & (np.abs(cosang) < 1))
    m = np.einsum("ij,njk,kl->nil", _inv2(F), mats[idx], F)
    a, b, c, d = m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        p = b / d  # h'(0), image of the repelling end
        q = a / c  # h'(INF)
        logy = 0.5 * np.log(np.abs(p * q))
    return _Lines(idx, logy, p, q)


def _positive(u) -> tuple[int, ...]:
    """Sign representative of ``u`` with positive trace."""
    p, q = octagon_order().trace(u)
    return tuple(u) if embed(p, q) > 0 else tuple(-c for c in u)


def exact_cos_angles(u, hs: list) -> np.ndarray:
    """Cosine of the angle between A and h A, from exact traces.

    With v = h u h^-1 and t = tr u: cos = (2 tr(u v) - t^2) / (t^2 - 4).
    """
    order = octagon_order()
    u = _positive(u)
    tp, tq = order.trace(u)
    t = tp + tq * SQRT2
    out = np.empty(len(hs))
    for k, h in enumerate(hs):
        v = order.multiply(order.multiply(h, u), order.inverse(h))
        p, q = order.trace(order.multiply(u, v))
        out[k] = (2 * (p + q * SQRT2) - t * t) / (t * t - 4)
    return out


def exact_cos_angles_array(u, H: np.ndarray) -> np.ndarray:
    """Vectorized :func:`exact_cos_angles`; falls back to Python ints when int64 could overflow."""
    order = octagon_order()
    u = _positive(u)
    T = _tensor()
    s = float(np.abs(T).sum(axis=(0, 1)).max())
    hmax = np.abs(H).max(axis=1).astype(float)
    umax = float(max(abs(c) for c in u))
    safe = s**3 * hmax**2 * umax**2 < 2.0**62
    out = np.empty(len(H))
    if np.any(safe):
        Hs = H[safe]
        U = np.tile(np.array(u, dtype=np.int64), (len(Hs), 1))
        v = multiply_array(multiply_array(Hs, U), inverse_array(Hs))
        tr = trace_array(multiply_array(U, v))
        tp, tq = order.trace(u)
        t = tp + tq * SQRT2
        out[safe] = (2 * (tr[:, 0] + tr[:, 1] * SQRT2) - t * t) / (t * t - 4)
    rest = np.flatnonzero(~safe)
    if len(rest):
        out[rest] = exact_cos_angles(u, [tuple(int(c) for c in H[i]) for i in rest])
    return out


def _exact_classes(u, ell: float, hs: list, logy: np.ndarray, cosang: np.ndarray, max_shift: int) -> np.ndarray:
    """Label lines h A by their class modulo translation along A.

    Floats only propose: a candidate joins a class after the exact test
    ``h1^-1 u^-i h2`` commutes with ``u`` (so ``h2 A = u^i h1 A``), for
    every ``|i| <= max_shift``.
    """
    order = octagon_order()
    powers: dict[int, tuple] = {0: order.identity}

    def upow(i):
        if i not in powers:
            base = u if i > 0 else order.inverse(u)
            powers[i] = power_coords(base, abs(i))
        return powers[i]

    n = len(hs)
    labels = np.full(n, -1, dtype=np.int64)
    reps: list[tuple[int, float, float]] = []  # (position, logy, cos)
    for k in np.lexsort((logy, cosang)):
        found = -1
        for lab, (r, ly, co) in enumerate(reps):
            if abs(co - cosang[k]) > COS_TOL:
                continue
            x = (logy[k] - ly) / ell
            guess = int(round(x)) if math.isfinite(x) and abs(x) <= max_shift else 0
            # floats only order the tries; every shift within the bound is tested exactly
            shifts = sorted(range(-max_shift, max_shift + 1), key=lambda i: (abs(i - guess), i))
            for i in shifts:
                cand = order.multiply(order.multiply(order.inverse(hs[r]), upow(-i)), hs[k])
                if _centralizes(cand, u):
                    found = lab
                    break
            if found >= 0:
                break
        if found < 0:
            found = len(reps)
            reps.append((int(k), float(logy[k]), float(cosang[k])))
        labels[k] = found
    return labels


# ---------------------------------------------------------------- tube enumeration

# octagon with interior angles pi/4: cosh(inradius) = cot(pi/8), cosh(circumradius) = cot(pi/8)^2
CIRCUMRADIUS = math.acosh((1 + math.sqrt(2)) ** 2)


def _frame_coords(F: np.ndarray, mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Foot parameter on A and distance to A of the orbit points g i."""
    m = np.einsum("ij,njk->nik", _inv2(F), mats)
    z = (m[:, 0, 0] * 1j + m[:, 0, 1]) / (m[:, 1, 0] * 1j + m[:, 1, 1])
    return np.log(np.abs(z)), np.arcsinh(np.abs(z.real) / z.imag)


def _dist_to_segment(s: np.ndarray, delta: np.ndarray, lo: float, hi: float) -> np.ndarray:
    out = np.clip(s, lo, hi) - s
    # right triangle: cosh(hyp) = cosh(leg1) cosh(leg2)
    return np.arccosh(np.cosh(delta) * np.cosh(out))


def tube_tiles(u, F: np.ndarray, ell: float, margin: float) -> dict:
    """Exact elements ``t`` whose tile ``t F0`` can meet ``A[-margin, ell + margin]``.

    Returns ``{coords: word}``; tiles sit inside the circumradius ball about
    their centre, and tiles meeting a segment are connected through sides,
    so a BFS through centres within the circumradius of the segment finds them all.
    """
    order = octagon_order()
    letters = list(order.letter_coords)
    lo, hi = -margin, ell + margin
    reach = CIRCUMRADIUS + margin + 1e-6

    def dist(xs):
        mats = np.stack([order.to_matrix(x) for x in xs])
        s, delta = _frame_coords(F, mats)
        return _dist_to_segment(s, delta, lo, hi)

    # descend to the tile containing the foot point F(i)
    z0 = mobius(F, 1j)
    t, tw = order.identity, ()
    while True:
        cands = [(order.multiply(t, order.letter_coords[x]), tw + (x,)) for x in letters]
        pts = [mobius(order.to_matrix(c), 1j) for c, _ in cands]
        ds = [hyperbolic_distance(p, z0) for p in pts]
        here = hyperbolic_distance(mobius(order.to_matrix(t), 1j), z0)
        k = int(np.argmin(ds))
        if ds[k] >= here - 1e-12:
            break
        t, tw = normalize_sign(cands[k][0]), cands[k][1]
    seen = {normalize_sign(t): tw}
    frontier = [normalize_sign(t)]
    keep = {}
    while frontier:
        dists = dist(frontier)
        nxt = []
        for x, dx in zip(frontier, dists):
            if dx > reach:
                continue
            keep[x] = seen[x]
            for letter in letters:
                y = normalize_sign(order.multiply(x, order.letter_coords[letter]))
                if y not in seen:
                    seen[y] = free_reduce(seen[x] + (letter,))
                    nxt.append(y)
        frontier = nxt
    return keep


def _tube_candidates(u, F, ell, margin):
    order = octagon_order()
    tiles = tube_tiles(u, F, ell, margin)
    items = sorted(tiles.items(), key=lambda kv: shortlex_key(kv[1]))
    out = {}
    for g, gw in items:
        for t, tw in items:
            h = normalize_sign(order.multiply(g, order.inverse(t)))
            if h not in out:
                out[h] = multiply(gw, inverse(tw))
    return out


def _centralizes(x, u) -> bool:
    order = octagon_order()
    xu, ux = order.multiply(x, u), order.multiply(u, x)
    return normalize_sign(xu) == normalize_sign(ux)


@dataclass
class _ClassCount:
    pairs: dict  # pair key -> list of candidate positions
    coords: list
    words: list
    lines: _Lines
    labels: np.ndarray
    position: dict  # candidate index -> row in ``lines``


def _count_tube(u, F, ell, margin) -> _ClassCount:
    order = octagon_order()
    cands = _tube_candidates(u, F, ell, margin)
    coords = list(cands)
    words = [cands[c] for c in coords]
    inv_coords = [normalize_sign(order.inverse(c)) for c in coords]
    allc = coords + inv_coords
    big = max(abs(c) for x in allc for c in x) >= 1 << 40
    if big:
        mats = np.stack([order.to_matrix(c) for c in allc])
        on_axis = np.array([_centralizes(c, u) for c in allc])
        cos_all = exact_cos_angles(u, allc)
    else:
        arr = np.array(allc, dtype=np.int64)
        mats = order.to_matrices(arr)
        on_axis = _commutes_array(arr, u)
        if on_axis is None:
            on_axis = np.array([_centralizes(c, u) for c in allc])
        cos_all = exact_cos_angles_array(u, arr)
    lines = _classify(mats, F, on_axis, cos_all)
    hs = [allc[i] for i in lines.linked]
    # crossing points lie within 2 circumradii of the window, so shifts are bounded
    shift = int(math.ceil((ell + 2 * margin + 4 * CIRCUMRADIUS) / ell)) + 1
    labels = _exact_classes(u, ell, hs, lines.logy, cos_all[lines.linked], shift)
    pos = {int(i): k for k, i in enumerate(lines.linked)}
    n = len(coords)
    partner: dict[int, int] = {}
    pairs: dict[tuple[int, int], list[int]] = {}
    for i in range(n):
        if i not in pos:
            continue
        j = n + i
        if j not in pos:
            raise DegenerateConfigurationError("inverse of a linked conjugator is not linked")
        la, lb = int(labels[pos[i]]), int(labels[pos[j]])
        if la == lb:
            raise DegenerateConfigurationError("a crossing class is paired with itself")
        if partner.setdefault(la, lb) != lb or partner.setdefault(lb, la) != la:
            raise DegenerateConfigurationError("class pairing is not well defined")
        pairs.setdefault((min(la, lb), max(la, lb)), []).append(i)
    # every class seen through an inverse must also be seen directly
    direct = {int(labels[pos[i]]) for i in range(n) if i in pos}
    if set(partner) - direct:
        raise DegenerateConfigurationError("tube enumeration missed a crossing class")
    return _ClassCount(pairs, coords, words, lines, labels, pos)


def crossing_number(
    w: Word,
    rep: FuchsianRep | None = None,
    ball: BallTable | None = None,
    policy=None,
) -> CrossingReport:
    """Self-crossings of the closed geodesic of ``w``.

    Enumeration radius 0 uses the tiles meeting one period of the axis;
    radius 1 widens that tube by one unit.  ``stabilized`` means the two
    counts agree.  ``ball`` only serves to canonicalize witness words.
    """
    rep = rep or octagon_rep_cached()
    w = free_reduce(w)
    if not dehn_reduce(w):
        raise ValueError("w must be nontrivial")
    root, k = primitive_root(w, ball, rep)
    order = octagon_order()
    rep_word = counting_representative(root)
    u = order.evaluate(rep_word)
    U = order.to_matrix(u)
    F, ell = eigen_frame(U)
    base = _count_tube(u, F, ell, TUBE_MARGIN)
    wide = _count_tube(u, F, ell, 1.0)
    n0, n1 = len(base.pairs), len(wide.pairs)
    axis, _ = axis_and_length(_iso(U))
    witnesses = []
    for members in base.pairs.values():
        words = [_canonical_word(base.words[i], ball) for i in members]
        best = min(range(len(members)), key=lambda t: shortlex_key(words[t]))
        i = members[best]
        h = _iso(order.to_matrix(base.coords[i]))
        row = base.position[i]
        p, q = base.lines.p[row], base.lines.q[row]
        zf = complex(0.0, math.sqrt(-p * q))
        ang = math.acos(max(-1.0, min(1.0, (p + q) / (q - p))))
        witnesses.append(CrossingWitness(words[best], (axis, h.line_image(axis)), mobius(F, zf), ang))
    witnesses.sort(key=lambda x: shortlex_key(x.conjugator))
    return CrossingReport(
        element=w,
        primitive_root=root,
        representative=rep_word,
        power=k,
        primitive_crossings=n0,
        crossing_number=k * k * n0,
        witnesses=tuple(witnesses),
        enumeration_radius=0,
        stabilized=n0 == n1,
        counts_by_radius={0: n0, 1: n1},
    )


def axis_distance(F: np.ndarray) -> float:
    """Distance from i to the axis F(imaginary axis)."""
    s, delta = _frame_coords(F, np.eye(2)[None])
    return float(delta[0])


def _canonical_word(word: Word, ball: BallTable | None) -> Word:
    if ball is not None:
        idx = ball.locate(word)
        if idx >= 0:
            return ball.word(idx)
    return dehn_reduce(word)


def _iso(m):
    return Isometry(m)


def counting_representative(root: Word) -> Word:
    """Cyclic rotation of the reduced root whose axis passes closest to i.

    Crossing classes are conjugacy invariant; a nearby axis keeps the
    crossing conjugators short.
    """
    _, core = cyclic_reduce(dehn_reduce(root))
    _, core = cyclic_reduce(core)
    best = None
    for i in range(len(core)):
        rot = core[i:] + core[:i]
        axis, _ = axis_and_length(evaluate(octagon_rep_cached(), rot))
        dist = axis.distance_to(1j)
        key = (round(dist, 9), shortlex_key(rot))
        if best is None or key < best[0]:
            best = (key, rot)
    return best[1]


_REP = None


def octagon_rep_cached() -> FuchsianRep:
    global _REP
    if _REP is None:
        _REP = octagon_rep()
    return _REP


# ---------------------------------------------------------------- ball brute force


def crossing_counts_in_ball(w: Word, ball: BallTable, rep: FuchsianRep | None = None) -> dict:
    """Independent count: classify every ball element as a conjugator.

    Returns ``{radius: pairs found using conjugators of length <= radius}``
    for the last two radii of the ball.
    """
    root, _ = primitive_root(w, ball, rep)
    order = octagon_order()
    u = order.evaluate(counting_representative(root))
    F, ell = eigen_frame(order.to_matrix(u))
    on_axis = _commutes(ball, u)
    if on_axis is None:
        raise SearchBoundError("root too long for the vectorized commutation test")
    cos_all = exact_cos_angles_array(u, ball.coords)
    lines = _classify(ball.matrices, F, on_axis, cos_all)
    hs = [tuple(int(c) for c in ball.coords[i]) for i in lines.linked]
    # a crossing lies within the displacement of its conjugator from the foot of i
    disp = float(np.max(displacements(ball)[lines.linked], initial=0.0))
    d0 = axis_distance(F)
    shift = int(math.ceil(2 * (disp + 2 * d0) / ell)) + 1
    labels = _exact_classes(u, ell, hs, lines.logy, cos_all[lines.linked], shift)
    lengths = ball.lengths[lines.linked]
    R = ball.radius
    return {r: len(np.unique(labels[lengths <= r])) // 2 for r in (R - 1, R)}


def _commutes(ball: BallTable, u) -> np.ndarray | None:
    """Exact mask of ball elements commuting with ``u`` (those with h A = A)."""
    return _commutes_array(ball.coords, u)


def _commutes_array(coords: np.ndarray, u) -> np.ndarray | None:
    from .ball import _mult_matrix

    order = octagon_order()
    ru = _mult_matrix(order, u, side="right")
    lu = _mult_matrix(order, u, side="left")
    if ru is None or lu is None or np.abs(coords).max() * np.abs(ru).max() * 8 >= 2.0**62:
        return None
    hu = coords @ ru
    uh = coords @ lu
    return np.all(hu == uh, axis=1) | np.all(hu == -uh, axis=1)


# ---------------------------------------------------------------- S_n


@dataclass(frozen=True)
class SnTable:
    n: int
    radius: int
    elements: tuple[Word, ...]
    primitive_only: bool
    ball_radius: int

    def __contains__(self, w: Word) -> bool:
        return tuple(w) in set(self.elements)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "radius": self.radius,
            "primitive_only": self.primitive_only,
            "ball_radius": self.ball_radius,
            "elements": [format_word(w) for w in self.elements],
        }


def enumerate_Sn(
    n: int,
    radius: int,
    primitive_only: bool = False,
    *,
    rep: FuchsianRep | None = None,
    ball: BallTable | None = None,
    cache: DiskCache | None = None,
    include_identity: bool = False,
) -> SnTable:
    """Ball elements of length <= ``radius`` with crossing number <= ``n``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    rep = rep or octagon_rep_cached()
    ball = ball or cached_ball(max(radius + 1, 6))
    if radius > ball.radius:
        raise ValueError("radius exceeds the ball radius")
    fields = dict(genus=2, n=n, radius=radius, ball_radius=ball.radius, primitive_only=primitive_only,
                  rep=rep.name, tol=rep.tol_geom, identity=include_identity)
    if cache is not None:
        hit = cache.load("sn", **fields)
        if hit is not None:
            return SnTable(n, radius, tuple(tuple(e) for e in hit["elements"]), primitive_only, ball.radius)
    memo: dict[Word, CrossingReport] = {}
    out = []
    for i in range(ball.count_within(radius)):
        w = ball.word(i)
        if not w:
            if include_identity:
                out.append(w)
            continue
        key = CyclicWord.from_word(w).letters
        rep_i = memo.get(key)
        if rep_i is None:
            rep_i = crossing_number(key, rep, ball)
            if not rep_i.stabilized:
                raise NotStabilizedError(f"crossing number of {format_word(w)} did not stabilize")
            memo[key] = rep_i
        if rep_i.crossing_number <= n and (not primitive_only or rep_i.power == 1):
            out.append(w)
    table = SnTable(n, radius, tuple(out), primitive_only, ball.radius)
    if cache is not None:
        cache.store("sn", {"elements": [list(e) for e in table.elements]}, **fields)
    return table


# ---------------------------------------------------------------- automorphisms

# images of a1, b1, a2, b2; each sends the relator to a conjugate of itself
AUTOMORPHISMS: dict[str, dict[int, Word]] = {
    "swap_handles": {1: (3,), 2: (4,), 3: (1,), 4: (2,)},
    "twist_a1": {1: (1, 2), 2: (2,), 3: (3,), 4: (4,)},
    "twist_b1": {1: (1,), 2: (2, 1), 3: (3,), 4: (4,)},
    "twist_a2": {1: (1,), 2: (2,), 3: (3, 4), 4: (4,)},
    "twist_b2": {1: (1,), 2: (2,), 3: (3,), 4: (4, 3)},
}


def apply_automorphism(phi: dict[int, Word], w: Word) -> Word:
    out: list[int] = []
    for x in w:
        out.extend(phi[x] if x > 0 else inverse(phi[-x]))
    return free_reduce(out)


def power_check(root_coords, k: int, target) -> bool:
    return normalize_sign(power_coords(root_coords, k)) == normalize_sign(target)
