"""Breadth-first enumeration of balls in the Cayley graph.

Group elements are identified exactly through the integer octagon model
(:mod:`crossnum.algebra`), so the table is a true ball of the surface group
and every stored word is the shortlex-least geodesic for its element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import hash_coords, hash_tuple, normalize_sign, normalize_sign_array, octagon_order
from .words import Word, alphabet, dehn_reduce, free_reduce, inverse, letter_key

DEFAULT_MAX_RADIUS = 8
DEFAULT_MAX_ELEMENTS = 8_000_000
DEFAULT_MAX_BYTES = 2_000_000_000
_COORD_LIMIT = 1 << 54


class ResourceLimitError(RuntimeError):
    pass


class OutOfBallError(LookupError):
    def __init__(self, word, radius):
        self.word = word
        self.radius = radius
        super().__init__(
            f"element lies outside the radius-{radius} ball; needs radius >= {radius + 1}"
            f" (at most {len(dehn_reduce(word))})"
        )


class HashCollisionError(RuntimeError):
    pass


@dataclass
class BallTable:
    genus: int
    radius: int
    words: np.ndarray  # (n, radius) int8, zero padded
    lengths: np.ndarray  # (n,) int8
    coords: np.ndarray  # (n, 8) int64, sign normalized
    adjacency: np.ndarray  # (n, 4g) int32, column j = alphabet(genus)[j], -1 outside
    level_offsets: np.ndarray  # (radius + 2,) start index of each sphere

    def __post_init__(self):
        self.letters = alphabet(self.genus)
        self._col = {x: j for j, x in enumerate(self.letters)}
        h = hash_coords(self.coords)
        self._order = np.argsort(h, kind="stable")
        self._sorted_hash = h[self._order]
        self._matrices = None

    def __len__(self) -> int:
        return len(self.lengths)

    @property
    def matrices(self) -> np.ndarray:
        if self._matrices is None:
            self._matrices = octagon_order().to_matrices(self.coords)
        return self._matrices

    def sphere(self, r: int) -> slice:
        return slice(int(self.level_offsets[r]), int(self.level_offsets[r + 1]))

    def count_within(self, r: int) -> int:
        return int(self.level_offsets[min(r, self.radius) + 1])

    def word(self, index: int) -> Word:
        n = int(self.lengths[index])
        return tuple(int(x) for x in self.words[index, :n])

    def column(self, letter: int) -> int:
        return self._col[letter]

    def index_of_coords(self, x) -> int:
        """Ball index of an exact element, or -1."""
        if any(abs(c) >= _COORD_LIMIT for c in x):
            return -1
        x = normalize_sign(x)
        h = np.uint64(hash_tuple(x))
        lo = int(np.searchsorted(self._sorted_hash, h, side="left"))
        hi = int(np.searchsorted(self._sorted_hash, h, side="right"))
        for k in range(lo, hi):
            idx = int(self._order[k])
            if tuple(int(c) for c in self.coords[idx]) == x:
                return idx
        return -1

    def index_of_coords_array(self, coords: np.ndarray) -> np.ndarray:
        """Vectorized lookup of sign-normalized ``(m, 8)`` rows; -1 if absent."""
        coords = normalize_sign_array(coords)
        h = hash_coords(coords)
        pos = np.searchsorted(self._sorted_hash, h)
        pos = np.minimum(pos, len(self._sorted_hash) - 1)
        cand = self._order[pos]
        ok = (self._sorted_hash[pos] == h) & np.all(self.coords[cand] == coords, axis=1)
        out = np.where(ok, cand, -1)
        # rare: equal hashes with distinct coords, fall back to scalar path
        clash = (self._sorted_hash[pos] == h) & ~ok
        for i in np.flatnonzero(clash):
            out[i] = self.index_of_coords(tuple(int(c) for c in coords[i]))
        return out

    def locate(self, w: Word) -> int:
        w = free_reduce(w)
        if len(w) <= self.radius:
            idx = 0
            for x in w:
                idx = int(self.adjacency[idx, self._col[x]])
                if idx < 0:
                    break
            else:
                return idx
        return self.index_of_coords(octagon_order().evaluate(dehn_reduce(w)))

    def canonical(self, w: Word) -> Word:
        idx = self.locate(w)
        if idx < 0:
            raise OutOfBallError(w, self.radius)
        return self.word(idx)

    def inverse_index(self, index: int) -> int:
        return self.locate(inverse(self.word(index)))


def enumerate_ball(
    radius: int,
    genus: int = 2,
    *,
    max_radius: int = DEFAULT_MAX_RADIUS,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
    max_bytes: int = DEFAULT_MAX_BYTES,
    traversal: str = "forward",
) -> BallTable:
    """All elements of word length <= ``radius``, keyed by shortlex-least geodesics.

    ``traversal`` ("forward" or "reverse") only changes the order in which
    candidates are generated; the resulting table is identical.
    """
    if genus != 2:
        raise NotImplementedError("only the genus-2 octagon group is implemented")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    if radius > max_radius:
        raise ResourceLimitError(f"radius {radius} exceeds configured maximum {max_radius}")
    order = octagon_order()
    letters = alphabet(genus)
    nl = len(letters)
    right = np.stack([order.right_matrix(x) for x in letters])  # (nl, 8, 8)
    keys = np.array([letter_key(x) for x in letters])
    gen_order = np.arange(nl) if traversal == "forward" else np.arange(nl)[::-1]

    coords = [np.array([order.identity], dtype=np.int64)]
    words = [np.zeros((1, 0), dtype=np.int8)]
    adj_levels: list[np.ndarray] = []
    offsets = [0, 1]

    for r in range(radius + 1):
        cur = coords[r]
        n = len(cur)
        if np.abs(cur).max() >= _COORD_LIMIT:
            raise ResourceLimitError("coordinate growth exceeds int64 range")
        parents = np.arange(n) if traversal == "forward" else np.arange(n)[::-1]
        cand = np.einsum("ni,lij->nlj", cur[parents], right[gen_order]).reshape(-1, 8)
        cand = normalize_sign_array(cand)
        cand_parent = np.repeat(parents, nl)
        cand_col = np.tile(gen_order, len(parents))
        h = hash_coords(cand)

        # match against spheres r-1 and r
        known_lo = offsets[max(r - 1, 0)]
        known = np.concatenate(coords[max(r - 1, 0): r + 1])
        kh = hash_coords(known)
        korder = np.argsort(kh, kind="stable")
        ksorted = kh[korder]
        pos = np.minimum(np.searchsorted(ksorted, h), len(ksorted) - 1)
        hit = ksorted[pos] == h
        kidx = korder[pos]
        same = hit & np.all(known[kidx] == cand, axis=1)
        if np.any(hit & ~same):
            raise HashCollisionError("hash collision against known spheres")
        target = np.full(len(cand), -1, dtype=np.int64)
        target[same] = known_lo + kidx[same]

        new_mask = ~same
        if r < radius:
            nh = h[new_mask]
            ncand = cand[new_mask]
            uniq, first, inv = np.unique(nh, return_index=True, return_inverse=True)
            if not np.all(ncand[first[inv]] == ncand):
                raise HashCollisionError("hash collision among new candidates")
            # canonical word = least (parent index, letter) in each group
            rank = cand_parent[new_mask] * nl + keys[cand_col[new_mask]]
            best = np.full(len(uniq), np.iinfo(np.int64).max)
            np.minimum.at(best, inv, rank)
            level_order = np.argsort(best, kind="stable")
            new_id = np.empty(len(uniq), dtype=np.int64)
            new_id[level_order] = np.arange(len(uniq))
            start = offsets[r + 1]
            target[new_mask] = start + new_id[inv]
            best_sorted = best[level_order]
            par = best_sorted // nl
            let = np.array(sorted(letters, key=letter_key), dtype=np.int8)[best_sorted % nl]
            wprev = words[r][par]
            words.append(np.concatenate([wprev, let[:, None]], axis=1))
            # coordinates of the representative candidates, in level order
            rep = np.empty(len(uniq), dtype=np.int64)
            rep[inv] = np.arange(len(inv))
            coords.append(ncand[rep[level_order]])
            offsets.append(start + len(uniq))
            total = offsets[-1]
            if total > max_elements:
                raise ResourceLimitError(f"ball exceeds {max_elements} elements at radius {r + 1}")
            if total * (8 * 8 + nl * 4 + radius + 1) > max_bytes:
                raise ResourceLimitError(f"ball exceeds {max_bytes} bytes at radius {r + 1}")

        adj = np.empty((n, nl), dtype=np.int32)
        adj[cand_parent, cand_col] = target
        adj_levels.append(adj)

    padded = np.zeros((offsets[-1], radius), dtype=np.int8)
    lengths = np.zeros(offsets[-1], dtype=np.int8)
    for r, w in enumerate(words):
        sl = slice(offsets[r], offsets[r + 1])
        padded[sl, :r] = w
        lengths[sl] = r
    return BallTable(
        genus=genus,
        radius=radius,
        words=padded,
        lengths=lengths,
        coords=np.concatenate(coords),
        adjacency=np.concatenate(adj_levels),
        level_offsets=np.array(offsets, dtype=np.int64),
    )


def word_length(w: Word, ball: BallTable) -> int:
    idx = ball.locate(w)
    if idx < 0:
        raise OutOfBallError(w, ball.radius)
    return int(ball.lengths[idx])


def are_conjugate(u: Word, v: Word, ball: BallTable) -> Word | None:
    """Shortlex-least ``g`` in the ball with ``g u g^-1 = v``, or None.

    None means "not found within the ball", not a proof of non-conjugacy.
    """
    order = octagon_order()
    U = order.evaluate(free_reduce(u))
    V = order.evaluate(free_reduce(v))
    ru = _mult_matrix(order, U, side="right")
    lv = _mult_matrix(order, V, side="left")
    if ru is None or lv is None:
        return None
    gu = ball.coords @ ru
    vg = ball.coords @ lv
    match = np.all(gu == vg, axis=1) | np.all(gu == -vg, axis=1)
    hits = np.flatnonzero(match)
    if len(hits) == 0:
        return None
    return ball.word(int(hits[0]))


def _mult_matrix(order, x, side: str):
    rows = []
    for i in range(8):
        e = [0] * 8
        e[i] = 1
        rows.append(order.multiply(tuple(e), x) if side == "right" else order.multiply(x, tuple(e)))
    if max(abs(c) for row in rows for c in row) >= 1 << 30:
        return None
    return np.array(rows, dtype=np.int64)


_BALLS: dict[tuple[int, int], BallTable] = {}


_ARRAYS = ("words", "lengths", "coords", "adjacency", "level_offsets")


def load_or_build_ball(radius: int, cache=None, genus: int = 2, **limits) -> tuple[BallTable, bool]:
    """Ball from the disk cache when present, else built and stored. Returns (ball, cache_hit)."""
    if cache is not None:
        data = cache.load_arrays("ball", genus=genus, radius=radius)
        if data is not None and all(k in data for k in _ARRAYS):
            ball = BallTable(genus=genus, radius=radius, **{k: data[k] for k in _ARRAYS})
            _BALLS.setdefault((genus, radius), ball)
            return ball, True
    ball = cached_ball(radius, genus, **limits)
    if cache is not None:
        cache.store_arrays("ball", {k: getattr(ball, k) for k in _ARRAYS}, genus=genus, radius=radius)
    return ball, False


def cached_ball(radius: int, genus: int = 2, **limits) -> BallTable:
    """Process-wide memo; a larger cached ball is not reused for a smaller radius."""
    key = (genus, radius)
    if key not in _BALLS:
        _BALLS[key] = enumerate_ball(radius, genus, **limits)
    return _BALLS[key]


def word_length_coords(x, ball: BallTable, lower: int = 0) -> int | None:
    """Exact word length of an element given by coordinates, up to ``2 * ball.radius``.

    Meet in the middle: if ``R < d <= R + k`` a geodesic splits as (sphere k) *
    (ball), so growing k from 1 finds d at the first k with any hit. ``lower``
    is a known lower bound on the length and skips hopeless spheres. Returns
    None when the length exceeds ``2 * ball.radius``.
    """
    idx = ball.index_of_coords(x)
    if idx >= 0:
        return int(ball.lengths[idx])
    right = _mult_matrix(octagon_order(), tuple(x), side="right")
    if right is None:
        return None
    for k in range(max(1, lower - ball.radius), ball.radius + 1):
        sl = ball.sphere(k)
        if int(np.abs(right).max()) * int(np.abs(ball.coords[sl]).max()) >= 1 << 58:
            return None
        # spheres are closed under inversion, so h x over h in S_k covers g^-1 x
        hits = ball.index_of_coords_array(ball.coords[sl] @ right)
        hits = hits[hits >= 0]
        if len(hits):
            return k + int(ball.lengths[hits].min())
    return None
