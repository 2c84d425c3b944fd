"""Exact arithmetic for the genus-2 regular-octagon surface group.

The side pairings of the regular octagon with interior angles pi/4 span,
over Z[sqrt2], a rank-4 order with basis ``1, A, B, AB`` (``A = a1``,
``B = b1``).  Every group element therefore has integer coordinates
``(p0, q0, ..., p3, q3)`` meaning ``sum (p_k + q_k sqrt2) E_k``.  Elements
of PSL(2,R) are compared up to a global sign.

The float side-pairing matrices are built once; the integer structure
constants are recovered from them by rounding and checked on import.
"""

from __future__ import annotations

import math

import numpy as np

SQRT2 = math.sqrt(2.0)
# order of the letters in the relator around the octagon boundary
_SIDE_LABELS = (1, 2, -1, -2, 3, 4, -3, -4)


def _rot(theta: float) -> np.ndarray:
    # rotation about i in the upper half-plane by angle theta
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, s], [-s, c]])


def _lift(t: float) -> np.ndarray:
    return np.diag([math.exp(t / 2), math.exp(-t / 2)])


def _side_pairing(i: int, j: int, inradius: float) -> np.ndarray:
    q = math.pi / 4
    return _rot(j * q) @ _lift(2 * inradius) @ _rot(math.pi) @ _rot(-i * q)


def octagon_matrices() -> dict[int, np.ndarray]:
    """Float SL(2,R) images of the letters, relator [a1,b1][a2,b2] = -+I."""
    inradius = math.acosh(1 + SQRT2)
    raw = {}
    for g in (1, 2, 3, 4):
        i, j = _SIDE_LABELS.index(g), _SIDE_LABELS.index(-g)
        raw[g] = _side_pairing(j, i, inradius)
    # with this pairing the vertex cycle reads [a1, b1^-1][a2, b2^-1]
    mats = {1: raw[1], 2: np.linalg.inv(raw[2]), 3: raw[3], 4: np.linalg.inv(raw[4])}
    for g in (1, 2, 3, 4):
        mats[-g] = np.linalg.inv(mats[g])
    return mats


def _round_zsqrt2(x: float, tol: float = 1e-7) -> tuple[int, int]:
    # Galois conjugates of coordinates are bounded, so small q suffices
    for q in range(-4096, 4097):
        p = x - q * SQRT2
        if abs(p - round(p)) < tol:
            return int(round(p)), q
    raise ArithmeticError(f"{x!r} is not in Z[sqrt2] with small coefficients")


class OctagonOrder:
    """Integer model of the octagon group: 8-int coordinate vectors."""

    def __init__(self):
        self.float_gens = octagon_matrices()
        a, b = self.float_gens[1], self.float_gens[2]
        self.basis = np.array([np.eye(2), a, b, a @ b])  # (4, 2, 2)
        flat = self.basis.reshape(4, 4).T
        self._flat_inv = np.linalg.inv(flat)
        # mult[i][j] = coords of E_i E_j over Z[sqrt2]
        self.mult = [[self._zcoords(self.basis[i] @ self.basis[j]) for j in range(4)] for i in range(4)]
        self.letter_coords = {g: self._zcoords(m) for g, m in self.float_gens.items()}
        self.identity = (1, 0, 0, 0, 0, 0, 0, 0)
        self.basis_traces = [self._zcoords_scalar(np.trace(self.basis[k])) for k in range(4)]
        self._right = {g: self._right_matrix(c) for g, c in self.letter_coords.items()}
        self._check()

    def _zcoords(self, m: np.ndarray) -> tuple[int, ...]:
        c = self._flat_inv @ m.reshape(4)
        out: list[int] = []
        for x in c:
            out.extend(_round_zsqrt2(float(x)))
        return tuple(out)

    @staticmethod
    def _zmul(p1, q1, p2, q2):
        return p1 * p2 + 2 * q1 * q2, p1 * q2 + q1 * p2

    def multiply(self, x, y) -> tuple[int, ...]:
        """Exact product of coordinate vectors (Python ints, no overflow)."""
        out = [0] * 8
        for i in range(4):
            p1, q1 = x[2 * i], x[2 * i + 1]
            if p1 == 0 and q1 == 0:
                continue
            for j in range(4):
                p2, q2 = y[2 * j], y[2 * j + 1]
                if p2 == 0 and q2 == 0:
                    continue
                cp, cq = self._zmul(p1, q1, p2, q2)
                row = self.mult[i][j]
                for k in range(4):
                    sp, sq = self._zmul(cp, cq, row[2 * k], row[2 * k + 1])
                    out[2 * k] += sp
                    out[2 * k + 1] += sq
        return tuple(out)

    def _right_matrix(self, g) -> np.ndarray:
        # x -> x * g as an 8x8 integer matrix acting on row vectors
        rows = []
        for i in range(8):
            e = [0] * 8
            e[i] = 1
            rows.append(self.multiply(tuple(e), g))
        return np.array(rows, dtype=np.int64)

    def right_matrix(self, letter: int) -> np.ndarray:
        return self._right[letter]

    def evaluate(self, word) -> tuple[int, ...]:
        x = self.identity
        for letter in word:
            x = self.multiply(x, self.letter_coords[letter])
        return x

    def inverse(self, x) -> tuple[int, ...]:
        # for det-1 elements, x^-1 = tr(x) - x
        t = self.trace(x)
        out = [-c for c in x]
        out[0] += t[0]
        out[1] += t[1]
        return tuple(out)

    def trace(self, x) -> tuple[int, int]:
        tr = self.basis_traces
        p = q = 0
        for k in range(4):
            sp, sq = self._zmul(x[2 * k], x[2 * k + 1], *tr[k])
            p += sp
            q += sq
        return p, q

    @staticmethod
    def _zcoords_scalar(x: float) -> tuple[int, int]:
        return _round_zsqrt2(float(x))

    def to_matrix(self, x) -> np.ndarray:
        c = np.array([float(x[2 * k]) + float(x[2 * k + 1]) * SQRT2 for k in range(4)])
        return np.tensordot(c, self.basis, axes=1)

    def to_matrices(self, coords: np.ndarray) -> np.ndarray:
        """Vectorized ``to_matrix`` over an ``(n, 8)`` integer array."""
        c = coords[:, 0::2].astype(float) + coords[:, 1::2].astype(float) * SQRT2
        return np.einsum("nk,kij->nij", c, self.basis)

    def _check(self):
        rel = (1, 2, -1, -2, 3, 4, -3, -4)
        if normalize_sign(self.evaluate(rel)) != self.identity:
            raise ArithmeticError("relator does not evaluate to the identity")
        for g, c in self.letter_coords.items():
            if not np.allclose(self.to_matrix(c), self.float_gens[g], atol=1e-9):
                raise ArithmeticError("coordinate round trip failed")


def normalize_sign(x) -> tuple[int, ...]:
    for c in x:
        if c:
            return tuple(x) if c > 0 else tuple(-v for v in x)
    return tuple(x)


def normalize_sign_array(coords: np.ndarray) -> np.ndarray:
    nz = coords != 0
    first = np.argmax(nz, axis=1)
    lead = coords[np.arange(len(coords)), first]
    sign = np.where(lead < 0, -1, 1).astype(coords.dtype)
    return coords * sign[:, None]


_HASH_MULT = np.array(
    [0x9E3779B97F4A7C15, 0xC2B2AE3D27D4EB4F, 0x165667B19E3779F9, 0xD6E8FEB86659FD93,
     0xFF51AFD7ED558CCD, 0xC4CEB9FE1A85EC53, 0x94D049BB133111EB, 0xBF58476D1CE4E5B9],
    dtype=np.uint64,
)
_HASH_MULT_PY = [int(m) for m in _HASH_MULT]
_MASK = (1 << 64) - 1


def hash_coords(coords: np.ndarray) -> np.ndarray:
    """64-bit mixing hash of sign-normalized rows (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        h = (coords.astype(np.uint64) * _HASH_MULT).sum(axis=1, dtype=np.uint64)
        h ^= h >> np.uint64(29)
    return h


def hash_tuple(x) -> int:
    h = 0
    for c, m in zip(x, _HASH_MULT_PY):
        h = (h + (c & _MASK) * m) & _MASK
    return h ^ (h >> 29)


_ORDER: OctagonOrder | None = None


def octagon_order() -> OctagonOrder:
    global _ORDER
    if _ORDER is None:
        _ORDER = OctagonOrder()
    return _ORDER


def inverse_array(coords: np.ndarray) -> np.ndarray:
    """Vectorized ``OctagonOrder.inverse`` on ``(n, 8)`` rows."""
    tr = octagon_order().basis_traces
    p = np.zeros(len(coords), dtype=np.int64)
    q = np.zeros(len(coords), dtype=np.int64)
    for k in range(4):
        a, b = coords[:, 2 * k], coords[:, 2 * k + 1]
        p += a * tr[k][0] + 2 * b * tr[k][1]
        q += a * tr[k][1] + b * tr[k][0]
    out = -coords
    out[:, 0] += p
    out[:, 1] += q
    return out


def power_coords(x, k: int) -> tuple[int, ...]:
    order = octagon_order()
    out = order.identity
    base = tuple(x)
    while k:
        if k & 1:
            out = order.multiply(out, base)
        base = order.multiply(base, base)
        k >>= 1
    return out


def embed(p: int, q: int, sgn: int = 1) -> float:
    """``p + sgn q sqrt2`` as a float without cancellation, via the exact norm."""
    p, q = int(p), int(q)
    if p * q * sgn >= 0:
        return p + sgn * q * SQRT2
    return (p * p - 2 * q * q) / (p - sgn * q * SQRT2)


def exact_roots(x, k: int, tol: float = 0.25) -> list[tuple[int, ...]]:
    """All ``v`` (sign normalized) with ``v^k = +-x``, found exactly.

    A k-th root lies in ``span(1, x)`` of the quaternion algebra, so its
    coefficients are fixed by the trace in both real embeddings of Q(sqrt2);
    the two embeddings together recover the integer coordinates. Floats only
    propose candidates (rounded within ``tol``); each is verified by exact powering.
    """
    import cmath

    order = octagon_order()
    tp, tq = order.trace(x)
    embeds = []
    for sgn in (1, -1):
        t = embed(tp, tq, sgn)
        s = cmath.sqrt(t * t - 4)
        # the eigenvalue of larger modulus avoids cancellation when t << 0
        mu = (t + s) / 2 if abs(t + s) >= abs(t - s) else (t - s) / 2
        if abs(mu - 1 / mu) < 1e-12:
            return []
        coeffs = []
        for j in range(k):
            nu = mu ** (1.0 / k) * cmath.exp(2j * math.pi * j / k)
            beta = (nu - 1 / nu) / (mu - 1 / mu)
            alpha = nu - beta * mu
            if abs(alpha.imag) < 1e-9 * max(1, abs(alpha)) and abs(beta.imag) < 1e-9 * max(1, abs(beta)):
                coeffs.append((alpha.real, beta.real))
        embeds.append(coeffs)
    xr = [embed(x[2 * i], x[2 * i + 1], 1) for i in range(4)]
    xc = [embed(x[2 * i], x[2 * i + 1], -1) for i in range(4)]
    found = set()
    target = normalize_sign(x)
    for ar, br in embeds[0]:
        for ac, bc in embeds[1]:
            vr = [br * v for v in xr]
            vc = [bc * v for v in xc]
            vr[0] += ar
            vc[0] += ac
            cand = []
            ok = True
            for r, c in zip(vr, vc):
                p, q = (r + c) / 2, (r - c) / (2 * SQRT2)
                if abs(p - round(p)) > tol or abs(q - round(q)) > tol:
                    ok = False
                    break
                cand += [int(round(p)), int(round(q))]
            if ok and normalize_sign(power_coords(cand, k)) == target:
                found.add(normalize_sign(cand))
    return sorted(found)


def mult_tensor() -> np.ndarray:
    """``T[i, j, k]`` with ``(x y)_k = sum x_i y_j T[i, j, k]`` (int64)."""
    order = octagon_order()
    T = np.zeros((8, 8, 8), dtype=np.int64)
    for i in range(8):
        for j in range(8):
            ei = tuple(int(i == t) for t in range(8))
            ej = tuple(int(j == t) for t in range(8))
            T[i, j] = order.multiply(ei, ej)
    return T


def multiply_array(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-wise exact products of ``(n, 8)`` int64 arrays (caller bounds the sizes)."""
    return np.einsum("ni,nj,ijk->nk", x, y, _tensor())


def trace_array(x: np.ndarray) -> np.ndarray:
    """Exact traces as ``(n, 2)`` rows ``(p, q)`` meaning ``p + q sqrt2``."""
    tr = octagon_order().basis_traces
    p = np.zeros(len(x), dtype=np.int64)
    q = np.zeros(len(x), dtype=np.int64)
    for k in range(4):
        a, b = x[:, 2 * k], x[:, 2 * k + 1]
        p += a * tr[k][0] + 2 * b * tr[k][1]
        q += a * tr[k][1] + b * tr[k][0]
    return np.stack([p, q], axis=1)


_T = None


def _tensor() -> np.ndarray:
    global _T
    if _T is None:
        _T = mult_tensor()
    return _T
