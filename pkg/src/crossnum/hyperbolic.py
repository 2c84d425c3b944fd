"""Upper half-plane geometry for a Fuchsian representation of the surface group."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .algebra import octagon_matrices, octagon_order
from .words import Word, free_reduce

INF = math.inf
TOL_GEOM = 1e-9


class GeometryError(ValueError):
    pass


class NotHyperbolicError(GeometryError):
    pass


class DegenerateConfigurationError(GeometryError):
    """Endpoints coincide within tolerance; increase precision or perturb."""


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class Isometry:
    """Element of PSL(2,R); equality is up to global sign."""

    matrix: np.ndarray

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(np.eye(2))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(self.matrix @ other.matrix)

    def inverse(self) -> "Isometry":
        (a, b), (c, d) = self.matrix
        return Isometry(np.array([[d, -b], [-c, a]]))

    def __call__(self, z):
        return mobius(self.matrix, z)

    def close_to(self, other: "Isometry", tol: float = 1e-9) -> bool:
        scale = max(1.0, float(np.abs(self.matrix).max()))
        return bool(
            np.allclose(self.matrix, other.matrix, atol=tol * scale)
            or np.allclose(self.matrix, -other.matrix, atol=tol * scale)
        )

    def line_image(self, line: "GeodesicLine") -> "GeodesicLine":
        return GeodesicLine(self(line.endpoint_neg), self(line.endpoint_pos))

    def translation_length(self) -> float:
        t = abs(self.trace)
        return 2 * math.acosh(t / 2) if t > 2 else 0.0


def mobius(m: np.ndarray, z):
    (a, b), (c, d) = m
    if isinstance(z, float) and math.isinf(z):
        return INF if c == 0 else a / c
    den = c * z + d
    if den == 0:
        return INF
    w = (a * z + b) / den
    if isinstance(w, complex):
        # imaginary part from the determinant keeps its relative precision near the boundary
        w = complex(w.real, (a * d - b * c) * z.imag / abs(den) ** 2)
    return w


@dataclass(frozen=True)
class GeodesicLine:
    """Oriented geodesic from ``endpoint_neg`` to ``endpoint_pos`` (reals or INF)."""

    endpoint_neg: float
    endpoint_pos: float

    def __post_init__(self):
        if self.endpoint_neg == self.endpoint_pos:
            raise DegenerateConfigurationError("geodesic endpoints must be distinct")

    def reversed(self) -> "GeodesicLine":
        return GeodesicLine(self.endpoint_pos, self.endpoint_neg)

    def frame(self) -> np.ndarray:
        """Matrix sending 0 -> neg, INF -> pos and i to the marked foot point."""
        p, q = self.endpoint_neg, self.endpoint_pos
        if math.isinf(q):
            m = np.array([[1.0, p], [0.0, 1.0]])
        elif math.isinf(p):
            m = np.array([[0.0, -1.0], [1.0, -q]])
        else:
            # z -> (q z + p) / (z + 1) sends 0 -> p, INF -> q, i -> apex
            m = np.array([[q, p], [1.0, 1.0]])
        det = np.linalg.det(m)
        if det < 0:
            # compose with z -> -z on the source side, keeps 0 and INF fixed
            m = m @ np.array([[-1.0, 0.0], [0.0, 1.0]])
            det = -det
        return m / math.sqrt(det)

    def point_at(self, t: float) -> complex:
        return mobius(self.frame(), complex(0.0, math.exp(t)))

    def parameter_of(self, z: complex) -> float:
        """Signed arc length of the foot of ``z`` on this line."""
        w = mobius(_inv(self.frame()), z)
        return 0.5 * math.log(abs(w) ** 2) if not isinstance(w, float) else math.copysign(INF, 1)

    def distance_to(self, z: complex) -> float:
        w = mobius(_inv(self.frame()), z)
        return math.asinh(abs(w.real) / w.imag)


def _inv(m: np.ndarray) -> np.ndarray:
    (a, b), (c, d) = m
    return np.array([[d, -b], [-c, a]])


def hyperbolic_distance(z: complex, w: complex) -> float:
    return math.acosh(1 + abs(z - w) ** 2 / (2 * z.imag * w.imag))


@dataclass(frozen=True)
class GeodesicSegment:
    carrier: GeodesicLine
    t0: float
    t1: float

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise GeometryError("segment parameter interval must be nonempty")

    @property
    def length(self) -> float:
        return self.t1 - self.t0

    def endpoints(self) -> tuple[complex, complex]:
        return self.carrier.point_at(self.t0), self.carrier.point_at(self.t1)

    def image(self, g: Isometry) -> "GeodesicSegment":
        p, q = self.endpoints()
        return segment_between(g(p), g(q))


def segment_between(p: complex, q: complex) -> GeodesicSegment:
    if abs(p.real - q.real) <= 1e-15 * max(1.0, abs(p.real)):
        line = GeodesicLine(p.real, INF) if q.imag > p.imag else GeodesicLine(INF, p.real)
    else:
        # center on the real axis equidistant from p and q
        c = (abs(q) ** 2 - abs(p) ** 2) / (2 * (q.real - p.real))
        r = abs(p - c)
        lo, hi = c - r, c + r
        line = GeodesicLine(lo, hi) if q.real > p.real else GeodesicLine(hi, lo)
    return GeodesicSegment(line, line.parameter_of(p), line.parameter_of(q))


@dataclass(frozen=True)
class FuchsianRep:
    images: dict
    tol_geom: float = TOL_GEOM
    systole_estimate: float = 0.0
    systole_radius: int = 0
    name: str = "octagon"

    def evaluate(self, w: Word) -> Isometry:
        m = np.eye(2)
        for x in w:
            m = m @ self.images[x].matrix
        return Isometry(m)


def octagon_rep(genus: int = 2, tol_geom: float = TOL_GEOM) -> FuchsianRep:
    """Regular octagon with interior angles pi/4, sides paired by [a1,b1][a2,b2]."""
    if genus != 2:
        raise NotImplementedError("only the genus-2 octagon representation ships")
    from .ball import enumerate_ball

    images = {g: Isometry(m) for g, m in octagon_matrices().items()}
    rep = FuchsianRep(images=images, tol_geom=tol_geom)
    return with_systole(rep, enumerate_ball(4))


def evaluate(rep: FuchsianRep, w: Word) -> Isometry:
    if rep.name == "octagon":
        return Isometry(octagon_order().to_matrix(octagon_order().evaluate(free_reduce(w))))
    return rep.evaluate(w)


def fixed_points(g: Isometry) -> tuple[float, float]:
    """(repelling, attracting) fixed points of a hyperbolic isometry."""
    m = g.matrix if g.trace > 0 else -g.matrix
    (a, b), (c, d) = m
    tr = a + d
    disc = math.sqrt(tr * tr - 4)
    lam = (tr + disc) / 2  # eigenvalue > 1
    # (mu - d)/c = b/(mu - a) since (mu - a)(mu - d) = bc; use the larger denominator
    x_big = _eigvec_ratio(lam, a, b, c, d)
    x_small = _eigvec_ratio(1 / lam, a, b, c, d)
    return x_small, x_big


def _eigvec_ratio(mu, a, b, c, d) -> float:
    den1, den2 = c, mu - a
    if max(abs(den1), abs(den2)) == 0:
        return INF  # upper triangular with eigenvector (1, 0)
    if abs(den1) >= abs(den2):
        return (mu - d) / den1
    return b / den2 if den2 != 0 else INF


def axis_and_length(g: Isometry, tol: float = TOL_GEOM) -> tuple[GeodesicLine, float]:
    t = abs(g.trace)
    if t <= 2 + tol:
        raise NotHyperbolicError(f"|trace| = {t:.12g} is not > 2")
    rep, att = fixed_points(g)
    return GeodesicLine(rep, att), 2 * math.acosh(t / 2)


def _cyclic_chart(points: list[float]) -> list[float]:
    # Cayley transform z -> (z - i)/(z + i): the boundary goes to the unit
    # circle, x to angle pi - 2 atan(x) in [0, 2 pi), INF to 0
    return [0.0 if math.isinf(p) else math.pi - 2 * math.atan(p) for p in points]


def linked(l1: GeodesicLine, l2: GeodesicLine, tol: float = TOL_GEOM) -> bool:
    """True iff the endpoints of the two lines separate each other on the circle."""
    pts = [l1.endpoint_neg, l1.endpoint_pos, l2.endpoint_neg, l2.endpoint_pos]
    for i in range(4):
        for j in range(i + 1, 4):
            a, b = pts[i], pts[j]
            if math.isinf(a) and math.isinf(b):
                raise DegenerateConfigurationError("two endpoints at infinity")
            if not (math.isinf(a) or math.isinf(b)) and abs(a - b) <= tol * max(1.0, abs(a), abs(b)):
                raise DegenerateConfigurationError(f"endpoints {a!r} and {b!r} coincide")
    x1, y1, x2, y2 = _cyclic_chart(pts)
    lo, hi = min(x1, y1), max(x1, y1)
    return (lo < x2 < hi) != (lo < y2 < hi)


@dataclass(frozen=True)
class TrapWitness:
    alpha_eps: GeodesicSegment
    beta_eps: GeodesicSegment
    epsilon: float
    crossing_point: complex
    angle: float


def crossing_data(alpha: GeodesicLine, beta: GeodesicLine, tol: float = TOL_GEOM):
    """Crossing point, angle and the crossing parameters on alpha and beta."""
    if not linked(alpha, beta, tol):
        raise GeometryError("lines do not cross")
    finv = _inv(alpha.frame())
    p = mobius(finv, beta.endpoint_neg)
    q = mobius(finv, beta.endpoint_pos)
    y = math.sqrt(-p * q)
    c0, r = (p + q) / 2, abs(q - p) / 2
    # beta oriented from p to q; angle from alpha's direction (up) to beta's
    cos_t = c0 / r if q > p else -c0 / r
    angle = math.acos(max(-1.0, min(1.0, cos_t)))
    z = mobius(alpha.frame(), complex(0.0, y))
    return z, angle, math.log(y), beta.parameter_of(z)


def trap_half_length(angle: float, eps: float) -> float:
    return math.asinh(math.sinh(2 * eps) / math.sin(angle))


def trap_segment(alpha: GeodesicLine, beta: GeodesicLine, eps: float, tol: float = TOL_GEOM) -> TrapWitness:
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    z, angle, ta, tb = crossing_data(alpha, beta, tol)
    t = trap_half_length(angle, eps)
    return TrapWitness(
        alpha_eps=GeodesicSegment(alpha, ta - t, ta + t),
        beta_eps=GeodesicSegment(beta, tb - t, tb + t),
        epsilon=eps,
        crossing_point=z,
        angle=angle,
    )


def segments_cross(s1: GeodesicSegment, s2: GeodesicSegment, tol: float = TOL_GEOM) -> bool:
    try:
        if not linked(s1.carrier, s2.carrier, tol):
            return False
    except DegenerateConfigurationError:
        return False
    _, _, t1, t2 = crossing_data(s1.carrier, s2.carrier, tol)
    return s1.t0 < t1 < s1.t1 and s2.t0 < t2 < s2.t1


def _crossing_lift(rep: FuchsianRep, gamma: Word, ball, tol: float):
    """Some ``h`` in the ball with ``h . axis(gamma)`` crossing ``axis(gamma)``."""
    u = evaluate(rep, gamma)
    axis, _ = axis_and_length(u, tol)
    T = _inv(axis.frame())
    mats = np.einsum("ij,njk,kl->nil", T, ball.matrices, axis.frame())
    a, b, c, d = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        good = (a * b * c * d < 0) & (np.abs(b / d) > 1e-8) & (np.abs(c / a) > 1e-8)
    idx = np.flatnonzero(good)
    if len(idx) == 0:
        raise PreconditionError("no crossing lift found; gamma must have positive crossing number")
    # lowest index is the shortlex-least conjugator
    return ball.word(int(idx[0]))


def stable_intersection_check(
    rep: FuchsianRep,
    gamma: Word,
    sigma: GeodesicSegment,
    eps: float,
    ball=None,
    tol: float = TOL_GEOM,
    lift: Word | None = None,
) -> bool:
    """Look for two deck translates of ``sigma`` that cross transversely.

    ``sigma`` must be eps-close to a segment of ``axis(gamma)`` and longer
    than ``2 length(gamma) + 4 eps``. ``lift`` picks the crossing conjugator
    h (``h . axis`` crosses ``axis``); by default the shortlex-least in the ball.
    """
    u = evaluate(rep, gamma)
    axis, ell = axis_and_length(u, tol)
    if 8 * eps >= rep.systole_estimate:
        raise PreconditionError(f"eps too large: 8*eps = {8 * eps:.6g} >= systole {rep.systole_estimate:.6g}")
    if sigma.length <= 2 * ell + 4 * eps:
        raise PreconditionError(
            f"sigma too short: length {sigma.length:.6g} <= 2*{ell:.6g} + 4*eps"
        )
    if lift is None:
        if ball is None:
            from .ball import cached_ball

            ball = cached_ball(5)
        lift = _crossing_lift(rep, gamma, ball, tol)
    h = evaluate(rep, lift)
    trap = trap_segment(axis, h.line_image(axis), eps, tol)

    # Work in the frame where the axis is 0 -> INF and the trap centre is i;
    # there u is z -> e^ell z and every relevant point stays near i.
    ta = (trap.alpha_eps.t0 + trap.alpha_eps.t1) / 2
    F = axis.frame() @ np.diag([math.exp(ta / 2), math.exp(-ta / 2)])
    Finv = Isometry(_inv(F))
    hn = Finv @ h @ Isometry(F)
    p, q = (Finv(z) for z in sigma.endpoints())
    # a deck power of u moves sigma's midpoint next to the trap; translates are unchanged as a set
    k = -round((math.log(abs(p)) + math.log(abs(q))) / 2 / ell)
    sn = segment_between(p * math.exp(k * ell), q * math.exp(k * ell))
    imag_axis = GeodesicLine(0.0, INF)
    s0, s1 = sorted(imag_axis.parameter_of(z) for z in sn.endpoints())
    half = trap.alpha_eps.length / 2
    target = GeodesicSegment(imag_axis, -half, half)
    ua = _translates_covering(ell, s0, s1, target)
    # translates near beta are hn u^j sigma; beta's trap is hn of a window on the axis
    c = imag_axis.parameter_of(hn.inverse()(1j))
    ub = _translates_covering(ell, s0, s1, GeodesicSegment(imag_axis, c - half, c + half))
    for i in ua:
        for j in ub:
            g1 = _dilation(i * ell)
            g2 = hn @ _dilation(j * ell)
            if segments_cross(sn.image(g1), sn.image(g2), tol):
                return True
    return False


def _dilation(t: float) -> Isometry:
    return Isometry(np.diag([math.exp(t / 2), math.exp(-t / 2)]))


def _translates_covering(ell, s0, s1, target: GeodesicSegment) -> list[int]:
    # translating by k ell: want s0 + k ell <= target.t0 and s1 + k ell >= target.t1, with one step of slack
    lo = math.ceil((target.t1 - s1) / ell) - 1
    hi = math.floor((target.t0 - s0) / ell) + 1
    return list(range(lo, hi + 1))


def point_near(z: complex, r: float, theta: float) -> complex:
    """The point at hyperbolic distance ``r`` from ``z`` in direction ``theta``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    w = mobius(np.array([[c, s], [-s, c]]), complex(0.0, math.exp(r)))
    sy = math.sqrt(z.imag)
    return mobius(np.array([[sy, z.real / sy], [0.0, 1 / sy]]), w)


def perturb_segment(sigma: GeodesicSegment, eps: float, seed: int) -> GeodesicSegment:
    """Move both endpoints by less than ``eps``; the result stays eps-close to ``sigma``."""
    rng = random.Random(seed)
    p, q = sigma.endpoints()
    moved = [point_near(z, rng.uniform(0, eps) * 0.999, rng.uniform(0, 2 * math.pi)) for z in (p, q)]
    return segment_between(*moved)


def perturb(g_seed: int, scale: float) -> Isometry:
    """Random isometry moving points near i by less than ``scale``."""
    rng = random.Random(g_seed)
    theta = rng.uniform(-math.pi, math.pi)
    t = rng.uniform(0, scale / 3)
    phi = rng.uniform(-scale / 3, scale / 3)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    rot = np.array([[c, s], [-s, c]])
    lift = np.diag([math.exp(t / 2), math.exp(-t / 2)])
    cp, sp = math.cos(phi / 2), math.sin(phi / 2)
    spin = np.array([[cp, sp], [-sp, cp]])
    return Isometry(rot @ lift @ rot.T @ spin)


@dataclass(frozen=True)
class CayleyContext:
    radius: int
    delta_estimate: float
    qi_K: float
    qi_eps: float
    samples: int = 0
    extras: dict = field(default_factory=dict)

    def word_length_bound(self, displacement: float) -> float:
        """Upper bound for word length implied by the fitted quasi-isometry."""
        return self.qi_K * (displacement + self.qi_eps)


def displacements(ball) -> np.ndarray:
    """Hyperbolic distance from i to g(i) for every ball element."""
    m = ball.matrices
    fro2 = np.einsum("nij,nij->n", m, m)
    return np.arccosh(np.maximum(fro2 / 2, 1.0))


def estimate_context(rep: FuchsianRep, ball, samples: int = 2000, seed: int = 0) -> CayleyContext:
    if ball.radius < 4:
        raise PreconditionError("estimate_context needs a ball of radius >= 4")
    dh = displacements(ball)
    dw = ball.lengths.astype(float)
    nz = dw > 0
    eps = float(dh[ball.sphere(1)].max())  # one generator step
    K = max(float((dh[nz] / dw[nz]).max()), float((dw[nz] / (dh[nz] + eps)).max()), 1.0)
    delta = _gromov_delta(ball, samples, seed)
    return CayleyContext(radius=ball.radius, delta_estimate=delta, qi_K=K, qi_eps=eps, samples=samples)


def _gromov_delta(ball, samples: int, seed: int) -> float:
    from .words import inverse

    rng = random.Random(seed)
    r = ball.radius // 2
    n = ball.count_within(r)
    worst = 0.0

    def dist(i, j):
        idx = ball.locate(inverse(ball.word(i)) + ball.word(j))
        return float(ball.lengths[idx])

    for _ in range(samples):
        x, y, z = (rng.randrange(n) for _ in range(3))
        lx, ly, lz = (float(ball.lengths[k]) for k in (x, y, z))
        gxy = (lx + ly - dist(x, y)) / 2
        gyz = (ly + lz - dist(y, z)) / 2
        gxz = (lx + lz - dist(x, z)) / 2
        worst = max(worst, min(gxy, gyz) - gxz)
    return worst


def systole_lowerbound(rep: FuchsianRep, ball) -> float:
    """Minimum translation length over nontrivial ball elements."""
    if ball.radius < 4:
        raise PreconditionError("systole_lowerbound needs a ball of radius >= 4")
    m = ball.matrices[1:]
    tr = np.abs(m[:, 0, 0] + m[:, 1, 1])
    return float(2 * np.arccosh(tr.min() / 2))


def with_systole(rep: FuchsianRep, ball) -> FuchsianRep:
    from dataclasses import replace

    return replace(rep, systole_estimate=systole_lowerbound(rep, ball), systole_radius=ball.radius)
