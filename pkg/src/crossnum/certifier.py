"""Table-certified lower bounds on word length in the generating sets S_n.

For a homogeneous quasimorphism phi and any generating set T,
``|phi(g)| <= w_T(g) * (sup_T |phi| + D(phi))``. With phi the homogenization
of a counting quasimorphism built along the axis of (a power of) ``a``, this
gives ``w_n(a^m) >= m * slope``. Every bound here is against the enumerated
S_n table only and is labelled as such.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import hash_coords, inverse_array, multiply_array, normalize_sign, normalize_sign_array, octagon_order
from .ball import BallTable, ResourceLimitError, cached_ball
from .config import Config
from .crossing import SnTable, crossing_number, enumerate_Sn, octagon_rep_cached
from .hyperbolic import axis_and_length, estimate_context, evaluate
from .quasimorphism import (
    BallTooSmallError,
    CountingQuasimorphism,
    NotAxisLikeWarning,
    PathPattern,
    axis_pattern,
    count_disjoint_copies,
    defect_estimate,
    homogenize,
)
from .words import CyclicWord, Word, cyclic_reduce, format_word, free_reduce, parse_word, power, random_word

SCHEMA_VERSION = 1
CSV_HEADER = "n,m,lower,upper,slope"
VALIDITY = "table-certified"
DEFECT_CAVEAT = "defect estimated by sampling"


class CertificationRefused(Exception):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass
class LedgerEntry:
    value: object
    provenance: dict

    def to_json(self) -> dict:
        value = self.value
        if isinstance(value, Fraction):
            value = str(value)
        return {"value": value, "provenance": self.provenance}


class ConstantsLedger:
    """Measured stand-ins for the existential constants, each with its provenance."""

    def __init__(self):
        self.entries: dict[str, LedgerEntry] = {}

    def add(self, name: str, value, **provenance):
        if not provenance:
            raise ValueError(f"ledger entry {name!r} needs provenance")
        self.entries[name] = LedgerEntry(value, provenance)

    def __getitem__(self, name: str):
        return self.entries[name].value

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def to_json(self) -> dict:
        return {k: e.to_json() for k, e in sorted(self.entries.items())}


# ------------------------------------------------------------------ upper bounds


@dataclass
class UpperBound:
    value: int | None  # None: not reached
    factors: tuple[Word, ...] = ()
    source: str = "search"

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "reached": self.value is not None,
            "source": self.source,
            "factors": [format_word(f) for f in self.factors],
        }


def _dedupe(coords: np.ndarray):
    h = hash_coords(coords)
    _, first = np.unique(h, return_index=True)
    return np.sort(first)


def wordlength_upper(a: Word, table: SnTable, depth: int = 6, *, max_layer: int = 2_000_000) -> UpperBound:
    """Fewest table elements whose product is ``a``, searching products of at most ``depth``.

    Meet in the middle: layers F_k of k-fold products are grown from both
    ends and matched. A miss at this depth is reported, not raised.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    order = octagon_order()
    target = normalize_sign(order.evaluate(free_reduce(a)))
    if target == order.identity:
        return UpperBound(0)
    elems = [tuple(e) for e in table.elements]
    tcoords = np.array([normalize_sign(order.evaluate(e)) for e in elems], dtype=np.int64)
    right = np.stack([_right_of(c) for c in tcoords])  # (t, 8, 8)

    layers = [np.array([order.identity], dtype=np.int64)]
    parents: list[tuple[np.ndarray, np.ndarray]] = [(np.array([-1]), np.array([-1]))]
    seen = set(hash_coords(layers[0]).tolist())
    half = (depth + 1) // 2
    for _ in range(half):
        cur = layers[-1]
        if len(cur) * len(elems) > max_layer or np.abs(cur).max() >= 1 << 40:
            break
        nxt = np.einsum("ni,tij->ntj", cur, right).reshape(-1, 8)
        nxt = normalize_sign_array(nxt)
        par = np.repeat(np.arange(len(cur)), len(elems))
        fac = np.tile(np.arange(len(elems)), len(cur))
        keep = _dedupe(nxt)
        h = hash_coords(nxt[keep])
        fresh = np.array([x not in seen for x in h.tolist()], dtype=bool)
        keep = keep[fresh]
        seen.update(h[fresh].tolist())
        layers.append(nxt[keep])
        parents.append((par[keep], fac[keep]))

    def factors_of(k: int, idx: int) -> list[Word]:
        out = []
        while k > 0:
            p, f = parents[k]
            out.append(elems[int(f[idx])])
            idx = int(p[idx])
            k -= 1
        return out[::-1]

    # index every forward layer by hash
    index = {}
    for k, layer in enumerate(layers):
        for i, h in enumerate(hash_coords(layer).tolist()):
            index.setdefault(h, (k, i))

    tarr = np.array([target], dtype=np.int64)
    best = None
    for j in range(len(layers)):
        # target * g^-1 for g in layer j; a hit in layer i gives i + j factors
        back = normalize_sign_array(multiply_array(np.repeat(tarr, len(layers[j]), axis=0), inverse_array(layers[j])))
        for r, h in enumerate(hash_coords(back).tolist()):
            hit = index.get(h)
            if hit is None:
                continue
            i, fi = hit
            if not np.array_equal(layers[i][fi], back[r]) or i + j > depth:
                continue
            if best is None or i + j < best[0]:
                best = (i + j, factors_of(i, fi) + factors_of(j, r))
    if best is None:
        return UpperBound(None)
    return UpperBound(best[0], tuple(best[1]))


def _right_of(c) -> np.ndarray:
    from .ball import _mult_matrix

    m = _mult_matrix(octagon_order(), tuple(int(x) for x in c), side="right")
    if m is None:
        raise ResourceLimitError("table element too large for the int64 product search")
    return m


def product_equals(factors, a: Word) -> bool:
    order = octagon_order()
    x = order.identity
    for f in factors:
        x = order.multiply(x, order.evaluate(f))
    return normalize_sign(x) == normalize_sign(order.evaluate(free_reduce(a)))


# ------------------------------------------------------------------ lower bounds


def qm_lower_bound(m: int, hbar: Fraction, err: Fraction, sup: Fraction, defect: Fraction) -> Fraction:
    """``m (hbar - err) / (sup + defect)``; refuses when the numerator or denominator is not positive."""
    if hbar - err <= 0:
        raise CertificationRefused("homogenized value minus its error is not positive")
    if sup + defect <= 0:
        raise CertificationRefused("sup + defect is zero; the defect estimate saw no defect")
    return Fraction(m) * (hbar - err) / (sup + defect)


@dataclass
class BoundCertificate:
    target: Word
    n: int
    m_range: tuple[int, int]
    pattern: Word
    power_multiplier: int
    conjugate: Word
    N: int
    hbar: Fraction
    hbar_error: Fraction
    defect: Fraction
    sup: Fraction
    slope: Fraction
    lower: dict
    upper: dict
    ledger: ConstantsLedger
    status: str
    witnesses: dict = field(default_factory=dict)
    structural_check: dict = field(default_factory=dict)
    table: SnTable | None = None

    def to_json(self) -> dict:
        lo, hi = self.m_range
        return {
            "schema_version": SCHEMA_VERSION,
            "validity": VALIDITY,
            "caveat": DEFECT_CAVEAT,
            "status": self.status,
            "target": format_word(self.target),
            "n": self.n,
            "m_range": [lo, hi],
            "pattern": format_word(self.pattern),
            "power_multiplier": self.power_multiplier,
            "conjugate": format_word(self.conjugate),
            "N": self.N,
            "hbar": str(self.hbar),
            "hbar_error": str(self.hbar_error),
            "defect": str(self.defect),
            "sup": str(self.sup),
            "slope": str(self.slope),
            "slope_float": float(self.slope),
            "bounds": [
                {
                    "m": m,
                    "lower": str(self.lower[m]),
                    "lower_float": float(self.lower[m]),
                    "upper": self.upper[m].to_json(),
                }
                for m in range(lo, hi + 1)
            ],
            "ledger": self.ledger.to_json(),
            "witnesses": self.witnesses,
            "structural_check": self.structural_check,
            "table": self.table.to_json() if self.table is not None else None,
        }


def _conjugates_of_power(a: Word, k: int):
    _, core = cyclic_reduce(power(a, k))
    seen = set()
    for i in range(len(core)):
        rot = core[i:] + core[:i]
        if rot not in seen:
            seen.add(rot)
            yield rot


def _choose_N(config: Config, ell: float, c4: float, eps: float) -> tuple[int, int]:
    """(chosen N, smallest N meeting N*ell - C4 > 2*ell + 4*eps)."""
    n_ineq = max(2, math.floor((c4 + 4 * eps) / ell) + 3)
    while (n_ineq - 1) >= 2 and (n_ineq - 1) * ell - c4 > 2 * ell + 4 * eps:
        n_ineq -= 1
    if config.n_policy == "min":
        return 2, n_ineq
    if config.n_policy == "inequality":
        return n_ineq, n_ineq
    return int(config.n_policy), n_ineq


def _defect_samples(pattern: PathPattern, b: Word, N: int, count: int, seed: int):
    """Random short pairs plus every split of the pattern word and of b^(2N)."""
    rng = random.Random(seed)
    pairs = []
    for _ in range(count):
        x = random_word(rng.randint(1, 4), rng.randrange(1 << 30))
        y = random_word(rng.randint(1, 4), rng.randrange(1 << 30))
        pairs.append((x, y))
    for w in (pattern.word, power(b, 2 * N)):
        for i in range(1, len(w)):
            pairs.append((w[:i], w[i:]))
    return pairs


def certify(
    a: Word,
    n: int,
    m_range: tuple[int, int],
    config: Config | None = None,
    *,
    table_radius: int = 2,
    max_power: int = 2,
    defect_samples: int = 200,
    upper_depth: int = 6,
    ball: BallTable | None = None,
    table: SnTable | None = None,
    cache=None,
) -> BoundCertificate:
    config = config or Config()
    a = free_reduce(a)
    lo, hi = m_range
    if not 1 <= lo <= hi:
        raise ValueError("m_range must satisfy 1 <= lo <= hi")
    rep = octagon_rep_cached()
    ball = ball or cached_ball(config.ball_radius, max_elements=config.max_elements, max_bytes=config.max_bytes)
    ledger = ConstantsLedger()
    witnesses: dict = {}

    report = crossing_number(a, rep)
    witnesses["crossing"] = report.to_json()
    if not report.stabilized:
        raise CertificationRefused("crossing report did not stabilize")
    if report.crossing_number == 0:
        raise CertificationRefused("crossing number is 0; the bound needs cr(a) > 0")

    eps = config.epsilon(rep.systole_estimate)
    ledger.add("epsilon", eps, source=f"epsilon_policy={config.epsilon_policy}",
               systole_estimate=rep.systole_estimate, measurement_radius=rep.systole_radius)
    ctx = estimate_context(rep, ball, samples=2000, seed=config.seed)
    c4 = ctx.qi_K * ctx.qi_eps + 2 * ctx.delta_estimate
    ledger.add("neighborhood_constant", c4, source="qi_K * qi_eps + 2 * delta over the ball",
               measurement_radius=ball.radius, samples=ctx.samples,
               qi_K=ctx.qi_K, qi_eps=ctx.qi_eps, delta=ctx.delta_estimate)

    # (1) an axis-like conjugate b of a small power a^k; (2) N; (3) sigma
    chosen = None
    tried = []
    for k in range(1, max_power + 1):
        for b in _conjugates_of_power(a, k):
            _, ell = axis_and_length(evaluate(rep, b))
            N, n_ineq = _choose_N(config, ell, c4, eps)
            try:
                import warnings

                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", NotAxisLikeWarning)
                    sigma = axis_pattern(b, N, ball)
            except (BallTooSmallError, ResourceLimitError) as exc:
                tried.append((format_word(b), str(exc)))
                continue
            tried.append((format_word(b), "axis-like" if sigma.axis_like else "not axis-like"))
            if sigma.axis_like:
                chosen = (k, b, ell, N, n_ineq, sigma)
                break
        if chosen:
            break
    if chosen is None:
        raise CertificationRefused(f"no axis-like power within caps (tried {tried})")
    k, b, ell, N, n_ineq, sigma = chosen
    ledger.add("power_multiplier", k, source="least k with an axis-like cyclic conjugate of a^k",
               test="word_length(b^2N) = 2 word_length(b^N)", measurement_radius=ball.radius)
    ledger.add("N", N, source=f"n_policy={config.n_policy}", inequality_N=n_ineq,
               inequality_holds=bool(N * ell - c4 > 2 * ell + 4 * eps), translation_length=ell)

    qm = CountingQuasimorphism(sigma, ball)
    status = "issued"

    # (4) h(b^(N m)) = m and c_{sigma^-1}(b^(N m)) = 0 where computable
    axis = {}
    for m in (1, 2):
        try:
            ev = qm.evaluate(power(b, N * m))
        except (BallTooSmallError, ResourceLimitError):
            break
        ok = ev.h_sigma == m and ev.c_sigma_inv == 0
        axis[m] = ok
        witnesses.setdefault("axis_checks", []).append({"m": m, "passed": ok, **ev.to_json()})
        if not ok:
            status = "empirical-assumption failed"
    if not axis:
        status = "empirical-assumption failed"
    ledger.add("axis_check_range", sorted(axis), source="h_sigma(b^(N m)) = m and c_{sigma^-1} = 0",
               measurement_radius=ball.radius)

    # (5) homogenized value, table sup, defect
    est = homogenize(sigma, b, ball, schedule=(N, 2 * N), axis_of=(b, N), qm=qm)
    witnesses["homogenization"] = est.to_json()
    if est.truncated or len(est.schedule) < 2:
        raise CertificationRefused("homogenization schedule truncated by the ball")
    hbar = est.limit / k
    err = est.error / k
    ledger.add("hbar", hbar, source=f"h_sigma(b^n)/n at n = {est.schedule}, divided by k",
               error=str(err), measurement_radius=ball.radius)

    if table is None:
        table = enumerate_Sn(n, table_radius, ball=cached_ball(max(table_radius + 1, 6)), cache=cache)
    sup = Fraction(0)
    sup_at = None
    for e in table.elements:
        e_est = homogenize(sigma, e, ball, schedule=(1, 2, 4), qm=qm)
        bound = abs(e_est.limit) + e_est.error
        if bound > sup:
            sup, sup_at = bound, e
    ledger.add("sup_table", sup, source="max over table of |hbar| + error, schedule (1, 2, 4)",
               table_size=len(table.elements), table_radius=table.radius, n=n,
               attained_at=format_word(sup_at) if sup_at else None)

    pairs = _defect_samples(sigma, b, N, defect_samples, config.seed)
    d_meas = defect_estimate(sigma, pairs, ball, qm=qm)
    defect = Fraction(2 * d_meas)
    ledger.add("defect", defect, source="2 x sampled defect of h_sigma (homogenization at most doubles it)",
               measured=d_meas, samples=len(pairs), seed=config.seed)

    # structural check p^2 <= k^2 n over the table
    structural = {"holds": True, "violations": []}
    for e in table.elements:
        p = count_disjoint_copies(e, sigma)
        if p * p > k * k * n:
            structural["holds"] = False
            structural["violations"].append({"element": format_word(e), "copies": p})
    if not structural["holds"]:
        raise CertificationRefused("structural check p^2 <= k^2 n failed on the table")

    # (6) per-m bounds
    slope = qm_lower_bound(1, hbar, err, sup, defect)
    lower = {m: slope * m for m in range(lo, hi + 1)}
    upper = {}
    base = wordlength_upper(a, table, upper_depth)
    for m in range(lo, hi + 1):
        ub = wordlength_upper(power(a, m), table, upper_depth)
        if ub.value is None and base.value is not None:
            ub = UpperBound(base.value * m, base.factors * m, "subadditive")
        upper[m] = ub
        if ub.value is not None and lower[m] > ub.value:
            raise CertificationRefused(f"soundness sandwich violated at m = {m}")

    return BoundCertificate(
        target=a, n=n, m_range=(lo, hi), pattern=sigma.word, power_multiplier=k, conjugate=b, N=N,
        hbar=hbar, hbar_error=err, defect=defect, sup=sup, slope=slope, lower=lower, upper=upper,
        ledger=ledger, status=status, witnesses=witnesses, structural_check=structural, table=table,
    )


def verify_certificate(data: dict) -> list[str]:
    """Offline re-check of a certificate's JSON: arithmetic, witnesses and factorizations."""
    problems = []
    order = octagon_order()
    if data.get("schema_version") != SCHEMA_VERSION:
        problems.append("schema_version mismatch")
    hbar, err = Fraction(data["hbar"]), Fraction(data["hbar_error"])
    sup, defect = Fraction(data["sup"]), Fraction(data["defect"])
    slope = Fraction(data["slope"])
    if sup + defect <= 0 or slope != (hbar - err) / (sup + defect):
        problems.append("slope does not match its ingredients")
    if slope <= 0:
        problems.append("slope is not positive")
    target = parse_word(data["target"])
    table = {parse_word(w) for w in data["table"]["elements"]} if data.get("table") else None
    for row in data["bounds"]:
        m = row["m"]
        if Fraction(row["lower"]) != slope * m:
            problems.append(f"lower bound at m = {m} is not slope * m")
        up = row["upper"]
        if up["reached"]:
            factors = [parse_word(f) for f in up["factors"]]
            if len(factors) != up["value"]:
                problems.append(f"factor count at m = {m} differs from the upper bound")
            if not product_equals(factors, power(target, m)):
                problems.append(f"factors at m = {m} do not multiply to a^m")
            if table is not None and any(f not in table for f in factors):
                problems.append(f"factor outside the table at m = {m}")
            if Fraction(row["lower"]) > up["value"]:
                problems.append(f"lower exceeds upper at m = {m}")
    pattern = PathPattern(parse_word(data["pattern"]))
    for check in data.get("witnesses", {}).get("axis_checks", []):
        tgt = normalize_sign(order.evaluate(parse_word(check["target"])))
        for key, pat in (("realizing_word", pattern), ("realizing_word_inv", pattern.inverse())):
            w = parse_word(check[key])
            if normalize_sign(order.evaluate(w)) != tgt:
                problems.append(f"{key} does not evaluate to its target")
            value = check["stats"]["distance"] - (len(w) - count_disjoint_copies(w, pat))
            claimed = check["c_sigma"] if key == "realizing_word" else check["c_sigma_inv"]
            if value != claimed:
                problems.append(f"{key} does not realize the claimed c value")
    return problems


@dataclass
class ScalingReport:
    rows: list
    refusals: list

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for n, m, lower, upper, slope in self.rows:
            up = "" if upper is None else str(upper)
            lines.append(f"{n},{m},{float(lower):.10g},{up},{float(slope):.10g}")
        if self.refusals:
            lines.append("# refused:")
            lines += [f"# n={n}: {reason}" for n, reason in self.refusals]
        return "\n".join(lines) + "\n"


def scaling_report(a: Word, n_list, m_range, config: Config | None = None, **kw) -> ScalingReport:
    rows, refusals = [], []
    for n in n_list:
        try:
            cert = certify(a, n, m_range, config, **kw)
        except CertificationRefused as exc:
            refusals.append((n, exc.reason))
            continue
        for m in range(m_range[0], m_range[1] + 1):
            rows.append((n, m, cert.lower[m], cert.upper[m].value, cert.slope))
    return ScalingReport(rows, refusals)
