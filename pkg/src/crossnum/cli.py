"""Command-line front end.

Words use letters a1 b1 a2 b2, uppercase for inverses, whitespace separated:
``"a1 b1 A1 B1"``. Exit codes: 0 success, 1 refusal (a valid negative
outcome), 2 usage or configuration error, 3 resource cap reached,
4 internal error (a report failed its own schema; nothing is written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .ball import ResourceLimitError, load_or_build_ball
from .cache import DiskCache, atomic_write_text
from .config import Config, ConfigError, load_config
from .quasimorphism import BallTooSmallError
from .words import WordParseError, alphabet, letter_name, parse_word

EXIT_OK, EXIT_REFUSED, EXIT_USAGE, EXIT_RESOURCE, EXIT_INTERNAL = 0, 1, 2, 3, 4
SCHEMA_VERSION = 1

log = logging.getLogger("crossnum")


class Refused(Exception):
    pass


class SchemaError(RuntimeError):
    pass


def load_schema(name: str) -> dict:
    return json.loads(resources.files("crossnum").joinpath("schemas", f"{name}.schema.json").read_text())


def validate(obj: dict, name: str) -> None:
    import jsonschema

    try:
        jsonschema.validate(obj, load_schema(name))
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{name} payload violates its schema: {exc.message}") from None


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _m_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split("..", 1)) if ".." in text else (int(text),) * 2
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a..b, got {text!r}") from None
    if not 1 <= lo <= hi:
        raise argparse.ArgumentTypeError("m range needs 1 <= a <= b")
    return lo, hi


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="crossnum",
        allow_abbrev=False,
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--config", help="key = value config file (keys: genus, ball_radius, tol_geom, max_elements, "
                                     "max_bytes, epsilon_policy, n_policy, cache_dir, seed)")
    p.add_argument("--out", help="write <command>-<hash>.json (and CSV side files) into this directory")
    p.add_argument("--ball-radius", type=int, help="override ball_radius")
    p.add_argument("--tol-geom", type=float, help="override tol_geom")
    p.add_argument("--max-elements", type=int, help="override max_elements")
    p.add_argument("--max-bytes", type=int, help="override max_bytes")
    p.add_argument("--epsilon-policy", help="override epsilon_policy ('systole/16' or a number)")
    p.add_argument("--n-policy", help="override n_policy ('min', 'inequality' or an integer)")
    p.add_argument("--cache-dir", help="override cache_dir")
    p.add_argument("--no-cache", action="store_true", help="do not read or write the disk cache")
    p.add_argument("--seed", type=int, help="override seed")
    p.add_argument("--timings", action="store_true", help="record wall-clock timings (output is then not byte-stable)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ball", help="build or load the Cayley ball")
    s.add_argument("--radius", type=int, help="defaults to ball_radius")

    s = sub.add_parser("cross", help="crossing number of a word")
    s.add_argument("word")

    s = sub.add_parser("sn", help="enumerate the S_n table")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--radius", type=int, default=2, help="word-length radius of the table (default 2)")
    s.add_argument("--primitive", action="store_true", help="primitive elements only (S_n')")

    s = sub.add_parser("qm", help="evaluate a counting quasimorphism")
    s.add_argument("--sigma", required=True, help="pattern word, length >= 2")
    s.add_argument("--target", required=True)
    s.add_argument("--policy", choices=["worst_case", "lemma"], default="worst_case")

    s = sub.add_parser("certify", help="table-certified lower bounds on w_n(a^m)")
    s.add_argument("--target", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--m", type=_m_range, default=(1, 6), help="m range a..b (default 1..6)")
    s.add_argument("--radius", type=int, default=2, help="S_n table radius (default 2)")

    sub.add_parser("geomcheck", help="octagon relator, generator lengths, systole and qi constants")

    s = sub.add_parser("scaling", help="CSV of bounds across several n")
    s.add_argument("--target", required=True)
    s.add_argument("--n-list", type=_int_list, default=[0, 1, 2])
    s.add_argument("--m", type=_m_range, default=(1, 6))
    s.add_argument("--radius", type=int, default=2)
    return p


_OVERRIDES = ("ball_radius", "tol_geom", "max_elements", "max_bytes", "epsilon_policy", "n_policy", "cache_dir", "seed")


def resolve_config(args) -> Config:
    cfg = load_config(args.config)
    changes = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k) is not None}
    return cfg.replace(**changes) if changes else cfg


def _arguments(args) -> dict:
    skip = {"config", "out", "timings", "verbose", "command", "no_cache", *_OVERRIDES}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k not in skip:
            out[k] = list(v) if isinstance(v, tuple) else v
    return out


# ------------------------------------------------------------------ commands


def cmd_ball(args, cfg: Config, cache):
    radius = args.radius if args.radius is not None else cfg.ball_radius
    ball, hit = load_or_build_ball(radius, cache, cfg.genus, max_elements=cfg.max_elements, max_bytes=cfg.max_bytes)
    print("cache hit" if hit else "cache miss", file=sys.stderr)
    sizes = np.diff(ball.level_offsets).tolist()
    return "ball", {"genus": ball.genus, "radius": ball.radius, "size": len(ball), "sphere_sizes": sizes}


def _ball(cfg: Config, cache, radius: int | None = None):
    ball, _ = load_or_build_ball(radius or cfg.ball_radius, cache, cfg.genus,
                                 max_elements=cfg.max_elements, max_bytes=cfg.max_bytes)
    return ball


def _rep(cfg: Config):
    from dataclasses import replace

    from .crossing import octagon_rep_cached

    rep = octagon_rep_cached()
    return rep if rep.tol_geom == cfg.tol_geom else replace(rep, tol_geom=cfg.tol_geom)


def cmd_cross(args, cfg: Config, cache):
    from .crossing import crossing_number

    w = parse_word(args.word, cfg.genus)
    rep = _rep(cfg)
    fields = dict(genus=cfg.genus, word=list(w), rep=rep.name, tol=cfg.tol_geom)
    hit = cache.load("cross", **fields) if cache else None
    if hit is not None:
        return "crossing_report", hit
    report = crossing_number(w, rep).to_json()
    if cache:
        cache.store("cross", report, **fields)
    return "crossing_report", report


def _table(cfg: Config, cache, n: int, radius: int, primitive: bool = False):
    from .crossing import enumerate_Sn

    ball = _ball(cfg, cache, max(radius + 1, 6))
    return enumerate_Sn(n, radius, primitive, rep=_rep(cfg), ball=ball, cache=cache)


def cmd_sn(args, cfg: Config, cache):
    return "sn_table", _table(cfg, cache, args.n, args.radius, args.primitive).to_json()


def cmd_qm(args, cfg: Config, cache):
    from .quasimorphism import PathPattern, h_sigma

    sigma = PathPattern(parse_word(args.sigma, cfg.genus))
    target = parse_word(args.target, cfg.genus)
    ev = h_sigma(target, sigma, _ball(cfg, cache), policy=args.policy, max_states=cfg.max_elements)
    return "qm_evaluation", ev.to_json()


def cmd_certify(args, cfg: Config, cache):
    from .certifier import CertificationRefused, certify

    target = parse_word(args.target, cfg.genus)
    table = _table(cfg, cache, args.n, args.radius)
    try:
        cert = certify(target, args.n, args.m, cfg, table_radius=args.radius, ball=_ball(cfg, cache), table=table,
                       cache=cache)
    except CertificationRefused as exc:
        raise Refused(exc.reason) from None
    return "bound_certificate", cert.to_json()


def cmd_geomcheck(args, cfg: Config, cache):
    from .algebra import octagon_order
    from .hyperbolic import axis_and_length, estimate_context, evaluate

    rep = _rep(cfg)
    order = octagon_order()
    rel = order.to_matrix(order.evaluate((1, 2, -1, -2, 3, 4, -3, -4)))
    trace = float(np.trace(rel))
    lengths = {letter_name(x): axis_and_length(evaluate(rep, (x,)))[1] for x in alphabet(cfg.genus)}
    vals = list(lengths.values())
    ball = _ball(cfg, cache)
    ctx = estimate_context(rep, ball, samples=2000, seed=cfg.seed)
    return "geomcheck", {
        "relator_trace": trace,
        "relator_ok": abs(abs(trace) - 2) <= cfg.tol_geom,
        "generator_translation_lengths": lengths,
        "lengths_equal": max(vals) - min(vals) <= cfg.tol_geom,
        "systole_estimate": rep.systole_estimate,
        "systole_radius": rep.systole_radius,
        "context": {
            "radius": ctx.radius,
            "delta_estimate": ctx.delta_estimate,
            "qi_K": ctx.qi_K,
            "qi_eps": ctx.qi_eps,
            "samples": ctx.samples,
        },
    }


def cmd_scaling(args, cfg: Config, cache):
    from .certifier import CSV_HEADER, CertificationRefused, ScalingReport, certify

    target = parse_word(args.target, cfg.genus)
    ball = _ball(cfg, cache)
    rows, refusals = [], []
    for n in args.n_list:
        table = _table(cfg, cache, n, args.radius)
        try:
            cert = certify(target, n, args.m, cfg, table_radius=args.radius, ball=ball, table=table, cache=cache)
        except CertificationRefused as exc:
            refusals.append((n, exc.reason))
            continue
        for m in range(args.m[0], args.m[1] + 1):
            rows.append((n, m, cert.lower[m], cert.upper[m].value, cert.slope))
    report = ScalingReport(rows, refusals)
    return "scaling", {
        "header": CSV_HEADER,
        "rows": [{"n": n, "m": m, "lower": str(lo), "upper": up, "slope": str(sl)} for n, m, lo, up, sl in rows],
        "refusals": [{"n": n, "reason": r} for n, r in refusals],
        "csv": report.to_csv(),
    }


COMMANDS = {
    "ball": cmd_ball,
    "cross": cmd_cross,
    "sn": cmd_sn,
    "qm": cmd_qm,
    "certify": cmd_certify,
    "geomcheck": cmd_geomcheck,
    "scaling": cmd_scaling,
}


def envelope(command: str, cfg: Config, arguments: dict, payload: dict, timings: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "config": cfg.to_json(),
        "arguments": arguments,
        "timings": timings,
        "payload": payload,
    }


def output_name(env: dict) -> str:
    key = json.dumps({"config": env["config"], "arguments": env["arguments"]}, sort_keys=True)
    return f"{env['command']}-{hashlib.sha256(key.encode()).hexdigest()[:16]}"


def emit(env: dict, out_dir: str | None, side_csv: str | None = None) -> None:
    text = dumps(env)
    if out_dir is None:
        sys.stdout.write(text)
        return
    base = Path(out_dir) / output_name(env)
    try:
        if side_csv is not None:
            atomic_write_text(base.with_suffix(".csv"), side_csv)
        atomic_write_text(base.with_suffix(".json"), text)
    except OSError as exc:
        raise OSError(f"cannot write report under {out_dir}: {exc}") from exc
    print(str(base.with_suffix(".json")), file=sys.stderr)


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    t0 = time.perf_counter()
    try:
        cfg = resolve_config(args)
        cache = None if args.no_cache else DiskCache(cfg.cache_dir)
        schema, payload = COMMANDS[args.command](args, cfg, cache)
        validate(payload, schema)
        status = EXIT_OK
    except (ResourceLimitError, BallTooSmallError) as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, WordParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Refused as exc:
        schema, payload, status = "refusal", {"status": "refused", "reason": str(exc)}, EXIT_REFUSED
        print(f"refused: {exc}", file=sys.stderr)
    except SchemaError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    timings = {"total_seconds": time.perf_counter() - t0} if args.timings else {}
    env = envelope(args.command, cfg, _arguments(args), payload, timings)
    try:
        validate(env, "envelope")
    except SchemaError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    try:
        emit(env, args.out, payload.get("csv") if args.command == "scaling" else None)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return status


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
