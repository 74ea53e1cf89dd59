"""Command-line front end.

Exit codes: 0 affirmative result, 1 negative verdict, 2 usage or input
error, 3 mathematical precondition failure (conformal condition, chart,
Killing equation).
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path

from .canonical import REALIZATIONS, realization, verify_realization
from .equivalence import (
    ChartError,
    ConformalConditionError,
    InverseError,
    PointTransform,
    ReducedTransform,
    transform_general,
    transform_reduced,
)
from .expr import DEFAULT_SEED, DEFAULT_TOL, ZERO
from .liefields import KillingError, NotGeometricError, VectorField, conformal_basis, structure_table
from .minkowski import DimensionError
from .parser import ParseError, parse
from .symmetry import ClassError, Nonlinearity, check_symmetry, prolongation_oracle

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_PRECONDITION = 0, 1, 2, 3

_GEN = r"P\d+|J\d\d|J\d+_\d+|D|K\d+"


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int
    seed: int
    tol: float
    fmt: str


def _config(args) -> RunConfig:
    if args.dim < 2:
        raise UsageError(f"--dim must be >= 2, got {args.dim}")
    if args.tol <= 0:
        raise UsageError(f"--tol must be positive, got {args.tol}")
    return RunConfig(args.dim, args.seed, args.tol, args.format)


def parse_q(spec: str, n: int) -> VectorField:
    """Q as ``<generator>``, ``<generator> + <expr> du``, ``<expr> du`` or ``[xi0, ..., xin, eta]``."""
    s = spec.strip()
    if s.startswith("["):
        if not s.endswith("]"):
            raise UsageError("raw Q list must end with ']'")
        parts = [p.strip() for p in s[1:-1].split(",")]
        if len(parts) != n + 2:
            raise UsageError(f"raw Q list needs {n + 2} entries (xi0..xi{n}, eta), got {len(parts)}")
        comps = [parse(p, n) for p in parts]
        return VectorField(tuple(comps[:-1]), comps[-1], "Q")
    m = re.fullmatch(rf"({_GEN})\s*(?:([+-])\s*(.*?)\s*du)?", s)
    if m:
        basis = {X.name: X for X in conformal_basis(n)}
        if m.group(1) not in basis:
            raise UsageError(f"generator {m.group(1)} does not exist for n={n}")
        X = basis[m.group(1)]
        if m.group(2):
            eta = parse(m.group(3), n)
            X = X.with_eta(eta if m.group(2) == "+" else -eta, name=s)
        return X
    m = re.fullmatch(r"(.*?)\s*du", s)
    if m:
        eta = parse(m.group(1), n)
        return VectorField(tuple(ZERO for _ in range(n + 1)), eta, s)
    raise UsageError(f"cannot read Q specification {spec!r}")


def _emit(cfg: RunConfig, data: dict, text: str) -> None:
    if cfg.fmt == "json":
        print(json.dumps(data, indent=2, ensure_ascii=False))
    else:
        print(text)


def cmd_algebra(args) -> int:
    cfg = _config(args)
    r = realization(args.realization, cfg.n)
    table = structure_table(list(r.basis))
    data = r.to_json(table)
    ok = table.closed
    lines = [f"realization {r.name}, n={cfg.n}, {len(r.basis)} generators"]
    for X in r.basis:
        lines.append(f"  {X.name}: {X}")
    if r.name != "conformal":
        rep = verify_realization(r, cfg.seed)
        data["matches_geometric"] = rep.passed
        data["mismatches"] = rep.to_json()["mismatches"]
        ok = ok and rep.passed
        lines.append(f"structure constants match the geometric table: {rep.passed}")
    for (i, j), cs in sorted(table.brackets.items()):
        if i < j and cs:
            rhs = " + ".join(f"({c})*{table.names[k]}" for k, c in sorted(cs.items()))
            lines.append(f"  [{table.names[i]}, {table.names[j]}] = {rhs}")
    for i, j in table.failures:
        lines.append(f"  [{table.names[i]}, {table.names[j]}] is outside the span")
    lines.append("closed" if ok else "NOT closed")
    _emit(cfg, data, "\n".join(lines))
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_check(args) -> int:
    cfg = _config(args)
    if args.F is None or args.Q is None:
        raise UsageError("check needs --F and --Q")
    body = parse(args.F, cfg.n)
    cls = args.cls
    F = Nonlinearity.general(body) if cls == "general" else Nonlinearity.reduced(body)
    Q = parse_q(args.Q, cfg.n)
    rep = check_symmetry(F, Q, cls, cfg.n, cfg.seed, cfg.tol)
    data = rep.to_json()
    if cls == "general":
        data["oracle"] = prolongation_oracle(F, Q, cfg.n, cfg.seed, cfg.tol)
    text = [
        f"F = {body}  (class {cls}, n={cfg.n})",
        f"Q = {Q}",
        f"kappa = {rep.kappa}",
        f"residual = {rep.residual}",
    ]
    if rep.constraint_ok is not None:
        text.append(f"coupling constraint holds: {rep.constraint_ok}")
    if "oracle" in data:
        text.append(f"prolongation oracle: {data['oracle']}")
    text.append("symmetry" if rep.is_symmetry else "not a symmetry")
    _emit(cfg, data, "\n".join(text))
    return EXIT_OK if rep.is_symmetry else EXIT_NEGATIVE


def load_transform(path: str, n: int | None):
    try:
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as err:
        raise UsageError(f"cannot read transform file: {err}") from None
    except json.JSONDecodeError as err:
        raise UsageError(f"transform file is not valid JSON: {err}") from None
    if not isinstance(spec, dict) or "X" not in spec or "n" not in spec:
        raise UsageError('transform file needs "n" and "X"')
    tn = spec["n"]
    if not isinstance(tn, int) or tn < 2:
        raise UsageError('"n" must be an integer >= 2')
    if n is not None and n != tn:
        raise UsageError(f"--dim {n} does not match transform n={tn}")
    X = [parse(s, tn) for s in spec["X"]]
    if len(X) != tn + 1:
        raise UsageError(f'"X" needs {tn + 1} components')
    X_inv = [parse(s, tn) for s in spec["X_inv"]] if "X_inv" in spec else None
    if "U" in spec:
        U_inv = parse(spec["U_inv"], tn) if "U_inv" in spec else None
        return tn, PointTransform(tuple(X), parse(spec["U"], tn), X_inv and tuple(X_inv), U_inv)
    if "A" in spec:
        B = parse(spec.get("B", "0"), tn)
        return tn, ReducedTransform(tuple(X), parse(spec["A"], tn), B, X_inv and tuple(X_inv))
    raise UsageError('transform file needs "U" or "A"')


def cmd_transform(args) -> int:
    if args.transform is None or args.F is None:
        raise UsageError("transform needs --transform and --F")
    n, T = load_transform(args.transform, args.dim_given)
    args.dim = n
    cfg = _config(args)
    body = parse(args.F, n)
    if isinstance(T, ReducedTransform):
        res = transform_reduced(Nonlinearity.reduced(body), T, n, cfg.seed)
    else:
        res = transform_general(Nonlinearity.general(body), T, n, cfg.seed)
    data = {
        "n": n,
        "F": str(body),
        "F_tilde": str(res.nonlinearity.body),
        "lambda": str(res.lam),
        "constraint_ok": res.constraint_ok,
    }
    text = [f"F~ = {res.nonlinearity.body}", f"lambda = {res.lam}"]
    if isinstance(T, ReducedTransform):
        text.append(f"coupling constraint holds: {res.constraint_ok}")
    _emit(cfg, data, "\n".join(text))
    return EXIT_OK if res.constraint_ok else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED,
                        help="seed for randomized zero tests (default 0xC0FFEE)")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help="tolerance for floating zero tests (default 1e-9)")
    common.add_argument("--format", choices=("json", "text"), default="text")

    p = argparse.ArgumentParser(prog="wavesym", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("algebra", parents=[common], help="conformal basis and structure table")
    a.add_argument("--dim", type=int, required=True)
    a.add_argument("--realization", choices=REALIZATIONS, default="conformal")
    a.set_defaults(func=cmd_algebra)

    c = sub.add_parser("check", parents=[common], help="test a candidate symmetry")
    c.add_argument("--dim", type=int, required=True)
    c.add_argument("--class", dest="cls", choices=("general", "reduced"), default="general")
    c.add_argument("--F", help="right-hand side F")
    c.add_argument("--Q", help="candidate: generator name, '<gen> + <expr> du', '<expr> du' or a list")
    c.set_defaults(func=cmd_check)

    t = sub.add_parser("transform", parents=[common], help="apply an equivalence transformation")
    t.add_argument("--dim", type=int, dest="dim_given")
    t.add_argument("--F", help="right-hand side F")
    t.add_argument("--transform", help="path to a transform JSON file")
    t.set_defaults(func=cmd_transform, dim=2)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as err:
        print(f"error: {err}\n{err.caret()}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ClassError, DimensionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ConformalConditionError, ChartError, InverseError, KillingError, NotGeometricError) as err:
        print(f"precondition failed: {err}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
