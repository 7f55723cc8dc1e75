"""Command line front end.

    metricherb eval      --model M.json "sup x . d(x, x)"
    metricherb normalize --model M.json "f[0.5,0.5](x, v0)"
    metricherb herbrand  --model M.json --target bump --eps 0.13 --lambdas 0,0.25,0.5,0.75,1
    metricherb axioms    --model M.json
    metricherb ubiq      --model M.json --check partitioned --partition '[["0.0","0.1"],["1.0","1.1"]]'
    metricherb verify    cert.json

Settings come from defaults, then ``--config FILE`` (JSON with the same
names as the flags, dashes as underscores), then the flags themselves.
Outputs are JSON with sorted keys. Exit codes: 0 success, 1 usage, parse or
model error, 2 failed verification, 3 budget exhausted (partial output is
still written).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_BUDGET = 0, 1, 2, 3


@dataclass
class RunConfig:
    model: str | None = None
    text: str | None = None
    formula_file: str | None = None
    env: str | None = None
    eps: float = 0.1
    delta_gate: float | None = None
    tol: float = 1e-6
    seed: int = 0
    samples: int = 512
    candidates: int = 200_000
    depth: int = 1
    mesh: float | None = None
    net_delta: float = 0.05
    workers: int = 1
    output: str | None = None
    theory: str | None = None
    target: str | None = None
    lambdas: str | None = None
    x_vars: str | None = None
    y_vars: str | None = None
    search: str = "auto"
    alpha: bool = False
    spectrum_k: int = 6
    scheme_max: int | None = None
    check: str = "partitioned"
    partition: str | None = None
    max_size: int = 3
    function: str | None = None
    centres: int = 0

    def validate(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        for name in ("samples", "candidates", "workers", "max_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        if self.net_delta <= 0 or (self.mesh is not None and self.mesh <= 0):
            raise ValueError("net meshes must be positive")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="metricherb", description="Herbrand witnesses for metric structures at desk scale.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, text_help=None):
        sp.add_argument("--config")
        sp.add_argument("--model")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--output", "-o")
        if text_help:
            sp.add_argument("text", nargs="?", help=text_help)
            sp.add_argument("--formula-file")

    sp = sub.add_parser("eval", help="enclosure of a formula")
    common(sp, "formula text")
    sp.add_argument("--env", help="JSON object: variable -> point (list of numbers) or element label")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--net-delta", type=float)

    sp = sub.add_parser("normalize", help="affine normal form of a term")
    common(sp, "term text")
    sp.add_argument("--theory")

    sp = sub.add_parser("herbrand", help="search Herbrand witness terms")
    common(sp, "formula phi(x, y); omit with --target")
    sp.add_argument("--target", help="registered function to cover (continuous models)")
    sp.add_argument("--search", choices=["auto", "classical", "continuous", "function"])
    for flag, typ in (("--eps", float), ("--delta-gate", float), ("--tol", float), ("--samples", int),
                      ("--candidates", int), ("--depth", int), ("--mesh", float), ("--workers", int),
                      ("--centres", int)):
        sp.add_argument(flag, type=typ)
    sp.add_argument("--lambdas", help="comma-separated scalars for the candidate grid")
    sp.add_argument("--x-vars")
    sp.add_argument("--y-vars")
    sp.add_argument("--alpha", action="store_true", default=None)

    sp = sub.add_parser("axioms", help="check the model's axiom suite")
    common(sp)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--spectrum-k", type=int)
    sp.add_argument("--scheme-max", type=int)

    sp = sub.add_parser("ubiq", help="finite partition / ultrahomogeneity / equivariant checks")
    common(sp)
    sp.add_argument("--check", choices=["partitioned", "ultrahomogeneous", "expand", "classify"])
    sp.add_argument("--partition", help="JSON list of blocks of element labels")
    sp.add_argument("--max-size", type=int)
    sp.add_argument("--function", help="JSON file or literal: rows [arg labels..., value label]")
    sp.add_argument("--depth", type=int)

    sp = sub.add_parser("verify", help="re-check a certificate file")
    sp.add_argument("certificate")
    sp.add_argument("--output", "-o")
    sp.add_argument("--config")
    return p


def _config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        data = json.loads(Path(args.config).read_text())
        names = {f.name for f in fields(RunConfig)}
        unknown = set(data) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for k, v in data.items():
            setattr(cfg, k, v)
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    cfg.validate()
    return cfg


def _emit(obj, cfg_output, stream=None) -> str:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if cfg_output:
        Path(cfg_output).write_text(text)
    (stream or sys.stdout).write(text)
    return text


def _model(cfg):
    from .models import load_model

    if not cfg.model:
        raise UsageError("--model is required")
    return load_model(cfg.model)


def _text(cfg, what="formula"):
    if cfg.formula_file:
        return Path(cfg.formula_file).read_text().strip()
    if not cfg.text:
        raise UsageError(f"a {what} is required")
    return cfg.text


def _budget(cfg):
    from .logic import QuantBudget

    return QuantBudget(delta=cfg.net_delta, samples=cfg.samples, seed=cfg.seed)


# --------------------------------------------------------------------------
# commands


def cmd_eval(cfg) -> int:
    from .logic import eval_formula, formula_free_vars, parse_formula

    S = _model(cfg)
    phi = parse_formula(_text(cfg), S.sig)
    env = json.loads(cfg.env) if cfg.env else {}
    pts = {}
    for v in formula_free_vars(phi):
        if v.name not in env:
            raise UsageError(f"free variable {v.name} needs a value in --env")
        pts[v.name] = _point(S, env[v.name])
    enc = eval_formula(S, phi, pts, _budget(cfg))
    _emit({"formula": _format(phi, S), "lo": enc.lo, "hi": enc.hi, "mode": enc.mode, "seed": cfg.seed}, cfg.output)
    return EXIT_OK


def _point(S, val):
    from .scalars import parse_scalar

    if isinstance(val, list):
        z = np.array([complex(parse_scalar(str(c))) for c in val])
        return z.real if not z.imag.any() and getattr(S, "field", "R") == "R" else z
    if S.is_finite:
        by_text = {_label(lab): lab for lab in S.labels}
        if str(val) in by_text:
            return by_text[str(val)]
    return val


def _format(phi, S):
    from .logic import format_formula

    return format_formula(phi, S.sig)


def cmd_normalize(cfg) -> int:
    from .logic import format_term, parse_term
    from .normalizer import normalize_term, realize

    S = _model(cfg)
    t = parse_term(_text(cfg, "term"), S.sig)
    theory = cfg.theory or getattr(S, "theory", None)
    if theory is None:
        raise UsageError("normal forms need a Hilbert-space model or --theory")
    nf = normalize_term(t, theory, getattr(S, "group", None))
    _emit({"term": format_term(t), "theory": theory, "normal_form": nf.to_json(), "text": str(nf),
           "realized": format_term(realize(nf, S.sig))}, cfg.output)
    return EXIT_OK


def _split(s):
    return None if s is None else [p.strip() for p in s.split(",") if p.strip()]


def cmd_herbrand(cfg) -> int:
    from .herbrand import CoverNotFound, candidate_family, cover_definable_function, lambda_grid
    from .herbrand import search_classical, search_continuous
    from .logic import parse_formula
    from .scalars import parse_scalar

    S = _model(cfg)
    mode = cfg.search
    if mode == "auto":
        mode = "function" if cfg.target else ("classical" if S.is_finite else "continuous")
    try:
        if mode == "classical":
            phi = parse_formula(_text(cfg), S.sig)
            cert = search_classical(S, phi, depth=cfg.depth, x_vars=_split(cfg.x_vars), y_vars=_split(cfg.y_vars),
                                    max_candidates=cfg.candidates, seed=cfg.seed)
        else:
            if S.is_finite:
                raise UsageError("continuous search needs a Hilbert-space model")
            if cfg.lambdas:
                lam = [parse_scalar(v) for v in _split(cfg.lambdas)]
            else:
                lam = lambda_grid(cfg.mesh or cfg.eps / 2, S.field)
            if mode == "function":
                if not cfg.target:
                    raise UsageError("--search function needs --target")
                cands = None if (cfg.centres and not cfg.lambdas) else candidate_family(S, lam)
                cert = cover_definable_function(S, cfg.target, cfg.eps, candidates=cands, samples=cfg.samples,
                                                seed=cfg.seed, workers=cfg.workers, mesh=cfg.mesh,
                                                centres=cfg.centres, alpha=cfg.alpha)
            else:
                phi = parse_formula(_text(cfg), S.sig)
                ys = _split(cfg.y_vars)
                cands = candidate_family(S, lam, (_split(cfg.x_vars) or ["x"])[0])
                if len(cands) > cfg.candidates:
                    raise CoverNotFound(f"{len(cands)} candidates exceed the budget {cfg.candidates}", [])
                cert = search_continuous(S, phi, cfg.eps, cands, _split(cfg.x_vars), ys, cfg.delta_gate,
                                         samples=cfg.samples, seed=cfg.seed, workers=cfg.workers,
                                         budget=_budget(cfg), alpha=cfg.alpha)
    except CoverNotFound as exc:
        out = {"error": str(exc), "uncovered": exc.uncovered,
               "partial": None if exc.partial is None else exc.partial.to_json()}
        _emit(out, cfg.output)
        return EXIT_BUDGET
    text = cert.dumps()
    if cfg.output:
        Path(cfg.output).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_axioms(cfg) -> int:
    from .logic import QuantBudget
    from .models import check_axioms, theory_for

    S = _model(cfg)
    if S.is_finite:
        raise UsageError("axiom suites exist for Hilbert-space models only")
    kw = {}
    if S.eigenvalues is not None:
        kw["k"] = cfg.spectrum_k
    if S.projection_rank is not None and cfg.scheme_max is not None:
        kw["scheme_max"] = cfg.scheme_max
    T = theory_for(S, **kw)
    report = check_axioms(S, T, tol=cfg.tol, budget=QuantBudget(samples=cfg.samples, seed=cfg.seed))
    _emit(report.to_json(), cfg.output)
    return EXIT_OK if report.passed else EXIT_VERIFY


def _function_rows(spec, M):
    from .ubiq import function_table

    text = Path(spec).read_text() if Path(spec).exists() else spec
    rows = json.loads(text)
    table = {tuple(r[:-1]): r[-1] for r in rows}
    arity = len(rows[0]) - 1
    by_text = {_label(lab): lab for lab in M.labels}
    try:
        return function_table(M, lambda *a: by_text[table[tuple(_label(x) for x in a)]], arity)
    except KeyError as exc:
        raise UsageError(f"function table is partial or names an unknown element: {exc}") from None


def _label(lab):
    return ".".join(str(p) for p in lab) if isinstance(lab, tuple) else str(lab)


def _partition(cfg, M):
    if not cfg.partition:
        raise UsageError("--partition is required for this check")
    blocks = json.loads(cfg.partition)
    by_text = {_label(lab): lab for lab in M.labels}
    try:
        return [[by_text[str(x)] for x in b] for b in blocks]
    except KeyError as exc:
        raise UsageError(f"unknown element {exc}") from None


def cmd_ubiq(cfg) -> int:
    from .models.modelfile import describe
    from .ubiq import (
        check_finitely_partitioned,
        check_ultrahomogeneous,
        classify_equivariant_function,
        expand_partition,
    )

    M = _model(cfg)
    if not M.is_finite:
        raise UsageError("ubiquity checks need a finite model")
    if cfg.check == "partitioned":
        w = check_finitely_partitioned(M, _partition(cfg, M))
        _emit(w.to_json(), cfg.output)
        return EXIT_OK if w.ok else EXIT_VERIFY
    if cfg.check == "ultrahomogeneous":
        if cfg.partition:
            M = expand_partition(M, _partition(cfg, M))
        r = check_ultrahomogeneous(M, cfg.max_size)
        _emit(r.to_json(), cfg.output)
        return EXIT_OK if r.ok else EXIT_VERIFY
    if cfg.check == "expand":
        _emit(describe(expand_partition(M, _partition(cfg, M))), cfg.output)
        return EXIT_OK
    if not cfg.function:
        raise UsageError("--function is required for classify")
    c = classify_equivariant_function(M, _function_rows(cfg.function, M), depth=cfg.depth)
    _emit(c.to_json(), cfg.output)
    return EXIT_OK if c.covered and c.verified else EXIT_VERIFY


def cmd_verify(cfg, path) -> int:
    from .herbrand import HerbrandCertificate, verify_certificate

    cert = HerbrandCertificate.load(path)
    rep = verify_certificate(cert)
    _emit({"certificate": str(path), "mode": cert.mode, "ok": rep.ok, "message": rep.message,
           "checked": rep.checked}, cfg.output)
    return EXIT_OK if rep.ok else EXIT_VERIFY


COMMANDS = {"eval": cmd_eval, "normalize": cmd_normalize, "herbrand": cmd_herbrand, "axioms": cmd_axioms,
            "ubiq": cmd_ubiq}


def main(argv=None) -> int:
    from .herbrand import CoverNotFound
    from .logic import LogicError
    from .models import ModelError
    from .normalizer import BudgetExceeded
    from .ubiq import UbiqBudgetError

    try:
        args = _parser().parse_args(argv)
        cfg = _config(args)
        if args.command == "verify":
            return cmd_verify(cfg, args.certificate)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"metricherb: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceeded, UbiqBudgetError, CoverNotFound) as exc:
        print(f"metricherb: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (LogicError, ModelError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"metricherb: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
