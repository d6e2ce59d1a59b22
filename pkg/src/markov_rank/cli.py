"""Command-line front end.

Subcommands: validate | sinks | sources | survival | qsd | crossing | tv |
simulate.  States are 1-based on the command line and in reports; the
library is 0-based throughout.

Exit codes: 0 ok, 1 parse/usage, 2 structural (reducible, periodic where
aperiodicity is required), 3 degenerate analysis, 4 convergence failure.

Every machine output embeds a run manifest recording the command, input,
and all effective parameter values including defaults.  Reruns with an
equal manifest produce byte-identical output; set SOURCE_DATE_EPOCH to pin
the timestamp.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .chain import analyze_structure, load_matrix, remove_states
from .errors import (
    ConvergenceFailure,
    DegenerateInit,
    HorizonTooSmall,
    MarkovRankError,
    NotIrreducible,
    AperiodicityViolation,
    ParseError,
    RatesNotSeparated,
    ReducibleAfterRemoval,
    ValidationError,
)
from .serialize import csv_lines, dumps_stable, format_float
from .sink import DEFAULT_RANK_TOL, crossing_time, rank_sinks, survival_curve
from .source import DEFAULT_CLUSTER_TOL, eigen_structure, rank_sources, tv_curve
from .spectral import DEFAULT_TOL, escape_rate, stationary
from .simulate import SimConfig, estimate_survival
from .validation import check_distribution, parse_number

_PARSE_ERRORS = (ParseError, ValidationError, HorizonTooSmall, OSError)
_STRUCTURE_ERRORS = (NotIrreducible, AperiodicityViolation, ReducibleAfterRemoval)
_DEGENERATE_ERRORS = (DegenerateInit, RatesNotSeparated)


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; our taxonomy reserves 2 for
    # structural errors, so route usage problems to exit code 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return datetime.fromtimestamp(t, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _manifest(args, command: str, parameters: dict, seed=None) -> dict:
    man = {
        "command": command,
        "input": str(args.input),
        "parameters": parameters,
        "version": __version__,
        "timestamp": _timestamp(),
    }
    if seed is not None:
        man["seed"] = int(seed)
    return man


def _load(args):
    return load_matrix(args.input, fmt=args.format)


def _states_1based(indices) -> list:
    return [int(i) + 1 for i in indices]


def _parse_states(text: str, n: int) -> list:
    """Comma-separated 1-based state labels -> 0-based indices."""
    out = []
    for part in text.split(","):
        part = part.strip()
        try:
            k = int(part)
        except ValueError:
            raise ParseError(f"bad state label {part!r}") from None
        if not 1 <= k <= n:
            raise ParseError(f"state label {k} outside 1..{n}")
        out.append(k - 1)
    return out


def _parse_init(text: str, n: int) -> np.ndarray:
    """Initial distribution grammar: 'uniform', 'e:k', inline vector, or file."""
    text = text.strip()
    if text == "uniform":
        return np.full(n, 1.0 / n)
    if text.startswith("e:"):
        k = _parse_states(text[2:], n)
        if len(k) != 1:
            raise ParseError("point mass takes a single state label")
        vec = np.zeros(n)
        vec[k[0]] = 1.0
        return vec
    if "," in text:
        vec = np.array([parse_number(p) for p in text.split(",")], dtype=float)
    elif Path(text).exists():
        raw = Path(text).read_text().replace(",", " ").split()
        vec = np.array([parse_number(p) for p in raw], dtype=float)
    else:
        raise ParseError(f"cannot interpret initial distribution {text!r}")
    return check_distribution(vec, n)


def _emit(text: str, args) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _display(x: float) -> str:
    return format(float(x), ".9g")


# ---------------------------------------------------------------- commands


def cmd_validate(args) -> int:
    tm = _load(args)
    rep = analyze_structure(tm)
    punched = []
    for k in range(tm.n):
        sub = remove_states(tm, frozenset({k}))
        punched.append(bool(analyze_structure(sub).irreducible))
    man = _manifest(args, "validate", {
        "format": args.format or "auto",
        "tol": DEFAULT_TOL,
    })
    payload = {
        "n": tm.n,
        "stochastic": True,
        "irreducible": rep.irreducible,
        "period": rep.period,
        "aperiodic": rep.aperiodic,
        "components": [_states_1based(c) for c in rep.components],
        "punched_irreducible": punched,
        "manifest": man,
    }
    if args.json:
        _emit(dumps_stable(payload), args)
    else:
        lines = [
            f"states: {tm.n}",
            "stochastic: yes",
            f"irreducible: {'yes' if rep.irreducible else 'no'}",
            f"period: {rep.period}",
        ]
        if not rep.irreducible:
            comps = "; ".join(str(_states_1based(c)) for c in rep.components)
            lines.append(f"components: {comps}")
        if rep.irreducible and not rep.aperiodic:
            lines.append(f"warning: period {rep.period}, chain is not aperiodic")
        for k, ok in enumerate(punched):
            lines.append(f"hole {{{k + 1}}}: punched matrix "
                         f"{'irreducible' if ok else 'reducible'}")
        lines.append(f"manifest: {dumps_stable(man)}")
        _emit("\n".join(lines), args)
    if not rep.irreducible:
        print("error: chain is reducible", file=sys.stderr)
        return 2
    return 0


def cmd_sinks(args) -> int:
    tm = _load(args)
    result = rank_sinks(tm, rank_tol=args.rank_tol, tol=args.tol)
    pi = stationary(tm, tol=args.tol).weights
    man = _manifest(args, "sinks", {
        "format": args.format or "auto",
        "tol": args.tol,
        "rank_tol": args.rank_tol,
    })
    payload = {
        "ranking": _states_1based(result.ranking),
        "ties": [_states_1based(g) for g in result.ties],
        "mu": [result.records[k].mu for k in range(tm.n)],
        "lam": [result.records[k].lam for k in range(tm.n)],
        "reducible_after_removal": [
            result.records[k].reducible_after_removal for k in range(tm.n)],
        "stationary": list(pi),
        "manifest": man,
    }
    if args.json:
        _emit(dumps_stable(payload), args)
        return 0
    lines = ["rank  state  mu           lambda       flags"]
    for pos, k in enumerate(result.ranking):
        rec = result.records[k]
        lam = "inf" if rec.lam == float("inf") else _display(rec.lam)
        flag = "reducible-after-removal" if rec.reducible_after_removal else ""
        lines.append(f"{pos + 1:<6d}{k + 1:<7d}{_display(rec.mu):<13s}{lam:<13s}{flag}")
    for group in result.ties:
        if len(group) > 1:
            lines.append(f"tie group: states {_states_1based(group)} "
                         f"(rates within {format_float(args.rank_tol)})")
    fastest = result.ranking[0]
    heaviest = int(np.argmax(pi))
    if pi[heaviest] > pi[fastest] + 1e-15:
        lines.append(
            f"note: state {fastest + 1} escapes fastest although state "
            f"{heaviest + 1} carries more stationary mass "
            f"(pi = {_display(pi[fastest])} vs {_display(pi[heaviest])})")
    lines.append(f"manifest: {dumps_stable(man)}")
    _emit("\n".join(lines), args)
    return 0


def cmd_sources(args) -> int:
    tm = _load(args)
    es = eigen_structure(tm, tol=args.cluster_tol)
    result = rank_sources(es)
    man = _manifest(args, "sources", {
        "format": args.format or "auto",
        "cluster_tol": args.cluster_tol,
    })
    payload = {
        "sigma": _states_1based(result.sigma),
        "q": list(result.q),
        "key": {"mu": result.key.mu, "r": result.key.r},
        "degenerate": result.degenerate,
        "condition_number": es.cond,
        "manifest": man,
    }
    if args.json or result.degenerate:
        _emit(dumps_stable(payload), args)
    else:
        lines = [f"key block: mu = {_display(result.key.mu)}, r = {result.key.r}",
                 "state  q"]
        for k in range(tm.n):
            lines.append(f"{k + 1:<7d}{_display(result.q[k])}")
        order = " > ".join(str(k + 1) for k in result.sigma)
        lines.append(f"order (best source first): {order}")
        lines.append(f"manifest: {dumps_stable(man)}")
        _emit("\n".join(lines), args)
    if result.degenerate:
        print("error: dominant block image is not one-dimensional; "
              "the scalar order is not justified", file=sys.stderr)
        return 3
    return 0


def cmd_survival(args) -> int:
    tm = _load(args)
    hole = frozenset(_parse_states(args.hole, tm.n))
    init = _parse_init(args.init, tm.n)
    curve = survival_curve(tm, hole, init, args.steps)
    man = _manifest(args, "survival", {
        "format": args.format or "auto",
        "hole": sorted(_states_1based(hole)),
        "init": args.init,
        "steps": args.steps,
        "tol": args.tol,
    })
    rows = [(n, float(curve.values[n])) for n in range(len(curve.values))]
    _emit(csv_lines(man, "n,M", rows), args)
    return 0


def cmd_qsd(args) -> int:
    tm = _load(args)
    hole = frozenset(_parse_states(args.hole, tm.n))
    er = escape_rate(tm, hole, tol=args.tol)
    man = _manifest(args, "qsd", {
        "format": args.format or "auto",
        "hole": sorted(_states_1based(hole)),
        "tol": args.tol,
    })
    payload = {
        "hole": sorted(_states_1based(hole)),
        "survivors": _states_1based(er.sub.kept),
        "mu": er.mu,
        "lam": er.lam,
        "qsd": None if er.qsd is None else list(er.qsd.weights),
        "degenerate": er.qsd is None,
        "reducible_after_removal": er.reducible_after_removal,
        "residual": er.perron_data.residual,
        "manifest": man,
    }
    _emit(dumps_stable(payload), args)
    if er.qsd is None:
        print("error: punched matrix is nilpotent, no quasi-stationary "
              "distribution", file=sys.stderr)
        return 3
    return 0


def cmd_crossing(args) -> int:
    tm = _load(args)
    fast = frozenset(_parse_states(args.fast, tm.n))
    slow = frozenset(_parse_states(args.slow, tm.n))
    init_fast = _parse_init(args.init_fast, tm.n)
    init_slow = _parse_init(args.init_slow, tm.n)
    cert = crossing_time(tm, fast, slow, init_fast, init_slow, tol=args.tol)
    man = _manifest(args, "crossing", {
        "format": args.format or "auto",
        "fast": sorted(_states_1based(fast)),
        "slow": sorted(_states_1based(slow)),
        "init_fast": args.init_fast,
        "init_slow": args.init_slow,
        "tol": args.tol,
    })
    payload = {
        "fast_hole": sorted(_states_1based(fast)),
        "slow_hole": sorted(_states_1based(slow)),
        "mu_fast": cert.fast.mu,
        "mu_slow": cert.slow.mu,
        "lam_fast": cert.fast.lam,
        "lam_slow": cert.slow.lam,
        "c1_fast": cert.fast.c1,
        "c2_fast": cert.fast.c2,
        "c1_slow": cert.slow.c1,
        "c2_slow": cert.slow.c2,
        "n_star_certified": cert.n_star_certified,
        "n0_empirical": cert.n0_empirical,
        "horizon_used": cert.horizon_used,
        "manifest": man,
    }
    _emit(dumps_stable(payload), args)
    return 0


def cmd_tv(args) -> int:
    tm = _load(args)
    start = _parse_init(args.start, tm.n)
    norm_id = {"l1": "L1", "l2": "L2", "linf": "Linf"}[args.norm]
    curve = tv_curve(tm, start, norm_id=norm_id, n_max=args.steps)
    man = _manifest(args, "tv", {
        "format": args.format or "auto",
        "start": args.start,
        "norm": args.norm,
        "steps": args.steps,
        "tol": args.tol,
    })
    rows = [(n, float(curve.values[n])) for n in range(len(curve.values))]
    _emit(csv_lines(man, "n,D", rows), args)
    return 0


def cmd_simulate(args) -> int:
    tm = _load(args)
    hole = frozenset(_parse_states(args.hole, tm.n))
    init = _parse_init(args.init, tm.n)
    steps = [int(s) for s in args.steps.split(",")]
    cfg = SimConfig(trials=args.trials, seed=args.seed, horizon=args.horizon)
    estimates = estimate_survival(tm, init, hole, steps, cfg)
    man = _manifest(args, "simulate", {
        "format": args.format or "auto",
        "hole": sorted(_states_1based(hole)),
        "init": args.init,
        "steps": steps,
        "trials": cfg.trials,
        "horizon": cfg.horizon,
    }, seed=cfg.seed)
    payload = {
        "estimates": [
            {"n": e.n, "p_hat": e.p_hat, "ci_half_width": e.ci_half_width}
            for e in estimates],
        "trials": cfg.trials,
        "seed": cfg.seed,
        "horizon": cfg.horizon,
        "manifest": man,
    }
    _emit(dumps_stable(payload), args)
    return 0


# ---------------------------------------------------------------- wiring


def _build_parser() -> _Parser:
    parser = _Parser(prog="markov-rank",
                     description="Spectral sink/source ranking for finite "
                                 "Markov chains.")
    parser.add_argument("--version", action="version",
                        version=f"markov-rank {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", required=True, help="matrix file (JSON or CSV)")
        p.add_argument("--format", choices=("json", "csv"), default=None,
                       help="input format (default: by file extension)")
        p.add_argument("--out", default=None, help="write output to this file")
        p.add_argument("--json", action="store_true",
                       help="machine-readable JSON output")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                       help="spectral residual tolerance")

    p = sub.add_parser("validate", help="structural checks on the chain")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sinks", help="rank states by escape rate")
    common(p)
    p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL,
                   help="rates closer than this are reported tied")
    p.set_defaults(func=cmd_sinks)

    p = sub.add_parser("sources", help="rank starting states by convergence speed")
    common(p)
    p.add_argument("--cluster-tol", type=float, default=DEFAULT_CLUSTER_TOL,
                   help="eigenvalue clustering tolerance")
    p.set_defaults(func=cmd_sources)

    p = sub.add_parser("survival", help="survival mass curve as CSV")
    common(p)
    p.add_argument("--hole", required=True, help="comma-separated 1-based states")
    p.add_argument("--init", default="uniform",
                   help="'uniform', 'e:k', inline vector, or file")
    p.add_argument("--steps", type=int, default=100)
    p.set_defaults(func=cmd_survival)

    p = sub.add_parser("qsd", help="escape rate and quasi-stationary distribution")
    common(p)
    p.add_argument("--hole", required=True)
    p.set_defaults(func=cmd_qsd)

    p = sub.add_parser("crossing", help="certified survival crossing step")
    common(p)
    p.add_argument("--fast", required=True, help="hole with the larger escape rate")
    p.add_argument("--slow", required=True)
    p.add_argument("--init-fast", default="uniform")
    p.add_argument("--init-slow", default="uniform")
    p.set_defaults(func=cmd_crossing)

    p = sub.add_parser("tv", help="distance-to-stationarity curve as CSV")
    common(p)
    p.add_argument("--start", default="uniform",
                   help="initial distribution ('uniform', 'e:k', vector, file)")
    p.add_argument("--norm", choices=("l1", "l2", "linf"), default="l1")
    p.add_argument("--steps", type=int, default=100)
    p.set_defaults(func=cmd_tv)

    p = sub.add_parser("simulate", help="Monte Carlo survival estimates")
    common(p)
    p.add_argument("--hole", required=True)
    p.add_argument("--init", default="uniform")
    p.add_argument("--steps", default="0,1,2,5,10,20",
                   help="comma-separated step counts")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon", type=int, default=500)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except _PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _STRUCTURE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _DEGENERATE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ConvergenceFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except MarkovRankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
