"""Command-line front end: ``magicrect <subcommand> [options]``.

Exit codes
    0  success
    2  bad arguments, unreadable input or a parity violation
    3  instance exceeds the search budget
    4  solver did not converge (best iterate still printed)
    5  quantum strategy fails validation
    6  verification failed
    7  game shape certifies no randomness

Text and CSV output print floats with 10 decimals; JSON keeps full precision
and validates against the schemas shipped in ``magicrect/schemas``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import behaviors as bh
from .classical import brute_force_classical_value, classical_budget
from .errors import (
    BudgetExceeded,
    InfeasibleDetected,
    MagicRectError,
    NotConverged,
    NotUsable,
    ValidationError,
)
from .games import (
    GameSpec,
    apply_flips,
    canonical_game,
    canonicalize,
    load_game,
    parse_signs,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_NOT_CONVERGED = 4
EXIT_INVALID_STRATEGY = 5
EXIT_VERIFY_FAILED = 6
EXIT_NOT_USABLE = 7

LEVELS = ("ns", "npa1", "npa1ab", "bounds")
STRATEGIES = ("mermin-peres", "chsh-2x2", "lower-2xn")


class VerificationFailed(MagicRectError):
    def __init__(self, report: dict):
        super().__init__("verification failed")
        self.report = report


@dataclass
class RunConfig:
    command: str
    spec: GameSpec | None = None
    mode: str = "float"
    tolerance: float = 1e-7
    fmt: str = "text"
    conjecture: bool = True
    budget: int | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.budget is not None and self.budget <= 0:
            raise ValueError("budget must be positive")

    @property
    def exact(self) -> bool:
        return self.mode == "rational"


# -- formatting -----------------------------------------------------------------


def fmt_float(v: float) -> str:
    return f"{v:.10f}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _text_lines(obj, prefix: str = "") -> list[str]:
    lines = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not _is_flat_list(v):
                lines.append(f"{prefix}{k}:")
                lines += _text_lines(v, prefix + "  ")
            else:
                lines.append(f"{prefix}{k}: {_text_scalar(v)}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            if isinstance(v, (dict, list)):
                lines.append(f"{prefix}- [{i}]")
                lines += _text_lines(v, prefix + "  ")
            else:
                lines.append(f"{prefix}- {_text_scalar(v)}")
    return lines


def _is_flat_list(v) -> bool:
    return isinstance(v, list) and all(not isinstance(e, (dict, list)) for e in v)


def _text_scalar(v) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower()
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, list):
        return " ".join(_text_scalar(e) for e in v)
    return str(v)


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, bool):
        return str(v).lower()
    return str(v)


def _flatten(obj, prefix: str = "") -> dict:
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list) and any(isinstance(e, (dict, list)) for e in obj):
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{i}."))
    else:
        out[prefix[:-1]] = " ".join(map(_csv_cell, obj)) if isinstance(obj, list) else obj
    return out


def render(report: dict, fmt: str, rows: list[dict] | None = None, columns=None) -> str:
    """``rows`` (with ``columns``) is the table to use for CSV output."""
    report = _jsonable(report)
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True)
    if fmt == "csv":
        buf = io.StringIO()
        if rows is not None:
            writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
            writer.writeheader()
            for r in rows:
                writer.writerow({k: _csv_cell(v) for k, v in _jsonable(r).items()})
        else:
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(["key", "value"])
            for k, v in _flatten(report).items():
                writer.writerow([k, _csv_cell(v)])
        return buf.getvalue().rstrip("\n")
    return "\n".join(_text_lines(report))


# -- game input -----------------------------------------------------------------


def _spec_from_args(args, required: bool = True) -> GameSpec | None:
    if getattr(args, "spec", None):
        return load_game(args.spec)
    m, n = getattr(args, "m", None), getattr(args, "n", None)
    if m is None or n is None:
        if required:
            raise ValueError("give a game with --spec FILE or --m M --n N")
        return None
    alphas, betas = getattr(args, "alphas", None), getattr(args, "betas", None)
    if alphas is None and betas is None:
        return canonical_game(m, n)
    if alphas is None or betas is None:
        raise ValueError("--alphas and --betas must be given together")
    return GameSpec(m, n, parse_signs(alphas), parse_signs(betas))


# -- subcommands ----------------------------------------------------------------


def cmd_classical(config: RunConfig) -> tuple[dict, int]:
    spec = config.spec
    budget = config.budget if config.budget is not None else classical_budget()
    value, witness = brute_force_classical_value(spec, budget=budget)
    alice_grid, bob_grid = witness.grids()
    report = {
        "game": spec.to_dict(),
        "value": str(value),
        "value_float": float(value),
        "witness": {
            **witness.to_dict(),
            "alice_grid": alice_grid,
            "bob_grid": bob_grid,
        },
    }
    return report, EXIT_OK


def cmd_value(config: RunConfig) -> tuple[dict, int]:
    from . import randomness
    from .optim import build_moment_problem, ns_value, solve_sdp

    level = config.options["level"]
    if level == "bounds" and config.options.get("curve"):
        max_n = config.options.get("max_n") or 12
        rows = randomness.bounds_curve(max_n)
        return {"curve": rows, "_rows": rows, "_columns": randomness.CURVE_COLUMNS}, EXIT_OK
    spec = config.spec
    report: dict = {"game": spec.to_dict(), "level": level}
    if level == "ns":
        v = ns_value(spec, exact=config.exact, budget=config.budget)
        report["value"] = str(v) if config.exact else float(v)
        report["value_float"] = float(v)
        report["mode"] = config.mode
        return report, EXIT_OK
    if level == "bounds":
        b = randomness.quantum_value_bounds(spec.m, spec.n, conjecture=config.conjecture)
        report["bounds"] = b.to_dict()
        report["value_float"] = b.upper
        return report, EXIT_OK
    npa_level = "1" if level == "npa1" else "1+AB"
    max_vars = config.options.get("max_variables") or 8000
    problem = build_moment_problem(spec, npa_level, max_variables=max_vars)
    dump = config.options.get("dump_problem")
    if dump:
        Path(dump).write_text(problem.dumps())
    report["matrix_size"] = problem.size
    report["variables"] = problem.n_variables
    code = EXIT_OK
    try:
        sol = solve_sdp(
            problem,
            tolerance=config.tolerance,
            max_iterations=config.options.get("max_iterations") or 100,
        )
    except NotConverged as exc:
        sol = exc.solution
        code = EXIT_NOT_CONVERGED
        report["error"] = str(exc)
        if sol is None:
            return report, code
    report.update(
        {
            "value": sol.value,
            "value_float": sol.value,
            "upper_bound": sol.upper_bound,
            "gap": sol.gap,
            "psd_violation": sol.psd_violation,
            "affine_violation": sol.affine_violation,
            "iterations": sol.iterations,
            "status": sol.status,
        }
    )
    return report, code


def _builtin(name: str, n: int | None):
    from . import quantum as qm

    if name == "mermin-peres":
        return qm.mermin_peres_game(), qm.mermin_peres_strategy()
    if name == "chsh-2x2":
        return qm.chsh_base_game(), qm.chsh_strategy_2x2()
    if name == "lower-2xn":
        n = 2 if n is None else n
        return qm.lower_bound_2xn_game(n), qm.lower_bound_2xn_strategy(n)
    raise ValueError(f"unknown strategy {name!r}; choose from {STRATEGIES}")


def cmd_simulate(config: RunConfig) -> tuple[dict, int]:
    from . import quantum as qm

    name = config.options["strategy"]
    base_spec, strat = _builtin(name, config.options.get("n"))
    spec = base_spec
    target = config.spec
    if target is not None and target != base_spec:
        if config.options.get("transport"):
            strat = qm.transport_strategy(strat, base_spec, target)
        spec = target
    if spec.shape != strat.shape:
        raise ValidationError(
            f"strategy is {strat.shape[0]}x{strat.shape[1]}, game is {spec.m}x{spec.n}"
        )
    residuals = qm.strategy_residuals(strat, spec)
    if max(residuals.values()) > config.tolerance:
        raise ValidationError(f"strategy violates its invariants on {spec}: {residuals}")
    behavior = qm.strategy_to_behavior(strat, spec, tolerance=config.tolerance)
    ns = bh.check_nonsignaling(behavior)
    report = {
        "strategy": name,
        "game": spec.to_dict(),
        "win_probability": float(bh.behavior_win_probability(behavior)),
        "nonsignaling_violation": float(ns.worst_violation),
        "invariant_residuals": residuals,
        "dims": list(strat.dims),
    }
    out = config.options.get("out")
    if out:
        bh.dump_behavior(behavior, out)
        report["behavior_path"] = str(out)
    return report, EXIT_OK


def cmd_verify(config: RunConfig) -> tuple[dict, int]:
    bpath = config.options.get("behavior") or "builtin"
    behavior = bh.builtin_2x3_behavior() if bpath == "builtin" else bh.load_behavior(bpath)
    if not config.exact and behavior.exact and bpath != "builtin":
        behavior = behavior.to_float()
    ns = bh.check_nonsignaling(behavior, tolerance=config.tolerance)
    report: dict = {
        "game": behavior.spec.to_dict(),
        "mode": "rational" if behavior.exact else "float",
        "win_probability": str(bh.behavior_win_probability(behavior))
        if behavior.exact
        else float(bh.behavior_win_probability(behavior)),
        "nonsignaling": {"ok": ns.ok, "worst_violation": float(ns.worst_violation), "where": ns.where},
    }
    ok = ns.ok
    cpath = config.options.get("certificate")
    if cpath:
        cert = bh.builtin_gamma_certificate() if cpath == "builtin" else bh.load_certificate(cpath)
        rep = bh.verify_certificate(cert, behavior, tolerance=config.tolerance)
        report["certificate"] = {
            "ok": bool(rep),
            "psd_ok": rep.psd_ok,
            "exact_psd": rep.exact_psd,
            "min_eigenvalue": float(rep.min_eigenvalue),
            "consistent": rep.consistent,
            "worst_violation": float(rep.worst_violation),
            "worst_entry": rep.worst_entry,
            "labeling": rep.labeling,
        }
        ok = ok and bool(rep)
    report["ok"] = ok
    if not ok:
        raise VerificationFailed(report)
    return report, EXIT_OK


def cmd_randomness(config: RunConfig) -> tuple[dict, int]:
    from . import randomness as rnd

    if config.options.get("table"):
        max_n = config.options.get("max_n") or 5
        reps = rnd.performance_table(max_n, conjecture=config.conjecture)
        rows = [r.csv_row() for r in reps]
        report = {"table": [r.to_dict() for r in reps]}
        return {**report, "_rows": rows, "_columns": rnd.CSV_COLUMNS}, EXIT_OK
    spec = config.spec
    if spec is None:
        raise ValueError("give a game shape with --m/--n or use --table")
    rep = rnd.rate_report(spec.m, spec.n, conjecture=config.conjecture)
    report = rep.to_dict()
    chi = config.options.get("chi")
    if chi is not None:
        report["rate_at_chi"] = {"chi": chi, **rnd.rate_curve(spec.m, spec.n, chi, config.conjecture).to_dict()}
    return {**report, "_rows": [rep.csv_row()], "_columns": rnd.CSV_COLUMNS}, EXIT_OK


def cmd_canonicalize(config: RunConfig) -> tuple[dict, int]:
    spec = config.spec
    flips = canonicalize(spec)
    image = apply_flips(spec, flips)
    return {
        "game": spec.to_dict(),
        "flips": [list(f) for f in flips],
        "canonical": image.to_dict(),
    }, EXIT_OK


def load_schema(command: str) -> dict:
    """JSON schema describing ``--format json`` output of ``command``."""
    from importlib import resources

    text = resources.files("magicrect").joinpath("schemas", f"{command}.schema.json").read_text()
    return json.loads(text)


COMMANDS = {
    "classical": cmd_classical,
    "value": cmd_value,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "randomness": cmd_randomness,
    "canonicalize": cmd_canonicalize,
}


# -- argument parsing -----------------------------------------------------------


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _common(suppress: bool) -> argparse.ArgumentParser:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--format", choices=("json", "csv", "text"), default=d("text"))
    g.add_argument("--tolerance", type=_positive_float, default=d(None),
                   help="numerical tolerance (default 1e-7 for solvers, 1e-9 for checks)")
    g.add_argument("--mode", choices=("rational", "float"), default=d("float"))
    g.add_argument("--budget", type=_positive_int, default=d(None),
                   help="largest m+n for exhaustive and LP searches (env MAGICRECT_BUDGET)")
    g.add_argument("--no-conjecture", dest="conjecture", action="store_false", default=d(True),
                   help="use only proven bounds for 2 x n games with n >= 7")
    return p


def _game_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("game")
    g.add_argument("--spec", help="game JSON file with m, n, alphas, betas")
    g.add_argument("--m", type=_positive_int)
    g.add_argument("--n", type=_positive_int)
    g.add_argument("--alphas", help="row parities, e.g. ++-")
    g.add_argument("--betas", help="column parities, e.g. +--")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magicrect",
        description="Classical, no-signaling and quantum values of magic rectangle games.",
        parents=[_common(False)],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common(True)

    p = sub.add_parser("classical", parents=[common], help="exact classical value by exhaustive search")
    _game_args(p)

    p = sub.add_parser("value", parents=[common], help="no-signaling, NPA or closed-form values")
    _game_args(p)
    p.add_argument("--level", choices=LEVELS, required=True)
    p.add_argument("--max-iterations", type=_positive_int)
    p.add_argument("--max-variables", type=_positive_int,
                   help="cap on free moments of the NPA relaxation (default 8000)")
    p.add_argument("--dump-problem", metavar="PATH", help="write the moment problem as sparse text")
    p.add_argument("--curve", action="store_true",
                   help="with --level bounds: CSV-ready 2 x n value curves")
    p.add_argument("--max-n", type=_positive_int)

    p = sub.add_parser("simulate", parents=[common], help="simulate a built-in quantum strategy")
    _game_args(p)
    p.add_argument("--strategy", choices=STRATEGIES, required=True)
    p.add_argument("--transport", action="store_true",
                   help="carry the strategy onto the given game by sign flips")
    p.add_argument("--out", metavar="PATH", help="write the behavior JSON here")

    p = sub.add_parser("verify", parents=[common], help="check a behavior and a moment certificate")
    p.add_argument("--behavior", default="builtin", help="behavior JSON or 'builtin'")
    p.add_argument("--certificate", help="certificate JSON or 'builtin'")

    p = sub.add_parser("randomness", parents=[common], help="noise tolerance and rate bounds")
    _game_args(p)
    p.add_argument("--table", action="store_true", help="all usable shapes up to --max-n")
    p.add_argument("--max-n", type=_positive_int)
    p.add_argument("--chi", type=float, help="also evaluate the rate curve at this score")

    p = sub.add_parser("canonicalize", parents=[common], help="flip sequence onto the canonical game")
    _game_args(p)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    command = args.command
    needs_spec = command in ("classical", "canonicalize") or (
        command == "value" and not getattr(args, "curve", False)
    )
    spec = None
    if command != "verify":
        spec = _spec_from_args(args, required=needs_spec)
    tolerance = args.tolerance
    if tolerance is None:
        tolerance = 1e-7 if command == "value" else 1e-9
    budget = args.budget
    if budget is None and os.environ.get("MAGICRECT_BUDGET"):
        budget = int(os.environ["MAGICRECT_BUDGET"])
    skip = {"command", "format", "tolerance", "mode", "budget", "conjecture",
            "spec", "m", "alphas", "betas"}
    options = {k: v for k, v in vars(args).items() if k not in skip}
    return RunConfig(command, spec, args.mode, tolerance, args.format, args.conjecture, budget, options)


def run(config: RunConfig) -> tuple[dict, int]:
    return COMMANDS[config.command](config)


def _glue_signs(argv: list[str]) -> list[str]:
    """Let ``--betas ---`` through: argparse would read ``---`` as an option."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in ("--alphas", "--betas") and i + 1 < len(argv) and set(argv[i + 1]) <= {"+", "-"}:
            # the leading space keeps argparse from swallowing a bare "--"; parse_signs strips it
            out.append(f"{tok}= {argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_signs(argv))
    fmt = args.format
    try:
        config = config_from_args(args)
        report, code = run(config)
    except VerificationFailed as exc:
        print(render(exc.report, fmt))
        return EXIT_VERIFY_FAILED
    except NotUsable as exc:
        print(f"not usable: {exc}. Only 2 x k and 3 x k shapes (k >= 2, either orientation) "
              "have a quantum value above their distinguished-input value.", file=sys.stderr)
        return EXIT_NOT_USABLE
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValidationError as exc:
        print(f"invalid strategy: {exc}", file=sys.stderr)
        return EXIT_INVALID_STRATEGY
    except InfeasibleDetected as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rows = report.pop("_rows", None)
    columns = report.pop("_columns", None)
    print(render(report, fmt, rows, columns))
    if code == EXIT_NOT_CONVERGED:
        print("solver did not converge; best iterate shown", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
