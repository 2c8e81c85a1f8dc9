"""Command-line front end.

Subcommands: check (inducibility verdict with cross-validation), solve
(recover cost matrices), verify (exact Nash check for supplied costs),
example (write a bundled problem file).

Exit codes: 0 inducible / verified, 1 not inducible / not verified,
2 input error, 3 numerical failure, 4 the two methods disagree.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .forward import CostParameters, verify_nash
from .feasibility import nearest_params, solve_feasibility_projection
from .inverse import CIRCLE_GRID_POINTS, analyze_player, is_nash_inducible
from .numerics import DimensionError, NumericalFailureError
from .problems import BUNDLED
from .realization import GameSystem, StrategyProfile


class InputError(Exception):
    """Problem-file error with a field-precise message."""


# ---------------------------------------------------------------------------
# Deterministic JSON emission: fixed field order, floats as %.12e
# ---------------------------------------------------------------------------

def _emit(obj, parts):
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append("%.12e" % float(obj))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, dict):
        parts.append("{")
        for k, key in enumerate(obj):
            if k:
                parts.append(", ")
            parts.append(json.dumps(str(key)))
            parts.append(": ")
            _emit(obj[key], parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for k, item in enumerate(obj):
            if k:
                parts.append(", ")
            _emit(item, parts)
        parts.append("]")
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), parts)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_report(obj) -> str:
    parts = []
    _emit(obj, parts)
    return "".join(parts) + "\n"


# ---------------------------------------------------------------------------
# Problem ingestion
# ---------------------------------------------------------------------------

def _matrix(node, path, rows=None, cols=None):
    try:
        M = np.asarray(node, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: not a numeric matrix ({exc})") from exc
    if M.ndim != 2:
        raise InputError(f"{path}: expected a nested-list matrix")
    if rows is not None and M.shape[0] != rows:
        raise InputError(f"{path}: has {M.shape[0]} rows, expected {rows}")
    if cols is not None and M.shape[1] != cols:
        raise InputError(f"{path}: has {M.shape[1]} columns, expected {cols}")
    return M


def load_problem(path: str):
    """Parse a problem file into (system, profile, costs_or_None, x0, tol)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
    if not isinstance(raw, dict):
        raise InputError(f"{path}: top level must be an object")
    if raw.get("schema_version") != "1":
        raise InputError('schema_version: must be the string "1"')
    if "A" not in raw:
        raise InputError("A: missing")
    A = _matrix(raw["A"], "A")
    if A.shape[0] != A.shape[1]:
        raise InputError("A: must be square")
    n = A.shape[0]
    players = raw.get("players")
    if not isinstance(players, list) or not players:
        raise InputError("players: must be a non-empty list")
    N = len(players)
    Bs, Ks, Qs, Rrows = [], [], [], []
    for i, pl in enumerate(players):
        if not isinstance(pl, dict):
            raise InputError(f"players[{i}]: must be an object")
        if "B" not in pl:
            raise InputError(f"players[{i}].B: missing")
        B = _matrix(pl["B"], f"players[{i}].B", rows=n)
        if "K_dagger" not in pl:
            raise InputError(f"players[{i}].K_dagger: missing")
        K = _matrix(pl["K_dagger"], f"players[{i}].K_dagger", rows=B.shape[1], cols=n)
        Bs.append(B)
        Ks.append(K)
        Qs.append(_matrix(pl["Q"], f"players[{i}].Q", rows=n, cols=n)
                  if "Q" in pl else None)
        if "R_row" in pl:
            row = pl["R_row"]
            if not isinstance(row, list) or len(row) != N:
                raise InputError(f"players[{i}].R_row: must list one block per player")
            Rrows.append([_matrix(row[j], f"players[{i}].R_row[{j}]")
                          for j in range(N)])
        else:
            Rrows.append(None)
    try:
        system = GameSystem(A, Bs)
        profile = StrategyProfile.stabilizing(system, Ks)
    except (DimensionError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    has_costs = [Qs[i] is not None and Rrows[i] is not None for i in range(N)]
    costs = None
    if all(has_costs):
        for i in range(N):
            for j in range(N):
                if Rrows[i][j].shape != (system.m[j], system.m[j]):
                    raise InputError(
                        f"players[{i}].R_row[{j}]: has shape "
                        f"{Rrows[i][j].shape}, expected {(system.m[j], system.m[j])}")
        costs = CostParameters(Qs, Rrows)
    elif any(has_costs) or any(Qs[i] is not None or Rrows[i] is not None for i in range(N)):
        raise InputError("players: Q and R_row must be supplied for every player or none")
    x0 = None
    if "x0" in raw:
        x0 = np.asarray(raw["x0"], dtype=float).ravel()
        if x0.size != n:
            raise InputError(f"x0: has length {x0.size}, expected {n}")
    tol = float(raw.get("tol", 1e-8))
    return system, profile, costs, x0, tol


def load_costs(path: str, system: GameSystem) -> CostParameters:
    """Parse a standalone cost file: {"Q": [...], "R": [[...]]} per player."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
    N = system.num_players
    if not isinstance(raw, dict) or "Q" not in raw or "R" not in raw:
        raise InputError(f"{path}: expected object with Q and R")
    if len(raw["Q"]) != N or len(raw["R"]) != N:
        raise InputError(f"{path}: Q and R must cover every player")
    Qs = [_matrix(raw["Q"][i], f"Q[{i}]", rows=system.n, cols=system.n) for i in range(N)]
    Rs = [[_matrix(raw["R"][i][j], f"R[{i}][{j}]",
                   rows=system.m[j], cols=system.m[j]) for j in range(N)]
          for i in range(N)]
    return CostParameters(Qs, Rs)


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------

def _complex_parts(z):
    return float(np.real(z)), float(np.imag(z))


def _player_report(pa):
    cert = pa.rank_certificate
    violations = []
    for v in cert.violations:
        re, im = _complex_parts(v.s0)
        violations.append({
            "s0_re": re,
            "s0_im": im,
            "real_witness": bool(v.real_v_available),
            "boundary": bool(v.boundary),
            "v_re": np.real(v.v).tolist(),
            "v_im": np.imag(v.v).tolist(),
        })
    kal = None
    if pa.kalman is not None:
        kal = {
            "status": pa.kalman.status,
            "residual": float(pa.kalman.residual),
            "kernel_dim": int(pa.kalman.kernel_dim),
            "psd_ok": bool(pa.kalman.psd_ok),
            "Q": pa.kalman.Q.tolist() if pa.kalman.Q is not None else None,
            "R": pa.kalman.R.tolist() if pa.kalman.R is not None else None,
        }
    return {
        "index": pa.index,
        "circle_ok": bool(pa.circle_ok),
        "circle_witness": (None if pa.phi_analysis.circle_witness is None
                           else float(pa.phi_analysis.circle_witness)),
        "circle_method": pa.phi_analysis.circle_method,
        "p": int(pa.phi_analysis.p),
        "rank_ok": bool(pa.rank_ok),
        "rank_degenerate": bool(cert.degenerate),
        "rank_certificates": violations,
        "kalman": kal,
    }


def _frequency_verdict(analysis):
    if any(p.rank_certificate.degenerate for p in analysis.players):
        return "indeterminate"
    return "inducible" if analysis.inducible else "not_inducible"


def _oracle_verdict(status):
    return {
        "feasible": "inducible",
        "infeasible_certified_by_identity": "not_inducible",
        "indeterminate": "indeterminate",
    }[status]


def _write_report(report, args):
    if args.format == "text":
        out = _format_text(report)
    else:
        out = dumps_report(report)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _format_text(report, indent=0, key=None) -> str:
    pad = "  " * indent
    head = f"{pad}{key}: " if key is not None else pad
    if isinstance(report, dict):
        lines = [f"{pad}{key}:"] if key is not None else []
        for k, v in report.items():
            lines.append(_format_text(v, indent + (1 if key is not None else 0), k))
        return "\n".join(lines) + ("\n" if indent == 0 else "")
    if isinstance(report, list):
        if not report:
            return f"{head}[]"
        if all(isinstance(v, (int, float, str, bool)) or v is None for v in report):
            return head + "[" + ", ".join(
                f"{v:.6g}" if isinstance(v, float) else str(v) for v in report) + "]"
        if all(isinstance(v, list)
               and all(isinstance(w, (int, float)) for w in v) for v in report):
            rows = ["[" + ", ".join(f"{w:.6g}" for w in v) + "]" for v in report]
            return head + "[" + "; ".join(rows) + "]"
        lines = [f"{pad}{key}:"] if key is not None else []
        for v in report:
            lines.append(_format_text(v, indent + 1, "-"))
        return "\n".join(lines)
    if isinstance(report, float):
        return f"{head}{report:.6g}"
    return f"{head}{report}"


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    system, profile, _, _, tol = load_problem(args.problem)
    warnings = []
    t0 = time.monotonic()
    if args.player is not None:
        if not (0 <= args.player < system.num_players):
            raise InputError(f"--player {args.player}: out of range")
        players = [analyze_player(system, profile, args.player,
                                  points_per_decade=args.grid)]
        freq_inducible = players[0].inducible
        degenerate = players[0].rank_certificate.degenerate
        verdict_freq = ("indeterminate" if degenerate
                        else "inducible" if freq_inducible else "not_inducible")
        for p in players:
            warnings.extend(p.warnings)
    else:
        analysis = is_nash_inducible(system, profile,
                                     points_per_decade=args.grid)
        players = list(analysis.players)
        verdict_freq = _frequency_verdict(analysis)
        for p in players:
            warnings.extend(p.warnings)
    t_freq = time.monotonic() - t0

    t0 = time.monotonic()
    if args.no_oracle:
        verdict_oracle = "skipped"
    else:
        feas = solve_feasibility_projection(system, profile)
        verdict_oracle = _oracle_verdict(feas.status)
        if feas.status == "indeterminate":
            warnings.append("time-domain oracle did not reach a determinate verdict")
    t_oracle = time.monotonic() - t0

    determinate = {"inducible", "not_inducible"}
    disagreement = (verdict_freq in determinate and verdict_oracle in determinate
                    and verdict_freq != verdict_oracle)
    report = {
        "verdict_frequency": verdict_freq,
        "verdict_oracle": verdict_oracle,
        "disagreement": disagreement,
        "players": [_player_report(p) for p in players],
        "warnings": warnings,
        "timings_ms": {"frequency": int(round(1000 * t_freq)),
                       "oracle": int(round(1000 * t_oracle))},
    }
    _write_report(report, args)
    if disagreement:
        return 4
    verdicts = [v for v in (verdict_freq, verdict_oracle) if v in determinate]
    if not verdicts:
        print("error: no method reached a determinate verdict", file=sys.stderr)
        return 3
    return 0 if verdicts[0] == "inducible" else 1


def cmd_solve(args) -> int:
    system, profile, _, _, tol = load_problem(args.problem)
    if args.nearest:
        costs0 = load_costs(args.nearest, system)
        res = nearest_params(costs0, system, profile)
        report = {
            "status": res.status,
            "distance": float(res.distance),
            "players": [
                {"index": i,
                 "Q": res.costs.Q[i].tolist(),
                 "R_row": [Rij.tolist() for Rij in res.costs.R[i]]}
                for i in range(system.num_players)
            ] if res.costs is not None else [],
        }
        _write_report(report, args)
        return 0 if res.status == "feasible" else 1

    players = []
    failed = None
    for i in range(system.num_players):
        pa = analyze_player(system, profile, i, solve_costs=True, mode=args.mode,
                            points_per_decade=args.grid)
        players.append(pa)
        if failed is None and (pa.kalman is None or pa.kalman.status != "solved"
                               or not pa.inducible):
            failed = pa
    if failed is not None:
        report = {
            "status": "infeasible",
            "failing_player": failed.index,
            "circle_ok": bool(failed.circle_ok),
            "circle_witness": (None if failed.phi_analysis.circle_witness is None
                               else float(failed.phi_analysis.circle_witness)),
            "phi_at_witness": (None if failed.phi_analysis.circle_witness is None
                               else float(np.linalg.eigvalsh(
                                   0.5 * (failed.phi_analysis.phi.eval(
                                       1j * failed.phi_analysis.circle_witness)
                                       + failed.phi_analysis.phi.eval(
                                           1j * failed.phi_analysis.circle_witness)
                                       .conj().T)).min().real)),
            "rank_ok": bool(failed.rank_ok),
            "kalman_status": failed.kalman.status if failed.kalman else None,
            "players": [_player_report(p) for p in players],
        }
        _write_report(report, args)
        return 1

    N = system.num_players
    if args.mode == "q-only":
        Qs = [p.kalman.Q for p in players]
        costs = CostParameters.identity_R(Qs, system.m)
    else:
        Qs = [p.kalman.Q for p in players]
        R = [[players[i].kalman.R if i == j else np.zeros((system.m[j], system.m[j]))
              for j in range(N)] for i in range(N)]
        costs = CostParameters(Qs, R)
    ok, cert = verify_nash(system, profile, costs, tol=max(tol, 1e-8))
    report = {
        "status": "solved" if ok else "verification_failed",
        "players": [
            {"index": i,
             "Q": costs.Q[i].tolist(),
             "R": costs.R[i][i].tolist(),
             "P": cert.P[i].tolist(),
             "kalman_residual": float(players[i].kalman.residual),
             "are_residual": float(cert.are_residuals[i]),
             "stationarity_residual": float(cert.stationarity_residuals[i])}
            for i in range(N)
        ],
        "verify_ok": bool(ok),
    }
    _write_report(report, args)
    return 0 if ok else 1


def cmd_verify(args) -> int:
    system, profile, costs, _, tol = load_problem(args.problem)
    if costs is None:
        raise InputError("players: Q and R_row required for verify")
    try:
        ok, cert = verify_nash(system, profile, costs, tol=max(tol, args.tol or 0.0))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    report = {
        "verified": bool(ok),
        "hurwitz_margin": float(cert.hurwitz_margin),
        "players": [
            {"index": i,
             "P": cert.P[i].tolist(),
             "are_residual": float(cert.are_residuals[i]),
             "stationarity_residual": float(cert.stationarity_residuals[i]),
             "P_psd": bool(cert.psd_ok[i])}
            for i in range(system.num_players)
        ],
    }
    _write_report(report, args)
    return 0 if ok else 1


def cmd_example(args) -> int:
    if args.name not in BUNDLED:
        raise InputError(
            f"unknown example {args.name!r}; choose from {sorted(BUNDLED)}")
    path = args.output or f"{args.name}.json"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(BUNDLED[args.name])
    print(f"wrote {path}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="nashinduce",
        description="Decide whether a feedback profile can be made a Nash "
                    "equilibrium of a linear-quadratic differential game.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--tol", type=float, default=1e-8,
                       help="global residual tolerance")
        p.add_argument("--grid", type=int, default=CIRCLE_GRID_POINTS,
                       help="circle-criterion grid points per decade")
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("-o", "--output", default=None,
                       help="write the report to this path instead of stdout")

    pc = sub.add_parser("check", help="inducibility verdict with cross-validation")
    pc.add_argument("problem")
    common(pc)
    pc.add_argument("--no-oracle", action="store_true",
                    help="skip the time-domain feasibility oracle")
    pc.add_argument("--player", type=int, default=None,
                    help="restrict the frequency-domain analysis to one player")
    pc.set_defaults(func=cmd_check)

    ps = sub.add_parser("solve", help="recover Nash-inducing cost matrices")
    ps.add_argument("problem")
    common(ps)
    ps.add_argument("--mode", choices=("q-only", "general"), default="general")
    ps.add_argument("--nearest", default=None, metavar="COSTS0_JSON",
                    help="project these reference costs onto the feasible set")
    ps.set_defaults(func=cmd_solve)

    pv = sub.add_parser("verify", help="exact Nash check for supplied costs")
    pv.add_argument("problem")
    common(pv)
    pv.set_defaults(func=cmd_verify)

    pe = sub.add_parser("example", help="write a bundled problem file")
    pe.add_argument("name")
    pe.add_argument("-o", "--output", default=None)
    pe.set_defaults(func=cmd_example)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DimensionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailureError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
