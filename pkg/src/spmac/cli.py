"""Command-line front end.

Every command writes one artifact (JSON or CSV) to ``--out`` or stdout.
Exit status: 0 success, 1 numerical failure, 2 usage error; on failure a
JSON object ``{"schema": ..., "error": ..., "message": ...}`` goes to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA = "spmac/1"
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ----------------------------------------------------------------------------
# helpers


def _threads() -> int:
    raw = os.environ.get("SPMAC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"SPMAC_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"SPMAC_THREADS must be a positive integer, got {raw!r}")
    return n


def _prior_list(values, senders: int | None = None):
    if not values:
        return None
    priors = []
    for v in values:
        try:
            p = [float(t) for t in v.split(",")]
        except ValueError:
            raise UsageError(f"bad --prior value {v!r}") from None
        if len(p) == 1:
            p = [1 - p[0], p[0]]
        if min(p) < 0 or abs(sum(p) - 1) > 1e-9:
            raise UsageError(f"--prior {v!r} is not a distribution")
        priors.append(p)
    if senders is not None and len(priors) != senders:
        raise UsageError(f"expected {senders} --prior values, got {len(priors)}")
    return priors


def _payload(kind: str, body: dict, args) -> dict:
    d = {"schema": SCHEMA, "command": kind, "version": __version__}
    if getattr(args, "seed", None) is not None:
        d["seed"] = args.seed
    d.update(body)
    return d


def _to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.out:
        path = Path(args.out)
        if path.parent and not path.parent.exists():
            raise UsageError(f"output directory {str(path.parent)!r} does not exist")
        path.write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, kind: str, body: dict) -> None:
    if args.format == "csv":
        rows = [(k, v) for k, v in _flatten(body)]
        _emit(args, _to_csv(["key", "value"], rows))
    else:
        _emit(args, json.dumps(_payload(kind, body, args), indent=2, sort_keys=True) + "\n")


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, (list, tuple)):
            yield key, json.dumps(v)
        else:
            yield key, v


def _require_converged(ok: bool, what: str) -> None:
    if not ok:
        raise NumericalFailure(f"{what} did not converge")


# ----------------------------------------------------------------------------
# commands


def cmd_reproduce(args) -> None:
    from . import reproduce

    selected = sorted(reproduce.CRITERIA)
    if args.only:
        try:
            selected = [int(t) for t in args.only.split(",")]
        except ValueError:
            raise UsageError(f"bad --only value {args.only!r}") from None
        bad = [k for k in selected if k not in reproduce.CRITERIA]
        if bad:
            raise UsageError(f"unknown criteria {bad}")
    workers = min(_threads(), len(selected), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_criterion, selected))
    else:
        results = [_run_criterion(k) for k in selected]
    for r in results:
        print(r.line(), file=sys.stderr)
    items = []
    for r in results:
        d = r.to_dict()
        # wall-clock numbers would break byte-for-byte reproducibility
        d.pop("seconds")
        if "runtime_s" in d["checks"]:
            d["checks"]["runtime_s"] = {"ok": d["checks"]["runtime_s"]["ok"],
                                        "limit": d["checks"]["runtime_s"]["limit"]}
        items.append(d)
    body = {"criteria": items, "passed": sum(r.passed for r in results), "total": len(results)}
    if args.format == "csv":
        rows = [(r.number, r.title, "pass" if r.passed else "fail") for r in results]
        _emit(args, _to_csv(["criterion", "title", "status"], rows))
    else:
        _emit(args, json.dumps(_payload("reproduce all", body, args), indent=2, sort_keys=True) + "\n")


def _run_criterion(k: int):
    from . import reproduce

    return reproduce.CRITERIA[k]()


def cmd_one_sender(args) -> None:
    from .analytic import optimize_one_sender

    r = optimize_one_sender(check_grid=args.grid or 401)
    _require_converged(r.converged, "one-sender optimizer")
    _emit_json(args, "one-sender optimize", r.to_dict())


def cmd_two_sender(args) -> None:
    from .analytic import optimize_two_sender_ternary

    r = optimize_two_sender_ternary(seed_grid=args.grid or 41)
    _require_converged(r.converged, "two-sender optimizer")
    _emit_json(args, "two-sender ternary", r.to_dict())


def cmd_holevo(args) -> None:
    from .analytic import holevo_logn, holevo_one_sender_closed_form

    if args.target == "one-sender":
        r = holevo_one_sender_closed_form(seed=args.seed)
        _emit_json(args, "holevo one-sender", r.to_dict())
        return
    if args.n is None or args.n < 1:
        raise UsageError("holevo logn needs --n K with K >= 1")
    chi = holevo_logn(args.n, assisted=args.assisted)
    paths = args.n + 1 if args.assisted else args.n
    _emit_json(args, "holevo logn", {"n": args.n, "assisted": args.assisted, "value_bits": chi,
                                     "log2_paths": float(np.log2(paths)),
                                     "deviation": abs(chi - float(np.log2(paths)))})


def _protocol_channel(protocol: str, n: int):
    from .mac_builder import assisted_to_unassisted, build_mac, canonical_classical_mac, n_sender_assisted_mac

    if protocol == "assisted":
        return n_sender_assisted_mac(n)
    if protocol == "unassisted":
        if n < 2:
            raise UsageError("the unassisted protocol needs --n >= 2")
        u = assisted_to_unassisted(n)
        return build_mac(u.initial, u.encoding, u.povm)
    if protocol == "classical":
        return canonical_classical_mac(np.full(n, 1.0 / n))
    raise UsageError(f"unknown protocol {protocol!r}")


def cmd_ratesum(args) -> None:
    from .capacity import DEFAULT_MAX_ITER, DEFAULT_TOL, ba_mac_rate_sum

    if args.n is None or args.n < 1:
        raise UsageError("ratesum needs --n K with K >= 1")
    tm = _protocol_channel(args.protocol, args.n)
    if args.max_iter is not None and args.max_iter < 1:
        raise UsageError("--max-iter must be positive")
    r = ba_mac_rate_sum(tm, seed=args.seed, tol=args.tol or DEFAULT_TOL,
                        max_iter=args.max_iter or DEFAULT_MAX_ITER)
    _require_converged(r.converged, "MAC Blahut-Arimoto")
    _emit_json(args, "ratesum", {"n": args.n, "protocol": args.protocol, **r.to_dict()})


def cmd_classical(args) -> None:
    from .info_metrics import classical_region_sweep

    grid = args.grid or 201
    if grid < 1:
        raise UsageError("--grid must be positive")
    s = classical_region_sweep(grid, seed=args.seed)
    if args.format == "json":
        body = {"lambda": s.lambdas.tolist(), "R_sum": s.rate_sums.tolist(),
                "R1_star": s.r1_star.tolist(), "R2_star": s.r2_star.tolist(),
                "R1_dstar": s.r1_dstar.tolist(), "R2_dstar": s.r2_dstar.tolist(),
                "hull": s.hull.tolist()}
        _emit_json(args, "classical region", body)
    else:
        _emit(args, s.to_csv())
    if args.boundary:
        Path(args.boundary).write_text(s.boundary_csv())


def cmd_region(args) -> None:
    from .info_metrics import rate_region_two_sender
    from .mac_builder import OPTIMAL_PRIOR_ASSISTED, OPTIMAL_PRIOR_TB, n_sender_assisted_mac, transition_balanced_channel

    if args.protocol == "assisted2":
        tm, default = n_sender_assisted_mac(2), OPTIMAL_PRIOR_ASSISTED
    elif args.protocol == "balanced":
        tm, default = transition_balanced_channel(), OPTIMAL_PRIOR_TB
    else:
        raise UsageError(f"unknown protocol {args.protocol!r}")
    prior = _prior_list(args.prior, senders=2) or default
    reg = rate_region_two_sender(tm, prior)
    if args.format == "json":
        _emit_json(args, "region", {"protocol": args.protocol, "prior": [list(p) for p in prior],
                                    "I1_given_2": reg.i1_given_2, "I2_given_1": reg.i2_given_1,
                                    "I_sum": reg.i_sum, "vertices": [list(v) for v in reg.vertices()]})
    else:
        _emit(args, _to_csv(["R1", "R2"], reg.vertices()))


def cmd_experiment(args) -> None:
    from . import experiment as ex
    from .info_metrics import channel_mutual_information
    from .mac_builder import OPTIMAL_PRIOR_TB

    if args.target == "eta-threshold":
        body = {"eta_threshold_fixed": ex.eta_threshold("fixed", tol=args.tol or 1e-6)}
        if args.policy in ("optimized", "both"):
            body["eta_threshold_optimized"] = ex.eta_threshold("optimized", tol=args.tol or 1e-6)
        if args.eta is not None:
            body["eta"] = args.eta
            body["rate_sum_fixed_prior"] = ex.fixed_prior_rate(args.eta)
        _emit_json(args, "experiment eta-threshold", body)
    elif args.target == "visibility":
        vs = 1.0 if args.vs is None else args.vs
        vz = 1.0 if args.vz is None else args.vz
        rep = ex.visibility_channel_report(vs, vz)
        prior = _prior_list(args.prior, senders=2) or OPTIMAL_PRIOR_TB
        body = {"v_sagnac": vs, "v_mz": vz, "rate_sum_bits": channel_mutual_information(rep.channel, prior),
                "renormalization": rep.renormalization, "prior": [list(p) for p in prior],
                "channel": json.loads(rep.channel.to_json())}
        if args.grid:
            g = np.linspace(0.0, 1.0, args.grid)
            body["grid"] = [[channel_mutual_information(ex.visibility_channel(a, b), prior) for b in g] for a in g]
        _emit_json(args, "experiment visibility", body)
    elif args.target == "montecarlo":
        vs = ex.NOMINAL_VISIBILITIES[0] if args.vs is None else args.vs
        vz = ex.NOMINAL_VISIBILITIES[1] if args.vz is None else args.vz
        prior = _prior_list(args.prior, senders=2)
        cfg = ex.ExperimentConfig(eta=1.0 if args.eta is None else args.eta, v_sagnac=vs, v_mz=vz,
                                  counts_per_setting=args.m, random_bits=args.bits, seed=args.seed,
                                  priors=tuple(tuple(p) for p in prior) if prior else OPTIMAL_PRIOR_TB)
        run = ex.monte_carlo_joint(cfg)
        if args.format == "csv":
            _emit(args, run.counts.to_csv())
        else:
            _emit(args, json.dumps({"schema": SCHEMA, "command": "experiment montecarlo",
                                    **run.report()}, indent=2, sort_keys=True) + "\n")
        if args.counts:
            Path(args.counts).write_text(run.counts.to_csv())
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown experiment target {args.target!r}")


# ----------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, fmt: str = "json") -> None:
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=fmt)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--tol", type=float)
    p.add_argument("--grid", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spmac", description="Single-particle multiple-access channel toolkit.")
    parser.add_argument("--version", action="version", version=f"spmac {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("reproduce", help="recompute every acceptance number")
    p.add_argument("what", choices=("all",))
    p.add_argument("--only", help="comma list of criterion numbers")
    _common(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("one-sender", help="one-sender accessible-information optimum")
    p.add_argument("what", choices=("optimize",))
    _common(p)
    p.set_defaults(func=cmd_one_sender)

    p = sub.add_parser("two-sender", help="binary x ternary two-sender optimum")
    p.add_argument("what", choices=("ternary",))
    _common(p)
    p.set_defaults(func=cmd_two_sender)

    p = sub.add_parser("holevo", help="Holevo information")
    p.add_argument("target", choices=("one-sender", "logn"))
    p.add_argument("--n", type=int)
    p.add_argument("--assisted", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_holevo)

    p = sub.add_parser("ratesum", help="MAC rate sum by Blahut-Arimoto with an upper bound")
    p.add_argument("--n", type=int)
    p.add_argument("--protocol", choices=("assisted", "unassisted", "classical"), default="assisted")
    p.add_argument("--max-iter", type=int, help="iteration cap per start")
    _common(p)
    p.set_defaults(func=cmd_ratesum)

    p = sub.add_parser("classical", help="classical two-sender region sweep")
    p.add_argument("what", choices=("region",))
    p.add_argument("--boundary", help="also write the union boundary CSV here")
    _common(p, fmt="csv")
    p.set_defaults(func=cmd_classical)

    p = sub.add_parser("region", help="two-sender pentagon for a fixed prior")
    p.add_argument("--protocol", choices=("assisted2", "balanced"), default="assisted2")
    p.add_argument("--prior", action="append", help="comma list per sender (repeat once per sender)")
    _common(p, fmt="csv")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("experiment", help="experiment model")
    p.add_argument("target", choices=("eta-threshold", "visibility", "montecarlo"))
    p.add_argument("--policy", choices=("fixed", "optimized", "both"), default="both")
    p.add_argument("--eta", type=float)
    p.add_argument("--vs", type=float)
    p.add_argument("--vz", type=float)
    p.add_argument("--prior", action="append")
    p.add_argument("--m", type=int, default=600, help="counts per setting")
    p.add_argument("--bits", type=int, default=680, help="number of random input settings")
    p.add_argument("--counts", help="also write the count table CSV here")
    _common(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"schema": SCHEMA, "error": kind, "message": message}), file=sys.stderr)
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as e:
        return _fail("usage", str(e), 2)
    except NumericalFailure as e:
        return _fail("numerical", str(e), 1)
    except (ValueError, ZeroDivisionError) as e:
        return _fail("usage", str(e), 2)
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as e:
        return _fail("numerical", str(e), 1)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
