"""Command-line front end.

Exit codes: 0 success/feasible, 1 input error, 2 infeasible or
undetermined, 3 precondition not met (support, purity, state count).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .discrimination import (
    FeasibilityEntry,
    build_global_povm,
    build_local_povms,
    check_locc,
    check_unconstrained,
    reciprocal_verdict,
    verify_povm,
)
from .instance import InstanceError, encode_complex, load_instance
from .linalg import DEFAULT_TOL_RANK
from .search import DEFAULT_TOL_DETECT, SearchConfig
from .simulate import run_protocol
from .states import DEFAULT_TOL_PRODUCT
from .witness import (
    WitnessValidationError,
    build_witness,
    full_support_check,
    s_tilde_projector,
    validate_witness,
)

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_PRECONDITION = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; argparse's default of 2 means "infeasible" here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("instance", help="instance file (JSON)")
    p.add_argument("--tol-rank", type=float, default=DEFAULT_TOL_RANK, help="relative rank threshold")
    p.add_argument("--tol-product", type=float, default=DEFAULT_TOL_PRODUCT, help="subspace membership slack")
    p.add_argument("--tol-detect", type=float, default=DEFAULT_TOL_DETECT, help="smallest detection value counted as non-zero")
    p.add_argument("--restarts", type=int, default=SearchConfig.restarts, help="see-saw restarts")
    p.add_argument("--max-iters", type=int, default=SearchConfig.max_iters, help="see-saw sweeps per restart")
    p.add_argument("--seed", type=int, default=0, help="RNG seed for search, sampling and simulation")
    p.add_argument("--trials", type=int, default=10_000, help="simulation rounds")
    p.add_argument("--samples", type=int, default=100_000, help="product samples for witness validation")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="loccusd", description="Unambiguous discrimination of multiparticle states under LOCC.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()
    helps = {
        "check": "decide unconstrained and LOCC discriminability for every target state",
        "povm": "build the global POVM and the per-party local POVMs",
        "witness": "build entanglement witnesses for targets without a product detector",
        "simulate": "Monte Carlo run of the local measurement protocol",
        "reciprocal": "reciprocal states of a basis of pure states and whether they factorize",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _config(args) -> SearchConfig:
    return SearchConfig(
        restarts=args.restarts,
        max_iters=args.max_iters,
        tol_product=args.tol_product,
        tol_detect=args.tol_detect,
        seed=args.seed,
    )


def _base(args, raw: dict) -> dict:
    cfg = _config(args)
    config = {
        "tol_rank": args.tol_rank,
        "tol_product": cfg.tol_product,
        "tol_detect": cfg.tol_detect,
        "restarts": cfg.restarts,
        "max_iters": cfg.max_iters,
        "conv_tol": cfg.conv_tol,
        "weight_w": cfg.weight_w,
        "seed": cfg.seed,
    }
    if args.command == "simulate":
        config["trials"] = args.trials
    if args.command == "witness":
        config["samples"] = args.samples
    return {
        "tool": "loccusd",
        "version": __version__,
        "command": args.command,
        "config": config,
        "instance": raw,
    }


def _entry(e: FeasibilityEntry) -> dict:
    cert = None
    if e.certificate is not None:
        cert = {
            "factors": [encode_complex(f) for f in e.certificate.factors],
            "vector": encode_complex(e.certificate.vector),
        }
    return {
        "mu": e.mu,
        "unconstrained": e.unconstrained_feasible,
        "locc": e.locc_feasible if e.locc_feasible is not None else "undetermined",
        "method": e.method,
        "detect_value": e.detect_value,
        "membership": e.membership,
        "certificate": cert,
    }


def _table(t) -> dict:
    return {
        "outcomes": list(t.labels) + ["?"],
        "probabilities": t.table.tolist(),
        "violations": list(t.violations),
        "ok": t.ok,
    }


def cmd_check(args, ens, raw):
    report = check_locc(ens, _config(args), args.tol_rank)
    out = _base(args, raw)
    out["results"] = {
        "states": [_entry(e) for e in report.entries.values()],
        "all_unconstrained": report.all_unconstrained,
        "all_locc": report.all_locc,
    }
    return out, EXIT_OK if report.all_locc else EXIT_INFEASIBLE


def cmd_povm(args, ens, raw):
    report = check_locc(ens, _config(args), args.tol_rank)
    out = _base(args, raw)
    results = {"states": [_entry(e) for e in report.entries.values()]}
    out["results"] = results
    if not report.all_locc:
        results["error"] = "not every target state has a product detector; no POVM emitted"
        return out, EXIT_INFEASIBLE
    certs = report.certificates()
    g = build_global_povm(certs)
    lp = build_local_povms(certs, report.detect_values())
    results["global_povm"] = {
        "lambda": g.lam,
        "conclusive": {str(mu): encode_complex(m) for mu, m in g.conclusive.items()},
        "inconclusive": encode_complex(g.inconclusive),
        "verification": _table(verify_povm(g, ens)),
    }
    results["local_povms"] = {
        "parties": [
            {
                "party": j,
                "lambda": party.lam,
                "conclusive": {str(mu): encode_complex(m) for mu, m in party.conclusive.items()},
                "inconclusive": encode_complex(party.inconclusive),
            }
            for j, party in enumerate(lp.parties, start=1)
        ],
        "predicted_detection": {str(mu): p for mu, p in lp.predicted.items()},
        "verification": _table(verify_povm(lp, ens)),
    }
    return out, EXIT_OK


def cmd_witness(args, ens, raw):
    out = _base(args, raw)
    if not full_support_check(ens, args.tol_rank):
        out["results"] = {"error": "witness undefined for this ensemble: the states do not span the whole space"}
        return out, EXIT_PRECONDITION
    cfg = _config(args)
    unconstrained = check_unconstrained(ens, args.tol_rank, cfg.tol_detect)
    entries, code = [], EXIT_OK
    for mu in ens.delta:
        item = {"mu": mu}
        entries.append(item)
        if not unconstrained[mu]:
            item["status"] = "unconstrained discrimination impossible; witness undefined"
            continue
        sub = s_tilde_projector(ens, mu, args.tol_rank)
        item["subspace_dim"] = sub.dim
        try:
            wit = build_witness(sub, cfg=cfg)
        except WitnessValidationError as exc:
            item["status"] = f"rejected: {exc}"
            code = EXIT_INFEASIBLE
            continue
        if wit is None:
            item["status"] = "no witness (product state exists)"
            continue
        val = validate_witness(wit, args.samples, args.seed, cfg)
        item.update(
            status="witness",
            gamma=wit.gamma,
            W=encode_complex(wit.W),
            validation={
                "samples": val.samples,
                "min_sampled": val.min_sampled,
                "violations": val.violations,
                "recheck_overlap": val.recheck_overlap,
                "detected_value": val.detected_value,
                "ok": val.ok,
            },
        )
        if not val.ok:
            code = EXIT_INFEASIBLE
    out["results"] = {"witnesses": entries}
    return out, code


def cmd_simulate(args, ens, raw):
    report = check_locc(ens, _config(args), args.tol_rank)
    out = _base(args, raw)
    if not report.all_locc:
        out["results"] = {
            "states": [_entry(e) for e in report.entries.values()],
            "error": "not every target state has a product detector; nothing to simulate",
        }
        return out, EXIT_INFEASIBLE
    lp = build_local_povms(report.certificates(), report.detect_values())
    sim = run_protocol(ens, lp, args.trials, args.seed)
    out["results"] = {
        "lambdas": list(lp.lambdas),
        "states": [
            {
                "mu": nu,
                "prepared": s.prepared,
                "conclusive_correct": s.conclusive_correct,
                "conclusive_wrong": s.conclusive_wrong,
                "inconclusive": s.inconclusive,
                "empirical_rate": s.empirical_rate,
                "predicted_rate": s.predicted_rate,
                "within_5_sigma": s.within(5.0),
            }
            for nu, s in sim.per_state.items()
        ],
        "unambiguous": sim.unambiguous,
    }
    return out, EXIT_OK if sim.unambiguous else EXIT_INFEASIBLE


def cmd_reciprocal(args, ens, raw):
    out = _base(args, raw)
    if not ens.all_pure:
        out["results"] = {"error": "reciprocal states need pure states only"}
        return out, EXIT_PRECONDITION
    if ens.size != ens.shape.total:
        out["results"] = {"error": f"reciprocal states need exactly D = {ens.shape.total} states, got {ens.size}"}
        return out, EXIT_PRECONDITION
    try:
        recip, factors, _ = reciprocal_verdict(
            [rho.vector for rho in ens.states], ens.shape, args.tol_product, args.tol_rank
        )
    except ValueError as exc:
        out["results"] = {"error": str(exc)}
        return out, EXIT_PRECONDITION
    feasible = all(factors[mu - 1] is not None for mu in ens.delta)
    out["results"] = {
        "reciprocal": [
            {
                "mu": mu,
                "vector": encode_complex(recip[mu - 1]),
                "product": factors[mu - 1] is not None,
                "factors": None if factors[mu - 1] is None else [encode_complex(f) for f in factors[mu - 1].factors],
            }
            for mu in range(1, ens.size + 1)
        ],
        "locc_feasible": feasible,
    }
    return out, EXIT_OK if feasible else EXIT_INFEASIBLE


COMMANDS = {
    "check": cmd_check,
    "povm": cmd_povm,
    "witness": cmd_witness,
    "simulate": cmd_simulate,
    "reciprocal": cmd_reciprocal,
}


def render_text(report: dict) -> str:
    lines = [f"{report['tool']} {report['version']} {report['command']}"]
    results = report.get("results", {})
    if "error" in results:
        lines.append(f"error: {results['error']}")
    for s in results.get("states", []):
        if "locc" in s:
            lines.append(
                f"mu={s['mu']} unconstrained={str(s['unconstrained']).lower()} "
                f"locc={str(s['locc']).lower()} method={s['method']} detect={s['detect_value']:.10g}"
            )
        else:
            lines.append(
                f"mu={s['mu']} prepared={s['prepared']} correct={s['conclusive_correct']} "
                f"wrong={s['conclusive_wrong']} rate={s['empirical_rate']:.6f} predicted={s['predicted_rate']:.6f}"
            )
    if "global_povm" in results:
        lines.append(f"global lambda={results['global_povm']['lambda']:.10g}")
        lam = " ".join(f"{p['lambda']:.10g}" for p in results["local_povms"]["parties"])
        lines.append(f"local lambdas={lam}")
        for mu, p in results["local_povms"]["predicted_detection"].items():
            lines.append(f"predicted p({mu}|rho_{mu})={p:.10g}")
    for w in results.get("witnesses", []):
        extra = f" gamma={w['gamma']:.10g}" if "gamma" in w else ""
        lines.append(f"mu={w['mu']} {w['status']}{extra}")
    for r in results.get("reciprocal", []):
        lines.append(f"mu={r['mu']} product={str(r['product']).lower()}")
    if "locc_feasible" in results:
        lines.append(f"locc_feasible={str(results['locc_feasible']).lower()}")
    return "\n".join(lines) + "\n"


def _write(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        os.unlink(tmp)
        raise


def run(argv=None) -> tuple[dict | None, int]:
    args = build_parser().parse_args(argv)
    try:
        ens, raw = load_instance(args.instance)
        _config(args)
    except (InstanceError, ValueError) as exc:
        print(f"loccusd: input error: {exc}", file=sys.stderr)
        return None, EXIT_INPUT
    report, code = COMMANDS[args.command](args, ens, raw)
    report["exit_code"] = code
    text = json.dumps(report, indent=2) + "\n" if args.format == "json" else render_text(report)
    _write(text, args.out)
    return report, code


def main(argv=None) -> int:
    return run(argv)[1]


if __name__ == "__main__":
    sys.exit(main())
