"""
qcorr command line.

Usage:
    qcorr scenario w-cnot --format json
    qcorr scenario bell-dephasing --p 0.25
    qcorr sweep bell-dephasing --p-start 0 --p-end 1 --steps 11 --format csv
    qcorr hunt --samples 100 --seed 42 --format json

Exit codes: 0 success, 1 usage error, 2 numerical-contract violation.
All randomness derives from --seed through numpy's PCG64 generator
(numpy.random.default_rng), so reports are reproducible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .errors import NumericalContractError, UsageError
from .measurement import OptimizerConfig
from .scenarios import HUNT_CONFIG, EventReport, bell_dephasing_scenario, hunt, is_flagged, w_cnot_scenario

SCHEMA_VERSION = "1.0"
SIG_DIGITS = 9


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(x: float) -> str:
    return f"{x:.{SIG_DIGITS}g}"


def rounded(obj):
    """Round every float in a JSON-like tree to 9 significant digits."""
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    if isinstance(obj, np.generic):
        return rounded(obj.item())
    return obj


def document(command: str, config: dict, **payload) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool": "qcorr",
        "tool_version": __version__,
        "command": command,
        "config": config,
    }
    doc.update(payload)
    return rounded(doc)


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _add_optimizer_flags(p: argparse.ArgumentParser, defaults: OptimizerConfig) -> None:
    p.add_argument("--grid", type=int, default=defaults.grid_steps, help="grid points per angle")
    p.add_argument("--restarts", type=int, default=defaults.restarts, help="random refinement starts")
    p.add_argument("--refine-iters", type=int, default=defaults.refine_iters,
                   help="Nelder-Mead iterations per free parameter")
    p.add_argument("--povm-outcomes", type=int, default=None,
                   help="search rank-1 POVMs with this many outcomes per side instead of projective measurements")
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--out", default=None, help="write the report to this path instead of stdout")


def _config(args) -> OptimizerConfig:
    if args.povm_outcomes is None:
        return OptimizerConfig(grid_steps=args.grid, restarts=args.restarts,
                               refine_iters=args.refine_iters, seed=args.seed)
    return OptimizerConfig(grid_steps=args.grid, restarts=args.restarts, refine_iters=args.refine_iters,
                           outcomes_a=args.povm_outcomes, outcomes_c=args.povm_outcomes,
                           mode="rank1-povm", seed=args.seed)


def _probability(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= p <= 1.0:
        raise argparse.ArgumentTypeError(f"probability {p} outside [0, 1]")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qcorr", description="Entropy and correlation bookkeeping for few-qubit events.")
    parser.add_argument("--version", action="version", version=f"qcorr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sc = sub.add_parser("scenario", help="run one scenario and print its event report")
    sc.add_argument("name", choices=["bell-dephasing", "w-cnot"])
    sc.add_argument("--p", type=_probability, default=None, help="dephasing probability (bell-dephasing only)")
    sc.add_argument("--format", choices=["text", "json"], default="text")
    _add_optimizer_flags(sc, OptimizerConfig())

    sw = sub.add_parser("sweep", help="tabulate a scenario over a parameter grid")
    sw.add_argument("name", choices=["bell-dephasing"])
    sw.add_argument("--p-start", type=_probability, default=0.0)
    sw.add_argument("--p-end", type=_probability, default=1.0)
    sw.add_argument("--steps", type=int, default=11)
    sw.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_optimizer_flags(sw, OptimizerConfig())

    hu = sub.add_parser("hunt", help="search random C-R events for entropy drops with classical gains")
    hu.add_argument("--samples", type=int, default=100)
    hu.add_argument("--epsilon", type=float, default=1e-6, help="tolerance for 'unchanged' entropies")
    hu.add_argument("--threshold", type=float, default=1e-3, help="minimum entropy drop and classical gain")
    hu.add_argument("--format", choices=["json", "csv"], default="json")
    _add_optimizer_flags(hu, HUNT_CONFIG)
    return parser


def render_text(r: EventReport) -> str:
    d = r.deltas
    params = ", ".join(f"{k}={v}" for k, v in r.params.items())
    lines = [f"scenario: {r.scenario} ({params})", f"{'':10s}{'before':>12s}{'after':>12s}{'delta':>12s}"]
    for lab, delta in (("A", d.ds_a), ("C", d.ds_c), ("R", d.ds_r)):
        b, a = r.entropies_before[lab], r.entropies_after[lab]
        lines.append(f"{'S(' + lab + ')':10s}{b:12.6f}{a:12.6f}{delta:12.6f}")
    lines.append(f"{'I_q(A:C)':10s}{r.iq_before:12.6f}{r.iq_after:12.6f}{d.d_iq:12.6f}")
    lines.append(
        f"{'I_c(A:C)':10s}{r.ic_before.value:12.6f}{r.ic_after.value:12.6f}"
        f"{r.ic_after.value - r.ic_before.value:12.6f}"
    )
    lines.append(f"balance residual: {d.residual:.3e}")
    for tag, ic in (("before", r.ic_before), ("after", r.ic_after)):
        for side, povm in (("A", ic.povm_a), ("C", ic.povm_c)):
            effects = "; ".join(
                "w={:.4f} n=({:+.4f}, {:+.4f}, {:+.4f})".format(e["weight"], *e["bloch"]) for e in povm.describe()
            )
            lines.append(f"measurement {tag} {side}: {effects}")
    lines.extend(f"note: {n}" for n in r.notes)
    return "\n".join(lines) + "\n"


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def cmd_scenario(args) -> str:
    cfg = _config(args)
    if args.name == "bell-dephasing":
        report = bell_dephasing_scenario(0.5 if args.p is None else args.p, cfg)
    else:
        if args.p is not None:
            raise UsageError("--p applies to bell-dephasing only")
        report = w_cnot_scenario(cfg)
    if args.format == "json":
        return dump_json(document("scenario", cfg.as_dict(), report=report.to_dict()))
    return render_text(report)


def cmd_sweep(args) -> str:
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    cfg = _config(args)
    rows = []
    for p in np.linspace(args.p_start, args.p_end, args.steps):
        r = bell_dephasing_scenario(float(p), cfg)
        rows.append({"p": float(p), "iq": r.iq_after, "ic": r.ic_after.value,
                     "ds_a": r.deltas.ds_a, "ds_c": r.deltas.ds_c})
    if args.format == "json":
        return dump_json(document("sweep", cfg.as_dict(), scenario=args.name, rows=rows))
    cols = ["p", "iq", "ic", "ds_a", "ds_c"]
    return _csv(cols, [[row[c] for c in cols] for row in rows])


def verify_records(records: list[dict], eps: float, threshold: float) -> None:
    """Re-check every serialized record's flag against the predicate."""
    for rec in records:
        expect = is_flagged(rec["ds_a"], rec["ds_c"], rec["ds_r"], rec["d_ic"], eps, threshold)
        if expect != rec["flagged"]:
            raise NumericalContractError(f"record {rec['state_id']} flag does not match its deltas")


def cmd_hunt(args) -> str:
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    cfg = _config(args)
    records = hunt(args.samples, args.seed, args.epsilon, args.threshold, cfg)
    flagged = sum(r.flagged for r in records)
    config = {**cfg.as_dict(), "samples": args.samples, "epsilon": args.epsilon, "threshold": args.threshold}
    doc = document("hunt", config, records=[r.to_dict() for r in records],
                   summary={"flagged": flagged, "total": len(records)})
    verify_records(doc["records"], args.epsilon, args.threshold)
    if args.format == "json":
        return dump_json(doc)
    cols = ["state_id", "ds_a", "ds_c", "ds_r", "d_iq", "d_ic", "flagged"]
    out = _csv(cols, [[r.to_dict()[c] for c in cols] for r in records])
    return out + f"# flagged {flagged}/{len(records)}\n"


COMMANDS = {"scenario": cmd_scenario, "sweep": cmd_sweep, "hunt": cmd_hunt}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        text = COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except NumericalContractError as e:
        print(f"numerical contract violated: {e}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
