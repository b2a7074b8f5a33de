"""``zapledger`` command line: bench, simulate, report.

Exit codes: 0 success, 2 invalid input, 3 failure while running.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

from zapledger.gas import (
    RATES,
    ChainProfile,
    GasError,
    gas_to_money,
    gasfree_cost,
    load_profiles,
)
from zapledger.market import (
    FEASIBILITY_HEADER,
    STATEMENT_HEADER,
    ScenarioError,
    load_scenario,
    run,
    schedule_feasibility,
)
from zapledger.reports import measure
from zapledger.strategies import OpReceipt, StrategyKind, ZapLedger

log = logging.getLogger("zapledger")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3
STRATEGIES = [k.value for k in StrategyKind]
REPORT_HEADER = ["op", "strategy", "n", "gas_units", "fast_gwei", "fast_usd", "standard_gwei", "standard_usd"]


class InvalidInput(Exception):
    pass


def _usd(cents: int) -> str:
    return f"{cents // 100}.{cents % 100:02d}"


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def _write_receipts(path: Path, receipts) -> None:
    path.write_text("".join(json.dumps(r.to_json(), separators=(",", ":")) + "\n" for r in receipts))


def _profile(args) -> ChainProfile:
    if args.profile is not None and not Path(args.profile).is_file():
        raise InvalidInput(f"profile file not found: {args.profile}")
    profiles = load_profiles(args.profile)
    if args.chain not in profiles:
        raise InvalidInput(f"profile document has no chain {args.chain!r}")
    return profiles[args.chain]


def _out_dir(args) -> Path:
    out = Path(os.environ.get("ZAPLEDGER_OUT") or args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- bench -------------------------------------------------------------------------


def cmd_bench(args) -> int:
    profile = _profile(args)
    if args.n_max < 1:
        raise InvalidInput("--n-max must be >= 1")
    kinds = STRATEGIES if args.strategy is None else [args.strategy]
    out = _out_dir(args)
    receipts: list[OpReceipt] = []
    sizes = range(1, args.n_max + 1)

    baseline = {}
    for op in ("mint", "transfer"):
        baseline[op] = [measure("heavyweight", op, n, profile) for n in sizes]

    for kind in kinds:
        receipts.append(ZapLedger.deploy(kind, profile)[1])
        ops = ["mint", "transfer"] + (["transfer+modify"] if kind == "featherweight" else [])
        series = {}
        for op in ops:
            series[op] = [measure(kind, op, n, profile) for n in sizes]
            receipts.extend(series[op])
            _write_csv(
                out / f"curve_{kind}_{op}.csv",
                ["n", "batch_gas", "per_token_gas"],
                [[r.n, r.gas_units, f"{r.gas_units / r.n:.2f}"] for r in series[op]],
            )
        for op in ("mint", "transfer"):
            cand = series["transfer+modify" if op == "transfer" and "transfer+modify" in series else op]
            rows = []
            for c, b in zip(cand, baseline[op]):
                ratio = c.gas_units / b.gas_units
                rows.append([c.n, c.gas_units, b.gas_units, f"{ratio:.6f}", f"{1 - ratio:.6f}"])
            _write_csv(
                out / f"normalized_{kind}_{op}.csv",
                ["n", "gas", "heavyweight_gas", "normalized", "reduction"],
                rows,
            )
    _write_receipts(out / "receipts.jsonl", receipts)
    print(f"bench: {len(receipts)} receipts, n_max={args.n_max}, written to {out}")
    return EXIT_OK


# -- simulate ----------------------------------------------------------------------


def cmd_simulate(args) -> int:
    profile = _profile(args)
    if args.scenario is None:
        raise InvalidInput("--scenario is required")
    scenario = load_scenario(args.scenario)
    kind = args.strategy or "lightweight"
    out = _out_dir(args)
    result = run(scenario, kind, profile, seed=args.seed)

    (out / "events.jsonl").write_text(result.events_jsonl())
    _write_receipts(out / "receipts.jsonl", result.receipts)
    _write_csv(out / "statements.csv", STATEMENT_HEADER, [s.row() for s in result.statements])
    feas = schedule_feasibility(result, profile, seed=args.seed) if result.receipts else []
    _write_csv(out / "feasibility.csv", FEASIBILITY_HEADER, [f.row() for f in feas])

    spend = result.op_spend(args.rate, profile)
    deploy_gas = sum(r.gas_units for r in result.receipts if r.op == "deploy")
    summary = {
        "strategy": kind,
        "chain": profile.name,
        "seed": result.seed,
        "households": len(scenario.households),
        "days": scenario.days,
        "ops": {t: result.count(t) for t in
                ("mint", "transfer", "modify", "utility_mint", "utility_transfer")},
        "gas_units": sum(r.gas_units for r in result.receipts) - deploy_gas,
        "deployment_gas": deploy_gas,
        "rate": args.rate,
        "op_spend_gwei": spend.gwei,
        "op_spend_usd": _usd(spend.usd_cents),
    }
    if not profile.gas_priced:
        months = max(1, math.ceil(scenario.days / 30))
        summary["hosting_usd_per_node_month"] = _usd(gasfree_cost(1, 1, profile).usd_cents)
        summary["hosting_usd"] = _usd(gasfree_cost(1, months, profile).usd_cents)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"simulate: {kind} on {profile.name}, {summary['ops']['mint']} mints, "
          f"{summary['ops']['transfer']} transfers, op spend {summary['op_spend_usd']} USD ({args.rate})")
    if "hosting_usd_per_node_month" in summary:
        print(f"hosting: {summary['hosting_usd_per_node_month']} USD/node-month")
    return EXIT_OK


# -- report ------------------------------------------------------------------------


def cost_rows(receipts, profile: ChainProfile) -> list[list]:
    rows = []
    for r in receipts:
        fast = gas_to_money(r.gas_units, "fast", profile)
        std = gas_to_money(r.gas_units, "standard", profile)
        rows.append([r.op, r.strategy, r.n, r.gas_units, fast.gwei, _usd(fast.usd_cents),
                     std.gwei, _usd(std.usd_cents)])
    return rows


def read_receipts(path: Path) -> list[OpReceipt]:
    receipts = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            receipts.append(OpReceipt.from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"{path}:{lineno}: malformed receipt ({exc})") from exc
    return receipts


def cmd_report(args) -> int:
    profile = _profile(args)
    path = Path(args.receipts)
    if not path.is_file():
        raise InvalidInput(f"receipts file not found: {path}")
    receipts = read_receipts(path)
    if args.strategy is not None:
        receipts = [r for r in receipts if r.strategy == args.strategy]
    rows = cost_rows(receipts, profile)
    out = _out_dir(args)
    _write_csv(out / "cost_table.csv", REPORT_HEADER, rows)
    widths = [max(len(str(x)) for x in col) for col in zip(REPORT_HEADER, *rows)]
    for row in [REPORT_HEADER, *rows]:
        print("  ".join(str(x).rjust(w) for x, w in zip(row, widths)))
    return EXIT_OK


# -- entry point -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--strategy", choices=STRATEGIES)
    common.add_argument("--profile", help="chain profile document (default: shipped calibration)")
    common.add_argument("--chain", default="ethereum", help="profile name inside the document")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default="out", help="output directory (ZAPLEDGER_OUT overrides)")
    common.add_argument("--rate", choices=RATES, default="standard")

    parser = argparse.ArgumentParser(prog="zapledger", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", parents=[common], help="per-token gas curves and reductions")
    bench.add_argument("--n-max", type=int, default=10)
    bench.set_defaults(func=cmd_bench)

    sim = sub.add_parser("simulate", parents=[common], help="run a neighbourhood scenario")
    sim.add_argument("--scenario")
    sim.set_defaults(func=cmd_simulate)

    report = sub.add_parser("report", parents=[common], help="cost table from receipts")
    report.add_argument("receipts", help="receipts JSON-lines file")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InvalidInput, ScenarioError, GasError) as exc:
        print(f"zapledger: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"zapledger: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
