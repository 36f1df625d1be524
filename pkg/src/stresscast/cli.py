"""Command-line front end.

Subcommands: run (full evaluation), aggregate (summarize reports),
validate-config, export-curves, synth (write a synthetic dataset).
Exit codes: 0 success, 1 config error, 2 data error, 3 adapter error,
4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import traceback

from .config import config_from_dict
from .errors import FileNotFound, SchemaMismatch, StresscastError
from .ingest import save_table
from .runner import run
from .score import aggregate_reports, validate_report_dict, write_curves_csv
from .synth import make_synthetic


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stresscast",
        description="Robustness benchmarking of time-series forecasters under "
        "severity-graded sensor disturbances.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="evaluate one dataset/model pair")
    p_run.add_argument("--config", required=True, help="run configuration JSON")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--out", help="override the report output path")
    p_run.add_argument("--severity-step", type=float, help="override the severity grid step")
    p_run.add_argument("--windows", type=int, help="override the test window count")
    p_run.add_argument("--adapter-cmd", help="evaluate an external model via this command")
    p_run.add_argument("--curves-csv", help="also export severity curves to this CSV")
    p_run.add_argument("--workers", type=int, help="scenario evaluation worker threads")

    p_val = sub.add_parser("validate-config", help="check a config and show materialized defaults")
    p_val.add_argument("--config", required=True)

    p_agg = sub.add_parser("aggregate", help="summarize robustness across report files")
    p_agg.add_argument("reports", nargs="+", help="report JSON files")
    p_agg.add_argument("--out", help="also write the summary as CSV")

    p_exp = sub.add_parser("export-curves", help="write severity curves CSV from a report")
    p_exp.add_argument("report", help="report JSON file")
    p_exp.add_argument("--out", required=True, help="CSV output path")

    p_syn = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    p_syn.add_argument("--out", required=True, help="CSV output path")
    p_syn.add_argument("--rows", type=int, default=2000)
    p_syn.add_argument("--continuous", type=int, default=3)
    p_syn.add_argument("--discrete", type=int, default=1)
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--noise-scale", type=float, default=0.05)
    return parser


def _read_json(path, kind: str) -> dict:
    try:
        with open(path) as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise FileNotFound(f"{kind} file does not exist: {path}") from None
    except json.JSONDecodeError as err:
        raise SchemaMismatch(f"{kind} file {path} is not valid JSON: {err}") from err


def _load_run_config(args):
    raw = _read_json(args.config, "config")
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "severity_step", None) is not None:
        raw["severity_step"] = args.severity_step
    if getattr(args, "windows", None) is not None:
        raw.setdefault("sampling", {})["test_windows"] = args.windows
    if getattr(args, "adapter_cmd", None) is not None:
        model = raw.setdefault("model", {})
        model["kind"] = "External"
        model["adapter_cmd"] = args.adapter_cmd
    if getattr(args, "workers", None) is not None:
        raw["workers"] = args.workers
    if getattr(args, "out", None) is not None:
        raw.setdefault("output", {})["report"] = args.out
    if getattr(args, "curves_csv", None) is not None:
        raw.setdefault("output", {})["curves_csv"] = args.curves_csv
    return config_from_dict(raw)


def _cmd_run(args) -> int:
    config = _load_run_config(args)
    report = run(config)
    payload = report.to_dict(keep_losses=config.keep_per_sample_losses)
    with open(config.output.report, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    if config.output.curves_csv:
        write_curves_csv(payload, config.output.curves_csv)

    print(f"dataset={report.dataset} model={report.model} seed={report.seed}")
    print(f"baseline val MSE {report.baseline_val_mse:.6g}, test MSE {report.baseline_test_mse:.6g}")
    width = max(len(s.kind) for s in report.scenarios)
    for scenario in report.scenarios:
        if scenario.applicable:
            print(f"  {scenario.kind:<{width}}  R_d = {scenario.robustness:.6f}")
        else:
            print(f"  {scenario.kind:<{width}}  not applicable")
    print(f"overall robustness R = {report.overall:.6f}")
    print(f"report written to {config.output.report}")
    if config.output.curves_csv:
        print(f"curves written to {config.output.curves_csv}")
    return 0


def _cmd_validate_config(args) -> int:
    config = _load_run_config(args)
    print("config valid; materialized settings:")
    print(json.dumps(config.to_dict(), indent=2, sort_keys=True))
    return 0


_AGG_COLUMNS = (
    "model",
    "runs",
    "mean_robustness",
    "std_robustness",
    "mean_val_mse",
    "std_val_mse",
    "mean_test_mse",
    "std_test_mse",
)


def _cmd_aggregate(args) -> int:
    payloads = [validate_report_dict(_read_json(path, "report")) for path in args.reports]
    rows = aggregate_reports(payloads)
    if args.out:
        with open(args.out, "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=_AGG_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    cells = [[str(row["model"]), str(row["runs"])] + [f"{row[c]:.6f}" for c in _AGG_COLUMNS[2:]] for row in rows]
    header = list(_AGG_COLUMNS)
    widths = [max(len(header[i]), *(len(r[i]) for r in cells)) for i in range(len(header))]
    print("  ".join(h.ljust(widths[i]) for i, h in enumerate(header)))
    for row in cells:
        print("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    if args.out:
        print(f"summary written to {args.out}")
    return 0


def _cmd_export_curves(args) -> int:
    payload = validate_report_dict(_read_json(args.report, "report"))
    write_curves_csv(payload, args.out)
    print(f"curves written to {args.out}")
    return 0


def _cmd_synth(args) -> int:
    ds = make_synthetic(
        rows=args.rows,
        n_continuous=args.continuous,
        n_discrete=args.discrete,
        seed=args.seed,
        noise_scale=args.noise_scale,
    )
    save_table(ds, args.out)
    print(f"wrote {ds.rows} rows x {ds.n_sensors} sensors to {args.out}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "validate-config": _cmd_validate_config,
    "aggregate": _cmd_aggregate,
    "export-curves": _cmd_export_curves,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except StresscastError as err:
        stage = getattr(err, "stage", None)
        where = f" during {stage}" if stage else ""
        print(f"error{where}: {type(err).__name__}: {err}", file=sys.stderr)
        return err.exit_code
    except Exception:
        traceback.print_exc()
        print("internal error", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
