"""``capax`` command line: solve, certify, sweep, check-conditions.

Exit codes: 0 success, 1 configuration or input error, 2 a numeric check
(certificate or condition) did not pass.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from datetime import datetime, timezone

from . import __version__
from .conditions import check_conditions
from .config import ConfigError, RunConfig, build_channel, load_config, load_distribution, solve_options
from .errors import CapaxError, CertificateNeverPassed
from .solver import kt_check, solve_capacity

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2
CSV_HEADER = ["A", "capacity_bits", "N", "max_violation", "status"]

log = logging.getLogger("capax")


def _round(obj):
    """12 significant digits for every float; non-finite values become strings."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if hasattr(obj, "item"):
        return _round(obj.item())
    return obj


def dumps(doc) -> str:
    doc = dict(doc)
    doc["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return json.dumps(_round(doc), indent=2, sort_keys=True) + "\n"


def _result_doc(result, channel):
    return {
        "channel": channel.params,
        "capacity_bits": result.capacity,
        "peak": result.input.peak,
        "points": [{"x": x, "p": p} for x, p in result.input.points],
        "certificate": result.certificate.to_dict(),
        "trace": [{"N": r.N, "information_bits": r.information,
                   "max_violation": r.max_violation, "passed": r.passed}
                  for r in result.trace],
    }


def cmd_solve(cfg: RunConfig):
    ch = build_channel(cfg.channel)
    opts = solve_options(cfg.solve_options)
    try:
        result = solve_capacity(ch, opts)
        code = EXIT_OK
    except CertificateNeverPassed as exc:
        result, code = exc.result, EXIT_FAILED
    doc = {"command": "solve", **_result_doc(result, ch)}
    return code, dumps(doc)


def cmd_certify(cfg: RunConfig):
    ch = build_channel(cfg.channel)
    opts = solve_options(cfg.solve_options)
    F = load_distribution(cfg.distribution, cfg.base_dir, ch.peak)
    cert = kt_check(ch, F, opts)
    doc = {"command": "certify", "channel": ch.params, **F.to_dict(),
           "certificate": cert.to_dict()}
    return (EXIT_OK if cert.passed else EXIT_FAILED), dumps(doc)


def _sweep_row(cfg, opts, A):
    try:
        ch = build_channel(cfg.channel, peak=A)
        result = solve_capacity(ch, opts)
        status = "ok"
    except CertificateNeverPassed as exc:
        result, status = exc.result, "uncertified"
    except CapaxError as exc:
        return {"A": A, "capacity_bits": float("nan"), "N": 0,
                "max_violation": float("nan"), "status": f"error: {exc}"}
    return {"A": A, "capacity_bits": result.capacity, "N": len(result.input),
            "max_violation": result.certificate.max_violation, "status": status}


def cmd_sweep(cfg: RunConfig):
    opts = solve_options(cfg.solve_options)
    rows = [_sweep_row(cfg, opts, float(A)) for A in cfg.A_list]
    code = EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_FAILED
    if cfg.format == "json":
        return code, dumps({"command": "sweep", "channel": cfg.channel, "rows": rows})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in _round(rows):
        writer.writerow([r[k] for k in CSV_HEADER])
    return code, buf.getvalue()


def cmd_check_conditions(cfg: RunConfig):
    ch = build_channel(cfg.channel)
    report = check_conditions(ch, x_grid_size=cfg.x_grid_size, y_grid_size=cfg.y_grid_size)
    doc = {"command": "check-conditions", "channel": ch.params,
           "analytic_declared": ch.analytic, **report.to_dict()}
    return (EXIT_OK if report.overall else EXIT_FAILED), dumps(doc)


COMMANDS = {
    "solve": cmd_solve,
    "certify": cmd_certify,
    "sweep": cmd_sweep,
    "check-conditions": cmd_check_conditions,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="capax",
        description="Capacity-achieving discrete inputs for peak-constrained scalar channels.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"))
        p.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.command, output_path=args.out,
                          fmt=args.format, seed=args.seed)
        if cfg.format == "csv" and cfg.command != "sweep":
            raise ConfigError("csv output is only available for sweep")
        code, text = COMMANDS[cfg.command](cfg)
    except (ConfigError, CapaxError, ValueError) as exc:
        print(f"capax: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.output_path:
        with open(cfg.output_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
