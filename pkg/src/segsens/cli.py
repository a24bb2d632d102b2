"""Command-line front end for the experiment harness.

Exit status: 0 on success, 1 on a configuration or input error, 2 when an
EXACT-mode run records any containment violation.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .bench import (ConfigError, ExperimentConfig, config_from_mapping, containment_audit, emit_csv,
                    emit_json, format_audit, format_summary, format_tables, load_config, run_experiment,
                    summarize)
from .data_io import DataFormatError
from .regions import HalfSpaceMode


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="segsens",
        description="Bound the retrained classifier after adding/removing data, without retraining.",
    )
    p.add_argument("--config", help="flat key = value experiment file")
    p.add_argument("--train", help="training set in LIBSVM format (omit for synthetic data)")
    p.add_argument("--test", help="test set in LIBSVM format")
    p.add_argument("--loss", help="logistic or squared_hinge")
    p.add_argument("--c", help="comma-separated regularization grid, e.g. 0.2,0.5,1")
    p.add_argument("--pup", help="comma-separated modification ratios; '%%' suffix allowed")
    p.add_argument("--trials", help="repetitions per cell")
    p.add_argument("--seed", help="master seed")
    p.add_argument("--mode", help="half-space mode: exact or paper_closed_form")
    p.add_argument("--task", help="coefficients, labels or both")
    p.add_argument("--add-fraction", dest="add_fraction", help="share of the modification that is additions")
    p.add_argument("--no-bias", dest="bias", action="store_const", const="false", help="skip bias augmentation")
    p.add_argument("--no-timing", dest="timing", action="store_const", const="false",
                   help="write time_ms as 0 so output is byte-reproducible")
    p.add_argument("--out", help="write records here")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--tables", action="store_true", help="print per-C tables with P_up across columns")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {k: getattr(args, k) for k in
                 ("train", "test", "loss", "c", "pup", "trials", "seed", "mode", "task",
                  "add_fraction", "bias", "timing")}
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        cfg = config_from_mapping(overrides, cfg)
        result = run_experiment(cfg)
    except (ConfigError, DataFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.out:
        (emit_json if args.format == "json" else emit_csv)(result.records, args.out)
    if not args.quiet and result.records:
        rows = summarize(result.records)
        print(format_tables(rows) if args.tables else format_summary(rows))
        if cfg.half_space_mode is HalfSpaceMode.PAPER_CLOSED_FORM:
            print()
            print(format_audit(containment_audit(result)))
    if result.skipped_trials:
        print(f"warning: {result.skipped_trials} trial(s) skipped (no convergence)", file=sys.stderr)

    violations = sum(r.containment_violations for r in result.records)
    if cfg.half_space_mode is HalfSpaceMode.EXACT and violations:
        print(f"error: {violations} containment violation(s) in exact mode", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
