"""Command line: ``bwalk <kind> --config <path> [--strict] [--out <dir>]``.

Exit codes: 0 all checks pass, 1 a check failed, 2 config error,
3 numerical guard or module error.  ``BWALK_THREADS`` sets the worker
count for Monte Carlo replicas; it does not change any output.
"""

from __future__ import annotations

import argparse
import sys

from .config import KINDS, load_config
from .errors import ConfigError
from .runner import EXIT_CONFIG, run_experiment


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bwalk", description=__doc__.splitlines()[0])
    ap.add_argument("kind", choices=KINDS, help="experiment kind")
    ap.add_argument("--config", required=True, help="INI experiment config")
    ap.add_argument("--strict", action="store_true",
                    help="unknown keys and aliasing warnings become errors")
    ap.add_argument("--out", default=None, help="output directory (overrides the config)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, kind=args.kind, strict=args.strict)
    except ConfigError as exc:
        print("config error:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = cfg.with_overrides(output=args.out, strict=args.strict)
    res = run_experiment(cfg)
    for c in res.summary["checks"]:
        flag = "PASS" if c["passed"] else "FAIL"
        print(f"{flag} {c['name']}: {c['value']} {c['op']} {c['target']}")
    if res.error:
        print(f"error: {res.error}", file=sys.stderr)
    print(f"exit {res.code}; artifacts in {res.out_dir}")
    return res.code


if __name__ == "__main__":
    sys.exit(main())
