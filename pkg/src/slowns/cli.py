"""Command-line entry point: ``slowns <command> [--config PATH] [--out DIR] ...``.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import campaign
from .solver1d import SolverError
from .solver2d import BoxTooSmall

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="slowns", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="campaign config file (defaults apply when omitted)")
        sp.add_argument("--out", help="output directory (overrides campaign.output_dir)")
        sp.add_argument("--seed", type=int, help="random seed (overrides campaign.seed)")
        return sp

    common(sub.add_parser("run1d", help="solve the slab and check its invariants"))
    sp = common(sub.add_parser("run2d", help="2D run from the slow embedding"))
    sp.add_argument("--eps", type=float, required=True)
    sp = common(sub.add_parser("pair", help="paired slab/2D run and error budget"))
    sp.add_argument("--eps", type=float, required=True)
    sp = common(sub.add_parser("sweep", help="paired runs over campaign.eps_list"))
    sp.add_argument("--jobs", type=int, default=1, help="parallel eps values")
    common(sub.add_parser("check", help="randomized inequality suite"))
    sp = common(sub.add_parser("fit", help="decay fits over a series CSV"))
    sp.add_argument("csv", help="series CSV with a 't,...' header")
    sp.add_argument("--column", action="append", help="column to fit (repeatable)")
    sp.add_argument("--t-start", type=float, default=2.0)
    sp.add_argument("--t-end", type=float, default=None)
    return p


def _config(args):
    cfg = campaign.load_config(args.config) if args.config else campaign.CampaignConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out:
        changes["output_dir"] = args.out
    if changes:
        from dataclasses import replace

        cfg = replace(cfg, **changes)
    return cfg


def _report(verdicts: dict) -> int:
    for k, v in verdicts.items():
        print(f"{'PASS' if v else 'FAIL'} {k}")
    return EXIT_OK if all(verdicts.values()) else EXIT_CHECK


def _run(args) -> int:
    cfg = _config(args)
    out = cfg.output_dir
    cmd = args.command
    if cmd == "run1d":
        return _report(campaign.run_1d(cfg, out).verdicts)
    if cmd == "run2d":
        return _report(campaign.run_2d(cfg, args.eps, out).verdicts)
    if cmd == "pair":
        if not 0 < args.eps <= 1:
            raise campaign.ConfigError("--eps: must lie in (0, 1]")
        res = campaign.run_pair(cfg, args.eps, out)
        print(json.dumps(campaign._clean(res.entry()), indent=2))
        return _report({"bootstrap_band": res.band["inside"]})
    if cmd == "sweep":
        summ = campaign.run_sweep(cfg, out, jobs=args.jobs)
        for k, v in summ.slopes.items():
            print(f"slope {k} = {v:.4f}")
        return _report(summ.verdicts)
    if cmd == "check":
        rows = campaign.check_inequalities(cfg, out)
        return _report({r.name: r.passed for r in rows})
    if cmd == "fit":
        fits = campaign.fit_csv(args.csv, args.column, (args.t_start, args.t_end))
        print(json.dumps(campaign._clean(fits), indent=2))
        return EXIT_CHECK if any("error" in f for f in fits.values()) else EXIT_OK
    raise AssertionError(cmd)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _run(args)
    except (campaign.ConfigError, BoxTooSmall) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
