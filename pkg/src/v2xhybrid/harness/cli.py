"""Command-line entry point: ``v2xhybrid {rate,outage,ber,energy} ...``."""

from __future__ import annotations

import argparse
import logging
import sys

from ..config import VARIANTS, ConfigError, load_scenario, parse_snr_sweep
from ..metrics import MODES
from .campaign import CampaignError, ber_summary, energy_campaign, outage_records, run_campaign
from .results import write_results

EXIT_OK, EXIT_CONFIG, EXIT_CAMPAIGN = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default="mmwave", help="preset name or scenario file")
    common.add_argument("--snr", help="SNR sweep in dB, lo:step:hi")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--variant", choices=VARIANTS)
    common.add_argument("--out", required=True, help="output file")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="v2xhybrid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("rate", parents=[common], help="per-user rate, SINR and sum rate")
    outage = sub.add_parser("outage", parents=[common], help="outage probability curves")
    outage.add_argument("--targets", default="0:0.25:5", help="target rates lo:step:hi")
    ber = sub.add_parser("ber", parents=[common], help="coded bit error rate versus velocity")
    ber.add_argument("--velocities", default=None, help="comma-separated km/h")
    ber.add_argument("--uncoded", action="store_true")
    energy = sub.add_parser("energy", parents=[common], help="energy efficiency per mode")
    energy.add_argument("--modes", default=",".join(MODES))
    energy.add_argument("--users", default="1,2,3,4", help="comma-separated user counts")
    return parser


def _scenario(args):
    cfg = load_scenario(args.scenario)
    changes = {}
    if args.snr:
        changes["snr_db"] = parse_snr_sweep(args.snr)
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.variant:
        changes["variant"] = args.variant
    return cfg.with_(**changes) if changes else cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _scenario(args)
        if args.command == "energy":
            snr = cfg.snr_db[0] if args.snr else 0.0
            records = energy_campaign(
                [m.strip() for m in args.modes.split(",")],
                [int(u) for u in args.users.split(",")],
                snr_db=snr, trials=args.trials or 200, master_seed=cfg.master_seed,
                workers=args.workers)
        elif args.command == "ber":
            velocities = ([float(v) for v in args.velocities.split(",")]
                          if args.velocities else None)
            result = run_campaign(cfg, "ber", args.workers, velocities, coded=not args.uncoded)
            records = result.records
            for (name, snr), (e, b) in sorted(ber_summary(records).items()):
                logging.getLogger(__name__).info("%s snr=%g dB: BER=%.3e (%d/%d)",
                                                 name, snr, e / b, e, b)
        else:
            result = run_campaign(cfg, "rate", args.workers)
            records = result.records
            if args.command == "outage":
                records = records + outage_records(cfg, records, parse_snr_sweep(args.targets))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CampaignError as exc:
        print(f"campaign failed: {exc}", file=sys.stderr)
        return EXIT_CAMPAIGN
    write_results(records, args.out, args.format)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
