"""`sketchpit` command line.

Every `BenchConfig` field is a flag of every subcommand. A JSON config given by `--config_path` provides the
defaults, explicit flags override it.

    sketchpit bench --algo hash,nitrohash --zipf 1000000,100000,1.0,7 --protocol all --out tp.csv
    sketchpit accuracy --algo spacesaving,spacesaving_rap --zipf 1000000,100000,1.0,7 --runs 10
    sketchpit memory --algo all --trace caida.txt --prefix 100000
    sketchpit gen --zipf 1000000,100000,1.0,7 --out zipf.txt
"""
import argparse
import contextlib
import json
import logging
import sys
from dataclasses import fields
from typing import List, Optional

from sketchpit.bench import BenchConfig, RunRecord, resolve_trace, run_command
from sketchpit.core import TableFullError
from sketchpit.trace import trace_save

logger = logging.getLogger("sketchpit")

COMMANDS = {
    "bench": "time the write_only / write_read / read_only throughput protocols",
    "accuracy": "error metrics of the on_arrival / per_flow / postmortem protocols",
    "memory": "accounted memory, stored items and stored-item space",
    "gen": "write the resolved trace (usually a Zipf trace) one key per line",
    "stats": "print the number of items and of distinct flows of the resolved trace",
}


def build_parser(config: Optional[BenchConfig] = None) -> argparse.ArgumentParser:
    """Parser with one subcommand per entry of `COMMANDS`, flag defaults taken from `config`."""
    config = config if config is not None else BenchConfig()
    parser = argparse.ArgumentParser(prog="sketchpit", description="Frequency-estimation sketches benchmark.")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    for name, help_text in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text, description=help_text)
        config.init_argparse(sub, arg_prefix="")
        sub.add_argument(
            "--no-warmup",
            dest="warmup",
            action="store_false",
            default=argparse.SUPPRESS,
            help="skip the discarded warm-up pass",
        )
        sub.add_argument("--config_path", type=str, default=None, help="JSON BenchConfig used as defaults")
        sub.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def load_config(argv: Optional[List[str]] = None) -> BenchConfig:
    """Config read from `--config_path` if the arguments name one, the defaults otherwise."""
    pre_parser = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre_parser.add_argument("--config_path", type=str, default=None)
    known, _ = pre_parser.parse_known_args(argv)
    if not known.config_path:
        return BenchConfig()
    with open(known.config_path, "r", encoding="utf8") as f:
        data = json.load(f)
    # run sidecars nest the config
    return BenchConfig.new_from_dict(data.get("config", data))


def _config_namespace(args: argparse.Namespace) -> argparse.Namespace:
    """Keep only the arguments that are config fields."""
    names = {f.name for f in fields(BenchConfig)}
    return argparse.Namespace(**{k: v for k, v in vars(args).items() if k in names})


def _error_message(e: Exception) -> str:
    msg = str(e).strip() or type(e).__name__
    return msg if msg.startswith("[!]") else f"[!] {msg}"


def run(command: str, config: BenchConfig) -> None:
    if command == "gen":
        trace = resolve_trace(config)
        if config.out:
            trace_save(trace, config.out)
            print(f" > {trace.label} written to {config.out}", file=sys.stderr)
        else:
            for key in trace.items:
                sys.stdout.buffer.write(key + b"\n")
            sys.stdout.flush()
        return
    if command == "stats":
        trace = resolve_trace(config)
        print(f" > {trace.name}: n_items={trace.stats.n_items} n_uniques={trace.stats.n_uniques}")
        return

    report = run_command(command, config)
    if config.out:
        report.save_csv(config.out)
        RunRecord(config=config, command=command).save_json(f"{config.out}.json")
        print(f" > {len(report.rows)} rows written to {config.out}", file=sys.stderr)
    else:
        report.write_csv(sys.stdout)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        config = load_config(argv)
    except (AssertionError, ValueError, OSError) as e:
        print(f" {_error_message(e)}", file=sys.stderr)
        return 1

    args = build_parser(config).parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    logger.debug(" > command %s", args.command)
    try:
        config.parse_args(_config_namespace(args), arg_prefix="")
        with contextlib.redirect_stdout(sys.stderr):
            config.pprint()
        run(args.command, config)
    except (AssertionError, ValueError, OSError, TableFullError) as e:
        print(f" {_error_message(e)}", file=sys.stderr)
        return 1
    return 0
