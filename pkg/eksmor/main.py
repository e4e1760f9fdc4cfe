"""Command-line entrypoint: `python -m eksmor <command> [flags]`."""
import argparse
import asyncio
import sys
from typing import List, Optional

from eksmor.commands.compare import cmd_compare
from eksmor.commands.info import cmd_info
from eksmor.commands.moments import cmd_moments
from eksmor.commands.reduce import cmd_reduce
from eksmor.commands.synth import cmd_synth
from eksmor.core.exceptions import ConfigError, ReductionError
from eksmor.core.logger import logger
from eksmor.schemas.run_config import RunConfig, SynthConfig

COMMANDS = {
    "reduce": cmd_reduce,
    "compare": cmd_compare,
    "moments": cmd_moments,
    "info": cmd_info,
}

RUN_FLAGS = (
    "input", "format", "method", "k", "order", "fmin", "fmax", "npoints",
    "ports_file", "add_cap", "cap_skip", "seed", "workers", "out", "dense_oracle_cap",
)
SYNTH_FLAGS = (
    "kind", "nodes", "rows", "cols", "ports", "pads", "inductance", "cap_free",
    "c_scale", "vsource_pads", "seed", "format", "out",
)


def add_run_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--input", required=False, help="netlist file or model directory")
    parser.add_argument("--format", choices=["spice", "mm-dir"])
    parser.add_argument("--method", choices=["mm", "eks", "both"])
    parser.add_argument("--k", type=int, help="matched moments per port (MM); EKS uses half")
    parser.add_argument("--order", type=int, help="ROM order per port")
    parser.add_argument("--fmin", type=float, help="lowest angular frequency (rad/s)")
    parser.add_argument("--fmax", type=float, help="highest angular frequency (rad/s)")
    parser.add_argument("--npoints", type=int)
    parser.add_argument("--ports", dest="ports_file", metavar="FILE", help="port node names")
    parser.add_argument("--add-cap", dest="add_cap", type=float, metavar="VAL")
    parser.add_argument("--cap-skip", dest="cap_skip", type=int, metavar="N",
                        help="nodes left without added capacitance")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", metavar="DIR")
    parser.add_argument("--dense-cap", dest="dense_oracle_cap", type=int)
    parser.add_argument("--config", help="JSON file with defaults for these flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eksmor",
        description="EKS-MM and MM reduction of regular and singular RLC circuits",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        add_run_flags(subparsers.add_parser(name))

    synth = subparsers.add_parser("synth", help="generate a seeded synthetic benchmark")
    synth.add_argument("--kind", choices=["ladder", "mesh", "rlc"])
    synth.add_argument("--nodes", type=int)
    synth.add_argument("--rows", type=int)
    synth.add_argument("--cols", type=int)
    synth.add_argument("--ports", type=int)
    synth.add_argument("--pads", type=int)
    synth.add_argument("--inductance", type=float)
    synth.add_argument("--cap-free", dest="cap_free", type=int)
    synth.add_argument("--c-scale", dest="c_scale", type=float)
    synth.add_argument("--vsource-pads", dest="vsource_pads", action="store_true", default=None)
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--format", choices=["spice", "mm-dir"])
    synth.add_argument("--out", required=True)
    synth.add_argument("--config")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    flags = vars(args)
    try:
        if args.command == "synth":
            cfg = SynthConfig.from_sources({k: flags.get(k) for k in SYNTH_FLAGS}, args.config)
            asyncio.run(cmd_synth(cfg))
            return 0
        cfg = RunConfig.from_sources({k: flags.get(k) for k in RUN_FLAGS}, args.config)
        result = asyncio.run(COMMANDS[args.command](cfg))
    except ConfigError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ReductionError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return 1

    if args.command == "reduce" and any(index.failures for index in result.values()):
        print("error: reduce: some ports failed, see index.json", file=sys.stderr)
        return 1
    if args.command == "compare" and any(m.failed_ports for m in result.methods.values()):
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
