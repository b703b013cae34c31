#!/usr/bin/env python3
"""Run the Pendubot case study: three controllers from one config.

Runs both the converging defaults and the light-damping transient
comparison, printing peak torques and reduction percentages. Trajectories
and summary JSON land in the config's output directory.

Usage: python scripts/reproduce_pendubot.py [--quick]
"""
import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

from energyshaping import cli  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="only run the converging defaults")
    args = parser.parse_args()

    configs = ["pendubot.toml"] if args.quick else ["pendubot.toml",
                                                    "pendubot_transient.toml"]
    for name in configs:
        print(f"== {name} ==")
        code = cli.main(["compare", str(ROOT / "configs" / name)])
        if code != 0:
            return code
        print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
