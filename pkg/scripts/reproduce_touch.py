#!/usr/bin/env python3
"""Run the haptic-device case study: three controllers at 1 kHz.

Reproduces the regulation experiment as a desk-scale simulation from the
published gains and initial/target configurations, then prints peaks,
reductions and settling. Note that with noise-free simulated velocities
the kinetic shaping terms stay small, so unlike the hardware experiment
the peak reduction is near zero; the suppression of the overall kinetic
term under the augmented law is still visible in the uovki_* columns.

Usage: python scripts/reproduce_touch.py
"""
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

from energyshaping import cli  # noqa: E402


def main() -> int:
    return cli.main(["compare", str(ROOT / "configs" / "touch.toml")])


if __name__ == "__main__":
    sys.exit(main())
