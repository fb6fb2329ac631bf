"""Run the fig2 scenario and write results/fig2.csv.

Extra arguments are passed to the scenario, e.g. ``--set key=value``.
"""
import pathlib
import sys

from lindblad_thermo.cli import main

if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parent.parent / "results" / "fig2.csv"
    out.parent.mkdir(exist_ok=True)
    sys.exit(main(["fig2", "--out", str(out), *sys.argv[1:]]))
