"""Run the fig3 scenario and write results/fig3.csv.

Extra arguments are passed to the scenario, e.g. ``--set key=value``.
"""
import pathlib
import sys

from lindblad_thermo.cli import main

if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parent.parent / "results" / "fig3.csv"
    out.parent.mkdir(exist_ok=True)
    sys.exit(main(["fig3", "--out", str(out), *sys.argv[1:]]))
