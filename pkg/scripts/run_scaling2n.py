"""Run the scaling2n scenario and write results/scaling2n.csv.

Extra arguments are passed to the scenario, e.g. ``--set key=value``.
"""
import pathlib
import sys

from lindblad_thermo.cli import main

if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parent.parent / "results" / "scaling2n.csv"
    out.parent.mkdir(exist_ok=True)
    sys.exit(main(["scaling2n", "--out", str(out), *sys.argv[1:]]))
