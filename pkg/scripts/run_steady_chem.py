"""Run the steady_chem scenario and write results/steady_chem.csv.

Extra arguments are passed to the scenario, e.g. ``--set key=value``.
"""
import pathlib
import sys

from lindblad_thermo.cli import main

if __name__ == "__main__":
    out = pathlib.Path(__file__).resolve().parent.parent / "results" / "steady_chem.csv"
    out.parent.mkdir(exist_ok=True)
    sys.exit(main(["steady_chem", "--out", str(out), *sys.argv[1:]]))
