"""Scenario runner writing self-describing CSV.

Exit status: 0 when every check passes, 1 on a physics-check violation or
non-convergence, 2 on a usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .coherence import block_diagonalize, coherence_report, strict_diagonalize
from .engine import (
    CarnotCycleSpec,
    CarnotRecord,
    CycleRecord,
    CycleSpec,
    build_stroke,
    run_cycle,
    sweep,
)
from .lindblad_core import ConvergenceError, ModelError, generator_residual
from .models import (
    PlusStateSpec,
    TwoBathTwoNSpec,
    TwoNModelSpec,
    TwoQubitSpec,
    analytic_2n_observables,
    build_2n_model,
    build_plus_state,
    build_two_bath_2n,
    build_two_qubit_model,
)
from .serialization import dump_model, read_config
from .thermo import (
    entropy_production_rate,
    heat_current,
    heat_currents,
    thermo_header,
    tradeoff_check,
)
from .verification import run_verification

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _float_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    text = str(text).strip()
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(count)]
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text) -> list:
    return [int(v) for v in _float_list(text)]


def _optional_float(text):
    return None if str(text).lower() in ("none", "") else float(text)


# name -> (parser, default) per scenario
_CYCLE = {
    "system": (str, "two-qubit"), "n": (int, 2), "omega_h": (float, 2.0),
    "omega_c": (float, 1.0), "beta_h": (float, 0.6), "beta_c": (float, 1.5),
    "tau_h": (float, 0.5), "tau_c": (float, 1.0), "gamma0": (float, 1.0),
    "dt": (float, 1e-3), "stationarity_tol": (float, 1e-10), "max_cycles": (int, 500),
}
PARAMETERS = {
    "fig2": dict(_CYCLE),
    "fig3": {**_CYCLE, "tau_c": (_float_list, "0.2:3.0:0.1")},
    "scaling2n": {"n": (_int_list, "1,2,4,8,16,32,64,128"), "omega0": (float, 1.0),
                  "gamma_down": (float, 1.0), "beta": (float, 1.0), "a_n": (_optional_float, None)},
    "carnot2n": {"n": (_int_list, "8,16,32,64,128,256"), "omega_c": (float, 1.0),
                 "beta_h": (float, 0.6), "beta_c": (float, 1.5), "a_n": (_optional_float, None),
                 "gamma_down": (float, 1.0), "anchor": (float, 0.45),
                 "steps_per_relaxation": (int, 200)},
    "steady_temp": {"n": (_int_list, "2,8,32,64"), "omega": (float, 1.0),
                    "gamma_down_common": (float, 1.0), "beta_h": (float, 0.5)},
    "steady_chem": {"n": (_int_list, "2,8,32,64"), "omega": (float, 1.0),
                    "gamma_down_common": (float, 1.0), "beta": (float, 1.0), "mu_r": (float, 0.0)},
    "verify": {"cases": (int, 500), "seed": (int, 0)},
    "model": {"system": (str, "2n"), "n": (int, 2), "omega": (float, 1.0),
              "beta": (float, 1.0), "gamma": (float, 1.0)},
}
SCENARIOS = tuple(PARAMETERS)


@dataclass
class ScenarioConfig:
    scenario: str
    params: dict = field(default_factory=dict)
    out: str = "-"

    def __post_init__(self):
        if self.scenario not in PARAMETERS:
            raise UsageError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        allowed = PARAMETERS[self.scenario]
        resolved = {}
        for key, (parse, default) in allowed.items():
            raw = self.params.get(key, default)
            try:
                resolved[key] = parse(raw) if raw is not None else None
            except (TypeError, ValueError):
                raise UsageError(f"bad value {raw!r} for {key!r}") from None
        unknown = sorted(set(self.params) - set(allowed))
        if unknown:
            raise UsageError(f"scenario {self.scenario} does not take {', '.join(unknown)}")
        self.params = resolved


@dataclass
class ScenarioOutput:
    header: list
    rows: list
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt(x) for x in v)
    return str(v)


def _cycle_spec(p: dict, **over) -> CycleSpec:
    keys = ("system", "n", "omega_h", "omega_c", "beta_h", "beta_c", "tau_h", "tau_c",
            "gamma0", "dt", "stationarity_tol")
    return CycleSpec(**{**{k: p[k] for k in keys}, **over})


def scenario_fig2(p: dict) -> ScenarioOutput:
    spec = _cycle_spec(p)
    res = run_cycle(spec, max_cycles=p["max_cycles"])
    out = ScenarioOutput(thermo_header(("H", "C")), [])
    if not res.converged:
        out.violations.append(f"cycle not stationary after {res.cycles_run} cycles")
    hot_model, basis = build_stroke(spec, "H")
    exceed = -math.inf
    for s, rho in zip(res.samples, res.states_h):
        tc = tradeoff_check(hot_model, rho, basis)
        if not tc.ok:
            out.violations.append(f"trade-off inequality violated at t={s.t!r}")
        if s.flags:
            out.violations.append(f"t={s.t!r}: {'|'.join(s.flags)}")
        exceed = max(exceed, s.ratio - s.a_cl / 2)
        out.rows.append(s.csv_row(("H", "C")))
    out.notes.append(f"max_ratio_minus_classical = {exceed!r}")
    return out


def scenario_fig3(p: dict) -> ScenarioOutput:
    template = _cycle_spec(p, tau_c=1.0)
    rows = sweep(template, "tau_c", p["tau_c"], dephased=True, max_cycles=p["max_cycles"])
    header = ["tau_c", *CycleRecord.CSV_HEADER, "P_cl", "Abar_cl_dephased"]
    out = ScenarioOutput(header, [])
    for row in rows:
        if row.error:
            out.violations.append(f"tau_c={row.value!r}: {row.error}")
            continue
        r, d = row.record, row.dephased
        if not (r.converged and d.converged):
            out.violations.append(f"tau_c={row.value!r}: cycle not stationary")
        if not r.p <= r.abar_cl + r.abar_qm + 1e-9 * max(1.0, r.abar_cl + r.abar_qm):
            out.violations.append(f"tau_c={row.value!r}: P exceeds Abar_cl + Abar_qm")
        if not d.p <= d.abar_cl + 1e-9 * max(1.0, d.abar_cl):
            out.violations.append(f"tau_c={row.value!r}: P_cl exceeds Abar_cl")
        if r.sigma < -1e-9:
            out.violations.append(f"tau_c={row.value!r}: negative cycle entropy production")
        out.rows.append([row.value, *r.as_row(), d.p, d.abar_cl])
    above = [row.value for row in rows if row.record and row.record.p > row.record.abar_cl]
    out.notes.append(f"tau_c_with_P_above_Abar_cl = {_fmt(above)}")
    return out


def scenario_scaling2n(p: dict) -> ScenarioOutput:
    header = ["N", "J", "J_analytic", "sigma_dot", "sigma_dot_analytic", "rel_err_J",
              "rel_err_sigma", "c_l1", "a_cl", "a_qm", "bd_equals_sd"]
    out = ScenarioOutput(header, [])
    for n in p["n"]:
        spec = TwoNModelSpec(n, p["omega0"], p["gamma_down"], p["beta"])
        a = 1.0 / n if p["a_n"] is None else p["a_n"]
        plus = PlusStateSpec(n, a, p["beta"], p["omega0"])
        model, basis = build_2n_model(spec)
        rho = build_plus_state(plus)
        j, s = heat_current(model, rho), entropy_production_rate(model, rho)
        ref = analytic_2n_observables(spec, plus)
        ej = abs(j - ref.j) / max(abs(ref.j), 1e-300)
        es = abs(s - ref.sigma_dot) / max(abs(ref.sigma_dot), 1e-300)
        if max(ej, es) > 1e-8:
            out.violations.append(f"N={n}: simulated vs analytic mismatch ({ej:.2e}, {es:.2e})")
        rep = coherence_report(model, rho, basis)
        bd_sd = bool(np.allclose(block_diagonalize(rho, basis), strict_diagonalize(rho, basis),
                                 atol=1e-14, rtol=0))
        out.rows.append([n, j, ref.j, s, ref.sigma_dot, ej, es, rep.c_l1, rep.a_cl, rep.a_qm, bd_sd])
    return out


def scenario_carnot2n(p: dict) -> ScenarioOutput:
    out = ScenarioOutput(["N", *CarnotRecord.CSV_HEADER[1:]], [])
    keys = ("omega_c", "beta_h", "beta_c", "a_n", "gamma_down", "anchor", "steps_per_relaxation")
    template = CarnotCycleSpec(n=max(2, p["n"][0]) if p["n"] else 2, **{k: p[k] for k in keys})
    for row in sweep(template, "n", p["n"]):
        if row.error:
            out.violations.append(f"N={row.value}: {row.error}")
            continue
        r = row.record
        if abs(r.eta - r.eta_exact) > 1e-6 * abs(r.eta_exact):
            out.violations.append(f"N={r.n}: efficiency off the closed form")
        if r.relaxation_ratio >= 0.5:
            out.violations.append(f"N={r.n}: contact longer than half a relaxation time")
        if r.entropy_production < -1e-9:
            out.violations.append(f"N={r.n}: negative entropy production")
        out.rows.append(list(r.as_row()))
    return out


def _steady(p: dict, variant: str) -> ScenarioOutput:
    out = ScenarioOutput(["N", "residual", "J_first", "J_second", "J_sum", "J_closed_form",
                          "sigma_dot", "sigma_dot_closed_form"], [])
    for n in p["n"]:
        kw = {k: v for k, v in p.items() if k != "n"}
        try:
            system = build_two_bath_2n(TwoBathTwoNSpec(n=n, variant=variant, **kw))
        except ModelError as exc:
            out.violations.append(f"N={n}: {exc}")
            continue
        res = generator_residual(system.model, system.rho_ss)
        js = heat_currents(system.model, system.rho_ss)
        j1, j2 = (js[lb] for lb in system.labels)
        s = entropy_production_rate(system.model, system.rho_ss)
        sc, jc = system.sigma_closed_form(), system.current_closed_form()
        if res > 1e-10:
            out.violations.append(f"N={n}: generator residual {res:.3e}")
        if abs(j1 + j2) > 1e-10 * max(1.0, abs(j1)):
            out.violations.append(f"N={n}: currents not antisymmetric")
        if abs(s - sc) > 1e-9 * max(1.0, abs(sc)):
            out.violations.append(f"N={n}: entropy production off the closed form")
        out.rows.append([n, res, j1, j2, j1 + j2, jc, s, sc])
    return out


def scenario_verify(p: dict) -> ScenarioOutput:
    rep = run_verification(p["cases"], p["seed"])
    out = ScenarioOutput(["case", "family", "dim", "ok", "violations"], [])
    for r in rep.results:
        out.rows.append([r.case, r.family, r.dim, r.ok, "|".join(r.violations)])
        if not r.ok:
            out.violations.append(f"case {r.case}: {'; '.join(r.violations)} "
                                  f"(replay with --seed {p['seed']}, case index {r.case})")
    out.notes.append(f"checked = {rep.checked}")
    out.notes.append(f"violated = {rep.violated}")
    return out


def scenario_model(p: dict) -> str:
    system = p["system"]
    if system == "2n":
        model, _ = build_2n_model(TwoNModelSpec(p["n"], p["omega"], p["gamma"], p["beta"]))
    elif system == "two-qubit":
        model, _ = build_two_qubit_model(TwoQubitSpec(p["omega"], p["beta"], p["gamma"]))
    elif system in ("two-bath-temperature", "two-bath-chemical"):
        variant = system.rsplit("-", 1)[1]
        model = build_two_bath_2n(TwoBathTwoNSpec(p["n"], p["omega"], variant,
                                                  gamma_down_common=p["gamma"], beta=p["beta"])).model
    else:
        raise UsageError(f"unknown system {system!r}")
    return dump_model(model)


RUNNERS: dict = {
    "fig2": scenario_fig2,
    "fig3": scenario_fig3,
    "scaling2n": scenario_scaling2n,
    "carnot2n": scenario_carnot2n,
    "steady_temp": lambda p: _steady(p, "temperature"),
    "steady_chem": lambda p: _steady(p, "chemical"),
    "verify": scenario_verify,
}


def render_csv(config: ScenarioConfig, result: ScenarioOutput) -> str:
    buf = io.StringIO()
    buf.write(f"# lindblad_thermo {__version__}\n")
    buf.write(f"# scenario = {config.scenario}\n")
    for key in sorted(config.params):
        buf.write(f"# {key} = {_fmt(config.params[key])}\n")
    for note in result.notes:
        buf.write(f"# {note}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.header)
    for row in result.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def run_scenario(config: ScenarioConfig) -> tuple:
    """Return ``(exit_status, text, messages)`` for a validated config."""
    if config.scenario == "model":
        try:
            return EXIT_OK, scenario_model(config.params), []
        except ModelError as exc:
            raise UsageError(str(exc)) from None
    try:
        result = RUNNERS[config.scenario](config.params)
    except ModelError as exc:
        raise UsageError(str(exc)) from None
    except ConvergenceError as exc:
        return EXIT_VIOLATION, "", [f"non-convergence: {exc}"]
    status = EXIT_VIOLATION if result.violations else EXIT_OK
    return status, render_csv(config, result), result.violations


_FLAGS = ("n", "tau_c", "tau_h", "beta_h", "beta_c", "omega_h", "omega_c", "omega", "omega0",
          "beta", "a_n", "dt", "gamma0", "gamma", "gamma_down", "system", "max_cycles", "mu_r",
          "anchor", "cases")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lindblad-thermo", description=__doc__.splitlines()[0])
    ap.add_argument("scenario_pos", nargs="?", metavar="SCENARIO", choices=SCENARIOS)
    ap.add_argument("--scenario", choices=SCENARIOS)
    ap.add_argument("--config", help="key = value file with parameter overrides")
    ap.add_argument("--out", default="-", help="output path ('-' for stdout)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="generic parameter override")
    for name in _FLAGS:
        if name != "cases":
            ap.add_argument("--" + name.replace("_", "-"), dest=name)
    ap.add_argument("--cases", dest="cases")
    return ap


def parse_config(argv=None) -> ScenarioConfig:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        if exc.code:
            raise UsageError("invalid command line") from None
        raise
    scenario = args.scenario or args.scenario_pos
    params = {}
    if args.config:
        try:
            params.update(read_config(args.config))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        scenario = scenario or params.pop("scenario", None)
        params.pop("scenario", None)
    if scenario is None:
        raise UsageError("no scenario given")
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    for name in _FLAGS:
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    if args.seed is not None and "seed" in PARAMETERS.get(scenario, {}):
        params["seed"] = args.seed
    return ScenarioConfig(scenario=scenario, params=params, out=args.out)


def main(argv=None) -> int:
    try:
        config = parse_config(argv)
        status, text, messages = run_scenario(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for m in messages:
        print(f"violation: {m}", file=sys.stderr)
    if text:
        if config.out == "-":
            sys.stdout.write(text)
        else:
            with open(config.out, "w", encoding="utf-8") as fh:
                fh.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
