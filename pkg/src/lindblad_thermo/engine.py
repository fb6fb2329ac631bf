"""Four-stroke quench/contact heat engines and their thermodynamic accounting.

A cycle is: hot contact for ``tau_h``, sudden quench ``omega_h -> omega_c``,
cold contact for ``tau_c``, sudden quench back.  The Hamiltonians at the two
gaps commute, so quenches leave the state untouched and take no time.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .coherence import (
    EnergyBasis,
    block_diagonalize,
    c_x,
    classical_bound,
    l1_coherence,
    strict_diagonalize,
    x_operator,
)
from .lindblad_core import (
    ConvergenceError,
    LindbladModel,
    ModelError,
    RK4Propagator,
    audit_states,
    trace_distance,
)
from .models import (
    TwoNModelSpec,
    TwoQubitSpec,
    bright_thermal_state,
    build_2n_model,
    build_two_qubit_model,
    plus_populations,
    plus_state,
    two_n_relaxation_rate,
)
from .thermo import ThermoSample, heat_current_operator, thermo_sample

SYSTEMS = ("two-qubit", "2n")


def carnot_efficiency(beta_h: float, beta_c: float) -> float:
    return 1.0 - beta_h / beta_c


def _trapezoid(y: np.ndarray, dt: float) -> float:
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        return 0.0
    return float(dt * (y.sum() - 0.5 * (y[0] + y[-1])))


# --------------------------------------------------------------------------
# Quench/contact cycle
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CycleSpec:
    """Engine parameters.  Defaults are the two-qubit reference cycle."""

    system: str = "two-qubit"
    n: int = 2
    omega_h: float = 2.0
    omega_c: float = 1.0
    beta_h: float = 0.6
    beta_c: float = 1.5
    tau_h: float = 0.5
    tau_c: float = 1.0
    gamma0: float = 1.0
    dt: float = 1e-3
    stationarity_tol: float = 1e-10
    hbar: float = 1.0

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ModelError(f"unknown system {self.system!r}; expected one of {SYSTEMS}")
        if self.system == "2n" and self.n < 1:
            raise ModelError("n must be >= 1")
        if not self.omega_h > self.omega_c > 0:
            raise ModelError("need omega_h > omega_c > 0")
        if not self.beta_c > self.beta_h > 0:
            raise ModelError("need beta_c > beta_h > 0")
        if not (self.tau_h > 0 and self.tau_c > 0):
            raise ModelError("contact durations must be positive")
        if not self.dt > 0:
            raise ModelError("dt must be positive")
        if self.gamma0 < 0:
            raise ModelError("gamma0 must be non-negative")

    @property
    def eta_car(self) -> float:
        return carnot_efficiency(self.beta_h, self.beta_c)

    @property
    def steps(self) -> tuple:
        """Integer step counts ``(n_h, n_c)`` (at least one step each)."""
        return (max(1, int(round(self.tau_h / self.dt))),
                max(1, int(round(self.tau_c / self.dt))))

    @property
    def tau(self) -> float:
        n_h, n_c = self.steps
        return (n_h + n_c) * self.dt


def _fermi_down(gamma0, beta, hw):
    return gamma0 / (1.0 + math.exp(-beta * hw))


def build_stroke(spec: CycleSpec, stroke: str) -> tuple:
    """``(model, basis)`` for the hot (``"H"``) or cold (``"C"``) contact."""
    omega, beta = (spec.omega_h, spec.beta_h) if stroke == "H" else (spec.omega_c, spec.beta_c)
    if spec.system == "two-qubit":
        return build_two_qubit_model(TwoQubitSpec(omega, beta, spec.gamma0, spec.hbar, label=stroke))
    down = _fermi_down(spec.gamma0, beta, spec.hbar * omega)
    return build_2n_model(TwoNModelSpec(spec.n, omega, down, beta, spec.hbar, label=stroke))


def default_initial_state(spec: CycleSpec) -> np.ndarray:
    """State reached from the ground state after long contact with the cold bath.

    Collective decay leaves the dark subspace unpopulated, so this is the
    thermal state of the bright levels only.
    """
    if spec.system == "two-qubit":
        return bright_thermal_state(TwoQubitSpec(spec.omega_c, spec.beta_c, spec.gamma0, spec.hbar))
    x = math.exp(-spec.beta_c * spec.hbar * spec.omega_c)
    return plus_state(spec.n, 1.0 / (1.0 + x), x / (1.0 + x))


@dataclass
class CycleRecord:
    cycle_index: int
    w: float
    q_h: float
    q_c: float
    tau: float
    eta: float
    eta_car: float
    p: float
    abar_cl: float
    abar_qm: float
    converged: bool
    w_quench: float = float("nan")
    sigma: float = float("nan")
    beta_c: float = float("nan")

    CSV_HEADER = ("cycle_index", "W", "Q_H", "Q_C", "tau", "eta", "eta_car",
                  "P", "Abar_cl", "Abar_qm", "converged")

    def as_row(self) -> tuple:
        return (self.cycle_index, self.w, self.q_h, self.q_c, self.tau, self.eta,
                self.eta_car, self.p, self.abar_cl, self.abar_qm, int(self.converged))

    @property
    def first_law_residual(self) -> float:
        return abs(self.w - (self.q_h - self.q_c))

    @property
    def flag(self) -> str:
        return performance_flag(self)


def performance_flag(record: CycleRecord) -> str:
    """``"ok"``, ``"idle"`` (W = 0), ``"not-engine"`` (W < 0 or eta <= 0) or
    ``"carnot-pole"`` (eta >= eta_car)."""
    if record.w == 0.0:
        return "idle"
    if record.w < 0 or not record.eta > 0:
        return "not-engine"
    if record.eta >= record.eta_car:
        return "carnot-pole"
    return "ok"


def performance(record: CycleRecord, beta_c: Optional[float] = None) -> float:
    """``P = (W/tau) 2 (2 - eta)^2 / (beta_c eta (eta_car - eta))``.

    Returns 0 when no work is done, ``inf`` at or beyond the Carnot pole and
    ``nan`` outside engine mode.
    """
    beta_c = record.beta_c if beta_c is None else beta_c
    flag = performance_flag(record)
    if flag == "idle":
        return 0.0
    if flag == "not-engine":
        return float("nan")
    if flag == "carnot-pole":
        return float("inf")
    eta = record.eta
    return (record.w / record.tau) * 2 * (2 - eta) ** 2 / (beta_c * eta * (record.eta_car - eta))


@dataclass
class CycleResult:
    """Stationary-cycle output: its record plus the step-1 trajectory."""

    records: list
    samples: list
    times: np.ndarray
    states_h: np.ndarray
    states_c: np.ndarray
    cycles_run: int
    audit: tuple = field(default=(0.0, 0.0, 0.0))

    @property
    def record(self) -> CycleRecord:
        return self.records[-1]

    @property
    def converged(self) -> bool:
        return self.record.converged


class _Stroke:
    def __init__(self, spec: CycleSpec, label: str, n_steps: int, dephase: bool):
        self.model, self.basis = build_stroke(spec, label)
        post = (lambda r, b=self.basis: strict_diagonalize(r, b)) if dephase else None
        self.prop = RK4Propagator(self.model, spec.dt, post=post)
        self.n_steps = n_steps
        self.k = heat_current_operator(self.model)
        self.x = x_operator(self.model)
        self.c_x = c_x(self.x, self.basis)

    def run(self, rho):
        return self.prop.run(rho, self.n_steps)

    def currents(self, states):
        return np.einsum("ij,nji->n", self.k, states).real

    def a_terms(self, states):
        a_cl = classical_bound(self.x, states, self.basis)
        a_qm = self.c_x * l1_coherence(block_diagonalize(states, self.basis), self.basis)
        return np.asarray(a_cl), np.asarray(a_qm)


def _converge(hot: _Stroke, cold: _Stroke, rho0, tol: float, max_cycles: int):
    d = rho0.shape[0]
    if hot.prop.backend == "superop":
        m = cold.prop.transfer_matrix(cold.n_steps) @ hot.prop.transfer_matrix(hot.n_steps)
        step = lambda r: (m @ r.ravel()).reshape(d, d)
    else:
        step = lambda r: cold.prop.advance(hot.prop.advance(r, hot.n_steps), cold.n_steps)
    rho = rho0
    for k in range(1, max_cycles + 1):
        nxt = step(rho)
        dist = trace_distance(nxt, rho)
        rho = nxt
        if dist < tol:
            return rho, k, True
    return rho, max_cycles, False


def run_cycle(spec: CycleSpec, rho0=None, max_cycles: int = 500, *,
              dephase: bool = False, sample_every: int = 1, samples: bool = True) -> CycleResult:
    """Run the cycle to stationarity and account for the last cycle.

    Warm-up cycles are discarded.  Heats use the trapezoid rule on the step
    grid: ``Q_H = int J_H dt``, ``Q_C = -int J_C dt`` and ``W = Q_H - Q_C``.
    ``w_quench`` is the work read off the two quenches, an independent
    first-law cross-check.
    """
    n_h, n_c = spec.steps
    hot = _Stroke(spec, "H", n_h, dephase)
    cold = _Stroke(spec, "C", n_c, dephase)
    rho = default_initial_state(spec) if rho0 is None else np.asarray(rho0, dtype=complex)
    if dephase:
        rho = strict_diagonalize(rho, hot.basis)
    rho, cycles, converged = _converge(hot, cold, rho, spec.stationarity_tol, max_cycles)

    states_h = hot.run(rho)
    states_c = cold.run(states_h[-1])
    j_h = hot.currents(states_h)
    j_c = cold.currents(states_c)
    q_h = _trapezoid(j_h, spec.dt)
    q_c = -_trapezoid(j_c, spec.dt)
    w = q_h - q_c
    dh = hot.model.hamiltonian - cold.model.hamiltonian
    w_quench = float(np.trace(dh @ (states_h[-1] - states_c[-1])).real)

    acl_h, aqm_h = hot.a_terms(states_h)
    acl_c, aqm_c = cold.a_terms(states_c)
    tau = (n_h + n_c) * spec.dt
    abar_cl = (_trapezoid(acl_h, spec.dt) + _trapezoid(acl_c, spec.dt)) / tau
    abar_qm = (_trapezoid(aqm_h, spec.dt) + _trapezoid(aqm_c, spec.dt)) / tau

    eta = w / q_h if q_h != 0 else float("nan")
    record = CycleRecord(
        cycle_index=cycles, w=w, q_h=q_h, q_c=q_c, tau=tau, eta=eta,
        eta_car=spec.eta_car, p=float("nan"), abar_cl=abar_cl, abar_qm=abar_qm,
        converged=converged, w_quench=w_quench,
        sigma=spec.beta_c * q_c - spec.beta_h * q_h, beta_c=spec.beta_c,
    )
    record.p = performance(record)

    times = np.arange(n_h + 1) * spec.dt
    thermo = []
    if samples:
        thermo = [thermo_sample(hot.model, states_h[i], hot.basis, times[i])
                  for i in range(0, n_h + 1, sample_every)]
    audit = audit_states(np.concatenate([states_h, states_c]), 1.0)
    return CycleResult([record], thermo, times, states_h, states_c, cycles, audit)


def run_dephased_cycle(spec: CycleSpec, rho0=None, max_cycles: int = 500, **kw) -> CycleResult:
    """Classical reference engine: strict dephasing after every step."""
    return run_cycle(spec, rho0, max_cycles, dephase=True, **kw)


# --------------------------------------------------------------------------
# Near-Carnot 2N cycle
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CarnotCycleSpec:
    """Anchored fast cycle on the 2N model.

    ``omega_h`` follows from ``hbar (beta_c omega_c - beta_h omega_h) = log(1 + a_n)``.
    ``anchor`` sets the two turning states: the cold one has
    ``G_up^C rho_gg = G_down^C rho_ee / (1 + anchor a_n)`` and the hot one
    ``G_up^H rho_gg = (1 + anchor a_n) G_down^H rho_ee``.
    """

    n: int
    omega_c: float = 1.0
    beta_h: float = 0.6
    beta_c: float = 1.5
    a_n: Optional[float] = None
    gamma_down: float = 1.0
    anchor: float = 0.45
    hbar: float = 1.0
    steps_per_relaxation: int = 200
    target_tol: float = 1e-12

    def __post_init__(self):
        if self.n < 2:
            raise ModelError("near-Carnot cycle needs n >= 2")
        if not self.a > 0:
            raise ModelError("a_n must be positive")
        if not self.beta_c > self.beta_h > 0:
            raise ModelError("need beta_c > beta_h > 0")
        if not 0 < self.anchor < 0.5:
            raise ModelError("anchor must lie in (0, 0.5)")
        if not self.omega_h > 0:
            raise ModelError("derived omega_h is not positive")

    @property
    def a(self) -> float:
        return 1.0 / self.n if self.a_n is None else float(self.a_n)

    @property
    def omega_h(self) -> float:
        return (self.beta_c * self.omega_c - math.log1p(self.a) / self.hbar) / self.beta_h

    @property
    def eta_car(self) -> float:
        return carnot_efficiency(self.beta_h, self.beta_c)

    @property
    def eta_exact(self) -> float:
        return self.eta_car - math.log1p(self.a) / (self.beta_c * self.hbar * self.omega_h)

    @property
    def eta_first_order(self) -> float:
        return self.eta_car - self.a / (self.beta_c * self.hbar * self.omega_h)

    def bath(self, stroke: str) -> TwoNModelSpec:
        omega, beta = (self.omega_h, self.beta_h) if stroke == "H" else (self.omega_c, self.beta_c)
        return TwoNModelSpec(self.n, omega, self.gamma_down, beta, self.hbar, label=stroke)

    def anchor_excited(self, stroke: str) -> float:
        """Excited population of the cold (``"C"``) or hot (``"H"``) anchor state."""
        b = self.bath(stroke)
        boost = 1.0 + self.anchor * self.a
        ratio = b.gamma_up / b.gamma_down
        ratio = ratio * boost if stroke == "C" else ratio / boost
        return ratio / (1.0 + ratio)


@dataclass
class CarnotRecord:
    n: int
    a_n: float
    omega_h: float
    eta: float
    eta_car: float
    eta_exact: float
    eta_first_order: float
    w: float
    q_h: float
    q_c: float
    power: float
    cycle_time: float
    tau_h: float
    tau_c: float
    relaxation_ratio_h: float
    relaxation_ratio_c: float
    entropy_production: float
    audit: tuple = (0.0, 0.0, 0.0)

    CSV_HEADER = ("n", "a_n", "omega_h", "eta", "eta_car", "eta_exact", "W", "Q_H",
                  "Q_C", "power", "cycle_time", "relaxation_ratio_h",
                  "relaxation_ratio_c", "entropy_production")

    def as_row(self) -> tuple:
        return (self.n, self.a_n, self.omega_h, self.eta, self.eta_car, self.eta_exact,
                self.w, self.q_h, self.q_c, self.power, self.cycle_time,
                self.relaxation_ratio_h, self.relaxation_ratio_c, self.entropy_production)

    @property
    def relaxation_ratio(self) -> float:
        return max(self.relaxation_ratio_h, self.relaxation_ratio_c)


def _contact_until(prop: RK4Propagator, n: int, rho, target: float, tol: float,
                   max_steps: int):
    """Step until the excited plus-population reaches ``target``; the last
    step is shortened by root finding.  Returns ``(rho, elapsed, states)``."""
    excited = lambda r: plus_populations(n, r)[1]
    sign = 1.0 if target > excited(rho) else -1.0
    states = [rho]
    for k in range(max_steps):
        nxt = prop.step(rho)
        if sign * (excited(nxt) - target) >= 0:
            h = brentq(lambda s: excited(prop.step_by(rho, s)) - target, 0.0, prop.dt,
                       xtol=1e-16, rtol=4 * np.finfo(float).eps)
            rho = prop.step_by(rho, h)
            states.append(rho)
            if abs(excited(rho) - target) > tol:
                raise ConvergenceError(
                    f"contact missed its target population by {abs(excited(rho) - target):.3e}")
            return rho, k * prop.dt + h, states
        rho = nxt
        states.append(rho)
    raise ConvergenceError(f"target population {target} not reached in {max_steps} steps")


def run_carnot_2n(spec: CarnotCycleSpec) -> CarnotRecord:
    """Simulate one anchored cycle starting at the cold anchor state."""
    n = spec.n
    hot_spec, cold_spec = spec.bath("H"), spec.bath("C")
    hot, _ = build_2n_model(hot_spec)
    cold, _ = build_2n_model(cold_spec)
    k_h, k_c = two_n_relaxation_rate(hot_spec), two_n_relaxation_rate(cold_spec)
    dt = 1.0 / (max(k_h, k_c) * spec.steps_per_relaxation)
    max_steps = 50 * spec.steps_per_relaxation
    pe_c, pe_h = spec.anchor_excited("C"), spec.anchor_excited("H")

    rho0 = plus_state(n, 1 - pe_c, pe_c)
    rho1, tau_h, sh = _contact_until(RK4Propagator(hot, dt), n, rho0, pe_h, spec.target_tol, max_steps)
    rho2, tau_c, sc = _contact_until(RK4Propagator(cold, dt), n, rho1, pe_c, spec.target_tol, max_steps)

    energy = lambda m, r: float(np.trace(m.hamiltonian @ r).real)
    q_h = energy(hot, rho1) - energy(hot, rho0)
    q_c = energy(cold, rho1) - energy(cold, rho2)
    w = q_h - q_c
    cycle_time = tau_h + tau_c
    audit = audit_states(np.array(sh + sc), 1.0)
    return CarnotRecord(
        n=n, a_n=spec.a, omega_h=spec.omega_h, eta=w / q_h, eta_car=spec.eta_car,
        eta_exact=spec.eta_exact, eta_first_order=spec.eta_first_order,
        w=w, q_h=q_h, q_c=q_c, power=w / cycle_time, cycle_time=cycle_time,
        tau_h=tau_h, tau_c=tau_c,
        relaxation_ratio_h=tau_h * k_h, relaxation_ratio_c=tau_c * k_c,
        entropy_production=spec.beta_c * q_c - spec.beta_h * q_h, audit=audit,
    )


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

SWEEP_PARAMETERS = ("tau_c", "tau_h", "n", "a_n", "omega_h", "omega_c")


@dataclass
class SweepRow:
    value: float
    record: object = None
    dephased: object = None
    error: Optional[str] = None


def sweep(template, parameter: str, values: Sequence, *, dephased: bool = False,
          max_cycles: int = 500) -> list:
    """Independent run per value, in input order.  Failures are kept per row."""
    if parameter not in SWEEP_PARAMETERS:
        raise ValueError(f"cannot sweep {parameter!r}; choose from {SWEEP_PARAMETERS}")
    if not hasattr(template, parameter):
        raise ValueError(f"{type(template).__name__} has no parameter {parameter!r}")
    rows = []
    for v in values:
        v = int(v) if parameter == "n" else float(v)
        row = SweepRow(value=v)
        try:
            spec = replace(template, **{parameter: v})
            if isinstance(spec, CarnotCycleSpec):
                row.record = run_carnot_2n(spec)
            else:
                row.record = run_cycle(spec, max_cycles=max_cycles, samples=False).record
                if dephased:
                    row.dephased = run_dephased_cycle(spec, max_cycles=max_cycles,
                                                      samples=False).record
        except (ModelError, ConvergenceError, ValueError) as exc:
            row.error = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def spec_dict(spec) -> dict:
    return asdict(spec)
