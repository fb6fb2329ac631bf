import math

import numpy as np
import pytest

from lindblad_thermo.engine import (
    CarnotCycleSpec,
    CycleRecord,
    CycleSpec,
    build_stroke,
    default_initial_state,
    performance,
    performance_flag,
    run_carnot_2n,
    run_cycle,
    run_dephased_cycle,
    sweep,
)
from lindblad_thermo.lindblad_core import ModelError, generator_residual


@pytest.fixture(scope="module")
def reference_cycle():
    return run_cycle(CycleSpec())


def record(w=1.0, q_h=2.0, eta=None, eta_car=0.6, tau=1.0):
    eta = w / q_h if eta is None else eta
    return CycleRecord(0, w, q_h, q_h - w, tau, eta, eta_car, float("nan"), 0.0, 0.0, True,
                       beta_c=1.5)


# -- specs --------------------------------------------------------------------

@pytest.mark.parametrize("kw", [
    dict(omega_h=1.0, omega_c=2.0),
    dict(beta_h=2.0),
    dict(tau_c=0.0),
    dict(system="three-qubit"),
    dict(dt=0.0),
])
def test_cycle_spec_validation(kw):
    with pytest.raises(ModelError):
        CycleSpec(**kw)


def test_cycle_spec_derived_quantities():
    spec = CycleSpec()
    assert spec.eta_car == pytest.approx(0.6)
    assert spec.steps == (500, 1000)
    assert spec.tau == pytest.approx(1.5)


def test_default_initial_state_is_cold_stationary():
    for spec in (CycleSpec(), CycleSpec(system="2n", n=3)):
        cold, _ = build_stroke(spec, "C")
        assert generator_residual(cold, default_initial_state(spec)) < 1e-14


# -- performance indicator ----------------------------------------------------

def test_performance_formula():
    r = record(w=0.1, q_h=0.25, tau=2.0)
    eta = 0.4
    assert performance(r) == pytest.approx(0.05 * 2 * 1.6 ** 2 / (1.5 * eta * 0.2))


def test_performance_edge_cases():
    assert performance(record(w=0.0, eta=0.0)) == 0.0
    assert performance_flag(record(w=0.0, eta=0.0)) == "idle"
    assert math.isinf(performance(record(w=1.0, q_h=1.0 / 0.6)))
    assert performance_flag(record(w=1.0, q_h=1.0)) == "carnot-pole"
    assert math.isnan(performance(record(w=-0.1, q_h=1.0)))
    assert performance_flag(record(w=-0.1, q_h=1.0)) == "not-engine"


# -- two-qubit reference cycle ------------------------------------------------

def test_reference_cycle_converges(reference_cycle):
    r = reference_cycle.record
    assert r.converged and reference_cycle.cycles_run < 50
    assert r.w > 0 and r.q_h > 0 and r.q_c > 0
    assert r.eta == pytest.approx(0.5, abs=1e-7)


def test_reference_cycle_accounting(reference_cycle):
    r = reference_cycle.record
    assert r.first_law_residual < 1e-9 * max(abs(r.q_h), 1)
    assert r.w == pytest.approx(r.w_quench, rel=1e-6)
    assert r.sigma >= -1e-9
    assert r.eta <= r.eta_car + 1e-9


def test_reference_cycle_bounds(reference_cycle):
    r = reference_cycle.record
    assert r.p <= r.abar_cl + r.abar_qm
    a_bar = r.abar_cl + r.abar_qm
    assert r.q_h + r.q_c <= math.sqrt(0.5 * r.tau * a_bar * r.sigma)


def test_reference_cycle_is_stationary(reference_cycle):
    # after a full lap the state must return to the cycle-start state
    res = reference_cycle
    spec = CycleSpec()
    again = run_cycle(spec, rho0=res.states_c[-1], samples=False)
    assert np.max(np.abs(again.states_h[0] - res.states_h[0])) < 1e-9


def test_quench_leaves_state_untouched(reference_cycle):
    assert np.array_equal(reference_cycle.states_c[0], reference_cycle.states_h[-1])


def test_step_one_samples(reference_cycle):
    samples = reference_cycle.samples
    assert len(samples) == 501
    assert samples[0].t == 0.0 and samples[-1].t == pytest.approx(0.5)
    assert all(s.j_per_bath["H"] > 0 for s in samples)
    assert max(s.ratio - s.a_cl / 2 for s in samples) > 0


def test_trajectory_audit(reference_cycle):
    drift, lam, herm = reference_cycle.audit
    assert drift < 1e-8 and lam >= -1e-8 and herm < 1e-10


def test_trapezoid_converges_under_refinement():
    coarse = run_cycle(CycleSpec(), samples=False).record
    fine = run_cycle(CycleSpec(dt=5e-4), samples=False).record
    assert abs(fine.q_h - coarse.q_h) < 1e-6 * abs(fine.q_h)


def test_short_contacts_do_no_work():
    # heat and work vanish linearly with the contact time
    a, b = (run_cycle(CycleSpec(tau_h=t, tau_c=t), max_cycles=20000, samples=False).record
            for t in (1e-3, 2e-3))
    long = run_cycle(CycleSpec(), samples=False).record
    assert a.converged and b.converged
    assert abs(a.w) < 2e-3 * long.w and abs(a.q_h) < 2e-3 * long.q_h
    assert a.w / b.w == pytest.approx(0.5, rel=1e-3)


def test_non_convergence_is_reported():
    res = run_cycle(CycleSpec(), max_cycles=1, samples=False)
    assert not res.converged and res.cycles_run == 1


# -- dephased reference engine ------------------------------------------------

def test_dephased_cycle_respects_classical_bound():
    r = run_dephased_cycle(CycleSpec(), samples=False).record
    assert r.converged
    assert r.p <= r.abar_cl
    assert r.abar_qm == pytest.approx(0.0, abs=1e-15)


def test_dephasing_is_invisible_without_degeneracy():
    spec = CycleSpec(system="2n", n=1)
    a = run_cycle(spec, samples=False).record
    b = run_dephased_cycle(spec, samples=False).record
    for f in ("w", "q_h", "q_c", "abar_cl", "p"):
        assert getattr(a, f) == pytest.approx(getattr(b, f), abs=1e-9)


def test_correlated_decay_builds_coherence():
    spec = CycleSpec()
    rho0 = np.diag([0.7, 0.1, 0.1, 0.1]).astype(complex)
    coh = run_cycle(spec, rho0=rho0, max_cycles=1, samples=False)
    deph = run_dephased_cycle(spec, rho0=rho0, max_cycles=1, samples=False)
    assert abs(coh.states_h[-1][1, 2]) > 1e-3
    assert np.max(np.abs(deph.states_h[:, 1, 2])) == 0.0
    assert coh.record.w != pytest.approx(deph.record.w, rel=1e-3)


def test_2n_engine_runs():
    r = run_cycle(CycleSpec(system="2n", n=3), samples=False).record
    assert r.converged and r.w > 0
    assert r.p <= r.abar_cl + r.abar_qm


# -- near-Carnot cycle --------------------------------------------------------

def test_carnot_spec_derivations():
    spec = CarnotCycleSpec(8)
    assert spec.a == pytest.approx(1 / 8)
    assert spec.beta_c * spec.omega_c - spec.beta_h * spec.omega_h == pytest.approx(math.log1p(1 / 8))
    assert spec.anchor_excited("C") < spec.anchor_excited("H")
    with pytest.raises(ModelError):
        CarnotCycleSpec(1)
    with pytest.raises(ModelError):
        CarnotCycleSpec(4, a_n=0.0)


@pytest.mark.parametrize("n", [8, 32])
def test_carnot_cycle(n):
    spec = CarnotCycleSpec(n)
    r = run_carnot_2n(spec)
    assert r.eta == pytest.approx(spec.eta_exact, rel=1e-6)
    assert abs(r.eta - r.eta_first_order) <= spec.a ** 2 / (2 * spec.beta_c * spec.omega_h)
    assert r.relaxation_ratio < 0.5
    assert r.entropy_production > 0
    d_pe = spec.anchor_excited("H") - spec.anchor_excited("C")
    assert r.w == pytest.approx((spec.omega_h - spec.omega_c) * d_pe, rel=1e-8)
    assert r.q_h == pytest.approx(spec.omega_h * d_pe, rel=1e-8)


def test_carnot_contact_time_matches_exponential_relaxation():
    # populations relax exponentially, so each contact lasts log(0.55/0.45)/k to first order in a
    r = run_carnot_2n(CarnotCycleSpec(64))
    assert r.relaxation_ratio_h == pytest.approx(math.log(0.55 / 0.45), rel=0.05)


# -- sweeps -------------------------------------------------------------------

def test_sweep_empty_and_order():
    assert sweep(CycleSpec(), "tau_c", []) == []
    rows = sweep(CycleSpec(), "tau_c", [0.6, 0.3])
    assert [r.value for r in rows] == [0.6, 0.3]
    assert all(r.error is None for r in rows)


def test_sweep_records_failures():
    rows = sweep(CycleSpec(), "omega_c", [0.5, 5.0])
    assert rows[0].error is None and "omega_h > omega_c" in rows[1].error


def test_sweep_rejects_unknown_parameter():
    with pytest.raises(ValueError):
        sweep(CycleSpec(), "beta_h", [0.5])
    with pytest.raises(ValueError):
        sweep(CarnotCycleSpec(4), "tau_c", [0.5])


def test_sweep_over_n_for_carnot():
    rows = sweep(CarnotCycleSpec(8), "n", [8, 16])
    assert [r.record.n for r in rows] == [8, 16]
