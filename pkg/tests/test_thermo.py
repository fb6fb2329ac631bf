import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import qubit_model, random_state
from lindblad_thermo.coherence import block_diagonalize, energy_basis, strict_diagonalize
from lindblad_thermo.lindblad_core import (
    BathSpec,
    JumpChannel,
    LindbladModel,
    RK4Propagator,
    gibbs_state,
)
from lindblad_thermo.models import (
    PlusStateSpec,
    TwoBathTwoNSpec,
    TwoNModelSpec,
    TwoQubitSpec,
    build_2n_model,
    build_plus_state,
    build_two_bath_2n,
    build_two_qubit_model,
)
from lindblad_thermo.thermo import (
    current_dissipation_ratio,
    entropy_production_rate,
    entropy_rate,
    heat_current,
    heat_current_jump_form,
    heat_current_operator,
    heat_currents,
    pauli_entropy_production,
    particle_current,
    thermo_header,
    thermo_sample,
    tradeoff_check,
    transition_rates,
    von_neumann_entropy,
)

seeds = st.integers(0, 2**32 - 1)


@given(seeds)
def test_heat_current_forms_agree(seed):
    rng = np.random.default_rng(seed)
    model, _ = build_2n_model(TwoNModelSpec(int(rng.integers(1, 5)), rng.uniform(0.5, 2), 1.0, 0.7))
    rho = random_state(rng, model.dim)
    j = heat_current(model, rho)
    assert heat_current_jump_form(model, rho) == pytest.approx(j, abs=1e-12)
    assert np.trace(heat_current_operator(model) @ rho).real == pytest.approx(j, abs=1e-12)


def test_qubit_heat_current_closed_form():
    m = qubit_model(omega=1.3, down=0.7, beta=0.8)
    up = 0.7 * math.exp(-0.8 * 1.3)
    rho = np.diag([0.6, 0.4]).astype(complex)
    assert heat_current(m, rho) == pytest.approx(1.3 * (up * 0.6 - 0.7 * 0.4))
    assert particle_current(m, rho) == pytest.approx(up * 0.6 - 0.7 * 0.4)


def test_equilibrium_is_silent():
    m = qubit_model()
    g = gibbs_state(m.hamiltonian, 0.8)
    assert heat_current(m, g) == pytest.approx(0.0, abs=1e-15)
    assert entropy_production_rate(m, g) == pytest.approx(0.0, abs=1e-14)
    tc = tradeoff_check(m, g, energy_basis(m))
    assert tc.ok and tc.ratio_rho == 0.0


def test_entropy_rate_matches_finite_difference(rng):
    model, _ = build_two_qubit_model(TwoQubitSpec())
    rho = random_state(rng, 4, mix=0.2)
    h = 1e-4
    prop = RK4Propagator(model, h)
    fd = (von_neumann_entropy(prop.step_by(rho, h)) - von_neumann_entropy(prop.step_by(rho, -h))) / (2 * h)
    assert entropy_rate(model, rho) == pytest.approx(fd, abs=1e-7)


def test_entropy_rate_diverges_on_leakage():
    m = qubit_model()
    assert entropy_rate(m, np.diag([1.0, 0.0])) == math.inf
    assert entropy_production_rate(m, np.diag([1.0, 0.0])) == math.inf


def test_zero_temperature_ground_state_is_not_divergent():
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    m = LindbladModel(np.diag([0.0, 1.0]), (BathSpec("B", 50.0, (
        JumpChannel(1.0, 1.0, lower), JumpChannel(-1.0, 0.0, lower.T))),))
    assert entropy_rate(m, np.diag([1.0, 0.0])) == 0.0


@given(seeds)
def test_second_law_and_dephasing_monotonicity(seed):
    rng = np.random.default_rng(seed)
    model, basis = build_2n_model(TwoNModelSpec(int(rng.integers(1, 5)), rng.uniform(0.5, 2),
                                                rng.uniform(0.2, 2), rng.uniform(0.2, 2)))
    rho = random_state(rng, model.dim)
    s = entropy_production_rate(model, rho)
    s_bd = entropy_production_rate(model, block_diagonalize(rho, basis))
    assert s >= -1e-12
    assert s >= s_bd - 1e-9
    assert heat_current(model, rho) == pytest.approx(heat_current(model, block_diagonalize(rho, basis)),
                                                     abs=1e-12)


@given(seeds)
def test_pauli_form_matches_definition(seed):
    rng = np.random.default_rng(seed)
    if seed % 2:
        model, basis = build_two_qubit_model(TwoQubitSpec(rng.uniform(0.5, 3), rng.uniform(0.2, 2)))
    else:
        model, basis = build_2n_model(TwoNModelSpec(int(rng.integers(1, 6)), 1.0, 1.0, rng.uniform(0.2, 2)))
    rho_bd = block_diagonalize(random_state(rng, model.dim), basis)
    assert pauli_entropy_production(model, rho_bd, basis) == pytest.approx(
        entropy_production_rate(model, rho_bd), rel=1e-8, abs=1e-12)


def test_pauli_rejects_off_block_coherence(rng):
    model, basis = build_two_qubit_model(TwoQubitSpec())
    with pytest.raises(ValueError, match="block-diagonal"):
        transition_rates(model, random_state(rng, 4), basis)


def test_pauli_on_two_bath_model():
    sys_ = build_two_bath_2n(TwoBathTwoNSpec(3))
    rho = sys_.rho_ss * 0.9 + 0.1 * np.eye(6) / 6
    assert pauli_entropy_production(sys_.model, rho, sys_.basis) == pytest.approx(
        entropy_production_rate(sys_.model, rho), rel=1e-9)


def test_ratio_edge_cases():
    assert current_dissipation_ratio(0.0, 0.0) == 0.0
    assert current_dissipation_ratio(1.0, 0.0) == math.inf
    assert current_dissipation_ratio(2.0, 4.0) == 1.0
    assert current_dissipation_ratio(1.0, math.inf) == 0.0


def test_plus_state_exceeds_classical_bound():
    # J^2/sigma grows like N^2 while A_cl grows like N; coherence covers the gap
    n = 16
    spec = TwoNModelSpec(n)
    model, basis = build_2n_model(spec)
    rho = build_plus_state(PlusStateSpec(n, 1 / n))
    tc = tradeoff_check(model, rho, basis)
    assert tc.ok
    assert tc.ratio_rho > 3 * tc.bound_cl
    assert tc.ratio_rho <= tc.bound_q
    assert tc.ratio_sd <= tc.bound_cl


@given(seeds)
def test_tradeoff_inequalities_hold(seed):
    rng = np.random.default_rng(seed)
    model, basis = build_two_qubit_model(TwoQubitSpec(rng.uniform(0.3, 3), rng.uniform(0.1, 3)))
    assert tradeoff_check(model, random_state(rng, 4), basis).ok


def test_thermo_sample_row_layout(rng):
    model, basis = build_two_qubit_model(TwoQubitSpec(label="H"))
    rho = random_state(rng, 4)
    s = thermo_sample(model, rho, basis, t=0.25)
    header = thermo_header()
    assert header == ["t", "J_H", "J_C", "S_dot", "sigma_dot", "ratio", "a_cl", "a_qm", "flags"]
    row = s.csv_row()
    assert len(row) == len(header) and row[0] == 0.25 and row[2] == 0.0
    assert s.j_total == pytest.approx(heat_current(model, rho))


def test_thermo_sample_flags_divergence():
    m = qubit_model()
    s = thermo_sample(m, np.diag([1.0, 0.0]), energy_basis(m))
    assert "sigma_divergent" in s.flags


def test_two_bath_currents_and_chemical_entropy():
    sys_ = build_two_bath_2n(TwoBathTwoNSpec(4, variant="chemical", mu_r=0.3))
    js = heat_currents(sys_.model, sys_.rho_ss)
    assert js["L"] == pytest.approx(-js["R"], abs=1e-12)
    assert entropy_production_rate(sys_.model, sys_.rho_ss) == pytest.approx(sys_.sigma_closed_form(),
                                                                             rel=1e-12)
    assert particle_current(sys_.model, sys_.rho_ss, "L") == pytest.approx(js["L"], rel=1e-12)


def test_strictly_dephased_state_has_no_quantum_bound(rng):
    model, basis = build_two_qubit_model(TwoQubitSpec())
    tc = tradeoff_check(model, strict_diagonalize(random_state(rng, 4), basis), basis)
    assert tc.a_qm == 0.0 and tc.ok
