"""Concrete systems: the 2N-state correlated-decay model, its coherent
``|g,+>/|e,+>`` states, the two-qubit superradiant model and the two-bath
steady-current variants.

Basis ordering for the 2N model is ``|g,1..N>`` followed by ``|e,1..N>``;
for the two qubits it is ``|0>, |1>, |2>, |3>`` (``|3>`` doubly excited).
The decay channel sits at ``+omega`` (it lowers the energy by
``hbar * omega``), its rate is ``gamma_down``, and the excitation channel at
``-omega`` has ``gamma_up``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .coherence import EnergyBasis, energy_basis
from .lindblad_core import BathSpec, JumpChannel, LindbladModel, ModelError


def _decay_pair(op: np.ndarray, omega: float, down: float, up: float) -> tuple:
    return (JumpChannel(omega, down, op), JumpChannel(-omega, up, op.conj().T))


# --------------------------------------------------------------------------
# 2N-state model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoNModelSpec:
    n: int
    omega0: float = 1.0
    gamma_down: float = 1.0
    beta: float = 1.0
    hbar: float = 1.0
    label: str = "B"

    def __post_init__(self):
        if self.n < 1:
            raise ModelError("n must be >= 1")
        if not self.gamma_down > 0:
            raise ModelError("gamma_down must be positive")

    @property
    def gamma_up(self) -> float:
        return self.gamma_down * math.exp(-self.beta * self.hbar * self.omega0)


def two_n_hamiltonian(n: int, omega: float, hbar: float = 1.0) -> np.ndarray:
    return np.diag(np.r_[np.zeros(n), np.full(n, hbar * omega)]).astype(complex)


def two_n_decay_operator(n: int) -> np.ndarray:
    """``sum_{j,j'} |g,j><e,j'|``."""
    op = np.zeros((2 * n, 2 * n), dtype=complex)
    op[:n, n:] = 1.0
    return op


def plus_vectors(n: int) -> tuple:
    g = np.zeros(2 * n, dtype=complex)
    e = np.zeros(2 * n, dtype=complex)
    g[:n] = 1 / math.sqrt(n)
    e[n:] = 1 / math.sqrt(n)
    return g, e


def plus_state(n: int, p_g: float, p_e: float) -> np.ndarray:
    """``p_g |g,+><g,+| + p_e |e,+><e,+|``."""
    g, e = plus_vectors(n)
    return p_g * np.outer(g, g.conj()) + p_e * np.outer(e, e.conj())


def plus_populations(n: int, rho) -> tuple:
    g, e = plus_vectors(n)
    rho = np.asarray(rho)
    return float((g.conj() @ rho @ g).real), float((e.conj() @ rho @ e).real)


def build_2n_model(spec: TwoNModelSpec) -> tuple:
    """Return ``(model, basis)`` for the single-bath 2N-state model."""
    h = two_n_hamiltonian(spec.n, spec.omega0, spec.hbar)
    bath = BathSpec(spec.label, spec.beta,
                    _decay_pair(two_n_decay_operator(spec.n), spec.omega0,
                                spec.gamma_down, spec.gamma_up))
    model = LindbladModel(h, (bath,), hbar=spec.hbar)
    return model, energy_basis(model, np.eye(2 * spec.n))


@dataclass(frozen=True)
class PlusStateSpec:
    """Coherent state with ``p_g = (1 + a_n) p_e exp(beta hbar omega0)`` and
    ``p_g + p_e = 1``."""

    n: int
    a_n: float
    beta: float = 1.0
    omega0: float = 1.0
    hbar: float = 1.0

    @property
    def p_e(self) -> float:
        return 1.0 / (1.0 + (1.0 + self.a_n) * math.exp(self.beta * self.hbar * self.omega0))

    @property
    def p_g(self) -> float:
        return 1.0 - self.p_e


def build_plus_state(spec: PlusStateSpec) -> np.ndarray:
    if not 0.0 < spec.p_e < 1.0:
        raise ModelError("populations must lie in (0, 1)")
    return plus_state(spec.n, spec.p_g, spec.p_e)


class TwoNObservables(NamedTuple):
    j: float
    sigma_dot: float


def analytic_2n_observables(spec: TwoNModelSpec, plus: PlusStateSpec) -> TwoNObservables:
    """Closed-form current and entropy production of the 2N model at a plus state."""
    if plus.n != spec.n:
        raise ModelError("model and state disagree on n")
    n2 = spec.n ** 2
    a = plus.a_n
    flux = n2 * a * spec.gamma_down * plus.p_e
    return TwoNObservables(j=flux * spec.hbar * spec.omega0, sigma_dot=flux * math.log1p(a))


def two_n_relaxation_rate(spec: TwoNModelSpec) -> float:
    """Rate at which plus-state populations approach equilibrium."""
    return spec.n ** 2 * (spec.gamma_down + spec.gamma_up)


# --------------------------------------------------------------------------
# Two-qubit superradiant model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoQubitSpec:
    omega: float = 2.0
    beta: float = 0.6
    gamma0: float = 1.0
    hbar: float = 1.0
    label: str = "B"

    @property
    def gamma_down(self) -> float:
        return self.gamma0 / (1.0 + math.exp(-self.beta * self.hbar * self.omega))

    @property
    def gamma_up(self) -> float:
        return self.gamma0 / (1.0 + math.exp(self.beta * self.hbar * self.omega))


def two_qubit_hamiltonian(omega: float, hbar: float = 1.0) -> np.ndarray:
    return np.diag([0.0, hbar * omega, hbar * omega, 2 * hbar * omega]).astype(complex)


def two_qubit_decay_operator() -> np.ndarray:
    """Collective lowering ``|0><1| + |0><2| + |1><3| + |2><3|``."""
    op = np.zeros((4, 4), dtype=complex)
    op[0, 1] = op[0, 2] = op[1, 3] = op[2, 3] = 1.0
    return op


def build_two_qubit_model(spec: TwoQubitSpec) -> tuple:
    if spec.gamma0 < 0:
        raise ModelError("gamma0 must be non-negative")
    h = two_qubit_hamiltonian(spec.omega, spec.hbar)
    bath = BathSpec(spec.label, spec.beta,
                    _decay_pair(two_qubit_decay_operator(), spec.omega,
                                spec.gamma_down, spec.gamma_up))
    model = LindbladModel(h, (bath,), hbar=spec.hbar)
    return model, energy_basis(model, np.eye(4))


def bright_thermal_state(spec: TwoQubitSpec) -> np.ndarray:
    """Stationary state reached from ``|0><0|``.

    The antisymmetric single-excitation state is dark, so relaxation from the
    ground state ends in the thermal state of the three bright levels
    ``|0>, (|1>+|2>)/sqrt(2), |3>`` rather than the full Gibbs state.
    """
    x = math.exp(-spec.beta * spec.hbar * spec.omega)
    w = np.array([1.0, x, x * x]) / (1 + x + x * x)
    plus = np.array([0, 1, 1, 0]) / math.sqrt(2)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = w[0]
    rho[3, 3] = w[2]
    rho += w[1] * np.outer(plus, plus)
    return rho


# --------------------------------------------------------------------------
# Two-bath steady currents
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoBathTwoNSpec:
    """Two baths coupled to the 2N model with equal decay rates.

    ``variant="temperature"``: baths ``H`` and ``C``; ``beta_h`` is free and
    ``beta_c`` follows from the matching condition.  ``variant="chemical"``:
    baths ``L`` and ``R`` share ``beta``; ``mu_r`` is free and ``mu_l``
    follows from it.
    """

    n: int
    omega: float = 1.0
    variant: str = "temperature"
    gamma_down_common: float = 1.0
    beta_h: float = 0.5
    beta: float = 1.0
    mu_r: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.variant not in ("temperature", "chemical"):
            raise ModelError(f"unknown variant {self.variant!r}")
        if self.n < 2:
            raise ModelError("two-bath steady current needs n >= 2 (1 - 1/n must be positive)")

    @property
    def matching_log(self) -> float:
        return math.log((1 + 1 / self.n) / (1 - 1 / self.n))

    @property
    def beta_c(self) -> float:
        return self.beta_h + self.matching_log / (self.hbar * self.omega)

    @property
    def mu_l(self) -> float:
        return self.mu_r + self.matching_log / self.beta


@dataclass
class TwoBathSystem:
    model: LindbladModel
    basis: EnergyBasis
    rho_ss: np.ndarray
    rho_gg: float
    rho_ee: float
    labels: tuple

    def sigma_closed_form(self) -> float:
        bath = self.model.baths[0]
        n = self.model.dim // 2
        flux = n * bath.channels[0].rate * self.rho_ee
        return flux * math.log1p(1 / n) - flux * math.log1p(-1 / n)

    def current_closed_form(self) -> float:
        bath = self.model.baths[0]
        n = self.model.dim // 2
        return n * self.model.hbar * bath.channels[0].omega * bath.channels[0].rate * self.rho_ee


def build_two_bath_2n(spec: TwoBathTwoNSpec) -> TwoBathSystem:
    n, w, hb = spec.n, spec.omega, spec.hbar
    gd = spec.gamma_down_common
    op = two_n_decay_operator(n)
    if spec.variant == "temperature":
        labels = ("H", "C")
        params = [(spec.beta_h, 0.0), (spec.beta_c, 0.0)]
    else:
        labels = ("L", "R")
        params = [(spec.beta, spec.mu_l), (spec.beta, spec.mu_r)]
    baths = []
    ups = []
    for label, (beta, mu) in zip(labels, params):
        up = gd * math.exp(-beta * (hb * w - mu))
        ups.append(up)
        baths.append(BathSpec(label, beta, _decay_pair(op, w, gd, up), mu=mu))
    model = LindbladModel(two_n_hamiltonian(n, w, hb), tuple(baths), hbar=hb)
    # (1 + 1/N) gd rho_ee = up_first rho_gg with rho_gg + rho_ee = 1
    ratio = (1 + 1 / n) * gd / ups[0]
    rho_ee = 1.0 / (1.0 + ratio)
    rho_gg = 1.0 - rho_ee
    return TwoBathSystem(
        model=model,
        basis=energy_basis(model, np.eye(2 * n)),
        rho_ss=plus_state(n, rho_gg, rho_ee),
        rho_gg=rho_gg,
        rho_ee=rho_ee,
        labels=labels,
    )
