"""Heat currents, entropy production and the current-dissipation trade-off.

Conventions: ``k_B = 1``; ``J > 0`` means energy flowing from the bath into
the system.  Divergent entropy rates (population jumping into a level the
state does not occupy) are returned as ``math.inf`` rather than raised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

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
    LindbladModel,
    ModelError,
    apply_dissipator,
    apply_generator,
    find_partner,
    hermitize,
)

EIG_FLOOR = 1e-12
LEAK_TOL = 1e-9
FLUX_FLOOR = 1e-14
SECOND_LAW_SLACK = 1e-9
INEQ_RTOL = 1e-9


def heat_current(model: LindbladModel, rho, bath_filter: Optional[str] = None) -> float:
    """``Tr[H D(rho)]`` for the selected bath (all baths when ``None``)."""
    val = np.trace(model.hamiltonian @ apply_dissipator(model, rho, bath_filter))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ModelError(f"heat current has imaginary part {val.imag:.3e}")
    return float(val.real)


def heat_currents(model: LindbladModel, rho) -> dict:
    return {b.label: heat_current(model, rho, b.label) for b in model.baths}


def heat_current_jump_form(model: LindbladModel, rho, bath_filter: Optional[str] = None) -> float:
    """``-sum hbar omega gamma Tr[L^+ L rho]``, equal to :func:`heat_current`."""
    rho = np.asarray(rho, dtype=complex)
    total = 0.0
    for _, ch in model.channels(bath_filter):
        total -= model.hbar * ch.omega * ch.rate * np.trace(ch.ldl @ rho).real
    return float(total)


def heat_current_operator(model: LindbladModel, bath_filter: Optional[str] = None) -> np.ndarray:
    """Hermitian ``K`` with ``J(rho) = Tr[K rho]`` (adjoint dissipator applied to H)."""
    h = model.hamiltonian
    k = np.zeros_like(h)
    for _, ch in model.channels(bath_filter):
        k += ch.rate * (ch.op.conj().T @ h @ ch.op - 0.5 * (ch.ldl @ h + h @ ch.ldl))
    return hermitize(k)


def particle_current(model: LindbladModel, rho, bath_filter: Optional[str] = None) -> float:
    """Excitation number entering the system per unit time.

    Each jump at ``omega > 0`` removes one quantum, each jump at
    ``omega < 0`` adds one.
    """
    rho = np.asarray(rho, dtype=complex)
    total = 0.0
    for _, ch in model.channels(bath_filter):
        total -= np.sign(ch.omega) * ch.rate * np.trace(ch.ldl @ rho).real
    return float(total)


def von_neumann_entropy(rho) -> float:
    p = np.linalg.eigvalsh(hermitize(np.asarray(rho, dtype=complex)))
    p = p[p > EIG_FLOOR]
    return float(-(p * np.log(p)).sum())


def entropy_rate(model: LindbladModel, rho) -> float:
    """``-Tr[L(rho) log rho]`` on the support of ``rho``.

    Returns ``inf`` when the generator pushes weight above ``LEAK_TOL`` into
    the kernel of ``rho``.
    """
    rho = hermitize(np.asarray(rho, dtype=complex))
    p, v = np.linalg.eigh(rho)
    flow = np.einsum("ki,kl,li->i", v.conj(), apply_generator(model, rho), v).real
    support = p > EIG_FLOOR
    if np.abs(flow[~support]).sum() > LEAK_TOL:
        return math.inf
    return float(-(flow[support] * np.log(p[support])).sum())


def bath_entropy_flow(model: LindbladModel, rho) -> float:
    """``-sum_a beta_a (J_a - mu_a I_a)``: entropy delivered to the baths per time."""
    total = 0.0
    for b in model.baths:
        flow = heat_current(model, rho, b.label)
        if b.mu != 0.0:
            flow -= b.mu * particle_current(model, rho, b.label)
        total -= b.beta * flow
    return total


def entropy_production_rate(model: LindbladModel, rho) -> float:
    """Entropy production rate ``S_dot - sum_a beta_a (J_a - mu_a I_a)``."""
    s_dot = entropy_rate(model, rho)
    if math.isinf(s_dot):
        return s_dot
    return s_dot + bath_entropy_flow(model, rho)


# --------------------------------------------------------------------------
# Transition-rate (Pauli) form
# --------------------------------------------------------------------------

@dataclass
class TransitionRateTable:
    """Eigen-decomposition of a block-diagonal state and jump rates between
    its eigenvectors.  ``rates[(label, i)][m, n]`` is the rate from ``|n>``
    to ``|m>`` through channel ``i`` of bath ``label``."""

    populations: np.ndarray
    vectors: np.ndarray
    rates: dict


def _block_eigh(rho_bd, basis: EnergyBasis):
    m = basis.to_basis(np.asarray(rho_bd, dtype=complex))
    off = np.max(np.abs(m * ~basis.block_mask), initial=0.0)
    if off > 1e-10:
        raise ValueError(f"state is not block-diagonal (off-block residual {off:.3e})")
    d = basis.dim
    p = np.zeros(d)
    vecs = np.zeros((d, d), dtype=complex)
    col = 0
    for level in range(len(basis.level_energies)):
        idx = np.flatnonzero(basis.level_index == level)
        w, u = np.linalg.eigh(hermitize(m[np.ix_(idx, idx)]))
        p[col:col + len(idx)] = w
        vecs[:, col:col + len(idx)] = basis.vectors[:, idx] @ u
        col += len(idx)
    return p, vecs


def transition_rates(model: LindbladModel, rho_bd, basis: EnergyBasis) -> TransitionRateTable:
    p, vecs = _block_eigh(rho_bd, basis)
    rates = {}
    for b in model.baths:
        for i, ch in enumerate(b.channels):
            amp = vecs.conj().T @ ch.op @ vecs
            rates[(b.label, i)] = ch.rate * np.abs(amp) ** 2
    return TransitionRateTable(populations=p, vectors=vecs, rates=rates)


def pauli_entropy_production(model: LindbladModel, rho_bd, basis: EnergyBasis) -> float:
    """Entropy production of a block-diagonal state from jump fluxes.

    ``sum' W_mn p_n log(W_mn p_n / W'_nm p_m)`` over baths, channels and
    eigenvector pairs, where ``W'`` belongs to the partner channel; pairs
    with ``omega = 0`` and ``m = n`` are excluded.
    """
    table = transition_rates(model, rho_bd, basis)
    p = np.clip(table.populations, 0.0, None)
    total = 0.0
    for b in model.baths:
        for i, ch in enumerate(b.channels):
            k, res = find_partner(b, i)
            if k is None or res > 1e-9:
                raise ModelError(f"bath {b.label} channel {i} has no adjoint partner")
            fwd = table.rates[(b.label, i)] * p[None, :]
            bwd = table.rates[(b.label, k)].T * p[:, None]
            keep = np.maximum(fwd, bwd) > FLUX_FLOOR
            if ch.omega == 0.0:
                np.fill_diagonal(keep, False)
            if not keep.any():
                continue
            f, g = fwd[keep], bwd[keep]
            if np.any((f > 0) & (g <= 0)):
                return math.inf
            nz = f > 0
            total += float((f[nz] * np.log(f[nz] / g[nz])).sum())
    return total


# --------------------------------------------------------------------------
# Trade-off inequalities
# --------------------------------------------------------------------------

def current_dissipation_ratio(j: float, sigma: float) -> float:
    """``J^2 / sigma``; 0 for ``J = sigma = 0``, ``inf`` when only sigma vanishes."""
    if math.isinf(sigma):
        return 0.0
    if sigma > FLUX_FLOOR:
        return j * j / sigma
    return 0.0 if abs(j) <= 1e-12 else math.inf


def _leq(lhs: float, rhs: float) -> bool:
    if math.isnan(lhs) or math.isnan(rhs):
        return False
    if math.isinf(rhs) and rhs > 0:
        return True
    return lhs <= rhs + INEQ_RTOL * max(1.0, abs(rhs))


def _mul(a: float, b: float) -> float:
    # 0 * inf counts as 0: a vanishing current never violates a bound
    return 0.0 if a == 0.0 or b == 0.0 else a * b


@dataclass
class TradeoffCheck:
    j: float
    j_bd: float
    j_sd: float
    sigma: float
    sigma_bd: float
    sigma_sd: float
    a_cl: float
    a_qm: float
    ratio_rho: float
    ratio_bd: float
    ratio_sd: float
    bound_cl: float
    bound_q: float
    ineq2_ok: bool
    ineq3_ok: bool
    ineq4_ok: bool

    @property
    def ok(self) -> bool:
        return self.ineq2_ok and self.ineq3_ok and self.ineq4_ok


def tradeoff_check(model: LindbladModel, rho, basis: EnergyBasis) -> TradeoffCheck:
    """Evaluate the three current-dissipation inequalities for ``rho``.

    Checks are cross-multiplied so that a vanishing entropy production never
    divides:  ``J^2 s_bd <= J_bd^2 s``, ``2 J_sd^2 <= A_cl s_sd`` and
    ``2 J_bd^2 <= (A_cl + A_qm) s_bd``, each with slack
    ``1e-9 * max(1, |rhs|)``.
    """
    rho = np.asarray(rho, dtype=complex)
    rho_bd = block_diagonalize(rho, basis)
    rho_sd = strict_diagonalize(rho, basis)
    j, j_bd, j_sd = (heat_current(model, r) for r in (rho, rho_bd, rho_sd))
    s, s_bd, s_sd = (entropy_production_rate(model, r) for r in (rho, rho_bd, rho_sd))
    x = x_operator(model)
    a_cl = classical_bound(x, rho, basis)
    a_qm = c_x(x, basis) * l1_coherence(rho_bd, basis)
    return TradeoffCheck(
        j=j, j_bd=j_bd, j_sd=j_sd,
        sigma=s, sigma_bd=s_bd, sigma_sd=s_sd,
        a_cl=a_cl, a_qm=a_qm,
        ratio_rho=current_dissipation_ratio(j, s),
        ratio_bd=current_dissipation_ratio(j_bd, s_bd),
        ratio_sd=current_dissipation_ratio(j_sd, s_sd),
        bound_cl=a_cl / 2,
        bound_q=(a_cl + a_qm) / 2,
        ineq2_ok=_leq(_mul(j * j, s_bd), _mul(j_bd * j_bd, s)),
        ineq3_ok=_leq(2 * j_sd * j_sd, _mul(a_cl, s_sd)),
        ineq4_ok=_leq(2 * j_bd * j_bd, _mul(a_cl + a_qm, s_bd)),
    )


# --------------------------------------------------------------------------
# Samples along trajectories
# --------------------------------------------------------------------------

@dataclass
class ThermoSample:
    t: float
    j_per_bath: dict
    entropy_rate: float
    sigma_dot: float
    ratio: float
    a_cl: float
    a_qm: float
    ratio_sd: float = float("nan")
    flags: list = field(default_factory=list)

    @property
    def j_total(self) -> float:
        return sum(self.j_per_bath.values())

    def csv_row(self, labels: Sequence[str] = ("H", "C")) -> list:
        return [self.t, *(self.j_per_bath.get(lb, 0.0) for lb in labels),
                self.entropy_rate, self.sigma_dot, self.ratio, self.a_cl, self.a_qm,
                "|".join(self.flags)]


def thermo_header(labels: Sequence[str] = ("H", "C")) -> list:
    return ["t", *(f"J_{lb}" for lb in labels), "S_dot", "sigma_dot", "ratio", "a_cl", "a_qm", "flags"]


def thermo_sample(model: LindbladModel, rho, basis: EnergyBasis, t: float = 0.0) -> ThermoSample:
    rho = np.asarray(rho, dtype=complex)
    currents = heat_currents(model, rho)
    s_dot = entropy_rate(model, rho)
    sigma = entropy_production_rate(model, rho)
    j = sum(currents.values())
    x = x_operator(model)
    a_cl = classical_bound(x, rho, basis)
    a_qm = c_x(x, basis) * l1_coherence(block_diagonalize(rho, basis), basis)
    rho_sd = strict_diagonalize(rho, basis)
    ratio_sd = current_dissipation_ratio(heat_current(model, rho_sd),
                                         entropy_production_rate(model, rho_sd))
    flags = []
    if math.isinf(sigma):
        flags.append("sigma_divergent")
    elif sigma < -SECOND_LAW_SLACK:
        flags.append("second_law_violation")
    ratio = current_dissipation_ratio(j, sigma)
    if math.isinf(ratio):
        flags.append("ratio_divergent")
    return ThermoSample(t=float(t), j_per_bath=currents, entropy_rate=s_dot, sigma_dot=sigma,
                        ratio=ratio, a_cl=a_cl, a_qm=a_qm, ratio_sd=ratio_sd, flags=flags)
