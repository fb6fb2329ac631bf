"""Randomised property checks of the trade-off inequalities.

Each case draws a model and a state from its own ``numpy`` generator seeded
by ``(seed, case)``, so any failing case can be replayed alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coherence import block_diagonalize
from .models import TwoNModelSpec, TwoQubitSpec, build_2n_model, build_two_qubit_model
from .thermo import (
    entropy_production_rate,
    heat_current,
    pauli_entropy_production,
    tradeoff_check,
)

FAMILIES = ("2n", "two-qubit")
CURRENT_TOL = 1e-10
SIGMA_SLACK = 1e-9
PAULI_TOL = 1e-8


def case_rng(seed: int, case: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(case)])


def random_density_matrix(rng: np.random.Generator, d: int, min_weight: float = 1e-3) -> np.ndarray:
    """Full-rank random state: a Wishart draw mixed with a little identity."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    mix = min_weight + (0.2 - min_weight) * rng.random()
    return (1 - mix) * rho + mix * np.eye(d) / d


def random_model(rng: np.random.Generator, family: str, max_n: int = 8):
    """Draw ``(model, basis)`` from one of the two correlated-decay families."""
    if family == "2n":
        spec = TwoNModelSpec(
            n=int(rng.integers(1, max_n + 1)),
            omega0=float(rng.uniform(0.3, 3.0)),
            gamma_down=float(rng.uniform(0.1, 2.0)),
            beta=float(rng.uniform(0.1, 3.0)),
        )
        return build_2n_model(spec)
    if family == "two-qubit":
        spec = TwoQubitSpec(
            omega=float(rng.uniform(0.3, 3.0)),
            beta=float(rng.uniform(0.1, 3.0)),
            gamma0=float(rng.uniform(0.1, 2.0)),
        )
        return build_two_qubit_model(spec)
    raise ValueError(f"unknown family {family!r}")


@dataclass
class CaseResult:
    case: int
    family: str
    dim: int
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class VerificationReport:
    seed: int
    results: list

    @property
    def checked(self) -> int:
        return len(self.results)

    @property
    def failures(self) -> list:
        return [r for r in self.results if not r.ok]

    @property
    def violated(self) -> int:
        return len(self.failures)

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        lines = [f"checked={self.checked} violated={self.violated} seed={self.seed}"]
        for r in self.failures:
            lines.append(f"case {r.case} ({r.family}, d={r.dim}) replay seed=({self.seed},{r.case}): "
                         + "; ".join(r.violations))
        return "\n".join(lines)


def check_case(seed: int, case: int) -> CaseResult:
    rng = case_rng(seed, case)
    family = FAMILIES[case % len(FAMILIES)]
    model, basis = random_model(rng, family)
    rho = random_density_matrix(rng, model.dim)
    res = CaseResult(case=case, family=family, dim=model.dim)

    tc = tradeoff_check(model, rho, basis)
    for name, ok in (("ineq2", tc.ineq2_ok), ("ineq3", tc.ineq3_ok), ("ineq4", tc.ineq4_ok)):
        if not ok:
            res.violations.append(name)
    if abs(tc.j - tc.j_bd) > CURRENT_TOL:
        res.violations.append(f"J(rho) != J(rho_bd) by {abs(tc.j - tc.j_bd):.3e}")
    if tc.sigma < tc.sigma_bd - SIGMA_SLACK:
        res.violations.append(f"sigma(rho) < sigma(rho_bd) by {tc.sigma_bd - tc.sigma:.3e}")

    rho_bd = block_diagonalize(rho, basis)
    s_def = entropy_production_rate(model, rho_bd)
    s_pauli = pauli_entropy_production(model, rho_bd, basis)
    if not (math.isfinite(s_def) and abs(s_def - s_pauli) <= PAULI_TOL * max(1.0, abs(s_def))):
        res.violations.append(f"pauli mismatch {s_def!r} vs {s_pauli!r}")
    return res


def run_verification(cases: int, seed: int = 0) -> VerificationReport:
    if cases < 0:
        raise ValueError("cases must be non-negative")
    return VerificationReport(seed=seed, results=[check_case(seed, k) for k in range(cases)])


def random_block_diagonal_state(rng: np.random.Generator, basis) -> np.ndarray:
    return block_diagonalize(random_density_matrix(rng, basis.dim), basis)


def heat_current_difference(model, rho, basis) -> float:
    return abs(heat_current(model, rho) - heat_current(model, block_diagonalize(rho, basis)))
