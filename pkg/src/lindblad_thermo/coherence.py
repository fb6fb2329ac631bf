"""Energy-basis bookkeeping, dephasing maps and coherence quantities.

All dephasing and coherence functions accept a single matrix or a stack of
matrices with shape ``(..., d, d)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lindblad_core import LindbladModel, ModelError, as_matrix, dagger, hermitize

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EnergyBasis:
    """Fixed labelled eigenbasis ``|e, j>`` of a Hamiltonian.

    ``vectors[:, k]`` is the k-th basis state, ``energies[k]`` its energy and
    ``level_index[k]`` the index of its degenerate level in ``level_energies``.
    """

    vectors: np.ndarray
    energies: np.ndarray
    level_index: np.ndarray
    level_energies: np.ndarray
    degeneracy_tol: float = DEGENERACY_TOL
    is_standard: bool = field(init=False)
    block_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = self.vectors.shape[0]
        object.__setattr__(self, "is_standard", bool(np.allclose(self.vectors, np.eye(d), atol=0, rtol=0)))
        object.__setattr__(self, "block_mask", self.level_index[:, None] == self.level_index[None, :])

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def levels(self) -> list:
        """``[(energy, states)]`` with ``states`` of shape ``(d, degeneracy)``."""
        return [
            (float(e), self.vectors[:, self.level_index == k])
            for k, e in enumerate(self.level_energies)
        ]

    def projector(self, level: int) -> np.ndarray:
        v = self.vectors[:, self.level_index == level]
        return v @ v.conj().T

    def to_basis(self, rho: np.ndarray) -> np.ndarray:
        """Matrix elements ``<e,j| rho |e',j'>``."""
        rho = np.asarray(rho, dtype=complex)
        if self.is_standard:
            return rho
        return dagger(self.vectors) @ rho @ self.vectors

    def from_basis(self, m: np.ndarray) -> np.ndarray:
        if self.is_standard:
            return m
        return self.vectors @ m @ dagger(self.vectors)


def _group_levels(energies: np.ndarray, tol: float):
    order = np.argsort(energies, kind="stable")
    level_of = np.empty(len(energies), dtype=int)
    level_energies = []
    start = None
    for k in order:
        if start is None or energies[k] - start > tol:
            level_energies.append(energies[k])
            start = energies[k]
        level_of[k] = len(level_energies) - 1
    # report each level by the mean of its members
    means = np.array([energies[level_of == i].mean() for i in range(len(level_energies))])
    return level_of, means


def energy_basis(model, preferred_basis=None, degeneracy_tol: float = DEGENERACY_TOL) -> EnergyBasis:
    """Build the labelled energy eigenbasis of ``model`` (or a bare Hamiltonian).

    With ``preferred_basis`` (columns, or a list of vectors) the given vectors
    are used verbatim after checking that they are orthonormal eigenvectors.
    Otherwise ``H`` is diagonalised.
    """
    h = model.hamiltonian if isinstance(model, LindbladModel) else as_matrix(model)
    d = h.shape[0]
    if preferred_basis is None:
        energies, vectors = np.linalg.eigh(hermitize(h))
    else:
        vectors = np.asarray(preferred_basis, dtype=complex)
        if isinstance(preferred_basis, (list, tuple)):
            vectors = np.column_stack([np.asarray(v, dtype=complex) for v in preferred_basis])
        if vectors.shape != (d, d):
            raise ModelError(f"preferred basis has shape {vectors.shape}, expected {(d, d)}")
        gram = np.max(np.abs(vectors.conj().T @ vectors - np.eye(d)))
        if gram > 1e-10:
            raise ModelError(f"preferred basis is not orthonormal (residual {gram:.3e})")
        energies = np.einsum("ik,ij,jk->k", vectors.conj(), h, vectors).real
        res = np.linalg.norm(h @ vectors - vectors * energies, axis=0).max()
        if res > 1e-9:
            raise ModelError(f"preferred basis vectors are not eigenvectors (residual {res:.3e})")
    level_index, level_energies = _group_levels(energies, degeneracy_tol)
    return EnergyBasis(
        vectors=vectors,
        energies=np.asarray(energies, dtype=float),
        level_index=level_index,
        level_energies=level_energies,
        degeneracy_tol=degeneracy_tol,
    )


def _check_dim(rho, basis: EnergyBasis) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (basis.dim, basis.dim):
        raise ModelError(f"dimension mismatch: basis dim {basis.dim}, operand {rho.shape}")
    return rho


def block_diagonalize(rho, basis: EnergyBasis) -> np.ndarray:
    """``sum_e Pi_e rho Pi_e``."""
    m = basis.to_basis(_check_dim(rho, basis))
    return basis.from_basis(m * basis.block_mask)


def strict_diagonalize(rho, basis: EnergyBasis) -> np.ndarray:
    """``sum_{e,j} Pi_{e,j} rho Pi_{e,j}``: the diagonal in the labelled basis."""
    m = basis.to_basis(_check_dim(rho, basis))
    diag = np.diagonal(m, axis1=-2, axis2=-1)
    out = np.zeros_like(m)
    idx = np.arange(basis.dim)
    out[..., idx, idx] = diag
    return basis.from_basis(out)


def l1_coherence(rho, basis: EnergyBasis):
    m = np.abs(basis.to_basis(_check_dim(rho, basis)))
    total = m.sum(axis=(-2, -1)) - np.trace(m, axis1=-2, axis2=-1)
    return float(total) if np.ndim(total) == 0 else total


def x_operator(model: LindbladModel, bath_filter: Optional[str] = None) -> np.ndarray:
    """``X = sum (hbar omega)^2 gamma L^+ L`` over the selected baths."""
    x = np.zeros((model.dim, model.dim), dtype=complex)
    for _, ch in model.channels(bath_filter):
        x += (model.hbar * ch.omega) ** 2 * ch.rate * ch.ldl
    return x


def c_x(x_op, basis: EnergyBasis) -> float:
    """Largest ``|<e,j|X|e,j'>|`` with ``j != j'`` inside one degenerate level."""
    m = np.abs(basis.to_basis(_check_dim(x_op, basis)))
    mask = basis.block_mask & ~np.eye(basis.dim, dtype=bool)
    return float(m[mask].max()) if mask.any() else 0.0


@dataclass
class CoherenceReport:
    c_l1: float
    x_op: np.ndarray
    c_x: float
    a_cl: float
    a_qm: float

    CSV_HEADER = ("c_l1", "c_x", "a_cl", "a_qm")

    def as_row(self) -> tuple:
        return (self.c_l1, self.c_x, self.a_cl, self.a_qm)


def classical_bound(x_op, rho, basis: EnergyBasis):
    """``A_cl = Tr[X rho_sd]`` (vectorised over stacks of states)."""
    xd = np.diagonal(basis.to_basis(x_op)).real
    rd = np.diagonal(basis.to_basis(_check_dim(rho, basis)), axis1=-2, axis2=-1).real
    out = rd @ xd
    return float(out) if np.ndim(out) == 0 else out


def coherence_report(model: LindbladModel, rho, basis: EnergyBasis) -> CoherenceReport:
    """Collect ``C_l1(rho_bd)``, ``X``, ``C_X``, ``A_cl`` and ``A_qm`` for one state.

    ``A_qm`` always uses the coherence of the block-diagonalised state, even
    when ``rho`` carries coherence between different energies.
    """
    x = x_operator(model)
    cl1 = l1_coherence(block_diagonalize(rho, basis), basis)
    cx = c_x(x, basis)
    return CoherenceReport(
        c_l1=cl1, x_op=x, c_x=cx, a_cl=classical_bound(x, rho, basis), a_qm=cx * cl1,
    )
