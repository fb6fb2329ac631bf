"""Lindblad models, generator evaluation and fixed-step RK4 evolution.

A model is a Hamiltonian plus a list of baths; every bath carries jump
channels ``(omega, rate, L)`` with ``[L, H] = hbar * omega * L``.  A channel
with ``omega > 0`` therefore removes energy ``hbar * omega`` from the system,
and its partner at ``-omega`` (operator ``L^dagger``) adds it back.

Density matrices are plain complex ``numpy`` arrays of shape ``(d, d)``.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

HERM_TOL = 1e-10
TRACE_TOL = 1e-10
POS_TOL = 1e-10
TRAJECTORY_POS_TOL = 1e-8
TRACE_DRIFT_TOL = 1e-8
EIGENOP_TOL = 1e-9
DETAILED_BALANCE_RTOL = 1e-9
SUPEROP_MAX_DIM = 16


class ModelError(ValueError):
    """Raised for malformed models or incompatible operands."""


class InvalidStateError(ValueError):
    """Raised when a matrix is not a valid density matrix."""


class StabilityError(RuntimeError):
    """Raised when an integrated trajectory leaves the physical state space."""


class ConvergenceError(RuntimeError):
    """Raised when a stationary state is not reached in the allotted time."""


def as_matrix(a, dim: Optional[int] = None) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ModelError(f"expected a square matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ModelError(f"dimension mismatch: expected {dim}, got {m.shape[0]}")
    if not np.all(np.isfinite(m)):
        raise ModelError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.swapaxes(a, -1, -2).conj()


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + dagger(a))


def check_density_matrix(
    rho,
    herm_tol: float = HERM_TOL,
    trace_tol: float = TRACE_TOL,
    pos_tol: float = POS_TOL,
) -> np.ndarray:
    """Validate ``rho`` and return it as a complex array.

    Raises:
        InvalidStateError: if Hermiticity, unit trace or positivity fail
            beyond the given tolerances.
    """
    try:
        m = as_matrix(rho)
    except ModelError as exc:
        raise InvalidStateError(str(exc)) from exc
    herm = np.max(np.abs(m - m.conj().T))
    if herm > herm_tol:
        raise InvalidStateError(f"not Hermitian (residual {herm:.3e})")
    tr = np.trace(m).real
    if abs(tr - 1.0) > trace_tol:
        raise InvalidStateError(f"trace {tr!r} differs from 1")
    lam = np.linalg.eigvalsh(hermitize(m)).min()
    if lam < -pos_tol:
        raise InvalidStateError(f"negative eigenvalue {lam:.3e}")
    return m


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.linalg.eigvalsh(hermitize(a - b))).sum())


def gibbs_state(hamiltonian: np.ndarray, beta: float) -> np.ndarray:
    """Thermal state ``exp(-beta H) / Z`` (``H`` in energy units)."""
    e, v = np.linalg.eigh(hermitize(as_matrix(hamiltonian)))
    w = np.exp(-beta * (e - e.min()))
    w /= w.sum()
    return (v * w) @ v.conj().T


@dataclass(frozen=True, eq=False)
class JumpChannel:
    """One jump operator ``L`` at Bohr frequency ``omega`` with rate ``gamma``.

    ``ldl`` caches ``L^dagger L``, which the dissipator, the heat current
    and the X operator all reuse.
    """

    omega: float
    rate: float
    op: np.ndarray
    ldl: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        op = as_matrix(self.op)
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "rate", float(self.rate))
        object.__setattr__(self, "ldl", op.conj().T @ op)


@dataclass(frozen=True, eq=False)
class BathSpec:
    label: str
    beta: float
    channels: tuple
    mu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))


@dataclass(frozen=True, eq=False)
class LindbladModel:
    hamiltonian: np.ndarray
    baths: tuple
    hbar: float = 1.0

    def __post_init__(self):
        h = as_matrix(self.hamiltonian)
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "baths", tuple(self.baths))
        if self.hbar <= 0:
            raise ModelError("hbar must be positive")
        labels = [b.label for b in self.baths]
        if len(set(labels)) != len(labels):
            raise ModelError(f"duplicate bath labels {labels}")
        for bath in self.baths:
            for ch in bath.channels:
                if ch.op.shape != h.shape:
                    raise ModelError(
                        f"bath {bath.label}: jump operator shape {ch.op.shape} "
                        f"does not match Hamiltonian {h.shape}"
                    )

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def bath(self, label: str) -> BathSpec:
        for b in self.baths:
            if b.label == label:
                return b
        raise ModelError(f"unknown bath label {label!r}")

    def select(self, bath_filter: Optional[str] = None) -> tuple:
        if bath_filter is None:
            return self.baths
        return (self.bath(bath_filter),)

    def channels(self, bath_filter: Optional[str] = None) -> Iterator[tuple]:
        for b in self.select(bath_filter):
            for ch in b.channels:
                yield b, ch


def _check_operand(model: LindbladModel, rho) -> np.ndarray:
    m = np.asarray(rho, dtype=complex)
    if m.shape[-2:] != (model.dim, model.dim):
        raise ModelError(
            f"dimension mismatch: model has dim {model.dim}, state has shape {m.shape}"
        )
    return m


def apply_dissipator(model: LindbladModel, rho, bath_filter: Optional[str] = None) -> np.ndarray:
    """Sum of ``gamma (L rho L^+ - {L^+ L, rho}/2)`` over the selected bath(s)."""
    rho = _check_operand(model, rho)
    out = np.zeros_like(rho)
    for _, ch in model.channels(bath_filter):
        if ch.rate == 0.0:
            continue
        anti = ch.ldl @ rho
        out += ch.rate * (ch.op @ rho @ dagger(ch.op) - 0.5 * (anti + rho @ ch.ldl))
    return out


def apply_generator(model: LindbladModel, rho) -> np.ndarray:
    rho = _check_operand(model, rho)
    h = model.hamiltonian
    return (-1j / model.hbar) * (h @ rho - rho @ h) + apply_dissipator(model, rho)


def liouvillian(model: LindbladModel, bath_filter: Optional[str] = None,
                unitary: bool = True) -> np.ndarray:
    """Generator as a ``d^2 x d^2`` matrix acting on row-major ``rho.ravel()``."""
    d = model.dim
    eye = np.eye(d)
    sup = np.zeros((d * d, d * d), dtype=complex)
    if unitary:
        h = model.hamiltonian
        sup += (-1j / model.hbar) * (np.kron(h, eye) - np.kron(eye, h.T))
    for _, ch in model.channels(bath_filter):
        if ch.rate == 0.0:
            continue
        sup += ch.rate * (
            np.kron(ch.op, ch.op.conj())
            - 0.5 * np.kron(ch.ldl, eye)
            - 0.5 * np.kron(eye, ch.ldl.T)
        )
    return sup


def stability_bound(model: LindbladModel) -> float:
    """Heuristic largest stable step: ``0.1 / max(gamma * ||L||^2)``."""
    worst = 0.0
    for _, ch in model.channels():
        worst = max(worst, ch.rate * np.linalg.norm(ch.op, 2) ** 2)
    h_scale = np.abs(np.linalg.eigvalsh(hermitize(model.hamiltonian))).max() / model.hbar
    worst = max(worst, h_scale)
    return math.inf if worst == 0.0 else 0.1 / worst


# --------------------------------------------------------------------------
# Fixed-step RK4
# --------------------------------------------------------------------------

def _rk4_polynomial(gen: np.ndarray, h: float) -> np.ndarray:
    """``I + hG + (hG)^2/2 + (hG)^3/6 + (hG)^4/24``: one RK4 step of a linear ODE."""
    a = h * gen
    eye = np.eye(gen.shape[0], dtype=complex)
    a2 = a @ a
    return eye + a + a2 / 2 + (a2 @ a) / 6 + (a2 @ a2) / 24


class RK4Propagator:
    """Fixed-step classical RK4 for a time-independent Lindblad generator.

    Two numerically equivalent backends are used.  For small dimensions the
    step is the RK4 polynomial of the Liouvillian superoperator, so a step
    is one matrix-vector product.  For larger systems the four stages are
    evaluated in matrix form, with each jump operator stored as a low-rank
    factor ``L = A B^dagger`` in the energy eigenbasis.

    ``post`` is an optional linear map applied after every step (used for
    the dephased reference engine).
    """

    def __init__(
        self,
        model: LindbladModel,
        dt: float,
        post: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        backend: str = "auto",
    ):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.model = model
        self.dt = float(dt)
        self.post = post
        d = model.dim
        if backend == "auto":
            backend = "superop" if d <= SUPEROP_MAX_DIM else "factored"
        if backend not in ("superop", "factored"):
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        if backend == "superop":
            self._gen = liouvillian(model)
            self._post_matrix = self._linear_map_matrix(post) if post is not None else None
            self._step_matrix = self._superop_step(self.dt)
        else:
            self._setup_factored()

    # -- superoperator backend ------------------------------------------------

    def _linear_map_matrix(self, fn) -> np.ndarray:
        d = self.model.dim
        cols = []
        for k in range(d * d):
            e = np.zeros(d * d, dtype=complex)
            e[k] = 1.0
            cols.append(np.asarray(fn(e.reshape(d, d)), dtype=complex).ravel())
        return np.array(cols).T

    def _superop_step(self, h: float) -> np.ndarray:
        p = _rk4_polynomial(self._gen, h)
        if self._post_matrix is not None:
            p = self._post_matrix @ p
        return p

    def transfer_matrix(self, n_steps: int) -> np.ndarray:
        """Superoperator of ``n_steps`` consecutive steps (superop backend only)."""
        if self.backend != "superop":
            raise RuntimeError("transfer_matrix needs the superop backend")
        return np.linalg.matrix_power(self._step_matrix, n_steps)

    # -- factored backend -----------------------------------------------------

    def _setup_factored(self):
        model = self.model
        h = hermitize(model.hamiltonian)
        off = h - np.diag(np.diag(h))
        if np.max(np.abs(off), initial=0.0) <= 1e-14 * max(1.0, np.abs(h).max()):
            self._u = None
            energies = np.diag(h).real
        else:
            energies, self._u = np.linalg.eigh(h)
        self._phase = (-1j / model.hbar) * (energies[:, None] - energies[None, :])
        factors = []
        for _, ch in model.channels():
            if ch.rate == 0.0:
                continue
            op = ch.op if self._u is None else self._u.conj().T @ ch.op @ self._u
            uu, s, vh = np.linalg.svd(op)
            keep = s > 1e-13 * max(1.0, s[0])
            a = uu[:, keep] * s[keep]
            b = vh[keep].conj().T
            factors.append((ch.rate, a, b, s[keep] ** 2))
        self._factors = factors

    def _to_work(self, rho):
        return rho if self._u is None else self._u.conj().T @ rho @ self._u

    def _from_work(self, rho):
        return rho if self._u is None else self._u @ rho @ self._u.conj().T

    def _derivative(self, rho: np.ndarray) -> np.ndarray:
        out = self._phase * rho
        for rate, a, b, s2 in self._factors:
            brho = b.conj().T @ rho
            jump = a @ (brho @ b) @ a.conj().T
            anti = b @ (s2[:, None] * brho)
            out += rate * (jump - 0.5 * (anti + anti.conj().T))
        return out

    def _rk4_work(self, rho: np.ndarray, h: float) -> np.ndarray:
        f = self._derivative
        k1 = f(rho)
        k2 = f(rho + 0.5 * h * k1)
        k3 = f(rho + 0.5 * h * k2)
        k4 = f(rho + h * k3)
        return rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    # -- public stepping ------------------------------------------------------

    def step_by(self, rho: np.ndarray, h: float) -> np.ndarray:
        """One RK4 step of arbitrary size ``h`` (negative allowed)."""
        rho = np.asarray(rho, dtype=complex)
        if self.backend == "superop":
            d = self.model.dim
            return (self._superop_step(h) @ rho.ravel()).reshape(d, d)
        out = self._from_work(self._rk4_work(self._to_work(rho), h))
        return self.post(out) if self.post is not None else out

    def step(self, rho: np.ndarray) -> np.ndarray:
        return self.advance(rho, 1)

    def advance(self, rho: np.ndarray, n_steps: int) -> np.ndarray:
        return self.run(rho, n_steps, record_every=n_steps if n_steps > 0 else 1)[-1]

    def run(self, rho: np.ndarray, n_steps: int, record_every: int = 1) -> np.ndarray:
        """Integrate ``n_steps`` steps; return states every ``record_every`` steps.

        The initial state is always the first entry and the final state the
        last one.
        """
        rho = np.asarray(rho, dtype=complex)
        d = self.model.dim
        out = [rho]
        if self.backend == "superop":
            p = self._step_matrix
            v = rho.ravel()
            for k in range(1, n_steps + 1):
                v = p @ v
                if k % record_every == 0 or k == n_steps:
                    out.append(v.reshape(d, d))
            return np.array(out)
        work = self._to_work(rho)
        for k in range(1, n_steps + 1):
            work = self._rk4_work(work, self.dt)
            if self.post is not None:
                work = self._to_work(self.post(self._from_work(work)))
            else:
                work = hermitize(work)
            if k % record_every == 0 or k == n_steps:
                out.append(self._from_work(work))
        return np.array(out)


# --------------------------------------------------------------------------
# Trajectories
# --------------------------------------------------------------------------

@dataclass
class EvolutionConfig:
    dt: float
    max_time: float
    method: str = "rk4"
    stationarity_tol: float = 1e-10
    record_every: int = 1

    def __post_init__(self):
        if self.method != "rk4":
            raise ValueError(f"unsupported method {self.method!r}; only 'rk4'")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.max_time < 0:
            raise ValueError("max_time must be non-negative")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.states))

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _warn_step(model: LindbladModel, dt: float):
    bound = stability_bound(model)
    if dt >= bound:
        warnings.warn(
            f"dt={dt:g} exceeds the heuristic stability bound {bound:.3g}",
            RuntimeWarning,
            stacklevel=3,
        )


def audit_states(states: np.ndarray, trace0: float = 1.0) -> tuple:
    """Return ``(max trace drift, min eigenvalue, max anti-Hermitian part)``."""
    tr = np.trace(states, axis1=-2, axis2=-1).real
    drift = float(np.max(np.abs(tr - trace0)))
    herm = float(np.max(np.abs(states - dagger(states))))
    lam = float(np.linalg.eigvalsh(hermitize(states)).min())
    return drift, lam, herm


def _audit(states: np.ndarray, trace0: float):
    drift, lam, herm = audit_states(states, trace0)
    if drift > TRACE_DRIFT_TOL:
        raise StabilityError(f"trace drift {drift:.3e} exceeds {TRACE_DRIFT_TOL:g}")
    if lam < -TRAJECTORY_POS_TOL:
        raise StabilityError(f"negative eigenvalue {lam:.3e} along trajectory")
    if herm > HERM_TOL:
        raise StabilityError(f"Hermiticity lost (residual {herm:.3e})")


def evolve(
    model: LindbladModel,
    rho0,
    config: EvolutionConfig,
    post: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> Trajectory:
    """Integrate the master equation with fixed-step RK4 up to ``config.max_time``.

    Every emitted state is re-validated; a trace drift above 1e-8, a negative
    eigenvalue below -1e-8 or a Hermiticity defect aborts with
    :class:`StabilityError`.
    """
    rho0 = check_density_matrix(_check_operand(model, rho0))
    _warn_step(model, config.dt)
    n = int(round(config.max_time / config.dt))
    prop = RK4Propagator(model, config.dt, post=post)
    states = prop.run(rho0, n, record_every=config.record_every)
    steps = np.arange(0, n + 1, config.record_every)
    if steps[-1] != n:
        steps = np.append(steps, n)
    _audit(states, np.trace(rho0).real)
    return Trajectory(times=steps * config.dt, states=hermitize(states))


@dataclass
class SteadyState:
    rho: np.ndarray
    elapsed: float
    residual: float


def generator_residual(model: LindbladModel, rho) -> float:
    return float(np.max(np.abs(apply_generator(model, rho))))


def steady_state(model: LindbladModel, rho0, config: EvolutionConfig,
                 check_every: int = 10) -> SteadyState:
    """Evolve until ``max|generator(rho)| < config.stationarity_tol``.

    Raises:
        ConvergenceError: if ``config.max_time`` elapses first.
    """
    rho = check_density_matrix(_check_operand(model, rho0))
    _warn_step(model, config.dt)
    res = generator_residual(model, rho)
    t = 0.0
    if res < config.stationarity_tol:
        return SteadyState(rho=rho, elapsed=0.0, residual=res)
    prop = RK4Propagator(model, config.dt)
    chunk = max(1, check_every)
    while t < config.max_time:
        rho = hermitize(prop.advance(rho, chunk))
        t += chunk * config.dt
        res = generator_residual(model, rho)
        if res < config.stationarity_tol:
            _audit(rho[None], 1.0)
            return SteadyState(rho=rho, elapsed=t, residual=res)
    raise ConvergenceError(
        f"no stationary state within t={config.max_time:g} (residual {res:.3e})"
    )


# --------------------------------------------------------------------------
# Model validation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def __iter__(self):
        return iter(self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def find_partner(bath: BathSpec, index: int) -> tuple:
    """Index of the channel pairing with ``bath.channels[index]`` and its residual."""
    ch = bath.channels[index]
    best, best_res = None, math.inf
    target = ch.op.conj().T
    for k, other in enumerate(bath.channels):
        if abs(other.omega + ch.omega) > 1e-12 * max(1.0, abs(ch.omega)):
            continue
        res = float(np.max(np.abs(other.op - target)))
        if res < best_res:
            best, best_res = k, res
    return best, best_res


def validate_model(model: LindbladModel) -> ValidationReport:
    """Check Hermiticity of H and the per-channel structural conditions.

    Every failed condition is reported with its residual; nothing raises.
    """
    h = model.hamiltonian
    checks = []
    herm = float(np.max(np.abs(h - h.conj().T)))
    checks.append(Check("hamiltonian_hermitian", herm <= HERM_TOL, herm))
    for bath in model.baths:
        for i, ch in enumerate(bath.channels):
            tag = f"{bath.label}:{i}"
            comm = ch.op @ h - h @ ch.op
            res = float(np.max(np.abs(comm - model.hbar * ch.omega * ch.op)))
            checks.append(Check(f"eigenoperator[{tag}]", res <= EIGENOP_TOL, res))
            checks.append(Check(f"rate_nonnegative[{tag}]", ch.rate >= 0.0, max(0.0, -ch.rate)))
            k, pres = find_partner(bath, i)
            checks.append(Check(
                f"adjoint_pairing[{tag}]", k is not None and pres <= EIGENOP_TOL, pres,
                "" if k is not None else "no channel at -omega",
            ))
            if ch.omega > 0 and k is not None:
                partner = bath.channels[k]
                expected = math.exp(bath.beta * (model.hbar * ch.omega - bath.mu))
                if partner.rate > 0:
                    db = abs(ch.rate / partner.rate / expected - 1.0)
                else:
                    db = 0.0 if ch.rate == 0 else math.inf
                checks.append(Check(f"detailed_balance[{tag}]", db <= DETAILED_BALANCE_RTOL, db))
    return ValidationReport(checks)
