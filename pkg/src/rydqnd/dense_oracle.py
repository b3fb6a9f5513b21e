"""Brute-force Lindblad simulator on N three-level atoms, used as ground truth.

States live on the product basis over {g, s, r} restricted to at most one r
excitation; the perfect-blockade Hamiltonian is exactly the projection of the
collective drive onto that subspace, and the dephasing jump operators preserve
it, so nothing is lost by the restriction.  Intended for N <= 6 only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, sqrt

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, IntegratorError, ImpossibleOutcomeError, PreconditionError, ResourceError
from .records import RYDBERG, NO_RYDBERG

G, S, R = 0, 1, 2
MAX_DENSE_ATOMS = 6


@lru_cache(maxsize=None)
def basis_states(N: int) -> tuple[tuple[int, ...], ...]:
    """All product configurations of N atoms with at most one r excitation."""
    if N < 1:
        raise DomainError("need at least one atom")
    if N > MAX_DENSE_ATOMS:
        raise ResourceError(f"dense oracle supports N <= {MAX_DENSE_ATOMS}, got {N}")
    states: list[tuple[int, ...]] = []
    for code in range(3**N):
        cfg = []
        x = code
        for _ in range(N):
            cfg.append(x % 3)
            x //= 3
        if cfg.count(R) <= 1:
            states.append(tuple(cfg))
    return tuple(states)


@lru_cache(maxsize=None)
def _basis_index(N: int) -> dict[tuple[int, ...], int]:
    return {cfg: i for i, cfg in enumerate(basis_states(N))}


@dataclass
class DenseState:
    """Density matrix over the blockaded product basis of N atoms."""

    N: int
    rho: np.ndarray

    def validate(self, tol: float = 1e-10) -> None:
        if np.max(np.abs(self.rho - self.rho.conj().T)) > tol:
            raise PreconditionError("density matrix is not Hermitian")
        if abs(np.trace(self.rho).real - 1.0) > tol:
            raise PreconditionError("density matrix trace differs from 1")
        eigs = np.linalg.eigvalsh(self.rho)
        if eigs.min() < -1e-9:
            raise PreconditionError(f"density matrix not PSD (min eigenvalue {eigs.min():.3e})")

    def copy(self) -> "DenseState":
        return DenseState(self.N, self.rho.copy())


def build_symmetric_ket(n: int, N: int) -> np.ndarray:
    """Unit-norm equal superposition of all placements of n s-excitations."""
    if not 0 <= n <= N:
        raise DomainError(f"need 0 <= n <= N, got n={n}, N={N}")
    states = basis_states(N)
    vec = np.zeros(len(states), dtype=complex)
    amp = 1.0 / sqrt(comb(N, n))
    for i, cfg in enumerate(states):
        if cfg.count(S) == n and cfg.count(R) == 0:
            vec[i] = amp
    return vec


def build_rydberg_ket(n: int, N: int) -> np.ndarray:
    """Collective state with n-1 s-excitations and one shared r excitation."""
    if not 1 <= n <= N:
        raise DomainError(f"need 1 <= n <= N, got n={n}, N={N}")
    states = basis_states(N)
    vec = np.zeros(len(states), dtype=complex)
    amp = 1.0 / sqrt(n * comb(N, n))
    for i, cfg in enumerate(states):
        if cfg.count(S) == n - 1 and cfg.count(R) == 1:
            vec[i] = amp
    return vec


def pure_state(vec: np.ndarray, N: int) -> DenseState:
    return DenseState(N, np.outer(vec, vec.conj()))


@lru_cache(maxsize=None)
def _drive_hamiltonian(N: int) -> np.ndarray:
    """Collective s<->r drive at unit Rabi frequency, blockade-projected."""
    states = basis_states(N)
    index = _basis_index(N)
    h = np.zeros((len(states), len(states)))
    for i, cfg in enumerate(states):
        for site, level in enumerate(cfg):
            if level == S and cfg.count(R) == 0:
                target = cfg[:site] + (R,) + cfg[site + 1:]
                k = index[target]
                h[k, i] += 1.0
                h[i, k] += 1.0
    return h


@lru_cache(maxsize=None)
def _dephasing_weights(N: int) -> np.ndarray:
    """Elementwise dissipator weights W with (d rho)_ab = gamma W_ab rho_ab."""
    states = basis_states(N)
    r_site = np.array([cfg.index(R) if R in cfg else -1 for cfg in states])
    has_r = (r_site >= 0).astype(float)
    same = (r_site[:, None] == r_site[None, :]) & (r_site[:, None] >= 0)
    return same.astype(float) - 0.5 * (has_r[:, None] + has_r[None, :])


def evolve_dense(state: DenseState, t: float, omega: float, gamma: float,
                 atol: float = 1e-12, rtol: float = 1e-10) -> DenseState:
    """Integrate the dephasing master equation for time t."""
    if t < 0:
        raise DomainError("evolution time must be non-negative")
    if t == 0:
        return state.copy()
    N = state.N
    h = omega * _drive_hamiltonian(N)
    w = _dephasing_weights(N)
    dim = h.shape[0]

    def rhs(_t, y):
        rho = y.reshape(dim, dim)
        out = -1j * (h @ rho - rho @ h) + gamma * (w * rho)
        return out.ravel()

    sol = solve_ivp(rhs, (0.0, t), state.rho.ravel().astype(complex),
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegratorError(f"dense integration failed: {sol.message}")
    rho = sol.y[:, -1].reshape(dim, dim)
    trace_err = abs(np.trace(rho).real - np.trace(state.rho).real)
    herm_err = np.max(np.abs(rho - rho.conj().T))
    if trace_err > 1e-8 or herm_err > 1e-8:
        raise IntegratorError(
            "dense integration outside tolerance", residual=max(trace_err, herm_err))
    return DenseState(N, rho)


@lru_cache(maxsize=None)
def _rydberg_mask(N: int) -> np.ndarray:
    return np.array([R in cfg for cfg in basis_states(N)])


def sector_populations_dense(state: DenseState) -> tuple[float, float]:
    """(p_NoRydberg, p_Rydberg) of a dense state."""
    mask = _rydberg_mask(state.N)
    diag = np.real(np.diag(state.rho))
    p_r = float(diag[mask].sum())
    p_s = float(diag[~mask].sum())
    return p_s, p_r


def project_dense(state: DenseState, outcome: str) -> tuple[float, DenseState]:
    """Project onto one measurement sector; returns (probability, state)."""
    mask = _rydberg_mask(state.N)
    keep = mask if outcome == RYDBERG else ~mask
    if outcome not in (RYDBERG, NO_RYDBERG):
        raise DomainError(f"unknown outcome {outcome!r}")
    p = float(np.real(np.diag(state.rho))[keep].sum())
    if p <= 0:
        raise ImpossibleOutcomeError(f"outcome {outcome} has zero probability")
    sel = np.outer(keep, keep)
    rho = np.where(sel, state.rho, 0.0) / p
    return p, DenseState(state.N, rho)


def eject_dense(state: DenseState) -> DenseState:
    """Remove the atom carrying the Rydberg excitation (measure-and-discard).

    Implements sum_i Tr_i[P_i rho P_i] with P_i projecting atom i onto r.
    Requires the input to live entirely in the Rydberg sector.
    """
    N = state.N
    if N < 2:
        raise DomainError("cannot eject from a single-atom array")
    mask = _rydberg_mask(N)
    off_sector = float(np.abs(np.diag(state.rho))[~mask].sum())
    if off_sector > 1e-10:
        raise PreconditionError("state has weight outside the Rydberg sector")
    states = basis_states(N)
    out_index = _basis_index(N - 1)
    dim_out = len(basis_states(N - 1))
    rho_out = np.zeros((dim_out, dim_out), dtype=complex)
    for a, cfg_a in enumerate(states):
        if R not in cfg_a:
            continue
        i = cfg_a.index(R)
        red_a = out_index[cfg_a[:i] + cfg_a[i + 1:]]
        for b, cfg_b in enumerate(states):
            if R not in cfg_b or cfg_b.index(R) != i:
                continue
            red_b = out_index[cfg_b[:i] + cfg_b[i + 1:]]
            rho_out[red_a, red_b] += state.rho[a, b]
    tr = np.trace(rho_out).real
    if tr <= 0:
        raise PreconditionError("ejection produced a zero-trace state")
    return DenseState(N - 1, rho_out / tr)
