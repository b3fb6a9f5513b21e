"""Protocol-level state evolution: pure noiseless dynamics over photon-number
superpositions, and noisy fixed-n dynamics in the symmetric block basis.

Pure states carry amplitudes a_n on the stored collective states and b_n on
the single-Rydberg collective states; noiseless observation cycles are exact
rotations within each n.  Noisy fixed-n states are lists of block coefficient
vectors, one per conserved j sector; sector probabilities live in the j = 0
block while retrieval fidelity needs all of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, cos, pi, sin, sqrt

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, ImpossibleOutcomeError, IntegratorError, PreconditionError
from .records import NO_RYDBERG, RYDBERG
from .symbasis import BasisLabel, build_block, enumerate_basis, normalization, trace_vector

# Labels with the Rydberg excitation on both the ket and bra side; a
# NoRydberg projection keeps only ss, everything else is a cross coherence.
_RYDBERG_KINDS = frozenset({"rr", "rs_gr", "sr_rg", "rs_sr", "rg_gr"})
_NO_RYDBERG_KINDS = frozenset({"ss"})


@dataclass
class PureCollectiveState:
    """Amplitudes a_n on |S_n> and b_n on |R_n>, n = 0..n_max (b_0 fixed to 0)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=complex)
        self.b = np.asarray(self.b, dtype=complex)
        if self.a.shape != self.b.shape or self.a.ndim != 1:
            raise DomainError("amplitude arrays must be 1-d and of equal length")
        if abs(self.b[0]) > 0:
            raise DomainError("there is no Rydberg state without excitations (b_0 must be 0)")
        if abs(self.norm() - 1.0) > 1e-12:
            raise DomainError(f"state norm is {self.norm()}, expected 1")

    @staticmethod
    def from_stored_amplitudes(c: np.ndarray) -> "PureCollectiveState":
        """State right after photon storage: all amplitude on the |S_n> sectors."""
        c = np.asarray(c, dtype=complex)
        return PureCollectiveState(c, np.zeros_like(c))

    @property
    def n_max(self) -> int:
        return self.a.size - 1

    def norm(self) -> float:
        return sqrt(float(np.sum(np.abs(self.a) ** 2) + np.sum(np.abs(self.b) ** 2)))

    def populations(self) -> np.ndarray:
        return np.abs(self.a) ** 2 + np.abs(self.b) ** 2

    def single_n(self) -> int:
        """The unique occupied photon number, or an error if unresolved."""
        pops = self.populations()
        occupied = np.nonzero(pops > 1e-12)[0]
        if occupied.size != 1:
            raise PreconditionError(
                "photon number is not resolved; continue observing before retrieval")
        return int(occupied[0])


def evolve_pure(state: PureCollectiveState, tau: float, omega: float) -> PureCollectiveState:
    """Drive for time tau: within each n, rotate (a_n, b_n) at sqrt(n)*Omega."""
    if tau < 0:
        raise DomainError("drive time must be non-negative")
    ns = np.arange(state.a.size)
    theta = np.sqrt(ns) * omega * tau
    c, s = np.cos(theta), np.sin(theta)
    a = state.a * c - 1j * state.b * s
    b = state.b * c - 1j * state.a * s
    b[0] = 0.0
    return PureCollectiveState(a, b)


def measure_pure(state: PureCollectiveState, draw: float) -> tuple[str, PureCollectiveState, float]:
    """Projective Rydberg-presence measurement sampled by a uniform [0,1) draw.

    The collapsed state keeps the measured sector's amplitudes, renormalized
    to unit norm.
    """
    p_r = float(np.sum(np.abs(state.b) ** 2))
    p_s = float(np.sum(np.abs(state.a) ** 2))
    if draw < p_r:
        outcome, p = RYDBERG, p_r
        a, b = np.zeros_like(state.a), state.b / sqrt(p_r)
    else:
        outcome, p = NO_RYDBERG, p_s
        a, b = state.a / sqrt(p_s), np.zeros_like(state.b)
    return outcome, PureCollectiveState(a, b), p


@dataclass
class SymmetricBlockState:
    """Coefficient vector over the symmetric superket basis of one (n, N, j) block."""

    n: int
    N: int
    j: int
    x: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=complex)
        expected = len(enumerate_basis(self.n, self.N, self.j))
        if self.x.shape != (expected,):
            raise DomainError(
                f"coefficient vector has length {self.x.size}, block needs {expected}")

    @property
    def labels(self) -> list[BasisLabel]:
        return enumerate_basis(self.n, self.N, self.j)

    def coefficient(self, kind: str) -> complex:
        for i, lab in enumerate(self.labels):
            if lab.kind == kind:
                return complex(self.x[i])
        return 0.0

    def trace(self) -> float:
        blk = build_block(self.n, self.N, self.j, 0.0, 0.0)
        return float(np.real(trace_vector(blk) @ self.x))


BlockList = list[SymmetricBlockState]


def _as_blocks(state) -> BlockList:
    if isinstance(state, SymmetricBlockState):
        return [state]
    return list(state)


def _j0(blocks: BlockList) -> SymmetricBlockState:
    for blk in blocks:
        if blk.j == 0:
            return blk
    raise PreconditionError("measurement probabilities live in the j=0 block, which is missing")


@lru_cache(maxsize=4096)
def _label_coefficient_map(part: str, n: int, N: int) -> tuple[tuple[int, str, float], ...]:
    """Superket decomposition of one pure collective dyad over all j blocks.

    ``part`` picks the dyad: SS = |S_n><S_n|, RR = |R_n><R_n|, SR = |S_n><R_n|,
    RS = |R_n><S_n|.  Every (ket assignment, bra assignment) pair contributes
    exactly one symmetrized-basis term, so each coefficient is
    norm * count / (number of assignment pairs) = sqrt(count) / pairs.
    """
    c_s = comb(N, n)
    if part == "SS":
        kinds, pairs = ("ss",), c_s
    elif part == "RR":
        kinds, pairs = ("rr", "rs_sr", "rg_gr", "rs_gr", "sr_rg"), n * c_s
    elif part == "SR":
        kinds, pairs = ("sr", "gr"), c_s * sqrt(n)
    elif part == "RS":
        kinds, pairs = ("rs", "rg"), c_s * sqrt(n)
    else:
        raise DomainError(f"unknown dyad part {part!r}")
    out = []
    for j in range(0, min(n, N - n) + 1):
        for lab in enumerate_basis(n, N, j):
            if lab.kind in kinds:
                out.append((j, lab.kind, sqrt(lab.assignment_count()) / pairs))
    return tuple(out)


def symmetric_state_blocks(n: int, N: int) -> BlockList:
    """Block decomposition of the freshly stored state |S_n><S_n|."""
    if not 0 <= n <= N:
        raise DomainError(f"need 0 <= n <= N, got n={n}, N={N}")
    coeffs = dict()
    for j, kind, c in _label_coefficient_map("SS", n, N):
        coeffs[(j, kind)] = c
    blocks = []
    for j in range(0, min(n, N - n) + 1):
        labels = enumerate_basis(n, N, j)
        x = np.array([coeffs.get((j, lab.kind), 0.0) for lab in labels], dtype=complex)
        blocks.append(SymmetricBlockState(n, N, j, x))
    return blocks


@lru_cache(maxsize=8192)
def _propagator(n: int, N: int, j: int, omega: float, gamma: float, tau: float) -> np.ndarray:
    blk = build_block(n, N, j, omega, gamma)
    return expm(blk.generator() * tau)


def evolve_block(state: SymmetricBlockState, tau: float, omega: float, gamma: float,
                 drive_on: bool = True) -> SymmetricBlockState:
    """Propagate one block for time tau (drive optionally off, dephasing always on)."""
    if tau < 0:
        raise DomainError("evolution time must be non-negative")
    prop = _propagator(state.n, state.N, state.j, omega if drive_on else 0.0, gamma, tau)
    out = SymmetricBlockState(state.n, state.N, state.j, prop @ state.x)
    drift = abs(out.trace() - state.trace())
    if drift > 1e-9:
        raise IntegratorError("block propagation lost trace", residual=drift)
    return out


def evolve_blocks(blocks, tau: float, omega: float, gamma: float,
                  drive_on: bool = True) -> BlockList:
    return [evolve_block(b, tau, omega, gamma, drive_on) for b in _as_blocks(blocks)]


def sector_probabilities(blocks) -> tuple[float, float]:
    """(p_NoRydberg, p_Rydberg) read from the j=0 populations."""
    b0 = _j0(_as_blocks(blocks))
    blk = build_block(b0.n, b0.N, 0, 0.0, 0.0)
    v = trace_vector(blk)
    p_s = p_r = 0.0
    for i, lab in enumerate(blk.labels):
        w = float(np.real(v[i] * b0.x[i]))
        if lab.kind == "ss":
            p_s += w
        elif lab.kind == "rr":
            p_r += w
    p_s, p_r = max(p_s, 0.0), max(p_r, 0.0)
    return p_s, p_r


def project_blocks(blocks, outcome: str) -> tuple[float, BlockList]:
    """Zero the complementary sector and all cross coherences; renormalize.

    Returns the pre-projection probability of the outcome and the conditional
    state (all j blocks rescaled by the same 1/p).
    """
    blocks = _as_blocks(blocks)
    p_s, p_r = sector_probabilities(blocks)
    p = p_r if outcome == RYDBERG else p_s
    if p <= 0:
        raise ImpossibleOutcomeError(f"outcome {outcome} has zero probability")
    keep = _RYDBERG_KINDS if outcome == RYDBERG else _NO_RYDBERG_KINDS
    out = []
    for blk in blocks:
        x = np.array([
            xi / p if lab.kind in keep else 0.0
            for xi, lab in zip(blk.x, blk.labels)
        ], dtype=complex)
        out.append(SymmetricBlockState(blk.n, blk.N, blk.j, x))
    return p, out


def measure_block(blocks, tau_eit: float, gamma: float, draw: float
                  ) -> tuple[str, BlockList, float]:
    """Drive-off dephasing window of length tau_eit, then projective measurement."""
    if tau_eit < 0:
        raise DomainError("measurement window must be non-negative")
    blocks = _as_blocks(blocks)
    if tau_eit > 0:
        blocks = evolve_blocks(blocks, tau_eit, 0.0, gamma, drive_on=False)
    p_s, p_r = sector_probabilities(blocks)
    total = p_s + p_r
    outcome = RYDBERG if draw * total < p_r else NO_RYDBERG
    p, collapsed = project_blocks(blocks, outcome)
    return outcome, collapsed, p


def eject_block(blocks) -> BlockList:
    """Remove the detected Rydberg atom: (n, N) Rydberg sector -> (n-1, N-1).

    Each rr coefficient maps onto the ss label of the corresponding j block
    with a sqrt(N) normalization-ratio factor (fixed by the dense partial
    trace); all within-Rydberg coherence labels are annihilated.
    """
    blocks = _as_blocks(blocks)
    n, N = blocks[0].n, blocks[0].N
    if n < 1 or N < 2:
        raise PreconditionError("nothing to eject")
    b0 = _j0(blocks)
    if abs(b0.coefficient("ss")) > 1e-9:
        raise PreconditionError("state has weight in the NoRydberg sector; eject only after a Rydberg outcome")
    new_jmax = min(n - 1, N - n)
    out = []
    for j in range(0, new_jmax + 1):
        labels = enumerate_basis(n - 1, N - 1, j)
        x = np.zeros(len(labels), dtype=complex)
        src = next((b for b in blocks if b.j == j), None)
        if src is not None:
            rr = src.coefficient("rr")
            for i, lab in enumerate(labels):
                if lab.kind == "ss":
                    x[i] = rr * sqrt(N)
        out.append(SymmetricBlockState(n - 1, N - 1, j, x))
    tr = sum(b.trace() for b in out)
    if tr <= 0:
        raise PreconditionError("ejection produced a zero-trace state")
    for b in out:
        b.x = b.x / tr
    return out


def retrieval_fidelity(blocks, ideal: PureCollectiveState) -> float:
    """Overlap <psi_ideal| rho |psi_ideal> of the block state with a fixed-n pure state."""
    blocks = _as_blocks(blocks)
    n, N = blocks[0].n, blocks[0].N
    n_ideal = ideal.single_n()
    if n_ideal != n:
        raise DomainError(f"ideal state has n={n_ideal}, block state has n={n}")
    a, b = complex(ideal.a[n]), complex(ideal.b[n])
    weights = {
        "SS": abs(a) ** 2,
        "RR": abs(b) ** 2,
        "SR": a * b.conjugate(),
        "RS": b * a.conjugate(),
    }
    coeffs: dict[tuple[int, str], complex] = {}
    for part, w in weights.items():
        if w == 0:
            continue
        for j, kind, c in _label_coefficient_map(part, n, N):
            coeffs[(j, kind)] = coeffs.get((j, kind), 0.0) + w * c
    fid = 0.0 + 0.0j
    for blk in blocks:
        for xi, lab in zip(blk.x, blk.labels):
            c = coeffs.get((blk.j, lab.kind))
            if c is not None:
                fid += c.conjugate() * xi
    if abs(fid.imag) > 1e-8:
        raise IntegratorError("fidelity came out complex", residual=abs(fid.imag))
    return float(min(max(fid.real, 0.0), 1.0))


def realign_for_retrieval(state, omega: float, gamma: float = 0.0):
    """Drive for pi/(2*sqrt(n)*Omega) to rotate a Rydberg-sector state onto |S_n>."""
    if isinstance(state, PureCollectiveState):
        n = state.single_n()
        if n == 0:
            raise PreconditionError("vacuum needs no re-alignment")
        if abs(state.b[n]) ** 2 < 0.5:
            raise PreconditionError("state is not in the Rydberg sector")
        return evolve_pure(state, pi / (2 * sqrt(n) * omega), omega)
    blocks = _as_blocks(state)
    n = blocks[0].n
    if n == 0:
        raise PreconditionError("vacuum needs no re-alignment")
    return evolve_blocks(blocks, pi / (2 * sqrt(n) * omega), omega, gamma, drive_on=True)
