"""Fisher-information and detection-time calculators, the expected-MLE
fidelity functional, and greedy/exhaustive drive-schedule optimizers.

Detection time is defined by unit accumulated Fisher information about the
photon number.  Three signal regimes are covered: the noiseless oscillation
frequency, the dephasing-limited oscillation frequency, and the steady-state
sector populations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ResourceError
from .inference import NoiseParams, log_likelihood_noisy
from .records import FockDistribution, MeasurementRecord, NO_RYDBERG, Posterior, RYDBERG

REGIMES = ("noiseless", "noisy-frequency", "steady-state")

MAX_ENUMERATED_CYCLES = 20
MAX_GLOBAL_TUPLES = 2_000_000


def _check_regime(regime: str, gamma: float) -> None:
    if regime not in REGIMES:
        raise DomainError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    if regime != "noiseless" and gamma <= 0:
        raise DomainError(f"regime {regime!r} requires gamma > 0")


def fisher_closed_form(regime: str, n: float, t: float, omega: float, gamma: float = 0.0) -> float:
    """Closed-form Fisher information about n accumulated by time t."""
    _check_regime(regime, gamma)
    if t < 0:
        raise DomainError("time must be non-negative")
    if regime == "noiseless":
        return t**2 * omega**2 / n
    if regime == "noisy-frequency":
        return t * omega**2 / (gamma * n)
    return t * gamma / (n * (1 + n) ** 2)


def detection_time(regime: str, n: float, omega: float, gamma: float = 0.0) -> float:
    """Time t_* at which the accumulated Fisher information reaches 1."""
    _check_regime(regime, gamma)
    if regime == "noiseless":
        return math.sqrt(n) / omega
    if regime == "noisy-frequency":
        return gamma * n / omega**2
    return n * (1 + n) ** 2 / gamma


def fisher_numeric(f_same: Callable[[float, float], float],
                   f_diff: Callable[[float, float], float],
                   n: float, t: float, step: float | None = None) -> float:
    """Two-outcome Fisher information with a central finite difference in n.

    ``f_same``/``f_diff`` are the probabilities of repeating/flipping the
    previous outcome as functions of (t, n); n is treated as continuous.
    """
    h = step if step is not None else 1e-4 * n
    ps, pd = f_same(t, n), f_diff(t, n)
    if not (0.0 <= ps <= 1.0 and 0.0 <= pd <= 1.0):
        raise DomainError("signal probabilities must lie in [0, 1]")
    if abs(ps + pd - 1.0) > 1e-9:
        raise DomainError("signal probabilities must sum to 1")
    total = 0.0
    for f, p in ((f_same, ps), (f_diff, pd)):
        if p == 0.0:
            continue
        hi, lo = f(t, n + h), f(t, n - h)
        if hi <= 0.0 or lo <= 0.0:
            raise DomainError("signal vanishes at the finite-difference stencil")
        dlog = (math.log(hi) - math.log(lo)) / (2 * h)
        total += p * dlog**2
    return total


def steady_state_populations(n: int) -> tuple[float, float]:
    """Long-time (p_NoRydberg, p_Rydberg) of the dephased driven array."""
    if n < 1:
        raise DomainError("steady-state signal requires n >= 1")
    return 1.0 / (n + 1), n / (n + 1)


def default_tau_grid(omega: float, points: int = 800) -> np.ndarray:
    """Uniform grid on (0, 4*pi/Omega]; resolves the toy optima to 4 digits.

    The discrimination optimum for the two-candidate toy sits near 2*pi/Omega,
    outside a single drive period, so the grid spans several periods.
    """
    upper = 4 * math.pi / omega
    return np.linspace(upper / points, upper, points)


def appendix_toy_candidates() -> tuple[list[FockDistribution], Posterior]:
    """Two-candidate discrimination task used as the optimizer testbed."""
    p1 = FockDistribution(np.array([0, 1, 1, 0, 1, 0]) / 3.0)
    p2 = FockDistribution.delta(3, 5)
    return [p1, p2], Posterior.uniform(2)


@dataclass
class ScheduleResult:
    taus: list[float]
    fidelity_trace: list[float]
    strategy: str
    grid: np.ndarray = field(repr=False, default=None)


def _sequence_marginals(taus: Sequence[float], outcomes: Sequence[str],
                        candidates: list[FockDistribution], omega: float,
                        noise: NoiseParams | None) -> np.ndarray:
    record = MeasurementRecord(list(zip(taus, outcomes)))
    ns = sorted({n for c in candidates for n in c.support()})
    if noise is None:
        like = {}
        for n in ns:
            log_l, prev, omega_n = 0.0, NO_RYDBERG, math.sqrt(n) * omega
            for tau, m in record.entries:
                f = math.cos(omega_n * tau) ** 2 if m == prev else math.sin(omega_n * tau) ** 2
                log_l = -math.inf if f <= 0 else log_l + math.log(f)
                prev = m
            like[n] = math.exp(log_l)
    else:
        like = {n: math.exp(log_likelihood_noisy(record, n, omega, noise)) for n in ns}
    return np.array([sum(c.p[n] * like[n] for n in c.support()) for c in candidates])


def expected_fidelity(taus: Sequence[float], candidates: list[FockDistribution],
                      prior: Posterior, omega: float,
                      noise: NoiseParams | None = None) -> float:
    """Expected MLE success probability over all outcome sequences.

    Sums max_alpha Pr(M_T | P_alpha) Pr(P_alpha) over the 2^T records that the
    schedule can produce.
    """
    T = len(taus)
    if T > MAX_ENUMERATED_CYCLES:
        raise ResourceError(f"2^{T} outcome sequences exceed the enumeration guard")
    if len(candidates) == 1:
        return 1.0
    total = 0.0
    for outcomes in itertools.product((NO_RYDBERG, RYDBERG), repeat=T):
        marg = _sequence_marginals(taus, outcomes, candidates, omega, noise)
        total += float(np.max(marg * prior.weights))
    return total


def _noiseless_factor_table(grid: np.ndarray, ns: list[int], omega: float) -> dict:
    """Per-n arrays of repeat/flip probabilities over the tau grid."""
    table = {}
    for n in ns:
        theta = math.sqrt(n) * omega * grid
        s = np.sin(theta) ** 2
        table[n] = {"same": 1.0 - s, "diff": s}
    return table


def _expected_fidelity_grid_noiseless(prefix: Sequence[float], grid: np.ndarray,
                                      candidates: list[FockDistribution],
                                      prior: Posterior, omega: float) -> np.ndarray:
    """F_{T+1}(tau) over the grid for schedules prefix + [tau], noiseless case."""
    ns = sorted({n for c in candidates for n in c.support()})
    table = _noiseless_factor_table(grid, ns, omega)
    T = len(prefix)
    out = np.zeros_like(grid)
    for outcomes in itertools.product((NO_RYDBERG, RYDBERG), repeat=T + 1):
        # prefix factors are scalars, the last factor is a grid array
        like = {}
        for n in ns:
            log_l, prev, omega_n = 0.0, NO_RYDBERG, math.sqrt(n) * omega
            for tau, m in zip(prefix, outcomes[:-1]):
                f = math.cos(omega_n * tau) ** 2 if m == prev else math.sin(omega_n * tau) ** 2
                log_l = -math.inf if f <= 0 else log_l + math.log(f)
                prev = m
            key = "same" if outcomes[-1] == prev else "diff"
            like[n] = math.exp(log_l) * table[n][key]
        marg = np.stack([
            sum(c.p[n] * like[n] for n in c.support()) * w
            for c, w in zip(candidates, prior.weights)])
        out += np.max(marg, axis=0)
    return out


def optimize_schedule_local(T: int, candidates: list[FockDistribution], prior: Posterior,
                            grid: np.ndarray, omega: float,
                            noise: NoiseParams | None = None) -> ScheduleResult:
    """Greedy strategy: pick each tau_i to maximize F_i given tau_1..tau_{i-1}.

    Ties resolve to the smallest grid time.
    """
    if grid.size == 0:
        raise DomainError("tau grid must be non-empty")
    grid = np.sort(np.asarray(grid, dtype=float))
    taus: list[float] = []
    trace: list[float] = []
    for _ in range(T):
        taus.append(float(grid[int(np.argmax(_fidelity_over_grid(taus, grid, candidates, prior, omega, noise)))]))
        trace.append(expected_fidelity(taus, candidates, prior, omega, noise))
    return ScheduleResult(taus, trace, "local", grid)


def greedy_next_tau(prefix: Sequence[float], candidates: list[FockDistribution],
                    prior: Posterior, grid: np.ndarray, omega: float,
                    noise: NoiseParams | None = None) -> float:
    """Single step of the local strategy, for adaptive scheduling."""
    grid = np.sort(np.asarray(grid, dtype=float))
    vals = _fidelity_over_grid(list(prefix), grid, candidates, prior, omega, noise)
    return float(grid[int(np.argmax(vals))])


def _fidelity_over_grid(prefix: list[float], grid: np.ndarray,
                        candidates: list[FockDistribution], prior: Posterior,
                        omega: float, noise: NoiseParams | None) -> np.ndarray:
    if noise is None:
        return _expected_fidelity_grid_noiseless(prefix, grid, candidates, prior, omega)
    return np.array([
        expected_fidelity(prefix + [tau], candidates, prior, omega, noise) for tau in grid])


def optimize_schedule_global(T: int, candidates: list[FockDistribution], prior: Posterior,
                             grid: np.ndarray, omega: float,
                             noise: NoiseParams | None = None) -> ScheduleResult:
    """Exhaustive maximization of F_T over grid^T drive-time tuples."""
    if grid.size == 0:
        raise DomainError("tau grid must be non-empty")
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size**T > MAX_GLOBAL_TUPLES:
        raise ResourceError(
            f"{grid.size}^{T} schedule tuples exceed the exhaustive-search guard")
    if noise is None:
        best_taus, _ = _global_noiseless(T, grid, candidates, prior, omega)
    else:
        best, tied = -1.0, []
        for taus in itertools.product(grid, repeat=T):
            f = expected_fidelity(taus, candidates, prior, omega, noise)
            if f > best + 1e-12:
                best, tied = f, [list(map(float, taus))]
            elif f >= best - 1e-12:
                tied.append(list(map(float, taus)))
        # Among tied tuples (typically permutations), report the ordering
        # whose intermediate fidelities are largest.
        best_taus = max(tied, key=lambda ts: tuple(
            expected_fidelity(ts[: i + 1], candidates, prior, omega, noise)
            for i in range(T - 1)))
    trace = [expected_fidelity(best_taus[: i + 1], candidates, prior, omega, noise)
             for i in range(T)]
    return ScheduleResult(list(best_taus), trace, "global", grid)


def _global_noiseless(T: int, grid: np.ndarray, candidates: list[FockDistribution],
                      prior: Posterior, omega: float) -> tuple[list[float], float]:
    """Vectorized exhaustive search: F_T as an array over the grid^T lattice."""
    ns = sorted({n for c in candidates for n in c.support()})
    table = _noiseless_factor_table(grid, ns, omega)
    shape = (grid.size,) * T
    total = np.zeros(shape)
    for outcomes in itertools.product((NO_RYDBERG, RYDBERG), repeat=T):
        marg = None
        for c, w in zip(candidates, prior.weights):
            like = np.zeros(shape)
            for n in c.support():
                prod = np.ones(())
                prev = NO_RYDBERG
                for m in outcomes:
                    key = "same" if m == prev else "diff"
                    prod = np.multiply.outer(prod, table[n][key])
                    prev = m
                like = like + c.p[n] * prod
            like = like * w
            marg = like if marg is None else np.maximum(marg, like)
        total += marg
    flat = total.ravel()
    best = float(flat.max())
    tied = np.nonzero(flat >= best - 1e-12)[0]
    # Permutations of one tuple often tie in F_T; report the ordering whose
    # intermediate fidelities F_1, ..., F_{T-1} are largest.
    def intermediate(flat_index: int) -> tuple[float, ...]:
        idx = np.unravel_index(int(flat_index), shape)
        taus = [float(grid[i]) for i in idx]
        return tuple(expected_fidelity(taus[: i + 1], candidates, prior, omega)
                     for i in range(T - 1))

    winner = max(tied, key=intermediate) if tied.size > 1 else tied[0]
    idx = np.unravel_index(int(winner), shape)
    return [float(grid[i]) for i in idx], best
