"""Fisher information, detection times, and schedule optimization."""

import math

import numpy as np
import pytest

from rydqnd import analysis as an
from rydqnd.errors import DomainError, ResourceError
from rydqnd.records import FockDistribution, Posterior

OMEGA = 2 * math.pi * 2.5e6
GAMMA = 2 * math.pi * 0.3e6


# ---------------------------------------------------------------------------
# closed forms

def test_detection_time_closed_forms():
    for n in range(1, 11):
        assert an.detection_time("noiseless", n, OMEGA) == pytest.approx(
            math.sqrt(n) / OMEGA, rel=1e-15)
        assert an.detection_time("noisy-frequency", n, OMEGA, GAMMA) == pytest.approx(
            GAMMA * n / OMEGA ** 2, rel=1e-15)
        assert an.detection_time("steady-state", n, OMEGA, GAMMA) == pytest.approx(
            n * (1 + n) ** 2 / GAMMA, rel=1e-15)


def test_fisher_closed_forms_reach_one_at_detection_time():
    for regime in an.REGIMES:
        for n in (1, 3, 7):
            t_star = an.detection_time(regime, n, OMEGA, GAMMA)
            assert an.fisher_closed_form(regime, n, t_star, OMEGA, GAMMA) == (
                pytest.approx(1.0, rel=1e-12))


def test_fisher_closed_forms_scale_linearly_or_quadratically_in_time():
    n = 4
    t = 1e-7
    # noiseless information grows quadratically, dissipative regimes linearly
    assert an.fisher_closed_form("noiseless", n, 2 * t, OMEGA) == pytest.approx(
        4 * an.fisher_closed_form("noiseless", n, t, OMEGA), rel=1e-12)
    for regime in ("noisy-frequency", "steady-state"):
        assert an.fisher_closed_form(regime, n, 2 * t, OMEGA, GAMMA) == pytest.approx(
            2 * an.fisher_closed_form(regime, n, t, OMEGA, GAMMA), rel=1e-12)


def test_unknown_regime_rejected():
    with pytest.raises(DomainError):
        an.detection_time("other", 1, OMEGA)
    with pytest.raises(DomainError):
        an.fisher_closed_form("noisy-frequency", 1, 1e-7, OMEGA, 0.0)


@pytest.mark.parametrize("n", range(1, 11))
def test_numeric_fisher_matches_noiseless_closed_form(n):
    t = 0.5 * math.sqrt(n) / OMEGA
    numeric = an.fisher_numeric(
        lambda tt, nn: math.cos(math.sqrt(nn) * OMEGA * tt) ** 2,
        lambda tt, nn: math.sin(math.sqrt(nn) * OMEGA * tt) ** 2,
        n, t)
    closed = an.fisher_closed_form("noiseless", n, t, OMEGA)
    assert numeric == pytest.approx(closed, rel=1e-2)


def test_steady_state_populations():
    for n in (1, 2, 5, 9):
        p_s, p_r = an.steady_state_populations(n)
        assert p_s == pytest.approx(1.0 / (n + 1), rel=1e-15)
        assert p_r == pytest.approx(n / (n + 1), rel=1e-15)
        assert p_s + p_r == pytest.approx(1.0, rel=1e-15)


# ---------------------------------------------------------------------------
# expected identification fidelity and schedule optimization

def _two_candidates():
    c1 = FockDistribution(np.array([0.0, 0.5, 0.5]))
    c2 = FockDistribution.delta(2, 2)
    return [c1, c2], Posterior.uniform(2)


def test_expected_fidelity_bounds_and_growth():
    cands, prior = _two_candidates()
    omega = 1.0
    f1 = an.expected_fidelity([0.7], cands, prior, omega)
    f2 = an.expected_fidelity([0.7, 0.9], cands, prior, omega)
    assert 0.5 <= f1 <= 1.0
    assert f2 >= f1 - 1e-12


def test_expected_fidelity_empty_schedule_is_prior_best_guess():
    cands, prior = _two_candidates()
    assert an.expected_fidelity([], cands, prior, 1.0) == pytest.approx(0.5)


def test_local_optimizer_is_greedy_prefix_of_itself():
    cands, prior = _two_candidates()
    grid = an.default_tau_grid(1.0, 60)
    r1 = an.optimize_schedule_local(1, cands, prior, grid, 1.0)
    r2 = an.optimize_schedule_local(2, cands, prior, grid, 1.0)
    assert r2.taus[0] == r1.taus[0]
    assert r2.fidelity_trace[0] == pytest.approx(r1.fidelity_trace[0], abs=1e-12)


def test_global_optimizer_never_loses_to_local():
    cands, prior = _two_candidates()
    grid = an.default_tau_grid(1.0, 60)
    local = an.optimize_schedule_local(2, cands, prior, grid, 1.0)
    glob = an.optimize_schedule_global(2, cands, prior, grid, 1.0)
    assert glob.fidelity_trace[-1] >= local.fidelity_trace[-1] - 1e-12


def test_global_optimizer_agrees_with_loop_fallback_under_noise():
    from rydqnd.inference import NoiseParams
    cands, prior = _two_candidates()
    grid = np.linspace(0.3, 2.4, 8)
    noise = NoiseParams(gamma=0.1, tau_eit=0.2, N=4)
    quiet = an.optimize_schedule_global(2, cands, prior, grid, 1.0)
    noisy = an.optimize_schedule_global(2, cands, prior, grid, 1.0, noise)
    assert quiet.strategy == noisy.strategy == "global"
    assert len(noisy.taus) == 2
    assert 0.0 < noisy.fidelity_trace[-1] <= 1.0


def test_toy_problem_reproduction():
    cands, prior = an.appendix_toy_candidates()
    omega = 1.0
    grid = an.default_tau_grid(omega)
    local = an.optimize_schedule_local(2, cands, prior, grid, omega)
    glob = an.optimize_schedule_global(2, cands, prior, grid, omega)
    assert 100 * local.fidelity_trace[0] == pytest.approx(96.59, abs=0.10)
    assert 100 * local.fidelity_trace[1] == pytest.approx(99.84, abs=0.10)
    assert 100 * glob.fidelity_trace[0] == pytest.approx(96.52, abs=0.10)
    assert 100 * glob.fidelity_trace[1] == pytest.approx(99.89, abs=0.10)
    # crossover: greedy wins the first cycle, global the second
    assert local.fidelity_trace[0] > glob.fidelity_trace[0]
    assert glob.fidelity_trace[1] > local.fidelity_trace[1]


def test_enumeration_guards():
    cands, prior = _two_candidates()
    with pytest.raises(ResourceError):
        an.expected_fidelity([0.1] * (an.MAX_ENUMERATED_CYCLES + 1), cands, prior, 1.0)
    big_grid = np.linspace(0.1, 1.0, 2000)
    with pytest.raises(ResourceError):
        an.optimize_schedule_global(2, cands, prior, big_grid, 1.0)


def test_default_tau_grid_excludes_zero():
    grid = an.default_tau_grid(2.0, 100)
    assert grid.size == 100
    assert grid[0] > 0.0
    assert grid[-1] == pytest.approx(4 * math.pi / 2.0, rel=1e-12)
