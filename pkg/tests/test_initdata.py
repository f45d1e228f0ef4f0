import math
from functools import lru_cache

import numpy as np
import pytest

from conftest import newton_wave
from wuwave import nls
from wuwave.errors import AmplitudeOutOfRange, NoConvergence, OrthogonalityViolated
from wuwave.initdata import (
    SeedSpec,
    build_initial_data,
    check_seed,
    naive_data,
    orthogonality_defect,
    perturbation_norm,
    verify_admissibility,
)
from wuwave.modulation import embed_slow
from wuwave.nls import NlsState
from wuwave.spectral import CurveKernel, Grid, deriv, hs_norm, l2
from wuwave.stokes import stokes_state
from wuwave.waterwave import holo_residuals

Q1 = 1.0
DELTA = 0.01


def seed(delta=DELTA):
    return nls.lift_to_B(nls.unstable_seed(Q1, delta, n=128), Q1)


def spec_for(eps, B0=None, **kw):
    q = int(round(Q1 / eps))
    return SeedSpec(seed() if B0 is None else B0, eps, newton_wave(eps), n=64 * q, **kw)


@lru_cache(maxsize=None)
def built(eps):
    return build_initial_data(spec_for(eps), record=True)


def leading(spec, grid):
    Bf = embed_slow(spec.B0.grid, spec.B0.B, grid, spec.eps)
    return spec.eps * (Bf - 1j) * np.exp(1j * grid.nodes)


# --------------------------------------------------------------------------
# construction


def test_constant_envelope_gives_stokes():
    eps = 0.1
    spec = spec_for(eps, NlsState.constant(Q1, 64))
    state = build_initial_data(spec)
    ref = stokes_state(newton_wave(eps), 0.0, state.grid)
    assert np.max(np.abs(state.offset - ref.offset)) <= 1e-12
    assert np.max(np.abs(state.u - ref.u)) <= 1e-12


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_curve_estimate(eps):
    spec = spec_for(eps)
    state = built(eps).state
    ref = stokes_state(spec.stokes, 0.0, state.grid)
    size = perturbation_norm(spec.B0, spec.s_prime)
    dist = hs_norm(state.grid, state.offset - ref.offset - leading(spec, state.grid), spec.s_prime - 6)
    assert dist <= 5 * eps**1.5 * size


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_velocity_estimate(eps):
    spec = spec_for(eps)
    state = built(eps).state
    ref = stokes_state(spec.stokes, 0.0, state.grid)
    size = perturbation_norm(spec.B0, spec.s_prime)
    lead = 1j * spec.stokes.omega * leading(spec, state.grid)
    dist = hs_norm(state.grid, state.u - ref.u - lead, spec.s_prime - 6)
    assert dist <= 5 * eps**1.5 * size


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_perturbation_size(eps):
    state = built(eps).state
    ref = stokes_state(newton_wave(eps), 0.0, state.grid)
    g = state.grid
    size = math.hypot(l2(g, state.offset - ref.offset), l2(g, state.u - ref.u))
    assert size <= 1.5 * math.sqrt(eps) * DELTA


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_contraction(eps):
    rec = built(eps)
    assert rec.contraction.size >= 1
    assert np.all(rec.contraction <= 3 * eps)
    assert rec.differences[1] < rec.differences[0]


def test_deterministic():
    a = build_initial_data(spec_for(0.1))
    b = build_initial_data(spec_for(0.1))
    assert np.array_equal(a.offset, b.offset) and np.array_equal(a.u, b.u)


# --------------------------------------------------------------------------
# constants


def test_curve_constant_is_the_cauchy_constant():
    """c_gamma is the Cauchy constant of conj(gamma) - alpha, half the printed quadrature."""
    eps = 0.1
    spec = spec_for(eps)
    rec = built(eps)
    g = rec.state.grid
    gamma = rec.state.offset + np.conj(rec.c_gamma)
    st = stokes_state(spec.stokes, 0.0, g)
    Bbar = np.conj(embed_slow(spec.B0.grid, spec.B0.B, g, eps))
    source = np.conj(st.offset) + eps * (Bbar + 1j) * np.exp(-1j * g.nodes)
    printed = np.sum((1 + deriv(g, gamma)) * source) * g.h / g.length
    assert abs(rec.c_gamma) > 1e-10
    assert rec.c_gamma == pytest.approx(0.5 * printed, rel=1e-6)
    ker = CurveKernel(g, gamma)
    assert rec.c_gamma == pytest.approx(ker.cauchy_constant(np.conj(gamma)), abs=1e-18)


def test_velocity_constant_removed():
    rep = verify_admissibility(built(0.1).state)
    assert rep.velocity_constant <= 1e-14 and rep.zeta_constant <= 1e-14
    assert abs(built(0.1).d_v0) > 1e-10


# --------------------------------------------------------------------------
# admissibility


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_constructed_data_is_admissible(eps):
    rep = verify_admissibility(built(eps).state)
    assert rep.passed
    assert rep.threshold == pytest.approx(1e-10 * math.sqrt(Q1 / eps))


def test_stokes_is_admissible():
    g = spec_for(0.1).grid
    assert verify_admissibility(stokes_state(newton_wave(0.1), 0.0, g)).passed


def _naive_residual(eps):
    rep = verify_admissibility(naive_data(spec_for(eps)))
    assert not rep.passed
    return rep.zeta_residual


def test_naive_data_fails_at_second_order():
    """The uncorrected ansatz misses an O(eps^2 delta) packet, whose L2 norm on q T is eps^{3/2}."""
    r1, r2 = _naive_residual(0.1), _naive_residual(0.05)
    assert 2**1.25 <= r1 / r2 <= 2**1.75
    assert r1 <= 0.1**1.5 * DELTA * 10


def test_holo_residuals_agree_with_report():
    state = built(0.1).state
    rep = verify_admissibility(state)
    assert (rep.zeta_residual, rep.velocity_residual) == holo_residuals(state)


# --------------------------------------------------------------------------
# preconditions


def test_orthogonality_of_unstable_seed():
    spec = spec_for(0.1)
    assert orthogonality_defect(spec.B0, 0.1, spec.grid) <= 1e-12


def test_orthogonality_violation():
    """Slow mode -q of B0 lands on fast mode -q, which e^{i alpha} sends to the mean."""
    X = Grid(Q1, 64).nodes
    B0 = NlsState(Q1, 0.0, 1j + 0.01 * np.exp(-10j * X))
    with pytest.raises(OrthogonalityViolated):
        build_initial_data(spec_for(0.1, B0))


def test_seed_too_large():
    with pytest.raises(AmplitudeOutOfRange):
        check_seed(spec_for(0.1, seed(0.1)))
    check_seed(spec_for(0.1, seed(0.1), norm_max=1e3))


def test_iteration_cap():
    with pytest.raises(NoConvergence):
        build_initial_data(spec_for(0.1, max_iter=1))
