import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcesim.errors import InvalidArgument, UnsupportedTrajectory
from dcesim.modes import CavityConfig, coupling_matrices, g_matrix
from dcesim.perturbative import dyson_transform
from dcesim.scattering import ScatteringState, evolve, extract_coefficients, scattering_transform
from dcesim.trajectories import OscillatingWall, RigidTranslation, StaticTrajectory
from oracles import amplitude_ode, amplitude_system

PROFILES = [("smoothstep", 0.0), ("bump", 0.0), ("shake", 9.0)]


def rigid(profile="bump", freq=0.0, amp=1e-3, T=2.5):
    return RigidTranslation(0.0, 1.0, amp, T, profile, freq)


def test_no_motion_gives_identity_after_phase():
    cfg = CavityConfig(0.0, 1.0, 5)
    state = evolve(StaticTrajectory(0.0, 1.0, 1.3), cfg)
    assert state.epsilon == 0.0
    (at, bt), tr = extract_coefficients(state)
    assert np.array_equal(at, np.eye(5)) and np.array_equal(bt, np.zeros((5, 5)))
    assert np.allclose(tr.alpha, np.diag(np.exp(1j * cfg.omegas() * 1.3)), rtol=0, atol=0)


def test_zeroth_order_is_free_phase():
    cfg = CavityConfig(0.0, 1.0, 4)
    state = evolve(rigid(), cfg)
    w = cfg.omegas()
    assert np.allclose(np.diag(state.q0), np.exp(-1j * w * 2.5), rtol=0, atol=1e-15)
    assert np.allclose(np.diag(state.q0dot), -1j * w * np.exp(-1j * w * 2.5), rtol=0, atol=1e-14)
    pre = ScatteringState.before_motion(w, -0.5)
    assert np.allclose(np.diag(pre.q0), np.exp(0.5j * w))
    with pytest.raises(InvalidArgument):
        ScatteringState.before_motion(w, 0.1)


@pytest.mark.parametrize("profile,freq", PROFILES)
def test_first_order_amplitude_matches_ode(profile, freq):
    cfg = CavityConfig(0.0, 1.0, 4)
    tr = rigid(profile, freq)
    state = evolve(tr, cfg)
    g = g_matrix(4)
    for m, n in [(1, 2), (2, 1), (1, 4), (3, 2)]:
        q, qd = amplitude_ode(tr, cfg.omegas(), g, m, n)
        assert abs(state.epsilon * state.q1[m - 1, n - 1] - q) < 1e-8 * max(1.0, abs(q) / 1e-3)
        assert abs(state.epsilon * state.q1dot[m - 1, n - 1] - qd) < 1e-8 * max(1.0, abs(qd) / 1e-3)


@pytest.mark.parametrize("profile,freq", PROFILES)
def test_agrees_with_first_order_coupling_route(profile, freq):
    cfg = CavityConfig(0.0, 1.0, 6)
    tr = rigid(profile, freq)
    S = scattering_transform(tr, cfg)
    D = dyson_transform(tr, cfg).transform
    assert np.abs(S.beta - D.beta).max() < 1e-8
    assert np.abs(S.alpha - D.alpha).max() < 1e-8


def test_same_parity_modes_do_not_couple():
    cfg = CavityConfig(0.0, 1.0, 6)
    q1 = evolve(rigid("shake", 9.0), cfg).q1
    for m in range(1, 7):
        for n in range(1, 7):
            if (m + n) % 2 == 0:
                assert q1[m - 1, n - 1] == 0


def test_g_matrix_relations():
    cfg = CavityConfig(0.0, 1.0, 6)
    cm = coupling_matrices(cfg)
    g = g_matrix(6)
    w = cfg.omegas()
    W = w[:, None] + w[None, :]
    D = w[:, None] - w[None, :]
    off = ~np.eye(6, dtype=bool)
    assert np.allclose((-(cm.a1 + cm.a2) / W)[off], g[off], atol=1e-15)
    assert np.allclose(((cm.b1 + cm.b2) / np.where(off, D, 1.0))[off], g[off], atol=1e-15)


def test_rejects_non_rigid_motion():
    cfg = CavityConfig(0.0, 1.0, 3)
    with pytest.raises(UnsupportedTrajectory):
        evolve(OscillatingWall(0.0, 1.0, 1e-3, 2.0, 2), cfg)
    with pytest.raises(InvalidArgument):
        evolve(RigidTranslation(0.5, 1.5, 1e-3, 2.0, "bump"), cfg)


def test_identity_residuals_are_second_order():
    cfg = CavityConfig(0.0, 1.0, 12)
    res = [max(scattering_transform(rigid("shake", 9.0, a), cfg).residuals(6)) for a in (2e-3, 1e-3)]
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.05)


@settings(max_examples=15, deadline=None)
@given(amp=st.floats(1e-5, 1e-3), T=st.floats(0.5, 5.0), profile=st.sampled_from(["smoothstep", "bump"]))
def test_beta_linear_in_displacement(amp, T, profile):
    cfg = CavityConfig(0.0, 1.0, 4)
    a = scattering_transform(RigidTranslation(0.0, 1.0, amp, T, profile), cfg).beta
    b = scattering_transform(RigidTranslation(0.0, 1.0, 2 * amp, T, profile), cfg).beta
    assert np.allclose(b, 2 * a, rtol=1e-10, atol=1e-18)


def test_first_order_error_against_full_amplitude_system():
    # the full truncated system differs from the first-order result at O(eps^2)
    cfg = CavityConfig(0.0, 1.0, 8)
    w, g = cfg.omegas(), g_matrix(8)
    gaps = []
    for amp in (2e-3, 1e-3):
        tr = rigid("shake", 9.0, amp)
        (_, bt), _ = extract_coefficients(evolve(tr, cfg))
        worst = 0.0
        for m in (1, 2, 3):
            q, qd = amplitude_system(tr, w, g, m)
            beta = 0.5 * np.exp(-1j * w * tr.duration) * (q - 1j * qd / w)
            worst = max(worst, float(np.abs(beta - bt[m - 1]).max()))
        gaps.append(worst)
    assert gaps[1] < 0.02 * 0.0055
    assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.05)
