import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcesim import _backend
from dcesim.errors import InvalidArgument, NumericalFailure
from dcesim.integrator import IntegrationSettings, convergence_study, integrate
from dcesim.modes import CavityConfig
from dcesim.perturbative import dyson_transform
from dcesim.trajectories import OscillatingWall, RigidTranslation, StaticTrajectory

BACKENDS = _backend.available()


def wall(eps=1e-3, nu=1.3 * np.pi, p=2):
    return OscillatingWall(0.0, 1.0, eps, nu, p)


@pytest.mark.parametrize("method", ["magnus4", "rk4"])
def test_static_is_free_phase(method):
    cfg = CavityConfig(0.0, 1.0, 4)
    res = integrate(StaticTrajectory(0.0, 1.0, 2.0), cfg, IntegrationSettings(n_steps=2000, method=method))
    expected = np.diag(np.exp(1j * cfg.omegas() * 2.0))
    tol = 1e-12 if method == "magnus4" else 1e-7
    assert np.abs(res.transform.alpha - expected).max() < tol
    assert np.abs(res.transform.beta).max() == 0.0


def test_settings_validation():
    with pytest.raises(InvalidArgument):
        IntegrationSettings(method="euler")
    with pytest.raises(InvalidArgument):
        IntegrationSettings(n_steps=0)
    with pytest.raises(InvalidArgument):
        IntegrationSettings(tol=0.0)
    with pytest.raises(InvalidArgument):
        integrate(wall(), CavityConfig(0.0, 2.0, 3))


def test_matches_first_order_at_small_amplitude():
    # truncation distorts the modes near N, so compare the interior block
    cfg = CavityConfig(0.0, 1.0, 16)
    tr = wall()
    S = integrate(tr, cfg, IntegrationSettings(tol=1e-11)).transform.beta[:6, :6]
    D = dyson_transform(tr, cfg).transform.beta[:6, :6]
    big = np.abs(D) > 1e-2 * np.abs(D).max()
    rel = np.abs(S - D)[big] / np.abs(D)[big]
    assert rel.max() < 1e-2


def test_deviation_from_first_order_scales_with_amplitude():
    cfg = CavityConfig(0.0, 1.0, 8)
    devs = []
    for eps in (1e-3, 1e-4):
        tr = wall(eps)
        S = integrate(tr, cfg, IntegrationSettings(tol=1e-13)).transform
        D = dyson_transform(tr, cfg).transform
        devs.append(np.abs(S.beta - D.beta).max() / np.abs(D.beta).max())
    assert devs[0] / devs[1] == pytest.approx(10.0, rel=0.1)


@pytest.mark.parametrize("method,order", [("magnus4", 4), ("rk4", 4)])
def test_convergence_order(method, order):
    cfg = CavityConfig(0.0, 1.0, 4)
    tr = wall(1e-2)
    ref = integrate(tr, cfg, IntegrationSettings(n_steps=4096, method="magnus4")).transform.matrix()
    errs = [np.abs(integrate(tr, cfg, IntegrationSettings(n_steps=n, method=method)).transform.matrix() - ref).max()
            for n in (64, 128)]
    assert np.log2(errs[0] / errs[1]) == pytest.approx(order, abs=0.4)


def test_methods_agree():
    cfg = CavityConfig(0.0, 1.0, 6)
    tr = wall(1e-2, 2.2, 3)
    a = integrate(tr, cfg, IntegrationSettings(method="magnus4", tol=1e-11))
    b = integrate(tr, cfg, IntegrationSettings(method="rk4", tol=1e-11))
    assert np.abs(a.transform.matrix() - b.transform.matrix()).max() < 1e-9
    assert a.error_estimate <= 1e-11 and a.history


def test_frozen_couplings_differ_at_first_order_in_length_change():
    cfg = CavityConfig(0.0, 1.0, 6)
    diffs = []
    for eps in (1e-2, 5e-3):
        tr = wall(eps)
        a = integrate(tr, cfg, IntegrationSettings(n_steps=2000)).transform.beta
        b = integrate(tr, cfg, IntegrationSettings(n_steps=2000, recompute_couplings=False)).transform.beta
        diffs.append(np.abs(a - b).max())
    # beta is O(eps) and the frozen-coupling error is O(eps) relative to it
    assert diffs[0] / diffs[1] == pytest.approx(4.0, rel=0.15)


def test_symplectic_residuals_stay_at_roundoff():
    cfg = CavityConfig(0.0, 1.0, 20)
    res = integrate(wall(), cfg, IntegrationSettings(tol=1e-10), interior=10)
    assert max(res.residuals) < 1e-12


def test_step_underflow():
    with pytest.raises(NumericalFailure, match="step size underflow"):
        integrate(wall(1e-2), CavityConfig(0.0, 1.0, 4), IntegrationSettings(tol=1e-14, max_steps=64))


def test_convergence_study():
    cfg = CavityConfig(0.0, 1.0, 4)
    tr = wall(1e-3, 3 * np.pi, 6)
    rep = convergence_study(tr, cfg, [4, 8, 16], [400, 800])
    assert rep.dominant_index in {(1, 2), (2, 1)}
    assert rep.dominant_beta.shape == (3, 2)
    assert rep.converged
    with pytest.raises(InvalidArgument):
        convergence_study(tr, cfg, [8, 4], [100])
    single = integrate(tr, cfg.with_modes(1), IntegrationSettings(n_steps=400))
    assert single.transform.beta.shape == (1, 1)


def test_dominant_beta_stable_in_truncation():
    cfg = CavityConfig(0.0, 1.0, 20)
    tr = wall(1e-3, 3 * np.pi, 6)
    b20 = integrate(tr, cfg, IntegrationSettings(tol=1e-11)).transform.beta[0, 1]
    b40 = integrate(tr, cfg.with_modes(40), IntegrationSettings(tol=1e-11)).transform.beta[0, 1]
    assert abs(b40 - b20) < 1e-6 * abs(b40)


@pytest.mark.parametrize("method", ["magnus4", "rk4"])
def test_backends_agree(method):
    if len(BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    cfg = CavityConfig(0.0, 1.0, 5)
    tr = RigidTranslation(0.0, 1.0, 0.02, 2.0, "shake", frequency=7.0)
    out = [integrate(tr, cfg, IntegrationSettings(n_steps=300, method=method, backend=b)).transform.matrix()
           for b in BACKENDS]
    assert np.abs(out[0] - out[1]).max() < 1e-12


@settings(max_examples=10, deadline=None)
@given(eps=st.floats(1e-5, 1e-4), nu=st.floats(1.0, 12.0), p=st.integers(1, 4))
def test_beta_linear_in_amplitude_for_small_motion(eps, nu, p):
    cfg = CavityConfig(0.0, 1.0, 4)
    a = integrate(wall(eps, nu, p), cfg, IntegrationSettings(n_steps=600)).transform.beta
    b = integrate(wall(2 * eps, nu, p), cfg, IntegrationSettings(n_steps=600)).transform.beta
    scale = np.abs(b).max()
    assert np.abs(b - 2 * a).max() < 1e-2 * scale + 1e-14
