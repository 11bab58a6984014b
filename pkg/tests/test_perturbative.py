import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcesim.errors import InvalidArgument, RemovableSingularity
from dcesim.modes import CavityConfig, coupling_matrices
from dcesim.perturbative import (
    SCAN_COLUMNS,
    ResonanceSpec,
    closed_form_beta_matrix,
    dyson_transform,
    find_peaks,
    oscillating_beta_closed_form,
    oscillating_beta_terms,
    resonance_scan,
    resonant_particle_number,
    subharmonic_beta,
    write_scan_csv,
)
from dcesim.spacetime import FLAT, SchwarzschildSpacetime
from dcesim.symplectic import FrequencyMatrix
from dcesim.trajectories import OscillatingScenario, OscillatingWall, RigidTranslation, StaticTrajectory
from oracles import dyson_entry


def test_static_gives_pure_phase():
    cfg = CavityConfig(0.0, 1.0, 5)
    res = dyson_transform(StaticTrajectory(0.0, 1.0, 1.7), cfg)
    assert np.array_equal(res.transform.beta, np.zeros((5, 5)))
    assert np.allclose(res.transform.alpha, np.diag(np.exp(1j * cfg.omegas() * 1.7)), rtol=0, atol=1e-15)
    assert res.quadrature_error == 0.0 and res.max_speed == 0.0


def test_rejects_bad_input():
    cfg = CavityConfig(0.0, 1.0, 3)
    with pytest.raises(InvalidArgument):
        dyson_transform(OscillatingWall(0.0, 1.0, 0.2, 10.0, 2), cfg)  # superluminal
    with pytest.raises(InvalidArgument):
        dyson_transform(OscillatingWall(0.0, 1.5, 0.01, 1.0, 2), cfg)  # starts elsewhere
    with pytest.raises(InvalidArgument):
        dyson_transform(StaticTrajectory(0.0, 1.0, 1.0), cfg, FrequencyMatrix([1.0, 2.0]))


def test_warns_outside_first_order_regime():
    with pytest.warns(UserWarning, match="first-order"):
        dyson_transform(OscillatingWall(0.0, 1.0, 0.05, 4.0, 2), CavityConfig(0.0, 1.0, 3))


def test_against_independent_quad_oracle():
    cfg = CavityConfig(0.0, 1.0, 4)
    tr = OscillatingWall(0.0, 1.0, 1e-3, 2.3, 3)
    res = dyson_transform(tr, cfg).transform
    cm = coupling_matrices(cfg)
    w = cfg.omegas()
    T = tr.duration
    for m, n in [(1, 2), (2, 3), (1, 4), (3, 3)]:
        beta = np.exp(1j * w[m - 1] * T) * dyson_entry(tr, w, cm.b2, m, n, -1, 2)
        assert abs(res.beta[m - 1, n - 1] - beta) < 1e-12
        if m != n:
            alpha = np.exp(1j * w[m - 1] * T) * dyson_entry(tr, w, cm.a2, m, n, +1, 2)
            assert abs(res.alpha[m - 1, n - 1] - alpha) < 1e-12


@pytest.mark.parametrize("nu,p", [(1.3 * np.pi, 2), (2.7, 3), (7.1, 5), (np.pi, 2)])
def test_flat_closed_form_agrees_with_quadrature(nu, p):
    sc = OscillatingScenario(0.0, 1.0, 1e-3, nu, p)
    res = dyson_transform(sc.radial_trajectory(), CavityConfig(0.0, 1.0, 6))
    cf = closed_form_beta_matrix(sc, FLAT, 6)
    # the error estimate is at round-off level; allow a round-off floor relative to |beta|
    floor = 1e-14 * max(np.abs(cf).max(), 1e-300)
    assert np.abs(res.transform.beta - cf).max() < 10 * res.quadrature_error + floor


def test_off_resonance_single_mode_example():
    sc = OscillatingScenario(0.0, 1.0, 1e-3, np.pi, 2)
    res = dyson_transform(sc.radial_trajectory(), CavityConfig(0.0, 1.0, 1))
    assert abs(res.transform.beta[0, 0] - oscillating_beta_closed_form(sc, FLAT, 1, 1)) < 1e-8


def test_flat_has_no_curvature_term():
    sc = OscillatingScenario(5.0, 1.0, 1e-3, 2.2, 3)
    for m in range(1, 4):
        for n in range(1, 4):
            assert oscillating_beta_terms(sc, FLAT, m, n).curvature == 0


def test_main_resonance_limit():
    sc = OscillatingScenario.at_resonance(0.0, 1.0, 1e-3, 200, 1, 2, FLAT)
    with pytest.raises(RemovableSingularity):
        oscillating_beta_closed_form(sc, FLAT, 1, 2)
    terms = oscillating_beta_terms(sc, FLAT, 1, 2, allow_limit=True)
    assert terms.branch == "main-limit"
    w1, w2 = np.pi, 2 * np.pi
    assert abs(terms.beta) == pytest.approx(0.5e-3 * math.sqrt(w1 * w2) * sc.T, rel=1e-12)
    assert abs(terms.beta) ** 2 == pytest.approx(0.25 * 2 * (1e-3 * np.pi * sc.T) ** 2, rel=1e-12)


@pytest.mark.parametrize("branch", ["main", "subharmonic"])
def test_limit_continuity(branch):
    st_ = SchwarzschildSpacetime(1.0)
    base = OscillatingScenario.at_resonance(100.0, 1.0, 1e-3, 4, 1, 2, st_, branch)
    exact = oscillating_beta_closed_form(base, st_, 1, 2, allow_limit=True)
    getter = (lambda t: t.flat) if branch == "main" else (lambda t: t.curvature)
    limit = getter(oscillating_beta_terms(base, st_, 1, 2, allow_limit=True))
    d = 1e-4 * base.nu
    near = [getter(oscillating_beta_terms(base.with_nu(base.nu + s * d), st_, 1, 2)) for s in (1.0, 0.5)]
    extrapolated = 2 * near[1] - near[0]
    assert abs(extrapolated - limit) < 1e-6 * abs(limit)
    assert np.isfinite(exact)


def test_resonant_particle_number_examples():
    sc = OscillatingScenario(0.0, 1.0, 1e-3, 3 * np.pi, 300)
    assert sc.T == pytest.approx(100.0)
    spec = ResonanceSpec(1, 2)
    assert resonant_particle_number(sc, FLAT, spec, 1, 2) == pytest.approx(0.0493480, abs=5e-8)
    assert resonant_particle_number(sc, FLAT, spec, 1, 3) == 0.0
    st_ = SchwarzschildSpacetime(1.0)
    curved = OscillatingScenario(1000.0, 10.0, 1e-2, 3 * np.pi, 300)
    flat = resonant_particle_number(curved, FLAT, spec, 1, 2)
    reduced = resonant_particle_number(curved, st_, spec, 2, 1)
    assert reduced < flat
    with pytest.warns(UserWarning):
        resonant_particle_number(OscillatingScenario(0.0, 1.0, 1e-3, 3 * np.pi, 2), FLAT, spec, 1, 2)
    with pytest.raises(InvalidArgument):
        resonant_particle_number(sc, FLAT, ResonanceSpec(1, 2, "subharmonic"), 1, 2)


def test_subharmonic_structure():
    st_ = SchwarzschildSpacetime(1.0)
    even = OscillatingScenario.at_resonance(100.0, 1.0, 1e-3, 40, 1, 2, st_, "subharmonic")
    odd = OscillatingScenario.at_resonance(100.0, 1.0, 1e-3, 41, 1, 2, st_, "subharmonic")
    # p even: only the curvature term, growing linearly in T
    longer = OscillatingScenario.at_resonance(100.0, 1.0, 1e-3, 80, 1, 2, st_, "subharmonic")
    assert abs(subharmonic_beta(longer, st_, 1, 2)) == pytest.approx(2 * abs(subharmonic_beta(even, st_, 1, 2)), rel=1e-12)
    flat_even = OscillatingScenario.at_resonance(100.0, 1.0, 1e-3, 40, 1, 2, FLAT, "subharmonic")
    assert subharmonic_beta(flat_even, FLAT, 1, 2) == 0
    assert abs(subharmonic_beta(odd, st_, 1, 2)) > abs(subharmonic_beta(even, st_, 1, 2))
    # magnitude agrees with the limit branch of the closed form for both parities
    for sc in (even, odd):
        cf = oscillating_beta_closed_form(sc, st_, 1, 2, allow_limit=True)
        assert abs(cf) == pytest.approx(abs(subharmonic_beta(sc, st_, 1, 2)), rel=1e-9)
    with pytest.raises(InvalidArgument):
        subharmonic_beta(even.with_nu(even.nu * 1.01), st_, 1, 2)


def test_curvature_term_matches_tortoise_quadrature():
    """Dyson quadrature on the exact tortoise-mapped wall vs the closed curvature term.

    The residual mismatch is the next order in r_s / r0. A resonant denominator
    ((w_m + w_n)/2)^2 - nu^2 instead of (w_m + w_n)^2 - 4 nu^2 would be off by 4.
    """
    for r_s in (1e-2, 5e-3):
        st_ = SchwarzschildSpacetime(r_s)
        sc = OscillatingScenario.at_resonance(1.0, 0.1, 1e-4, 40, 1, 2, st_, "subharmonic")
        cfg = CavityConfig(st_.tortoise(1.0), st_.tortoise(1.1), 3)
        freqs = FrequencyMatrix(sc.omega0(np.arange(1, 4), st_))
        beta = dyson_transform(sc.conformal_trajectory(st_), cfg, freqs).transform.beta[0, 1]
        cf = oscillating_beta_closed_form(sc, st_, 1, 2, allow_limit=True)
        assert abs(abs(beta) / abs(cf) - 1.0) < 1.5 * r_s / 1.0


def test_beta_symmetry_pattern():
    sc = OscillatingScenario(0.0, 1.0, 1e-3, 2.9, 3)
    cfg = CavityConfig(0.0, 1.0, 5)
    beta = dyson_transform(sc.radial_trajectory(), cfg).transform.beta
    phase = np.exp(-1j * cfg.omegas() * sc.T)[:, None]
    reduced = phase * beta
    assert np.allclose(reduced, reduced.T, rtol=0, atol=1e-15)


def test_residuals_are_second_order():
    cfg = CavityConfig(0.0, 1.0, 20)
    res = []
    for A in (1e-3, 5e-4, 2.5e-4):
        tr = OscillatingScenario(0.0, 1.0, A, 1.3 * np.pi, 2).radial_trajectory()
        res.append(dyson_transform(tr, cfg).transform.residuals(10))
    for (a1, a2), (b1, b2) in zip(res, res[1:]):
        assert a1 / b1 == pytest.approx(4.0, rel=0.02)
        assert a2 / b2 == pytest.approx(4.0, rel=0.02)


def test_find_peaks():
    assert find_peaks([0, 1, 0, 0.2, 0.1]) == [1]
    assert find_peaks([0, 1, 0, 0.8, 0.1]) == [1, 3]
    assert find_peaks([0, 0, 0]) == []


def test_scan_flat_and_curved():
    st_ = SchwarzschildSpacetime(1.0)
    template = OscillatingScenario(1000.0, 10.0, 1e-2, 0.5, 200)
    W = float(template.omega0(1, st_) + template.omega0(2, st_))
    grid = np.unique(np.concatenate([np.linspace(0.3 * W, 1.3 * W, 801), [W, 0.5 * W]]))
    curved = resonance_scan(template, st_, grid, 1, 2, workers=3)
    assert [curved.rows[i].nu for i in curved.peaks] == [pytest.approx(W)]
    assert [curved.rows[i].nu for i in curved.curvature_peaks] == [pytest.approx(0.5 * W)]
    flat_t = template.flat_equivalent(st_)
    Wf = float(flat_t.omega0(1, FLAT) + flat_t.omega0(2, FLAT))
    flat = resonance_scan(flat_t, FLAT, grid * Wf / W, 1, 2)
    assert [flat.rows[i].nu for i in flat.peaks] == [pytest.approx(Wf)]
    assert flat.curvature_peaks == [] and np.all(flat.abs_curvature == 0)
    serial = resonance_scan(template, st_, grid, 1, 2, workers=1)
    assert [r.beta for r in serial.rows] == [r.beta for r in curved.rows]
    buf = io.StringIO()
    write_scan_csv(curved.rows[:3], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].split(",") == list(SCAN_COLUMNS)
    assert len(lines) == 4


@settings(max_examples=25, deadline=None)
@given(nu=st.floats(0.5, 30.0), p=st.integers(1, 6), m=st.integers(1, 5), n=st.integers(1, 5))
def test_closed_form_linear_in_amplitude(nu, p, m, n):
    sc = OscillatingScenario(0.0, 1.0, 1e-3, nu, p)
    W = (m + n) * np.pi
    if min(abs(nu - W), abs(nu - W / 2)) < 1e-6 * nu:
        return
    b1 = oscillating_beta_closed_form(sc, FLAT, m, n)
    b2 = oscillating_beta_closed_form(OscillatingScenario(0.0, 1.0, 2e-3, nu, p), FLAT, m, n)
    assert b2 == pytest.approx(2 * b1, rel=1e-12, abs=1e-300)


def test_rigid_translation_runs_both_walls():
    cfg = CavityConfig(0.0, 1.0, 4)
    res = dyson_transform(RigidTranslation(0.0, 1.0, 0.01, 2.0, "bump"), cfg)
    assert res.epsilon < 1e-15  # rigid: no length change
    assert np.abs(res.transform.beta).max() > 0
