import math

import numpy as np
import pytest
import scipy.constants as sc
from hypothesis import given, settings
from hypothesis import strategies as st

from tmclock import fitting as fit
from tmclock.constants import TM169_MASS
from tmclock.errors import FitError

A0 = sc.physical_constants["Bohr radius"][0]


def test_noiseless_recovery():
    r = fit.fit_saturation(fit.synthetic_trace(tau=112.0, N0=0.83))
    assert r.tau == pytest.approx(112.0, rel=1e-6)
    assert r.N0 == pytest.approx(0.83, rel=1e-6)


def test_degenerate_traces():
    with pytest.raises(FitError):
        fit.fit_saturation(fit.DecayTrace(np.arange(1.0, 11.0), np.ones(10)))
    with pytest.raises(FitError):
        fit.fit_saturation(fit.DecayTrace([1.0, 2.0, 3.0], [0.1, 0.2, 0.3]))
    # a trace much shorter than the decay time never reaches 1 - 1/e of its own plateau guess
    short = fit.synthetic_trace(tau=1000.0, t_max=5.0, samples=20)
    with pytest.raises(FitError):
        fit.fit_saturation(short)


def test_trace_validation():
    with pytest.raises(ValueError):
        fit.DecayTrace([2.0, 1.0], [0.0, 0.1])
    with pytest.raises(ValueError):
        fit.DecayTrace([1.0, 2.0], [0.0])
    with pytest.raises(ValueError):
        fit.DecayTrace([1.0, 2.0], [0.0, 0.1], [1.0, 0.0])


def test_csv_round_trip():
    tr = fit.synthetic_trace(noise=0.01, seed=3)
    text = "t_ms,n,sigma\n" + "\n".join(f"{float(a)!r},{float(b)!r},{float(s)!r}" for a, b, s in zip(tr.t, tr.n, tr.sigma))
    back = fit.DecayTrace.from_csv(text)
    np.testing.assert_array_equal(back.t, tr.t)
    np.testing.assert_array_equal(back.n, tr.n)
    with pytest.raises(ValueError):
        fit.DecayTrace.from_csv("time,n\n1,2\n")


def test_monte_carlo_coverage():
    hits = 0
    trials = 200
    for seed in range(trials):
        r = fit.fit_saturation(fit.synthetic_trace(tau=112.0, noise=0.02, seed=seed))
        hits += abs(r.tau - 112.0) <= r.dtau
    # 1 sigma covers 68.3 %; binomial spread at 200 trials is about 3.3 %
    assert 0.58 <= hits / trials <= 0.78


@settings(max_examples=40)
@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_scale_equivariance(time_scale, pop_scale):
    tr = fit.synthetic_trace(tau=112.0, noise=0.01, seed=7)
    base = fit.fit_saturation(tr)
    scaled = fit.fit_saturation(fit.DecayTrace(tr.t * time_scale, tr.n * pop_scale, tr.sigma * pop_scale))
    assert scaled.tau == pytest.approx(base.tau * time_scale, rel=1e-5)
    assert scaled.N0 == pytest.approx(base.N0 * pop_scale, rel=1e-5)
    assert scaled.dtau == pytest.approx(base.dtau * time_scale, rel=1e-4)


def _oracle_frequencies(alpha_au, P, lam, w0, m=TM169_MASS):
    # harmonic expansion of U = -alpha I / (2 eps0 c) for a retro-reflected Gaussian beam
    alpha = alpha_au * 4 * math.pi * sc.epsilon_0 * A0**3
    I0 = 4 * 2 * P / (math.pi * w0**2)  # antinode intensity of the standing wave
    U0 = alpha * I0 / (2 * sc.epsilon_0 * sc.c)
    k = 2 * math.pi / lam
    wa = math.sqrt(2 * U0 * k**2 / m)
    wr = math.sqrt(4 * U0 / (m * w0**2))
    return wa / (2 * math.pi), wr / (2 * math.pi)


def test_frequencies_against_potential_oracle():
    cfg = fit.TrapConfig(power=4.0, wavelength=532e-9, waist=60e-6)
    fa, fr = fit.parametric_frequencies(cfg, 300.0)
    ofa, ofr = _oracle_frequencies(300.0, 4.0, 532e-9, 60e-6)
    assert fa == pytest.approx(ofa, rel=1e-12)
    assert fr == pytest.approx(ofr, rel=1e-12)


@settings(max_examples=200)
@given(st.floats(10, 2000), st.floats(0.1, 20), st.floats(400e-9, 1600e-9), st.floats(10e-6, 300e-6))
def test_round_trip_and_ratio(alpha, P, lam, w0):
    cfg = fit.TrapConfig(power=P, wavelength=lam, waist=w0)
    fa, fr = fit.parametric_frequencies(cfg, alpha)
    assert fa / fr == pytest.approx(math.pi * w0 * math.sqrt(2) / lam, rel=1e-12)
    assert fit.invert_polarizability(fa, fr, P, lam).alpha == pytest.approx(alpha, rel=1e-9)
    assert fit.waist_for_radial(cfg, alpha, fr) == pytest.approx(w0, rel=1e-9)


def test_sqrt_power_scaling():
    a = fit.parametric_frequencies(fit.TrapConfig(1.0, 532e-9, 50e-6), 100.0)
    b = fit.parametric_frequencies(fit.TrapConfig(4.0, 532e-9, 50e-6), 100.0)
    assert b[0] == pytest.approx(2 * a[0]) and b[1] == pytest.approx(2 * a[1])
    assert fit.parametric_frequencies(fit.TrapConfig(1.0, 532e-9, 50e-6), 0.0) == (0.0, 0.0)


def test_missing_waist_and_bad_inputs():
    with pytest.raises(ValueError):
        fit.parametric_frequencies(fit.TrapConfig(1.0, 532e-9), 100.0)
    with pytest.raises(ValueError):
        fit.TrapConfig(0.0, 532e-9)
    with pytest.raises(ValueError):
        fit.invert_polarizability(0.0, 400.0, 4.0, 532e-9)


def test_inversion_band():
    est = fit.invert_polarizability(230e3, 400.0, 4.0, 532e-9, df_a=40e3, df_r=40.0, dpower=0.4)
    rel = math.hypot(4 * 40 / 230, 2 * 0.1, 0.1)
    assert est.rel_uncertainty == pytest.approx(rel)
    assert est.lower < est.alpha < est.upper
    assert est.lower * est.upper == pytest.approx(est.alpha**2)
    zero = fit.invert_polarizability(230e3, 400.0, 4.0, 532e-9)
    assert zero.lower == zero.alpha == zero.upper
