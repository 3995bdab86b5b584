import math

import numpy as np
import pytest
import scipy.constants as sc
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import Rational
from sympy.physics.wigner import wigner_3j as sym3j

from tmclock import magic
from tmclock import polarizability as pol
from tmclock.catalog import Level, LineCatalog
from tmclock.constants import kw_per_cm2, wavelength_nm_to_omega
from tmclock.errors import NoSignChangeError, ResonanceError

from conftest import toy_catalog

INTENSITY = kw_per_cm2(50.0)
HARTREE_OMEGA = sc.physical_constants["Hartree energy"][0] / sc.hbar
EA0 = sc.e * sc.physical_constants["Bohr radius"][0]


def test_identical_states_and_offset(bundled):
    w = wavelength_nm_to_omega(900.0)
    pair = (magic.LOWER_STATE, magic.LOWER_STATE)
    assert magic.differential_alpha(bundled, w, pair) == 0.0
    assert magic.differential_alpha(bundled, w, pair, continuum_offset=1.0) == 1.0


def test_sign_change_across_window(bundled):
    a = magic.differential_alpha(bundled, wavelength_nm_to_omega(806.5))
    b = magic.differential_alpha(bundled, wavelength_nm_to_omega(807.05))
    assert np.sign(a) != np.sign(b)


def test_find_magic_offsets(bundled):
    roots = {off: magic.find_magic(bundled, continuum_offset=off) for off in (-1.0, 0.0, 1.0)}
    for r in roots.values():
        assert 0.1 <= r.detuning_nm <= 1.0
        assert r.attractive
        lo, hi = r.bracket
        assert hi - lo <= 1e-4
        assert lo <= r.lambda_magic <= hi
    assert abs(roots[1.0].lambda_magic - roots[-1.0].lambda_magic) < 0.9


def test_root_stable_under_tighter_tolerance(bundled):
    r1 = magic.find_magic(bundled, tolerance=1e-4)
    r2 = magic.find_magic(bundled, tolerance=5e-5)
    assert abs(r1.lambda_magic - r2.lambda_magic) < 1e-4


def test_no_sign_change(bundled):
    with pytest.raises(NoSignChangeError):
        magic.find_magic(bundled, bracket=(806.0, 806.3))


def test_foreign_pole_in_bracket(bundled):
    with pytest.raises(ResonanceError):
        magic.find_magic(bundled, bracket=(755.0, 770.0))


def test_scan_marks_poles_nan(bundled):
    # probe the exact energy-derived pole of a catalog line
    pole = 1e7 / bundled.level("e13119p6_9").energy
    values = magic.scan_differential(bundled, [pole, 800.0])
    assert math.isnan(values[0]) and math.isfinite(values[1])
    assert magic.sign_changes([1.0, -1.0, -2.0, 3.0]) == 2


# ---------------------------------------------------------------- hyperpolarizability


def _sym_3j(*args):
    return float(sym3j(*[Rational(int(round(2 * x)), 2) for x in args]))


LADDER_LEVELS = [
    ("g", 0.0, 1, "odd"),
    ("e", 10000.0, 3, "even"),
    ("h", 12000.0, 3, "even"),
    ("f", 25000.0, 1, "odd"),
]
LADDER_LINES = [("e", "g", 3e7), ("h", "g", 1e7), ("f", "e", 2e7), ("f", "h", 4e6)]


def explicit_gamma(levels, lines, g_id, omega):
    """gamma (a.u.) by literal summation over m, k, n of the fourth-order expressions."""
    ids = [x[0] for x in levels]
    E = {x[0]: x[1] for x in levels}
    J = {x[0]: x[2] / 2 for x in levels}
    n = len(ids)
    D = np.zeros((n, n))
    w_cm = np.array([E[i] - E[g_id] for i in ids])
    w = 2 * math.pi * sc.c * 100 * w_cm / HARTREE_OMEGA
    for u, l, A in lines:
        om = 2 * math.pi * sc.c * 100 * (E[u] - E[l])
        d_red = math.sqrt(3 * math.pi * sc.epsilon_0 * sc.hbar * sc.c**3 * (2 * J[u] + 1) * A / om**3) / EA0
        m = 0.5
        dz = (-1) ** round(J[u] - m) * _sym_3j(J[u], 1, J[l], -m, 0, m) * d_red
        D[ids.index(u), ids.index(l)] = D[ids.index(l), ids.index(u)] = dz
    g = ids.index(g_id)
    om = omega / HARTREE_OMEGA
    others = [i for i in range(n) if i != g]
    gp = 0.0
    for m in others:
        for k in others:
            for nn in others:
                num = D[g, m] * D[m, k] * D[k, nn] * D[nn, g]
                if num == 0:
                    continue
                wm, wk, wn = w[m], w[k], w[nn]
                gp += num * (
                    4 * wm * wn / (wk * (om**2 - wm**2) * (om**2 - wn**2))
                    + 1 / ((wm - om) * (wk - 2 * om) * (wn - om))
                    + 1 / ((wm + om) * (wk + 2 * om) * (wn + om))
                )
    gm = 0.0
    for m in others:
        for nn in others:
            gm += D[m, g] ** 2 * D[nn, g] ** 2 * wm_term(w[m], w[nn], om)
    return (4 * gp + 8 * gm) / 4


def wm_term(wm, wn, om):
    return wm * (om**2 + 3 * wn**2) / ((om**2 - wm**2) * (om**2 - wn**2) ** 2)


@pytest.fixture(scope="module")
def ladder():
    return toy_catalog(LADDER_LEVELS, LADDER_LINES)


@pytest.mark.parametrize("level", ["g", "e", "f"])
@pytest.mark.parametrize("omega", [0.0, 5e14, 1.2e15])
def test_gamma_matches_explicit_sum(ladder, level, omega):
    expected = explicit_gamma(LADDER_LEVELS, LADDER_LINES, level, omega)
    assert magic.hyperpolarizability(ladder, level, omega) == pytest.approx(expected, rel=1e-9)


def test_two_level_static_limit():
    c = toy_catalog([("g", 0.0, 1, "odd"), ("e", 10000.0, 1, "even")], [("e", "g", 1e7)])
    D = magic.dipole_z_matrix(c)[0, 1]
    delta = 2 * math.pi * sc.c * 100 * 10000.0 / HARTREE_OMEGA
    assert magic.hyperpolarizability(c, "g", 0.0) == pytest.approx(-6 * D**4 / delta**3, rel=1e-12)


def test_gamma_zero_without_dipoles():
    c = LineCatalog([Level("g", 0.0, 1, "odd"), Level("e", 1e4, 1, "even")], [])
    assert magic.hyperpolarizability(c, "g", 1e15) == 0.0


@settings(max_examples=100)
@given(st.floats(0.0, 1.5e15))
def test_gamma_even(omega):
    c = toy_catalog(LADDER_LEVELS, LADDER_LINES)
    try:
        v = magic.hyperpolarizability(c, "g", omega)
    except ResonanceError:
        return
    assert magic.hyperpolarizability(c, "g", -omega) == pytest.approx(v, rel=1e-12)


def test_two_photon_resonance_refused(ladder):
    w_f = 2 * math.pi * sc.c * 100 * 25000.0
    with pytest.raises(ResonanceError):
        magic.hyperpolarizability(ladder, "g", w_f / 2)


def test_truncation_ratio_reported(ladder):
    s = magic.hyperpolarizability(ladder, "g", 3e14, details=True)
    assert 0 <= s.truncation_ratio
    assert s.shift_at(0.0) == 0.0


def test_hyper_shift_small_beyond_detuning(bundled):
    for detuning in (0.1, 0.2, 0.5, 1.0):
        w = wavelength_nm_to_omega(807.1 - detuning)
        for lv in ("g7", "g5"):
            shift = magic.hyper_shift_hz(magic.hyperpolarizability(bundled, lv, w), INTENSITY)
            assert abs(shift) < 0.5


def test_light_shift_consistency():
    assert magic.light_shift_total(150.0, 1e6, 0.0) == 0.0
    expected = -pol.trap_depth(150.0, INTENSITY) * sc.k / sc.h
    assert magic.light_shift_total(150.0, 0.0, INTENSITY) == pytest.approx(expected, rel=1e-12)


def test_magic_with_hyperpolarizability(bundled):
    lam = magic.find_magic_with_hyper(bundled, INTENSITY, tolerance=1e-7)
    a_term, g_term = magic.magic_intensity_identity(bundled, lam, INTENSITY)
    assert abs(a_term + g_term) <= abs(g_term)
    plain = magic.find_magic(bundled).lambda_magic
    assert abs(lam - plain) < 0.01
