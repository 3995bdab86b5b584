"""Differential light shift of the clock states, magic-wavelength search and hyperpolarizability.

The clock states are |J=7/2, F=4, m=0> (lower) and |J=5/2, F=3, m=0>
(upper) for linear polarization along the quantization axis. The
continuum contribution enters the magic-wavelength search only as a
constant ``continuum_offset`` (its uncertainty band), unless cross-section
tables are passed explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import polarizability as pol
from .angular import wigner_3j
from .catalog import LOWER_CLOCK_ID, UPPER_CLOCK_ID, reduced_dipole_from_rate
from .constants import (
    ALPHA_AU_SI,
    E_h,
    FIELD_AU,
    GAMMA_AU_SI,
    OMEGA_AU,
    TM_NUCLEAR_SPIN,
    field_squared_from_intensity,
    h,
    omega_to_wavelength_nm,
    wavelength_nm_to_omega,
)
from .errors import NoSignChangeError, ResonanceError


@dataclass(frozen=True)
class ClockState:
    level: str
    F: float
    m: float = 0


LOWER_STATE = ClockState(LOWER_CLOCK_ID, 4, 0)
UPPER_STATE = ClockState(UPPER_CLOCK_ID, 3, 0)
DRIVING_LINE_NM = 807.1


def state_alpha(catalog, state, omega, cross_sections=None, *, I=TM_NUCLEAR_SPIN, exclusion=pol.DEFAULT_EXCLUSION):
    """Total polarizability (a.u.) of one |J F m> state; continuum included only if a table is given."""
    lv = catalog.level(state.level)
    value = pol.alpha_scalar_J(catalog, lv, omega, exclusion=exclusion)
    factor = pol.tensor_JF_factor(lv.J, state.F, I) * pol.m_factor(state.F, state.m)
    if factor:
        value = value + factor * pol.alpha_tensor_J(catalog, lv, omega, exclusion=exclusion)
    if cross_sections is not None and state.level in cross_sections:
        value = value + pol.alpha_continuum(cross_sections[state.level], 0.0, omega, exclusion=exclusion)
    return value


def differential_alpha(
    catalog,
    omega,
    state_pair=(LOWER_STATE, UPPER_STATE),
    continuum_offset=0.0,
    cross_sections=None,
    *,
    exclusion=pol.DEFAULT_EXCLUSION,
):
    """alpha(upper) - alpha(lower) + continuum_offset, in a.u."""
    lower, upper = state_pair
    return (
        state_alpha(catalog, upper, omega, cross_sections, exclusion=exclusion)
        - state_alpha(catalog, lower, omega, cross_sections, exclusion=exclusion)
        + continuum_offset
    )


def _poles_nm(catalog, state_pair):
    out = []
    for st in state_pair:
        lv = catalog.level(st.level)
        for t in pol._terms(catalog, lv):
            out.append((omega_to_wavelength_nm(t.omega_l), t.line))
    return out


def sign_changes(values):
    s = np.sign(np.asarray(values, dtype=float))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def scan_differential(catalog, wavelengths_nm, continuum_offset=0.0, state_pair=(LOWER_STATE, UPPER_STATE)):
    """Delta alpha on a wavelength grid; points refused by pole exclusion come back as NaN."""
    lam = np.asarray(wavelengths_nm, dtype=float)
    out = np.full(lam.shape, np.nan)
    for i, x in enumerate(lam):
        try:
            out[i] = differential_alpha(catalog, wavelength_nm_to_omega(x), state_pair, continuum_offset)
        except ResonanceError:
            pass
    return out


@dataclass(frozen=True)
class MagicSearchResult:
    lambda_magic: float  # nm
    bracket: tuple[float, float]
    slope: float  # a.u./nm
    continuum_offset: float
    attractive: bool
    alpha_lower: float
    alpha_upper: float
    detuning_nm: float  # driving line minus lambda_magic; positive means blue of the line

    def as_record(self):
        return {
            "lambda_magic_nm": self.lambda_magic,
            "bracket_nm": list(self.bracket),
            "slope_au_per_nm": self.slope,
            "continuum_offset_au": self.continuum_offset,
            "attractive": self.attractive,
            "alpha_lower_au": self.alpha_lower,
            "alpha_upper_au": self.alpha_upper,
            "detuning_nm": self.detuning_nm,
        }


def find_magic(
    catalog,
    bracket=(806.0, 807.05),
    tolerance=1e-4,
    continuum_offset=0.0,
    *,
    state_pair=(LOWER_STATE, UPPER_STATE),
    driving_nm=DRIVING_LINE_NM,
    cross_sections=None,
):
    """Bisect Delta alpha(lambda) inside ``bracket`` (nm) down to ``tolerance`` (nm).

    A pole inside the bracket is an error unless it is the driving line
    (within 0.05 nm of ``driving_nm``); in that case the search is confined
    to the side of the pole that carries a sign change, blue side first.
    """
    lo, hi = sorted(map(float, bracket))
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")

    def f(lam):
        return differential_alpha(
            catalog, wavelength_nm_to_omega(lam), state_pair, continuum_offset, cross_sections
        )

    inside = [(lam, line) for lam, line in _poles_nm(catalog, state_pair) if lo < lam < hi]
    segments = [(lo, hi)]
    for lam, line in inside:
        if abs(lam - driving_nm) > 0.05:
            raise ResonanceError(f"pole at {lam:.4f} nm ({line.key}) lies inside the bracket", line)
        gap = max(10 * tolerance, 1e-5 * lam)
        segments = [(lo, lam - gap), (lam + gap, hi)]

    for a, b in segments:
        fa, fb = f(a), f(b)
        if fa == 0.0:
            a_root, bracket_out = a, (a, a)
            break
        if fb == 0.0:
            a_root, bracket_out = b, (b, b)
            break
        if np.sign(fa) != np.sign(fb):
            # plain bisection keeps the final sign-change bracket, which the result reports
            while b - a > tolerance:
                mid = 0.5 * (a + b)
                fm = f(mid)
                if fm == 0.0:
                    a, b = mid, mid
                    break
                if np.sign(fm) == np.sign(fa):
                    a, fa = mid, fm
                else:
                    b, fb = mid, fm
            a_root, bracket_out = 0.5 * (a + b), (a, b)
            break
    else:
        raise NoSignChangeError(f"Delta alpha does not change sign in ({lo}, {hi}) nm")

    step = max(tolerance, 1e-4)
    slope = (f(a_root + step) - f(a_root - step)) / (2 * step)
    omega = wavelength_nm_to_omega(a_root)
    alpha_lower = state_alpha(catalog, state_pair[0], omega, cross_sections)
    alpha_upper = state_alpha(catalog, state_pair[1], omega, cross_sections)
    return MagicSearchResult(
        lambda_magic=a_root,
        bracket=bracket_out,
        slope=slope,
        continuum_offset=continuum_offset,
        attractive=bool(alpha_lower > 0 and alpha_upper > 0),
        alpha_lower=alpha_lower,
        alpha_upper=alpha_upper,
        detuning_nm=driving_nm - a_root,
    )


# ---------------------------------------------------------------- hyperpolarizability


def _projection(two_J):
    # smallest non-negative m_J available to the level
    return 0 if two_J % 2 == 0 else 0.5


def dipole_z_matrix(catalog, m=None):
    """Matrix of <i, m|d_z|j, m> (a.u.) over catalog levels, in catalog order.

    ``m`` defaults to m_J = 1/2 for half-integer J (0 for integer J).
    """
    index = {lv.id: i for i, lv in enumerate(catalog.levels)}
    n = len(catalog.levels)
    D = np.zeros((n, n))
    for line in catalog.lines:
        u, l = catalog.level(line.upper_id), catalog.level(line.lower_id)
        mm = _projection(u.two_J) if m is None else m
        if abs(mm) > u.J or abs(mm) > l.J:
            continue
        phase = -1 if int(round(u.J - mm)) % 2 else 1
        value = phase * wigner_3j(u.J, 1, l.J, -mm, 0, mm) * reduced_dipole_from_rate(line, catalog)
        D[index[u.id], index[l.id]] = value
        D[index[l.id], index[u.id]] = value
    return D


def _gamma_parts(D, w, g, omega, keep=None):
    # D: dipole matrix, w: level frequencies relative to g (a.u.), omega: array (a.u.)
    mask = np.ones(len(w), dtype=bool) if keep is None else keep.copy()
    mask[g] = False
    dg = D[g] * mask
    Dk = D * mask[None, :] * mask[:, None]
    om = np.atleast_1d(omega)[:, None]
    wk = np.where(mask, w, np.inf)[None, :]
    wm = w[None, :]

    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(dg != 0, dg * wm / (om**2 - wm**2), 0.0)
        b = np.where(dg != 0, dg / (wm - om), 0.0)
        cc = np.where(dg != 0, dg / (wm + om), 0.0)
        ua, ub, uc = a @ Dk, b @ Dk, cc @ Dk
        t1 = 4 * np.sum(np.where(ua != 0, ua**2 / wk, 0.0), axis=1)
        t2 = np.sum(np.where(ub != 0, ub**2 / (wk - 2 * om), 0.0), axis=1)
        t3 = np.sum(np.where(uc != 0, uc**2 / (wk + 2 * om), 0.0), axis=1)
        gamma_plus = 4 * (t1 + t2 + t3)
        s1 = np.sum(np.where(dg != 0, dg**2 * wm / (om**2 - wm**2), 0.0), axis=1)
        s2 = np.sum(np.where(dg != 0, dg**2 * (om**2 + 3 * wm**2) / (om**2 - wm**2) ** 2, 0.0), axis=1)
        gamma_minus = 8 * s1 * s2
    return gamma_plus, gamma_minus


@dataclass(frozen=True)
class HyperpolarizabilitySample:
    omega: float
    gamma: float  # a.u.
    truncation_ratio: float = float("nan")

    def shift_at(self, intensity):
        """Fourth-order light shift in Hz at antinode intensity ``intensity`` (W/m^2)."""
        return hyper_shift_hz(self.gamma, intensity)


def hyperpolarizability(catalog, level, omega, *, exclusion=pol.DEFAULT_EXCLUSION, details=False):
    """Scalar hyperpolarizability (a.u.) of ``level`` at angular frequency ``omega`` (rad/s).

    Intermediate sums run over catalog levels only. With ``details`` a
    :class:`HyperpolarizabilitySample` is returned whose ``truncation_ratio``
    is the smallest single-intermediate-level contribution relative to the total.
    """
    lv = catalog.level(level if isinstance(level, str) else level.id)
    ids = [x.id for x in catalog.levels]
    g = ids.index(lv.id)
    D = dipole_z_matrix(catalog)
    w = np.array([(x.omega - lv.omega) for x in catalog.levels]) / OMEGA_AU
    om = np.abs(np.atleast_1d(np.asarray(omega, dtype=float))) / OMEGA_AU

    coupled = np.flatnonzero(D[g])
    for j in coupled:
        if np.any(np.abs(om - abs(w[j])) <= exclusion * abs(w[j])):
            raise ResonanceError(f"one-photon resonance with level {ids[j]}", None)
    second = np.flatnonzero(np.any(D[coupled], axis=0)) if coupled.size else []
    for k in second:
        if k == g:
            continue
        if np.any(np.abs(2 * om - abs(w[k])) <= exclusion * abs(w[k])):
            raise ResonanceError(f"two-photon resonance with level {ids[k]}", None)

    gp, gm = _gamma_parts(D, w, g, om)
    gamma = (gp + gm) / 4
    value = float(gamma[0]) if np.ndim(omega) == 0 else gamma
    if not details:
        return value
    if np.ndim(omega) != 0:
        raise ValueError("details are available for a scalar omega only")
    ratio = float("nan")
    if gamma[0] != 0 and coupled.size:
        contributions = []
        for j in coupled:
            keep = np.ones(len(w), dtype=bool)
            keep[j] = False
            p, q = _gamma_parts(D, w, g, om, keep)
            contributions.append(abs(gamma[0] - (p[0] + q[0]) / 4))
        ratio = min(contributions) / abs(gamma[0])
    return HyperpolarizabilitySample(omega=float(omega), gamma=value, truncation_ratio=ratio)


def _field_au_squared(intensity):
    return field_squared_from_intensity(intensity) / FIELD_AU**2


def hyper_shift_hz(gamma_au, intensity):
    """-gamma |E|^4 / 64 expressed in Hz."""
    return -gamma_au * _field_au_squared(intensity) ** 2 / 64 * E_h / h


def light_shift_total(alpha_au, gamma_au, intensity):
    """Light shift in Hz: -(alpha/4)|E|^2/h - (gamma/64)|E|^4/h."""
    e2 = field_squared_from_intensity(intensity)
    return -alpha_au * ALPHA_AU_SI * e2 / 4 / h - gamma_au * GAMMA_AU_SI * e2**2 / 64 / h


def differential_light_shift(catalog, lam_nm, intensity, continuum_offset=0.0, state_pair=(LOWER_STATE, UPPER_STATE)):
    """Total clock-frequency light shift (upper minus lower, Hz) including hyperpolarizability."""
    omega = wavelength_nm_to_omega(lam_nm)
    lower, upper = state_pair
    d_alpha = differential_alpha(catalog, omega, state_pair, continuum_offset)
    d_gamma = hyperpolarizability(catalog, upper.level, omega) - hyperpolarizability(catalog, lower.level, omega)
    return light_shift_total(d_alpha, d_gamma, intensity)


def find_magic_with_hyper(catalog, intensity, bracket=(806.0, 807.05), tolerance=1e-4, continuum_offset=0.0):
    """Wavelength where the full differential light shift, alpha and gamma terms together, vanishes."""
    from scipy.optimize import brentq

    lo, hi = bracket

    def f(lam):
        return differential_light_shift(catalog, lam, intensity, continuum_offset)

    if np.sign(f(lo)) == np.sign(f(hi)):
        raise NoSignChangeError(f"total light shift does not change sign in ({lo}, {hi}) nm")
    return brentq(f, lo, hi, xtol=tolerance)


def magic_intensity_identity(catalog, lam_nm, intensity, continuum_offset=0.0):
    """Return (alpha term, gamma term) of the differential shift in Hz at ``lam_nm``."""
    omega = wavelength_nm_to_omega(lam_nm)
    d_alpha = differential_alpha(catalog, omega, continuum_offset=continuum_offset)
    d_gamma = hyperpolarizability(catalog, UPPER_CLOCK_ID, omega) - hyperpolarizability(catalog, LOWER_CLOCK_ID, omega)
    return light_shift_total(d_alpha, 0.0, intensity), light_shift_total(0.0, d_gamma, intensity)


__all__ = [
    "ClockState",
    "LOWER_STATE",
    "UPPER_STATE",
    "MagicSearchResult",
    "HyperpolarizabilitySample",
    "state_alpha",
    "differential_alpha",
    "scan_differential",
    "sign_changes",
    "find_magic",
    "find_magic_with_hyper",
    "hyperpolarizability",
    "dipole_z_matrix",
    "hyper_shift_hz",
    "light_shift_total",
    "differential_light_shift",
    "magic_intensity_identity",
]
