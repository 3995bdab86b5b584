"""Dynamic polarizabilities of the clock levels.

Discrete contributions are sums over catalog lines in terms of Einstein A
coefficients; the line frequency of each term is fixed by the level energies
and hyperfine splittings are neglected there. Results are in atomic units of
polarizability (4 pi eps0 a0^3) unless stated otherwise.

Every function that takes ``omega`` accepts a scalar or an array and
refuses frequencies within ``exclusion`` (relative) of any line.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .angular import twice, wigner_3j, wigner_6j
from .catalog import CrossSectionTable, Level, LineCatalog
from .constants import TM_NUCLEAR_SPIN, a0, c, ev_to_omega, hbar, k_B
from .errors import CatalogError, ResonanceError

DEFAULT_EXCLUSION = 1e-6


def _level(catalog, level):
    return catalog.level(level.id if isinstance(level, Level) else level)


@dataclass(frozen=True)
class _Term:
    line: object
    other: Level
    sign: int  # +1 if the other level lies above, -1 below
    omega_l: float  # |E_other - E_level| / hbar
    two_Ju: int
    two_Jd: int
    rate: float


def _terms(catalog: LineCatalog, level: Level):
    key = ("terms", level.id)
    cached = catalog._cache.get(key)
    if cached is not None:
        return cached
    out = []
    for line in catalog.lines_of(level.id):
        other = catalog.level(line.lower_id if line.upper_id == level.id else line.upper_id)
        sign = 1 if other.energy > level.energy else -1
        upper, lower = (other, level) if sign > 0 else (level, other)
        out.append(
            _Term(line, other, sign, abs(other.omega - level.omega), upper.two_J, lower.two_J, line.rate_A)
        )
    out = tuple(out)
    catalog._cache[key] = out
    return out


def check_poles(terms, omega, exclusion=DEFAULT_EXCLUSION):
    """Raise :class:`ResonanceError` if any |omega| lies within ``exclusion`` of a line frequency."""
    w = np.abs(np.atleast_1d(np.asarray(omega, dtype=float)))
    for t in terms:
        if np.any(np.abs(w - t.omega_l) <= exclusion * t.omega_l):
            raise ResonanceError(
                f"frequency within {exclusion:g} (relative) of the {t.line.vacuum_wavelength} nm line {t.line.key}",
                t.line,
            )


def _shape(omega, values):
    return float(values) if np.ndim(omega) == 0 else values


def _denominators(t, omega):
    w2 = np.asarray(omega, dtype=float) ** 2
    return t.omega_l**2 * (t.omega_l**2 - w2)


# ---------------------------------------------------------------- scalar and tensor


def alpha_scalar_J(catalog, level, omega, *, exclusion=DEFAULT_EXCLUSION):
    """Scalar polarizability of a fine-structure level (independent of F)."""
    lv = _level(catalog, level)
    terms = _terms(catalog, lv)
    check_poles(terms, omega, exclusion)
    total = np.zeros(np.shape(omega))
    pref = 0.5 * c**3 / a0**3
    for t in terms:
        total = total + t.sign * pref * (t.two_Ju + 1) / (lv.two_J + 1) * t.rate / _denominators(t, omega)
    return _shape(omega, total)


def _tensor_J_prefactor(two_J):
    J = two_J / 2
    if two_J < 2:
        return 0.0
    return math.sqrt(5 * J * (2 * J - 1) / (6 * (J + 1) * (2 * J + 1) * (2 * J + 3)))


def alpha_tensor_J(catalog, level, omega, *, exclusion=DEFAULT_EXCLUSION):
    """Tensor polarizability of a fine-structure level in the |J, m_J = J> convention."""
    lv = _level(catalog, level)
    terms = _terms(catalog, lv)
    check_poles(terms, omega, exclusion)
    total = np.zeros(np.shape(omega))
    pref = 3 * c**3 / a0**3 * _tensor_J_prefactor(lv.two_J)
    if pref == 0.0:
        return _shape(omega, total)
    J, twoJ = lv.J, lv.two_J
    for t in terms:
        Jp = t.other.J
        phase = -1 if ((twoJ + t.other.two_J) // 2) % 2 else 1
        six = wigner_6j(1, 1, 2, J, J, Jp)
        total = total + t.sign * pref * phase * six * (t.two_Ju + 1) * t.rate / _denominators(t, omega)
    return _shape(omega, total)


def tensor_JF_factor(J, F, I):
    """Ratio alpha^t_JF / alpha^t_J for hyperfine level F of a J level with nuclear spin I."""
    tJ, tF, tI = twice(J), twice(F), twice(I)
    if not (abs(tJ - tI) <= tF <= tJ + tI) or (tF + tJ + tI) % 2:
        raise ValueError(f"F={F} is outside the coupling range of J={J}, I={I}")
    J, F = tJ / 2, tF / 2
    if tJ < 2 or tF < 2:
        return 0.0
    phase = -1 if ((tI + tJ + tF) // 2) % 2 else 1
    root = math.sqrt(
        F * (2 * F - 1) * (2 * F + 1) * (2 * J + 3) * (2 * J + 1) * (J + 1) / ((2 * F + 3) * (F + 1) * (2 * J - 1) * J)
    )
    return phase * wigner_6j(F, J, I, J, F, 2) * root


def alpha_tensor_JF(catalog, level, F, I=TM_NUCLEAR_SPIN, omega=0.0, *, exclusion=DEFAULT_EXCLUSION):
    lv = _level(catalog, level)
    factor = tensor_JF_factor(lv.J, F, I)
    if factor == 0.0:
        check_poles(_terms(catalog, lv), omega, exclusion)
        return _shape(omega, np.zeros(np.shape(omega)))
    return factor * alpha_tensor_J(catalog, lv, omega, exclusion=exclusion)


def m_factor(F, m):
    """(3 m^2 - F(F+1)) / (F (2F - 1)); zero when F <= 1/2."""
    tF, tm = twice(F), twice(m)
    if abs(tm) > tF or (tF + tm) % 2:
        raise ValueError(f"|m|={m} is not a projection of F={F}")
    F, m = tF / 2, tm / 2
    if tF < 2:
        return 0.0
    return (3 * m * m - F * (F + 1)) / (F * (2 * F - 1))


def hyperfine_rate(rate_J, two_Ju, two_Jd, Fu, Fd, I):
    """Share of a fine-structure rate A(J_u -> J_d) carried by the F_u -> F_d component."""
    Ju, Jd = two_Ju / 2, two_Jd / 2
    return rate_J * (2 * Fd + 1) * (two_Ju + 1) * wigner_6j(Ju, Fu, I, Fd, Jd, 1) ** 2


def _f_range(J, I):
    tJ, tI = twice(J), twice(I)
    return [tF / 2 for tF in range(abs(tJ - tI), tJ + tI + 1, 2)]


def alpha_Fm(catalog, level, F, m, I=TM_NUCLEAR_SPIN, omega=0.0, *, exclusion=DEFAULT_EXCLUSION):
    """Polarizability of |J F m> from the hyperfine-resolved sum over intermediate |J' F'>."""
    lv = _level(catalog, level)
    if twice(F) not in [twice(x) for x in _f_range(lv.J, I)]:
        raise ValueError(f"F={F} is outside the coupling range of J={lv.J}, I={I}")
    m_factor(F, m)  # validates m
    terms = _terms(catalog, lv)
    check_poles(terms, omega, exclusion)
    total = np.zeros(np.shape(omega))
    pref = 1.5 * c**3 / a0**3
    for t in terms:
        for Fp in _f_range(t.other.J, I):
            Fu, Fd = (Fp, F) if t.sign > 0 else (F, Fp)
            three = wigner_3j(Fu, 1, Fd, -m, 0, m)
            if three == 0.0:
                continue
            rate = hyperfine_rate(t.rate, t.two_Ju, t.two_Jd, Fu, Fd, I)
            total = total + t.sign * pref * (2 * Fu + 1) * three**2 * rate / _denominators(t, omega)
    return _shape(omega, total)


# ---------------------------------------------------------------- continuum


def _refined(table: CrossSectionTable, refine):
    x = ev_to_omega(table.photon_energy)
    if refine <= 1 or x.size < 2:
        return x, table.sigma * 1e-22
    steps = np.linspace(0.0, 1.0, refine + 1)[:-1]
    xs = (x[:-1, None] + np.diff(x)[:, None] * steps).ravel()
    xs = np.append(xs, x[-1])
    return xs, np.interp(xs, x, table.sigma) * 1e-22


def _continuum_integral(x, sigma, omega):
    w2 = np.atleast_1d(np.asarray(omega, dtype=float)) ** 2
    integrand = sigma[None, :] / (x[None, :] ** 2 - w2[:, None])
    return trapezoid(integrand, x, axis=1)


def alpha_continuum(table, omega_n, omega, *, refine=8, exclusion=DEFAULT_EXCLUSION, check=True):
    """Continuum contribution to the scalar polarizability (a.u.).

    ``table`` holds sigma against the energy of the final continuum state,
    measured from the same origin as ``omega_n`` (pass ``omega_n=0`` for a
    table given against absorbed photon energy). Linear interpolation of sigma
    onto a grid ``refine`` times finer is integrated with the trapezoid rule;
    when ``check`` is set, a :class:`RuntimeWarning` is issued if halving the
    refinement changes the result by more than 1%.
    """
    if table is None:
        raise CatalogError("cross-section table is required")
    if table.photon_energy.size < 2:
        raise CatalogError("cross-section table needs at least two samples")
    x_abs, sigma = _refined(table, refine)
    x = x_abs - omega_n
    threshold = x[0]
    if threshold <= 0:
        raise CatalogError("continuum threshold lies below the level")
    w = np.abs(np.asarray(omega, dtype=float))
    if np.any(w >= threshold * (1 - exclusion)):
        raise ResonanceError(f"frequency at or above the photoionization threshold ({threshold:.4e} rad/s)")
    if not np.any(sigma):
        return _shape(omega, np.zeros(np.shape(omega)))
    value = c / (2 * math.pi**2) * _continuum_integral(x, sigma, omega) / a0**3
    if check and refine >= 2:
        x2, s2 = _refined(table, max(1, refine // 2))
        coarse = c / (2 * math.pi**2) * _continuum_integral(x2 - omega_n, s2, omega) / a0**3
        change = np.max(np.abs(coarse - value) / np.maximum(np.abs(value), 1e-300))
        if change > 0.01:
            warnings.warn(
                f"continuum quadrature changed by {change:.2%} when the grid was halved; supply a finer table",
                RuntimeWarning,
                stacklevel=2,
            )
    return _shape(omega, value.reshape(np.shape(omega)))


# ---------------------------------------------------------------- samples


@dataclass(frozen=True)
class PolarizabilitySample:
    omega: float
    alpha_s: float
    alpha_t: float  # alpha^t_J
    alpha_cont: float
    J: float
    I: float = TM_NUCLEAR_SPIN

    def tensor_for(self, F):
        return self.alpha_t * tensor_JF_factor(self.J, F, self.I)

    def total_for(self, m, F):
        return self.alpha_s + self.alpha_cont + self.tensor_for(F) * m_factor(F, m)


def sample(catalog, level, omega, cross_sections=None, *, I=TM_NUCLEAR_SPIN, exclusion=DEFAULT_EXCLUSION):
    lv = _level(catalog, level)
    cont = 0.0 if cross_sections is None else alpha_continuum(cross_sections, 0.0, omega, exclusion=exclusion)
    return PolarizabilitySample(
        omega=omega,
        alpha_s=alpha_scalar_J(catalog, lv, omega, exclusion=exclusion),
        alpha_t=alpha_tensor_J(catalog, lv, omega, exclusion=exclusion),
        alpha_cont=cont,
        J=lv.J,
        I=I,
    )


# ---------------------------------------------------------------- trap


def trap_depth(alpha_au, intensity):
    """Lattice depth in kelvin for polarizability ``alpha_au`` and antinode intensity in W/m^2."""
    if np.any(np.asarray(intensity) < 0):
        raise ValueError("intensity must be non-negative")
    return alpha_au * 2 * math.pi * a0**3 / (c * k_B) * intensity


def scattering_rate_00(catalog, level, F, intensity, omega, I=TM_NUCLEAR_SPIN, *, exclusion=DEFAULT_EXCLUSION):
    """Off-resonant scattering rate (s^-1) out of |J F m=0> at intensity ``intensity`` (W/m^2).

    The linewidth of each intermediate level is the total decay rate the
    catalog knows for the upper level of the pair.
    """
    lv = _level(catalog, level)
    terms = _terms(catalog, lv)
    check_poles(terms, omega, exclusion)
    w2 = np.asarray(omega, dtype=float) ** 2
    total = np.zeros(np.shape(omega))
    for t in terms:
        upper = t.other if t.sign > 0 else lv
        gamma_u = catalog.total_decay_rate(upper.id)
        if gamma_u == 0.0:
            continue
        wl2 = t.omega_l**2
        lineshape = (wl2 + w2) / (wl2 - w2) ** 2
        for Fp in _f_range(t.other.J, I):
            Fu, Fd = (Fp, F) if t.sign > 0 else (F, Fp)
            three = wigner_3j(Fu, 1, Fd, 0, 0, 0)
            if three == 0.0:
                continue
            rate = hyperfine_rate(t.rate, t.two_Ju, t.two_Jd, Fu, Fd, I)
            strength = 3 * math.pi * c**2 * rate / (hbar * t.omega_l**3)
            total = total + lineshape * strength * three**2 * (2 * Fu + 1) * gamma_u
    return _shape(omega, intensity * total)
