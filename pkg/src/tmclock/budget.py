"""Systematic shifts of the 1.14 um clock transition and the uncertainty budget.

Shifts are reported in mHz unless a name says otherwise; magnetic fields are
in gauss, temperatures in kelvin and distances in metres.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.integrate import quad

from .angular import lande_gF
from .constants import E_h, FIELD_AU, a0, c, e, epsilon_0, field_squared_from_intensity, h, hbar, k_B, mu_B, mu_N

GAUSS = 1e-4  # tesla
PAPER_BBR_COEFFICIENT = 1.17e-12  # Hz / (a.u. K^4), printed value kept for comparison
PAPER_XI = 6.00  # MHz/G, printed value kept for comparison


@dataclass(frozen=True)
class ClockConstants:
    dW_72: float = 1496.550e6  # Hz, hyperfine splitting of J=7/2
    dW_52: float = 2114.946e6  # Hz, hyperfine splitting of J=5/2
    g_72: float = 1.141189
    g_52: float = 0.855
    g_I: float = 0.462
    clock_frequency: float = 2.63e14  # Hz
    I: float = 0.5

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be positive")


TM = ClockConstants()


# ---------------------------------------------------------------- Zeeman


def zeeman_beta(constants=TM, include_nuclear=True):
    """Quadratic Zeeman coefficient of the m=0 -> m=0 clock line, Hz/G^2."""
    nuc = constants.g_I * mu_N if include_nuclear else 0.0

    def term(g, dW):
        if math.isinf(dW):
            return 0.0
        return (g * mu_B - nuc) ** 2 / (4 * h**2 * dW)

    beta_si = term(constants.g_52, constants.dW_52) - term(constants.g_72, constants.dW_72)
    return beta_si * GAUSS**2


def quadratic_zeeman_shift(B_gauss, constants=TM):
    """beta B^2 in mHz; warns outside the quadratic regime (|B| > 1 G)."""
    if abs(B_gauss) > 1.0:
        warnings.warn("bias field above 1 G: the quadratic approximation may not hold", RuntimeWarning, stacklevel=2)
    return zeeman_beta(constants) * B_gauss**2 * 1e3


def quadratic_zeeman_uncertainty(B_gauss, dB_gauss, constants=TM):
    """|2 beta B dB| in mHz."""
    return abs(2 * zeeman_beta(constants) * B_gauss * dB_gauss) * 1e3


def clock_gF(constants=TM):
    """(g_F of |7/2, F=4>, g_F of |5/2, F=3>) composed from g_J and g_I."""
    return (
        lande_gF(constants.g_72, constants.g_I, 4, 3.5, constants.I),
        lande_gF(constants.g_52, constants.g_I, 3, 2.5, constants.I),
    )


def zeeman_splitting_xi(g_F4=None, g_F3=None, constants=TM):
    """xi = 2 (4 g_F4 - 3 g_F3) muB / h in MHz/G; g-factors default to :func:`clock_gF`."""
    if g_F4 is None or g_F3 is None:
        d4, d3 = clock_gF(constants)
        g_F4 = d4 if g_F4 is None else g_F4
        g_F3 = d3 if g_F3 is None else g_F3
    return 2 * (4 * g_F4 - 3 * g_F3) * mu_B / h * GAUSS / 1e6


def field_uncertainty_mG(delta_f_hz, xi_mhz_per_gauss):
    """Bias-field readout uncertainty dB = df / xi, in mG."""
    if xi_mhz_per_gauss == 0:
        raise ValueError("xi must be non-zero")
    return delta_f_hz / (xi_mhz_per_gauss * 1e6) * 1e3


# ---------------------------------------------------------------- blackbody


def bbr_coefficient():
    """a0^3 pi^2 kB^4 / (15 c^3 hbar^4): static BBR shift per a.u. of polarizability per K^4, in Hz."""
    return a0**3 * math.pi**2 * k_B**4 / (15 * c**3 * hbar**4)


def bbr_shift(delta_alpha_au, T):
    """Static-limit BBR shift (mHz) for alpha_ground - alpha_clock = ``delta_alpha_au``."""
    if T < 0:
        raise ValueError("temperature must be non-negative")
    return bbr_coefficient() * delta_alpha_au * T**4 * 1e3


def bbr_uncertainty(delta_alpha_au, T, dT):
    """Shift uncertainty (mHz) from a temperature uncertainty dT, i.e. 4 dT/T times the shift."""
    if T == 0:
        return 0.0
    return abs(4 * dT / T * bbr_shift(delta_alpha_au, T))


def bbr_shift_full(delta_alpha, T, x_max=30.0):
    """BBR shift (mHz) integrated over the Planck spectrum with a frequency-dependent Delta alpha.

    ``delta_alpha`` maps angular frequency (rad/s) to alpha_ground - alpha_clock
    in a.u. The integral is cut at ``x_max`` kT; the static limit is recovered
    when ``delta_alpha`` is constant.
    """
    if T < 0:
        raise ValueError("temperature must be non-negative")
    if T == 0:
        return 0.0
    scale = k_B * T / hbar

    def integrand(x):
        return x**3 / math.expm1(x) * delta_alpha(x * scale) if x > 0 else 0.0

    value, _ = quad(integrand, 0.0, x_max, limit=200, epsabs=0.0, epsrel=1e-10)
    return a0**3 * scale**4 / (math.pi**2 * c**3) * value * 1e3


def catalog_delta_alpha(catalog, cross_sections=None, lower="g7", upper="g5"):
    """Callable omega -> alpha_s(lower) - alpha_s(upper), continuum included when tables are given."""
    from . import polarizability as pol

    def f(omega):
        d = pol.alpha_scalar_J(catalog, lower, omega) - pol.alpha_scalar_J(catalog, upper, omega)
        if cross_sections is not None:
            d += pol.alpha_continuum(cross_sections[lower], 0.0, omega, check=False)
            d -= pol.alpha_continuum(cross_sections[upper], 0.0, omega, check=False)
        return d

    return f


# ---------------------------------------------------------------- other shifts


def intensity_noise_shift(delta_gamma_term_hz, rel_intensity_noise):
    """-(dI/I) (Delta gamma / 64) I^2 in mHz, with the magic condition enforced on the alpha term."""
    return -rel_intensity_noise * delta_gamma_term_hz * 1e3


def hyper_term_hz(delta_gamma_au, intensity):
    """(Delta gamma / 64) |E|^4 in Hz for antinode intensity ``intensity`` (W/m^2)."""
    e_au = field_squared_from_intensity(intensity) / FIELD_AU**2
    return delta_gamma_au * e_au**2 / 64 * E_h / h


def vdw_shift(C6_au, r):
    """-C6 a0^6 E_h / (h r^6) in mHz."""
    if r <= 0:
        raise ValueError("separation must be positive")
    return -C6_au * a0**6 * E_h / (h * r**6) * 1e3


def quadrupole_shift(D_au, r):
    """D^2 / (4 pi eps0 r^5 h) in mHz for a quadrupole moment D in e a0^2."""
    if r <= 0:
        raise ValueError("separation must be positive")
    D = D_au * e * a0**2
    return D**2 / (4 * math.pi * epsilon_0 * r**5 * h) * 1e3


def line_pulling_bound(separation_hz, linewidth_hz):
    """Conservative incoherent line-pulling estimate gamma^2 / separation (Hz)."""
    if math.isinf(separation_hz):
        return 0.0
    if separation_hz <= linewidth_hz:
        raise ValueError("separation must exceed the linewidth for the bound to apply")
    return linewidth_hz**2 / separation_hz


# ---------------------------------------------------------------- budget


@dataclass(frozen=True)
class BudgetEntry:
    name: str
    shift: float  # mHz
    uncertainty: float  # mHz; uncorrected shifts carry their full magnitude
    fractional: float

    def as_record(self):
        return asdict(self)


@dataclass(frozen=True)
class BudgetConfig:
    temperature: float = 300.0  # K
    dtemperature: float = 3.0
    delta_alpha_au: float = 2.0  # static alpha_ground - alpha_clock
    bias_mG: float = 10.0
    dbias_mG: float = 0.1
    rin: float = 1e-3  # relative intensity noise dI/I
    intensity_kw_cm2: float = 50.0
    gamma_term_hz: float = 0.5  # bound on (Delta gamma/64) I^2, used unless delta_gamma_au is set
    delta_gamma_au: float | None = None
    tensor_shift_mHz: float = 0.5
    tensor_uncertainty_mHz: float = 0.5
    C6_au: float = 6000.0
    quadrupole_au: float = 0.5
    separation_nm: float = 400.0

    REQUIRED = ("temperature", "dtemperature", "bias_mG", "dbias_mG", "rin", "intensity_kw_cm2", "separation_nm")

    @classmethod
    def from_mapping(cls, data, require_all=True):
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise KeyError(f"unknown budget fields: {sorted(unknown)}")
        if require_all:
            missing = [k for k in cls.REQUIRED if k not in data]
            if missing:
                raise KeyError(f"missing budget fields: {missing}")
        return cls(**data)


@dataclass(frozen=True)
class Budget:
    entries: tuple
    total_shift: float  # mHz
    total_uncertainty: float  # mHz, quadrature sum
    total_fractional: float
    notes: dict

    def as_record(self):
        return {
            "rows": [e.as_record() for e in self.entries],
            "total_shift_mHz": self.total_shift,
            "total_uncertainty_mHz": self.total_uncertainty,
            "total_fractional": self.total_fractional,
            "notes": self.notes,
        }


def assemble_budget(config=None, constants=TM):
    """Build the five-row budget; the total uncertainty is the quadrature sum of the rows."""
    if config is None:
        config = BudgetConfig()
    elif not isinstance(config, BudgetConfig):
        config = BudgetConfig.from_mapping(dict(config))
    nu = constants.clock_frequency

    def entry(name, shift, unc):
        return BudgetEntry(name, float(shift), float(unc), float(unc) * 1e-3 / nu)

    B, dB = config.bias_mG * 1e-3, config.dbias_mG * 1e-3
    intensity = config.intensity_kw_cm2 * 1e7
    r = config.separation_nm * 1e-9
    if config.delta_gamma_au is not None:
        gamma_term = hyper_term_hz(config.delta_gamma_au, intensity)
    else:
        gamma_term = config.gamma_term_hz
    vdw = vdw_shift(config.C6_au, r)
    quad_ = quadrupole_shift(config.quadrupole_au, r)

    rows = (
        entry(
            "BBR",
            bbr_shift(config.delta_alpha_au, config.temperature),
            bbr_uncertainty(config.delta_alpha_au, config.temperature, config.dtemperature),
        ),
        entry("Zeeman", quadratic_zeeman_shift(B, constants), quadratic_zeeman_uncertainty(B, dB, constants)),
        entry("hyperpolarizability light shift", 0.0, abs(intensity_noise_shift(gamma_term, config.rin))),
        entry("tensor light shift", config.tensor_shift_mHz, config.tensor_uncertainty_mHz),
        entry("van der Waals and quadrupole", vdw + quad_, abs(vdw + quad_)),
    )
    total_unc = float(np.sqrt(sum(x.uncertainty**2 for x in rows)))
    notes = {
        "bbr_coefficient_from_constants": bbr_coefficient(),
        "bbr_coefficient_printed": PAPER_BBR_COEFFICIENT,
        "vdw_shift_mHz": vdw,
        "quadrupole_shift_mHz": quad_,
        "gamma_term_hz": gamma_term,
        "line_pulling_bound_hz": line_pulling_bound(20e3, 20.0),
        "line_pulling_printed_hz": "<1e-8",
    }
    return Budget(
        entries=rows,
        total_shift=float(sum(x.shift for x in rows)),
        total_uncertainty=total_unc,
        total_fractional=total_unc * 1e-3 / nu,
        notes=notes,
    )
