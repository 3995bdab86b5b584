"""Physical constants and atomic-unit conversions.

All values come from :mod:`scipy.constants` (CODATA). Frequencies are
angular (rad/s) unless a name says otherwise; spectroscopic energies are
kept in cm^-1 as they appear in line lists.
"""

import math

import scipy.constants as sc

c = sc.c
h = sc.h
hbar = sc.hbar
k_B = sc.k
e = sc.e
epsilon_0 = sc.epsilon_0
mu_0 = sc.mu_0
m_u = sc.atomic_mass

a0 = sc.physical_constants["Bohr radius"][0]
E_h = sc.physical_constants["Hartree energy"][0]
mu_B = sc.physical_constants["Bohr magneton"][0]
mu_N = sc.physical_constants["nuclear magneton"][0]

# 1 a.u. of polarizability, J/(V/m)^2
ALPHA_AU_SI = 4 * math.pi * epsilon_0 * a0**3
# 1 a.u. of hyperpolarizability, C^4 m^4 / J^3
GAMMA_AU_SI = e**4 * a0**4 / E_h**3
# atomic units of electric field (V/m), dipole moment (C m), angular frequency (rad/s)
FIELD_AU = E_h / (e * a0)
DIPOLE_AU = e * a0
OMEGA_AU = E_h / hbar

TM169_MASS = 168.9342179 * m_u
TM_NUCLEAR_SPIN = 0.5


def wavenumber_to_omega(sigma_cm1):
    """Angular frequency (rad/s) of a wavenumber given in cm^-1."""
    return 2 * math.pi * c * 100.0 * sigma_cm1


def omega_to_wavenumber(omega):
    return omega / (2 * math.pi * c * 100.0)


def wavelength_nm_to_omega(lambda_nm):
    return 2 * math.pi * c / (lambda_nm * 1e-9)


def omega_to_wavelength_nm(omega):
    return 2 * math.pi * c / omega * 1e9


def ev_to_omega(energy_ev):
    return energy_ev * e / hbar


def polarizability_au_to_si(alpha_au):
    return alpha_au * ALPHA_AU_SI


def polarizability_si_to_au(alpha_si):
    return alpha_si / ALPHA_AU_SI


def field_squared_from_intensity(intensity):
    """|E|^2 in (V/m)^2 for a field E = 1/2 E0 exp(-i w t) + c.c. of intensity I (W/m^2)."""
    return 2.0 * intensity / (c * epsilon_0)


def kw_per_cm2(value):
    """Convert kW/cm^2 to W/m^2."""
    return value * 1e7
