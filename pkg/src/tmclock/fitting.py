"""Analysis models for the lifetime and lattice-polarizability measurements."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .constants import TM169_MASS, a0, c
from .errors import FitError


@dataclass(frozen=True)
class DecayTrace:
    """Normalized population decayed to the ground level versus time (ms)."""

    t: np.ndarray
    n: np.ndarray
    sigma: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        n = np.asarray(self.n, dtype=float)
        if t.ndim != 1 or t.shape != n.shape:
            raise ValueError("t and n must be 1-D arrays of equal length")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise ValueError("t must be non-negative and strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "n", n)
        if self.sigma is not None:
            s = np.asarray(self.sigma, dtype=float)
            if s.shape != t.shape or np.any(s <= 0):
                raise ValueError("sigma must be positive and match t")
            object.__setattr__(self, "sigma", s)

    @classmethod
    def from_csv(cls, text):
        rows = [r for r in text.splitlines() if r.strip() and not r.lstrip().startswith("#")]
        header = [h.strip() for h in rows[0].split(",")]
        if header[:2] != ["t_ms", "n"]:
            raise ValueError("expected header t_ms,n[,sigma]")
        data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]], dtype=float)
        if data.ndim != 2 or data.shape[1] != len(header):
            raise ValueError("ragged trace file")
        sigma = data[:, 2] if len(header) > 2 else None
        return cls(data[:, 0], data[:, 1], sigma)


@dataclass(frozen=True)
class SaturationFit:
    N0: float
    tau: float  # ms
    covariance: np.ndarray

    @property
    def dN0(self):
        return float(math.sqrt(self.covariance[0, 0]))

    @property
    def dtau(self):
        return float(math.sqrt(self.covariance[1, 1]))

    def as_record(self):
        return {"N0": self.N0, "dN0": self.dN0, "tau_ms": self.tau, "dtau_ms": self.dtau}


def saturation_model(t, N0, tau):
    return N0 * -np.expm1(-t / tau)


def fit_saturation(trace):
    """Least-squares fit of N0 (1 - exp(-t/tau)); 1 sigma errors from the covariance."""
    t, n = trace.t, trace.n
    if t.size < 4:
        raise FitError("at least 4 samples are needed")
    if np.ptp(n) == 0:
        raise FitError("degenerate trace: all populations equal")
    # initial guess from the plateau and the 1 - 1/e crossing
    N0 = float(n[-3:].mean()) or float(n.max())
    above = np.nonzero(n >= (1 - math.exp(-1)) * N0)[0]
    tau0 = float(t[above[0]]) if above.size and t[above[0]] > 0 else float(t[-1]) / 3
    if t[-1] < tau0:
        raise FitError("trace does not span one decay time")
    with warnings.catch_warnings():
        warnings.simplefilter("error", OptimizeWarning)
        try:
            p, cov = curve_fit(
                saturation_model,
                t,
                n,
                p0=(N0, tau0),
                sigma=trace.sigma,
                absolute_sigma=trace.sigma is not None,
                maxfev=10000,
            )
        except (RuntimeError, OptimizeWarning) as exc:
            raise FitError(f"fit did not converge: {exc}") from exc
    if not np.all(np.isfinite(cov)) or p[1] <= 0:
        raise FitError("fit did not converge to a finite decay time")
    if p[1] > t[-1]:
        raise FitError(f"fitted decay time {p[1]:.4g} exceeds the trace span {t[-1]:.4g}")
    return SaturationFit(float(p[0]), float(p[1]), cov)


def synthetic_trace(tau=112.0, N0=1.0, noise=0.0, t_max=600.0, samples=40, seed=None):
    """Synthetic saturation-recovery trace with Gaussian noise relative to N0."""
    rng = np.random.default_rng(seed)
    t = np.linspace(t_max / samples, t_max, samples)
    n = saturation_model(t, N0, tau)
    if noise:
        n = n + rng.normal(0.0, noise * N0, size=t.size)
        return DecayTrace(t, n, np.full(t.size, noise * N0))
    return DecayTrace(t, n)


@dataclass(frozen=True)
class TrapConfig:
    power: float  # W
    wavelength: float  # m
    waist: float | None = None  # m
    mass: float = TM169_MASS  # kg

    def __post_init__(self):
        for name in ("power", "wavelength", "mass"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.waist is not None and not self.waist > 0:
            raise ValueError("waist must be positive")


def parametric_frequencies(config, alpha_au):
    """Axial and radial trap frequencies (Hz) at the lattice centre."""
    if config.waist is None:
        raise ValueError("waist is required")
    if alpha_au < 0:
        raise ValueError("polarizability must be non-negative")
    w0, lam, P, m = config.waist, config.wavelength, config.power, config.mass
    f_a = 4 / (w0 * lam) * math.sqrt(2 * a0**3 * alpha_au * P / (c * m))
    f_r = 4 / (math.pi * w0**2) * math.sqrt(a0**3 * alpha_au * P / (c * m))
    return f_a, f_r


def waist_for_radial(config, alpha_au, f_r):
    """Waist that gives radial frequency ``f_r`` for the given power and polarizability."""
    return math.sqrt(4 / (math.pi * f_r) * math.sqrt(a0**3 * alpha_au * config.power / (c * config.mass)))


@dataclass(frozen=True)
class AlphaEstimate:
    alpha: float  # a.u.
    rel_uncertainty: float  # log-space, from the quadrature of relative input errors
    lower: float
    upper: float

    def as_record(self):
        return {"alpha_au": self.alpha, "lower_au": self.lower, "upper_au": self.upper, "rel_uncertainty": self.rel_uncertainty}


def invert_polarizability(f_a, f_r, power, wavelength, mass=TM169_MASS, df_a=0.0, df_r=0.0, dpower=0.0):
    """Polarizability (a.u.) from the two trap frequencies with the waist eliminated.

    The relative error 4 df_a/f_a + 2 df_r/f_r + dP/P (in quadrature) is applied
    multiplicatively, so the band is asymmetric about the central value.
    """
    for name, v in (("f_a", f_a), ("f_r", f_r), ("power", power), ("wavelength", wavelength), ("mass", mass)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    alpha = f_a**4 * wavelength**4 * c * mass / (64 * math.pi**2 * a0**3 * power * f_r**2)
    rel = math.hypot(4 * df_a / f_a, 2 * df_r / f_r, dpower / power)
    return AlphaEstimate(alpha, rel, alpha * math.exp(-rel), alpha * math.exp(rel))
