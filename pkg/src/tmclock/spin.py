"""Magnetic dipole-dipole dynamics of a few F=4 atoms in a 2D lattice plane.

The quantization axis is normal to the plane, so every inter-atomic vector
is in-plane and the pair interaction

    U = mu0 (gF muB)^2 / (4 pi r^3) [F1.F2 - 3 (F1.r)(F2.r)]

becomes, with phi the in-plane angle of r,

    Fz Fz - (F+F- + F-F+)/4 - 3/4 (e^{-2i phi} F+F+ + e^{2i phi} F-F-).

Hamiltonians are stored in Hz (energy / h). Times are in seconds internally;
traces carry milliseconds for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .angular import twice
from .constants import h, mu_0, mu_B
from .errors import NoCrossingError

MAX_DIMENSION = 6561
DEFAULT_SPACING_NM = 400.0

# central atom first, neighbours filled in the order +x, -x, +y, -y
_NEIGHBOURS = ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class SpinGeometry:
    positions: tuple  # (x, y) in units of the lattice spacing
    spacing_nm: float = DEFAULT_SPACING_NM
    central_index: int = 0

    def __post_init__(self):
        pos = tuple(tuple(float(v) for v in p) for p in self.positions)
        if any(len(p) != 2 for p in pos):
            raise ValueError("positions must be 2D coordinates")
        if len(set(pos)) != len(pos):
            raise ValueError("atom positions must be pairwise distinct")
        if not 0 <= self.central_index < max(len(pos), 1):
            raise ValueError("central_index out of range")
        if self.spacing_nm <= 0:
            raise ValueError("spacing must be positive")
        object.__setattr__(self, "positions", pos)

    @property
    def n_atoms(self):
        return len(self.positions)

    def scaled(self, factor):
        return SpinGeometry(self.positions, self.spacing_nm * factor, self.central_index)


def lattice_geometry(n_atoms, spacing_nm=DEFAULT_SPACING_NM):
    """Pair, line, T and plus shapes for N = 2, 3, 4, 5 around a central atom at the origin."""
    if not 1 <= n_atoms <= len(_NEIGHBOURS):
        raise ValueError(f"lattice geometry defined for 1..{len(_NEIGHBOURS)} atoms")
    return SpinGeometry(_NEIGHBOURS[:n_atoms], spacing_nm, 0)


def spin_operators(F, m_values):
    """Fz and F+ restricted to the listed projections (ladder elements of the full F multiplet)."""
    m = np.asarray(m_values, dtype=float)
    d = len(m)
    Fz = np.diag(m)
    Fp = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            if math.isclose(m[j], m[i] + 1):
                Fp[j, i] = math.sqrt(F * (F + 1) - m[i] * (m[i] + 1))
    return Fz, Fp


def projections(F, subspace="full"):
    tF = twice(F)
    full = [k / 2 for k in range(-tF, tF + 1, 2)]
    if subspace == "full":
        return full
    if subspace in ("trunc", "truncated"):
        if tF < 4 or tF % 2:
            raise ValueError("the truncated subspace m in -2..2 needs integer F >= 2")
        return [float(k) for k in range(-2, 3)]
    raise ValueError(f"unknown subspace {subspace!r}")


def dipolar_coefficient(r_m, gF=1.0):
    """mu0 (gF muB)^2 / (4 pi r^3 h) in Hz."""
    if r_m <= 0:
        raise ValueError("separation must be positive")
    return mu_0 * (gF * mu_B) ** 2 / (4 * math.pi * r_m**3 * h)


@dataclass(frozen=True)
class SpinSystem:
    F: float
    geometry: SpinGeometry
    subspace: str
    m_values: tuple
    hamiltonian: sp.csr_matrix  # Hz
    gF: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def local_dim(self):
        return len(self.m_values)

    @property
    def dimension(self):
        return self.hamiltonian.shape[0]

    def basis_projections(self):
        """(dimension, N) array with the m value of every atom in every basis state."""
        d, n = self.local_dim, self.geometry.n_atoms
        idx = np.arange(self.dimension)
        digits = np.stack([(idx // d ** (n - 1 - k)) % d for k in range(n)], axis=1)
        return np.asarray(self.m_values)[digits]

    def product_state(self, m=0):
        """Normalized |m> x ... x |m>."""
        if m not in self.m_values:
            raise ValueError(f"m={m} not in the {self.subspace} subspace")
        i = list(self.m_values).index(m)
        d, n = self.local_dim, self.geometry.n_atoms
        psi = np.zeros(self.dimension, dtype=complex)
        psi[sum(i * d**k for k in range(n))] = 1.0
        return psi


def _embed(op, site, n, d):
    mats = [sp.identity(d, format="csr")] * n
    mats = list(mats)
    mats[site] = sp.csr_matrix(op)
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), mats)


def build_hamiltonian(geometry, F=4, subspace="full", gF=1.0, max_dimension=MAX_DIMENSION):
    m_values = tuple(projections(F, subspace))
    d, n = len(m_values), geometry.n_atoms
    dim = d**n
    if dim > max_dimension:
        raise ValueError(f"Hilbert-space dimension {dim} exceeds the limit {max_dimension}")
    F = twice(F) / 2
    Fz, Fp = spin_operators(F, m_values)
    Fm = Fp.T
    H = sp.csr_matrix((dim, dim), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            r = np.subtract(geometry.positions[j], geometry.positions[i])
            dist = math.hypot(*r) * geometry.spacing_nm * 1e-9
            phi = math.atan2(r[1], r[0])
            coef = dipolar_coefficient(dist, gF)
            zi, zj = _embed(Fz, i, n, d), _embed(Fz, j, n, d)
            pi, pj = _embed(Fp, i, n, d), _embed(Fp, j, n, d)
            mi, mj = _embed(Fm, i, n, d), _embed(Fm, j, n, d)
            pair = (
                zi @ zj
                - 0.25 * (pi @ mj + mi @ pj)
                - 0.75 * (np.exp(-2j * phi) * (pi @ pj) + np.exp(2j * phi) * (mi @ mj))
            )
            H = H + coef * pair
    H = H.tocsr()
    H.eliminate_zeros()
    if H.nnz and np.max(np.abs(H.data.imag)) < 1e-14 * np.max(np.abs(H.data)):
        H = H.real.tocsr()
    return SpinSystem(F, geometry, "full" if subspace == "full" else "trunc", m_values, H, gF)


def _check_hermitian(H):
    diff = H - H.conj().T
    scale = max(abs(H).max(), 1e-300) if H.nnz else 1.0
    if diff.nnz and abs(diff).max() > 1e-12 * scale:
        raise ValueError("Hamiltonian is not Hermitian")


def _check_state(psi, dim):
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (dim,):
        raise ValueError(f"state must have shape ({dim},)")
    if abs(np.vdot(psi, psi).real - 1.0) > 1e-10:
        raise ValueError("initial state is not normalized")
    return psi


def _parity_blocks(system):
    key = "blocks"
    if key not in system._cache:
        total = system.basis_projections().sum(axis=1)
        parity = np.rint(2 * total).astype(int) % 4  # distinguishes even/odd total M for half-integer F too
        system._cache[key] = [np.flatnonzero(parity == p) for p in np.unique(parity)]
    return system._cache[key]


def _eigensystem(system, block_index):
    key = ("eig", block_index)
    if key not in system._cache:
        idx = _parity_blocks(system)[block_index]
        Hb = system.hamiltonian[idx][:, idx].toarray()
        system._cache[key] = np.linalg.eigh(Hb)
    return system._cache[key]


def _active_blocks(system, psi):
    return [b for b, idx in enumerate(_parity_blocks(system)) if np.any(psi[idx] != 0)]


def state_at(system, times_s, initial_state=None, method="auto", chunk=256):
    """Full state vectors psi(t) as a (len(times), dimension) array."""
    _check_hermitian(system.hamiltonian)
    psi0 = system.product_state(0 if 0 in system.m_values else system.m_values[0]) if initial_state is None else initial_state
    psi0 = _check_state(psi0, system.dimension)
    t = np.atleast_1d(np.asarray(times_s, dtype=float))
    if method == "auto":
        method = "eigh" if system.dimension <= 7000 else "krylov"
    out = np.zeros((t.size, system.dimension), dtype=complex)
    if system.hamiltonian.nnz == 0:
        out[:] = psi0
        return out
    if method == "krylov":
        A = (-2j * np.pi) * system.hamiltonian.astype(complex)
        for k, tk in enumerate(t):
            out[k] = expm_multiply(A * tk, psi0)
        return out
    for b in _active_blocks(system, psi0):
        idx = _parity_blocks(system)[b]
        w, v = _eigensystem(system, b)
        coeff = v.conj().T @ psi0[idx]
        for s in range(0, t.size, chunk):
            phases = np.exp(-2j * np.pi * np.outer(w, t[s : s + chunk]))
            out[s : s + chunk, idx] = (v @ (coeff[:, None] * phases)).T
    return out


@dataclass(frozen=True)
class SpinTrace:
    t_ms: np.ndarray
    populations: np.ndarray  # (len(t), local_dim), central atom
    m_values: tuple

    def population(self, m=0):
        return self.populations[:, list(self.m_values).index(m)]

    @property
    def p0(self):
        return self.population(0)


def evolve(system, time_grid_ms, initial_state=None, method="auto", chunk=256):
    """Reduced populations P_central(m, t) on ``time_grid_ms``."""
    _check_hermitian(system.hamiltonian)
    psi0 = system.product_state(0) if initial_state is None else initial_state
    psi0 = _check_state(psi0, system.dimension)
    t_ms = np.asarray(time_grid_ms, dtype=float)
    t = t_ms * 1e-3
    central = system.basis_projections()[:, system.geometry.central_index]
    labels = np.searchsorted(np.asarray(system.m_values), central)
    pops = np.zeros((t.size, system.local_dim))
    for s in range(0, t.size, chunk):
        amp = state_at(system, t[s : s + chunk], psi0, method, chunk)
        prob = np.abs(amp) ** 2
        for k in range(system.local_dim):
            pops[s : s + chunk, k] = prob[:, labels == k].sum(axis=1)
    return SpinTrace(t_ms, pops, tuple(system.m_values))


def infinite_time_average(system, m=0, initial_state=None, degeneracy_tol=1e-9):
    """Long-time average of P_central(m) from the diagonal ensemble (degenerate levels handled)."""
    psi0 = system.product_state(0) if initial_state is None else initial_state
    psi0 = _check_state(psi0, system.dimension)
    central = system.basis_projections()[:, system.geometry.central_index]
    total = 0.0
    for b in _active_blocks(system, psi0):
        idx = _parity_blocks(system)[b]
        w, v = _eigensystem(system, b)
        mask = central[idx] == m
        coeff = v.conj().T @ psi0[idx]
        scale = max(np.max(np.abs(w)), 1e-300)
        edges = np.flatnonzero(np.diff(w) > degeneracy_tol * scale) + 1
        for group in np.split(np.arange(len(w)), edges):
            phi = v[:, group] @ coeff[group]
            total += float(np.sum(np.abs(phi[mask]) ** 2))
    return total


def relaxation_time(t_ms, trace, threshold=0.7):
    """First time (ms) the trace falls to ``threshold``, linearly interpolated between samples."""
    t_ms = np.asarray(t_ms, dtype=float)
    p = np.asarray(trace, dtype=float)
    if t_ms.shape != p.shape or t_ms.size < 2:
        raise ValueError("time grid and trace must have equal length >= 2")
    below = np.flatnonzero(p <= threshold)
    if below.size == 0:
        raise NoCrossingError(f"trace never reaches {threshold} within {t_ms[-1]} ms")
    k = below[0]
    if k == 0:
        return float(t_ms[0])
    t0, t1, p0, p1 = t_ms[k - 1], t_ms[k], p[k - 1], p[k]
    return float(t0 + (threshold - p0) * (t1 - t0) / (p1 - p0))


def pair_shift(m, r_m, gF=1.0):
    """Dipolar frequency shift (Hz) of two atoms both in |m> at separation ``r_m`` (metres)."""
    if r_m <= 0:
        raise ValueError("separation must be positive")
    return mu_0 * (m * gF * mu_B) ** 2 / (4 * math.pi * r_m**3 * h)


def truncation_error(full_trace, truncated_trace, window_ms):
    """Maximum |P_full - P_trunc| of the central m=0 population inside ``window_ms``."""
    t1, p1 = _trace_arrays(full_trace)
    t2, p2 = _trace_arrays(truncated_trace)
    if t1.shape != t2.shape or not np.allclose(t1, t2, rtol=0, atol=1e-12):
        raise ValueError("traces are sampled on different time grids")
    lo, hi = window_ms
    mask = (t1 >= lo) & (t1 <= hi)
    if not mask.any():
        raise ValueError("window contains no samples")
    return float(np.max(np.abs(p1[mask] - p2[mask])))


def _trace_arrays(trace):
    if isinstance(trace, SpinTrace):
        return trace.t_ms, trace.p0
    t, p = trace
    return np.asarray(t, dtype=float), np.asarray(p, dtype=float)
