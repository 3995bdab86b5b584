"""Atomic level and line data: parsing, validation and merging.

Everything downstream (polarizabilities, hyperpolarizabilities, scattering
rates) reads an immutable :class:`LineCatalog`. Catalogs are built from
two CSV line lists, one calculated and one experimental, combined under a
named merge policy:

``calculation-first``
    Keep the calculated spectrum. Lines matched to an experimental line
    above ``split_nm`` take the experimental wavelength (and endpoints);
    the calculated rate is kept unless it is below ``weak_rate`` and a
    measured rate exists.

``combined``
    Matched lines above ``split_nm`` are taken from the experimental list
    wholesale, experimental lines above ``split_nm`` with no calculated
    partner are added, and everything else is calculated.

Energies are authoritative: transition frequencies are always computed from
the endpoint level energies, and the stored wavelength is checked against
them at construction time.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from .constants import DIPOLE_AU, c, epsilon_0, hbar, wavenumber_to_omega
from .errors import CatalogError, CatalogParseError, MergeAmbiguityError

PARITIES = ("odd", "even")
POLICIES = ("calculation-first", "combined")
DEFAULT_WINDOW = (250.0, 1200.0)

_SOURCE_ALIASES = {
    "exp": "experimental",
    "experimental": "experimental",
    "measured": "experimental",
    "calc": "calculated",
    "calculated": "calculated",
    "theory": "calculated",
}


def _normalize_source(value):
    try:
        return _SOURCE_ALIASES[value.strip().lower()]
    except KeyError:
        raise CatalogError(f"unknown source tag {value!r}") from None


@dataclass(frozen=True)
class Level:
    id: str
    energy: float  # cm^-1 above the ground state
    two_J: int
    parity: str
    config_label: str = ""
    source: str = "experimental"
    hyperfine_A: float | None = None  # MHz
    gJ: float | None = None

    def __post_init__(self):
        if not self.id:
            raise CatalogError("level id must be non-empty")
        if not math.isfinite(self.energy) or self.energy < 0:
            raise CatalogError(f"level {self.id}: energy must be finite and >= 0, got {self.energy}")
        if not isinstance(self.two_J, int) or self.two_J < 0:
            raise CatalogError(f"level {self.id}: two_J must be a non-negative integer, got {self.two_J}")
        if self.parity not in PARITIES:
            raise CatalogError(f"level {self.id}: parity must be odd or even, got {self.parity!r}")
        object.__setattr__(self, "source", _normalize_source(self.source))

    @property
    def J(self):
        return self.two_J / 2

    @property
    def omega(self):
        return wavenumber_to_omega(self.energy)


@dataclass(frozen=True)
class TransitionLine:
    upper_id: str
    lower_id: str
    vacuum_wavelength: float  # nm
    rate_A: float  # s^-1
    rate_source: str = "calculated"
    rme_sign: int = 1
    wavelength_source: str | None = None

    def __post_init__(self):
        if not (self.rate_A > 0 and math.isfinite(self.rate_A)):
            raise CatalogError(f"line {self.key}: rate_A must be positive, got {self.rate_A}")
        if not (self.vacuum_wavelength > 0 and math.isfinite(self.vacuum_wavelength)):
            raise CatalogError(f"line {self.key}: wavelength must be positive, got {self.vacuum_wavelength}")
        if self.rme_sign not in (1, -1):
            raise CatalogError(f"line {self.key}: rme_sign must be +1 or -1")
        object.__setattr__(self, "rate_source", _normalize_source(self.rate_source))
        if self.wavelength_source is None:
            object.__setattr__(self, "wavelength_source", self.rate_source)
        else:
            object.__setattr__(self, "wavelength_source", _normalize_source(self.wavelength_source))

    @property
    def key(self):
        return (self.upper_id, self.lower_id)


def check_line(line, levels, tolerance=0.005):
    """Validate one line against a mapping of level id -> Level."""
    try:
        upper = levels[line.upper_id]
        lower = levels[line.lower_id]
    except KeyError as exc:
        raise CatalogError(f"line {line.key}: unknown level {exc.args[0]!r}") from None
    if upper.energy <= lower.energy:
        raise CatalogError(f"line {line.key}: upper level energy must exceed lower level energy")
    if upper.parity == lower.parity:
        raise CatalogError(f"line {line.key}: electric-dipole line must connect opposite parities")
    if abs(upper.two_J - lower.two_J) > 2 or upper.two_J + lower.two_J == 0:
        raise CatalogError(f"line {line.key}: violates the dipole selection rule on J")
    expected = 1e7 / (upper.energy - lower.energy)
    if abs(line.vacuum_wavelength - expected) > tolerance * expected:
        raise CatalogError(
            f"line {line.key}: wavelength {line.vacuum_wavelength} nm disagrees with level energies "
            f"({expected:.3f} nm) by more than {tolerance:.2%}"
        )


@dataclass(frozen=True)
class LineCatalog:
    """Immutable, validated set of levels and dipole lines."""

    levels: tuple[Level, ...]
    lines: tuple[TransitionLine, ...]
    policy: str = "as-parsed"
    wavelength_window: tuple[float, float] = DEFAULT_WINDOW
    warnings: tuple[str, ...] = ()
    tolerance: float = 0.005
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)
    _cache: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        index = {}
        for level in self.levels:
            if level.id in index:
                raise CatalogError(f"duplicate level id {level.id!r}")
            index[level.id] = level
        seen = set()
        for line in self.lines:
            check_line(line, index, self.tolerance)
            if line.key in seen:
                raise CatalogError(f"duplicate line {line.key}")
            seen.add(line.key)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_cache", {})

    def level(self, level_id) -> Level:
        try:
            return self._index[level_id]
        except KeyError:
            raise CatalogError(f"level {level_id!r} not in catalog") from None

    def __contains__(self, level_id):
        return level_id in self._index

    def lines_of(self, level_id):
        """Lines with ``level_id`` as either endpoint."""
        self.level(level_id)
        return [ln for ln in self.lines if level_id in ln.key]

    def total_decay_rate(self, level_id):
        """Sum of catalog rates out of ``level_id`` (its inverse lifetime as far as the catalog knows)."""
        return sum(ln.rate_A for ln in self.lines if ln.upper_id == level_id)

    def line_omega(self, line):
        return self.level(line.upper_id).omega - self.level(line.lower_id).omega

    def digest(self):
        payload = {
            "levels": [
                [lv.id, lv.energy, lv.two_J, lv.parity, lv.source, lv.hyperfine_A, lv.gJ] for lv in self.levels
            ],
            "lines": [
                [ln.upper_id, ln.lower_id, ln.vacuum_wavelength, ln.rate_A, ln.rate_source, ln.rme_sign]
                for ln in self.lines
            ],
            "policy": self.policy,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------- parsing


def _rows(text):
    """Yield (line_number, fields) for non-blank, non-comment CSV rows."""
    numbered = [
        (n, raw) for n, raw in enumerate(text.splitlines(), start=1) if raw.strip() and not raw.lstrip().startswith("#")
    ]
    if not numbered:
        raise CatalogParseError("no header row found")
    reader = csv.reader(io.StringIO("\n".join(raw for _, raw in numbered)))
    for (n, _), row in zip(numbered, reader):
        yield n, [cell.strip() for cell in row]


def _header(rows, required, optional=()):
    n, header = next(rows)
    missing = [name for name in required if name not in header]
    if missing:
        raise CatalogParseError(f"header is missing columns {missing}", n)
    unknown = [name for name in header if name not in required and name not in optional]
    if unknown:
        raise CatalogParseError(f"unknown columns {unknown}", n)
    return header


def _float(value, what, n):
    try:
        out = float(value)
    except ValueError:
        raise CatalogParseError(f"cannot parse {what} {value!r}", n) from None
    if not math.isfinite(out):
        raise CatalogParseError(f"{what} must be finite", n)
    return out


def _optional_float(value, what, n):
    return None if value in ("", None) else _float(value, what, n)


LEVEL_COLUMNS = ("id", "energy_cm1", "two_J", "parity", "config", "source")
LEVEL_OPTIONAL = ("hfs_A_MHz", "gJ")
LINE_COLUMNS = ("upper_id", "lower_id", "lambda_nm", "A_per_s", "source", "sign")


def parse_levels(text) -> tuple[Level, ...]:
    """Parse a levels CSV (``id,energy_cm1,two_J,parity,config,source[,hfs_A_MHz,gJ]``)."""
    rows = _rows(text)
    header = _header(rows, LEVEL_COLUMNS, LEVEL_OPTIONAL)
    levels = []
    seen = set()
    for n, cells in rows:
        if len(cells) != len(header):
            raise CatalogParseError(f"expected {len(header)} fields, got {len(cells)}", n)
        rec = dict(zip(header, cells))
        try:
            two_J = int(rec["two_J"])
        except ValueError:
            raise CatalogParseError(f"two_J must be an integer, got {rec['two_J']!r}", n) from None
        if rec["id"] in seen:
            raise CatalogParseError(f"duplicate level id {rec['id']!r}", n)
        seen.add(rec["id"])
        try:
            levels.append(
                Level(
                    id=rec["id"],
                    energy=_float(rec["energy_cm1"], "energy", n),
                    two_J=two_J,
                    parity=rec["parity"].lower(),
                    config_label=rec["config"],
                    source=rec["source"],
                    hyperfine_A=_optional_float(rec.get("hfs_A_MHz"), "hfs_A_MHz", n),
                    gJ=_optional_float(rec.get("gJ"), "gJ", n),
                )
            )
        except CatalogParseError:
            raise
        except CatalogError as exc:
            raise CatalogParseError(str(exc), n) from None
    return tuple(levels)


def _parse_sign(value, n):
    if value in ("", "+", "+1", "1"):
        return 1
    if value in ("-", "-1"):
        return -1
    raise CatalogParseError(f"sign must be +1 or -1, got {value!r}", n)


def _level_map(levels):
    if isinstance(levels, Mapping):
        return dict(levels)
    return {lv.id: lv for lv in levels}


def parse_lines(text, levels, tolerance=0.005) -> tuple[TransitionLine, ...]:
    """Parse a lines CSV and validate every row against ``levels``."""
    index = _level_map(levels)
    rows = _rows(text)
    header = _header(rows, LINE_COLUMNS)
    lines = []
    for n, cells in rows:
        if len(cells) != len(header):
            raise CatalogParseError(f"expected {len(header)} fields, got {len(cells)}", n)
        rec = dict(zip(header, cells))
        try:
            line = TransitionLine(
                upper_id=rec["upper_id"],
                lower_id=rec["lower_id"],
                vacuum_wavelength=_float(rec["lambda_nm"], "lambda_nm", n),
                rate_A=_float(rec["A_per_s"], "A_per_s", n),
                rate_source=rec["source"],
                rme_sign=_parse_sign(rec["sign"], n),
            )
            check_line(line, index, tolerance)
        except CatalogParseError:
            raise
        except CatalogError as exc:
            raise CatalogParseError(str(exc), n) from None
        lines.append(line)
    return tuple(lines)


def format_lines(lines) -> str:
    """Serialize lines back to the lines-file CSV format."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(LINE_COLUMNS)
    for ln in lines:
        writer.writerow(
            [ln.upper_id, ln.lower_id, repr(ln.vacuum_wavelength), repr(ln.rate_A), ln.rate_source, f"{ln.rme_sign:+d}"]
        )
    return out.getvalue()


# ---------------------------------------------------------------- merging


def _match(calculated, experimental, index, match_tolerance, split_nm):
    """Map calculated-line position -> experimental line, refusing ambiguous pairings."""
    pairs = {}
    claimed = {}
    for i, calc in enumerate(calculated):
        cu, cl = index[calc.upper_id], index[calc.lower_id]
        candidates = []
        for exp in experimental:
            if exp.vacuum_wavelength <= split_nm:
                continue
            eu, el = index[exp.upper_id], index[exp.lower_id]
            if (eu.two_J, el.two_J) != (cu.two_J, cl.two_J):
                continue
            if abs(calc.vacuum_wavelength - exp.vacuum_wavelength) <= match_tolerance * exp.vacuum_wavelength:
                candidates.append(exp)
        if len(candidates) > 1:
            raise MergeAmbiguityError(
                f"calculated line {calc.key} at {calc.vacuum_wavelength} nm has {len(candidates)} experimental "
                f"candidates within {match_tolerance:.1%}",
                candidates,
            )
        if candidates:
            exp = candidates[0]
            if exp.key in claimed:
                other = calculated[claimed[exp.key]]
                raise MergeAmbiguityError(
                    f"experimental line {exp.key} at {exp.vacuum_wavelength} nm matches both calculated lines "
                    f"{other.key} and {calc.key}",
                    (other, calc),
                )
            claimed[exp.key] = i
            pairs[i] = exp
    return pairs


def merge_catalog(
    levels: Iterable[Level],
    calculated: Iterable[TransitionLine],
    experimental: Iterable[TransitionLine] = (),
    policy: str = "calculation-first",
    *,
    match_tolerance: float = 0.01,
    split_nm: float = 500.0,
    weak_rate: float = 1e5,
    wavelength_window: tuple[float, float] = DEFAULT_WINDOW,
    tolerance: float = 0.005,
) -> LineCatalog:
    """Combine calculated and experimental lines into a :class:`LineCatalog`.

    Calculated and experimental lines are paired when their endpoint J values
    agree and the wavelengths are within ``match_tolerance`` (relative); only
    experimental lines above ``split_nm`` take part. A calculated line with two
    candidates, or an experimental line claimed twice, raises
    :class:`MergeAmbiguityError`.
    """
    if policy not in POLICIES:
        raise CatalogError(f"unknown merge policy {policy!r}; expected one of {POLICIES}")
    levels = tuple(levels)
    calculated = tuple(calculated)
    experimental = tuple(experimental)
    index = _level_map(levels)
    for ln in calculated + experimental:
        check_line(ln, index, tolerance)

    pairs = _match(calculated, experimental, index, match_tolerance, split_nm)
    warnings = []
    merged = []
    for i, calc in enumerate(calculated):
        exp = pairs.get(i)
        if exp is None:
            if calc.vacuum_wavelength > split_nm and calc.rate_A < weak_rate and calc.rate_source == "calculated":
                warnings.append(
                    f"{calc.key}: calculated rate {calc.rate_A:g} s^-1 is below {weak_rate:g} s^-1 but no "
                    "measured rate is available; calculated value retained"
                )
            merged.append(calc)
            continue
        if policy == "combined":
            merged.append(replace(exp, rme_sign=calc.rme_sign))
            continue
        if calc.rate_A < weak_rate:
            rate, rate_source = exp.rate_A, exp.rate_source
        else:
            rate, rate_source = calc.rate_A, calc.rate_source
        merged.append(
            TransitionLine(
                upper_id=exp.upper_id,
                lower_id=exp.lower_id,
                vacuum_wavelength=exp.vacuum_wavelength,
                rate_A=rate,
                rate_source=rate_source,
                rme_sign=calc.rme_sign,
                wavelength_source=exp.wavelength_source,
            )
        )

    matched = {exp.key for exp in pairs.values()}
    for exp in experimental:
        if exp.key in matched or exp.vacuum_wavelength <= split_nm:
            continue
        if policy == "combined":
            merged.append(exp)
        else:
            warnings.append(f"{exp.key}: experimental line at {exp.vacuum_wavelength} nm has no calculated partner; not used")

    lo, hi = wavelength_window
    for ln in merged:
        if not lo <= ln.vacuum_wavelength <= hi:
            warnings.append(f"{ln.key}: {ln.vacuum_wavelength} nm lies outside the declared window {lo}-{hi} nm")

    return LineCatalog(
        levels=levels,
        lines=tuple(merged),
        policy=policy,
        wavelength_window=tuple(wavelength_window),
        warnings=tuple(warnings),
        tolerance=tolerance,
    )


# ---------------------------------------------------------------- dipole elements


def reduced_dipole_from_rate(line, levels):
    """Reduced dipole matrix element |<u||d||l>| in atomic units (e a0), with ``rme_sign`` applied.

    Inverts A = omega^3 |<u||d||l>|^2 / (3 pi eps0 hbar c^3 (2 J_u + 1)).
    """
    index = levels._index if isinstance(levels, LineCatalog) else _level_map(levels)
    upper, lower = index[line.upper_id], index[line.lower_id]
    omega = upper.omega - lower.omega
    if omega <= 0:
        raise CatalogError(f"line {line.key}: non-positive transition frequency")
    if line.rate_A <= 0:
        raise CatalogError(f"line {line.key}: rate must be positive")
    strength = 3 * math.pi * epsilon_0 * hbar * c**3 * (upper.two_J + 1) * line.rate_A / omega**3
    return line.rme_sign * math.sqrt(strength) / DIPOLE_AU


def rate_from_reduced_dipole(d_au, omega, two_J_upper):
    """Einstein A (s^-1) from a reduced dipole element in a.u. and the transition frequency (rad/s)."""
    if omega <= 0:
        raise CatalogError("transition frequency must be positive")
    d_si = d_au * DIPOLE_AU
    return omega**3 * d_si**2 / (3 * math.pi * epsilon_0 * hbar * c**3 * (two_J_upper + 1))


# ---------------------------------------------------------------- continuum tables


@dataclass(frozen=True, eq=False)
class CrossSectionTable:
    """Photoionization cross section of one level versus absorbed photon energy."""

    photon_energy: np.ndarray  # eV, strictly increasing
    sigma: np.ndarray  # Mb
    label: str = ""

    def __post_init__(self):
        energy = np.asarray(self.photon_energy, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if energy.ndim != 1 or energy.shape != sigma.shape:
            raise CatalogError("cross-section table needs matching 1-D energy and sigma columns")
        if energy.size == 0:
            raise CatalogError("cross-section table is empty")
        if energy.size > 1 and np.any(np.diff(energy) <= 0):
            raise CatalogError("photon energies must be strictly increasing")
        if np.any(sigma < 0) or not np.all(np.isfinite(sigma)):
            raise CatalogError("cross sections must be finite and non-negative")
        if energy[0] <= 0:
            raise CatalogError("photon energies must be positive")
        energy.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "photon_energy", energy)
        object.__setattr__(self, "sigma", sigma)

    @property
    def threshold(self):
        return float(self.photon_energy[0])


def parse_cross_sections(text, label="") -> CrossSectionTable:
    rows = _rows(text)
    _header(rows, ("photon_eV", "sigma_Mb"))
    energy, sigma = [], []
    for n, cells in rows:
        if len(cells) != 2:
            raise CatalogParseError(f"expected 2 fields, got {len(cells)}", n)
        energy.append(_float(cells[0], "photon_eV", n))
        sigma.append(_float(cells[1], "sigma_Mb", n))
    try:
        return CrossSectionTable(np.array(energy), np.array(sigma), label)
    except CatalogError as exc:
        raise CatalogParseError(str(exc)) from None


# ---------------------------------------------------------------- bundled data

LOWER_CLOCK_ID = "g7"
UPPER_CLOCK_ID = "g5"


def read_bundled(name) -> str:
    return resources.files("tmclock").joinpath("data").joinpath(name).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def bundled_levels():
    return parse_levels(read_bundled("levels.csv"))


@lru_cache(maxsize=None)
def bundled_lines(kind):
    """``kind`` is ``"calculated"`` or ``"experimental"``."""
    return parse_lines(read_bundled(f"lines_{kind}.csv"), bundled_levels())


@lru_cache(maxsize=None)
def bundled_catalog(policy="calculation-first") -> LineCatalog:
    return merge_catalog(bundled_levels(), bundled_lines("calculated"), bundled_lines("experimental"), policy)


@lru_cache(maxsize=None)
def bundled_cross_sections():
    """Continuum tables for the two clock levels, keyed by level id."""
    return {
        LOWER_CLOCK_ID: parse_cross_sections(read_bundled("xsec_g7.csv"), LOWER_CLOCK_ID),
        UPPER_CLOCK_ID: parse_cross_sections(read_bundled("xsec_g5.csv"), UPPER_CLOCK_ID),
    }
