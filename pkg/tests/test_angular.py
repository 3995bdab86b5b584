import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import S
from sympy.physics.wigner import wigner_3j as sym3j, wigner_6j as sym6j

from tmclock.angular import lande_gF, twice, wigner_3j, wigner_6j
from tmclock.constants import mu_B, mu_N

half = st.integers(0, 12).map(lambda k: Fraction(k, 2))


def cg_recursion(j1, m1, j2, m2, J, M):
    """<j1 m1 j2 m2|J M> by lowering |J J> built from the highest-weight state."""
    # build |J, J> in the product basis by requiring J+ |J J> = 0, then apply J- repeatedly
    basis = [(a, J - a) for a in np.arange(-j1, j1 + 1) if abs(J - a) <= j2 + 1e-9]

    def lad(j, m, s):
        return math.sqrt(j * (j + 1) - m * (m + s))

    # J+ acting on |a, b> gives coefficient into |a+1, b> and |a, b+1>
    n = len(basis)
    A = np.zeros((n + 1, n))
    index = {}
    for k, (a, b) in enumerate(basis):
        for (aa, bb), coef in (((a + 1, b), lad(j1, a, 1)), ((a, b + 1), lad(j2, b, 1))):
            if abs(aa) <= j1 + 1e-9 and abs(bb) <= j2 + 1e-9 and coef:
                key = (round(aa * 2), round(bb * 2))
                row = index.setdefault(key, len(index))
                A[row, k] += coef
    _, _, vt = np.linalg.svd(A[: max(len(index), 1)])
    v = vt[-1]
    v = v / np.linalg.norm(v)
    # Condon-Shortley: coefficient with m1 = j1 is positive
    top = [k for k, (a, _) in enumerate(basis) if abs(a - j1) < 1e-9]
    if top and v[top[0]] < 0:
        v = -v
    state = {(round(2 * a), round(2 * b)): v[k] for k, (a, b) in enumerate(basis)}
    Mcur = J
    while Mcur > M + 1e-9:
        new = {}
        for (a2, b2), c in state.items():
            a, b = a2 / 2, b2 / 2
            if a > -j1 + 1e-9:
                key = (a2 - 2, b2)
                new[key] = new.get(key, 0.0) + c * lad(j1, a, -1)
            if b > -j2 + 1e-9:
                key = (a2, b2 - 2)
                new[key] = new.get(key, 0.0) + c * lad(j2, b, -1)
        norm = math.sqrt(sum(x * x for x in new.values()))
        state = {k: x / norm for k, x in new.items()}
        Mcur -= 1
    return state.get((round(2 * m1), round(2 * m2)), 0.0)


def test_3j_known_value():
    assert wigner_3j(1, 1, 2, 0, 0, 0) == pytest.approx(math.sqrt(2 / 15), rel=1e-14)


def test_3j_triangle_violation_is_zero():
    assert wigner_3j(1, 1, 3, 0, 0, 0) == 0.0
    assert wigner_3j(1, 1, 1, 1, 0, 0) == 0.0
    assert wigner_3j(1, 1, 2, 2, -2, 0) == 0.0


def test_3j_against_clebsch_gordan_recursion():
    for m in range(-3, 4):
        cg = cg_recursion(4, m, 1, 0, 3, m)
        expected = (-1) ** (4 - 1 - m) / math.sqrt(7) * cg
        assert wigner_3j(4, 1, 3, m, 0, -m) == pytest.approx(expected, abs=1e-12)


def test_3j_half_integer_against_recursion():
    for m2 in (-0.5, 0.5):
        for m1 in np.arange(-3.5, 3.6):
            M = m1 + m2
            if abs(M) > 3:
                continue
            cg = cg_recursion(3.5, m1, 0.5, m2, 3, M)
            expected = (-1) ** round(3.5 - 0.5 - M) / math.sqrt(7) * cg
            assert wigner_3j(3.5, 0.5, 3, m1, m2, -M) == pytest.approx(expected, abs=1e-12)


def _contraction_6j(j1, j2, j3, j4, j5, j6):
    # sum over magnetic quantum numbers of four 3j symbols
    r = lambda j: np.arange(-j, j + 0.5)
    total = 0.0
    for m1 in r(j1):
        for m2 in r(j2):
            m3 = -m1 - m2
            if abs(m3) > j3:
                continue
            a = wigner_3j(j1, j2, j3, -m1, -m2, -m3)
            if not a:
                continue
            for m5 in r(j5):
                m6 = m5 - m1
                if abs(m6) > j6:
                    continue
                b = wigner_3j(j1, j5, j6, m1, -m5, m6)
                m4 = m6 - m2
                if not b or abs(m4) > j4:
                    continue
                c = wigner_3j(j4, j2, j6, m4, m2, -m6)
                d = wigner_3j(j4, j5, j3, -m4, m5, m3)
                S = j1 + j2 + j3 + j4 + j5 + j6 - (m1 + m2 + m3 + m4 + m5 + m6)
                total += (-1) ** round(S) * a * b * c * d
    return total


def test_6j_against_3j_contraction():
    assert wigner_6j(1, 1, 2, 1, 1, 2) == pytest.approx(_contraction_6j(1, 1, 2, 1, 1, 2), abs=1e-13)
    js = [0.5 * k for k in range(0, 10)]
    rng = np.random.default_rng(3)
    checked = 0
    while checked < 60:
        args = tuple(float(x) for x in rng.choice(js, 6))
        ref = _contraction_6j(*args)
        assert wigner_6j(*args) == pytest.approx(ref, abs=1e-12)
        checked += ref != 0.0


def test_6j_triad_violation_is_zero():
    assert wigner_6j(1, 1, 3, 1, 1, 1) == 0.0
    assert wigner_6j(0.5, 0.5, 1, 0.5, 0.5, 3) == 0.0


def test_non_half_integer_rejected():
    with pytest.raises(ValueError):
        twice(0.3)


def _sym(x):
    return S(Fraction(x).limit_denominator())


@st.composite
def valid_3j(draw):
    j1, j2 = draw(half), draw(half)
    lo = abs(j1 - j2)
    j3 = lo + draw(st.integers(0, int(j1 + j2 - lo)))
    m1 = -j1 + draw(st.integers(0, int(2 * j1)))
    m2 = -j2 + draw(st.integers(0, int(2 * j2)))
    return j1, j2, j3, m1, m2, -m1 - m2


@settings(max_examples=4000)
@given(valid_3j())
def test_3j_matches_sympy(args):
    ref = float(sym3j(*[_sym(x) for x in args]))
    assert wigner_3j(*args) == pytest.approx(ref, rel=1e-12, abs=1e-14)


@settings(max_examples=2000)
@given(valid_3j())
def test_3j_symmetries(args):
    j1, j2, j3, m1, m2, m3 = args
    v = wigner_3j(*args)
    phase = (-1) ** int(j1 + j2 + j3)
    assert wigner_3j(j2, j3, j1, m2, m3, m1) == pytest.approx(v, abs=1e-14)
    assert wigner_3j(j2, j1, j3, m2, m1, m3) == pytest.approx(phase * v, abs=1e-14)
    assert wigner_3j(j1, j2, j3, -m1, -m2, -m3) == pytest.approx(phase * v, abs=1e-14)


@settings(max_examples=1000)
@given(half, half)
def test_3j_orthogonality(j1, j2):
    for j3 in np.arange(float(abs(j1 - j2)), float(j1 + j2) + 0.5):
        for m3 in np.arange(-j3, j3 + 0.5):
            total = sum(
                (2 * j3 + 1) * wigner_3j(j1, j2, j3, m1, -m1 - m3, m3) ** 2
                for m1 in np.arange(-float(j1), float(j1) + 0.5)
                if abs(-m1 - m3) <= j2
            )
            assert total == pytest.approx(1.0, abs=1e-12)


def _admissible(a, b, c):
    return abs(a - b) <= c <= a + b and (a + b + c) % 1 == 0


@settings(max_examples=3000)
@given(half, half, half, half)
def test_6j_orthogonality(j1, j2, j3, j4):
    grid = [abs(j1 - j2) + k for k in range(int(j1 + j2 - abs(j1 - j2)) + 1)]
    jp = [abs(j1 - j4) + k for k in range(int(j1 + j4 - abs(j1 - j4)) + 1)]
    jp = [x for x in jp if _admissible(j3, j2, x)]
    for a in jp:
        for b in jp:
            total = sum((2 * j + 1) * wigner_6j(j1, j2, j, j3, j4, a) * wigner_6j(j1, j2, j, j3, j4, b) for j in grid)
            expected = 1 / (2 * a + 1) if a == b else 0.0
            assert total == pytest.approx(float(expected), abs=1e-12)


@settings(max_examples=2000)
@given(st.lists(st.integers(0, 8).map(lambda k: Fraction(k, 2)), min_size=6, max_size=6))
def test_6j_matches_sympy(args):
    j1, j2, j3, j4, j5, j6 = args
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(_admissible(*t) for t in triads):
        assert wigner_6j(*args) == 0.0
        return
    ref = float(sym6j(*[_sym(x) for x in args]))
    assert wigner_6j(*args) == pytest.approx(ref, rel=1e-12, abs=1e-14)


def _breit_rabi_slope(gJ, gI, A, J, I, F, m):
    """Slope dE/dB (in muB) of |F m> from direct diagonalization at small B."""
    dJ, dI = int(2 * J + 1), int(2 * I + 1)

    def ops(j):
        ms = np.arange(j, -j - 1, -1)
        jz = np.diag(ms)
        jp = np.diag(np.sqrt(j * (j + 1) - ms[1:] * (ms[1:] + 1)), 1)
        return jz, jp, jp.T

    Jz, Jp, Jm = ops(J)
    Iz, Ip, Im = ops(I)
    eJ, eI = np.eye(dJ), np.eye(dI)
    IJ = np.kron(Jz, Iz) + 0.5 * (np.kron(Jp, Im) + np.kron(Jm, Ip))
    Z = gJ * np.kron(Jz, eI) - gI * (mu_N / mu_B) * np.kron(eJ, Iz)
    Mz = np.kron(Jz, eI) + np.kron(eJ, Iz)
    B = 1e-7
    levels = []
    for b in (B, -B):
        w, v = np.linalg.eigh(A * IJ + b * Z)
        mexp = np.diag(v.T @ Mz @ v)
        # pick the state with the requested m in the requested hyperfine manifold
        manifold = w > 0 if F == J + I else w < 0
        sel = [k for k in range(len(w)) if abs(mexp[k] - m) < 1e-6 and manifold[k]]
        levels.append(w[sel[0]])
    return (levels[0] - levels[1]) / (2 * B) / m


@pytest.mark.parametrize("gJ, J, F", [(1.141189, 3.5, 4), (0.855, 2.5, 3)])
def test_lande_gF_against_hamiltonian_slope(gJ, J, F):
    slope = _breit_rabi_slope(gJ, 0.462, 1.0, J, 0.5, F, 1)
    assert lande_gF(gJ, 0.462, F, J, 0.5) == pytest.approx(slope, rel=1e-6)


def test_lande_gF_without_nuclear_spin():
    assert lande_gF(1.3, 0.0, 2.5, 2.5, 0) == pytest.approx(1.3)


def test_lande_gF_rejects_bad_F():
    with pytest.raises(ValueError):
        lande_gF(1.0, 0.0, 5, 3.5, 0.5)
