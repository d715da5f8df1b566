import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quiverdm.kernels import (
    ConvergenceError,
    SingularMatrixError,
    expm_2pii,
    in_sigma1,
    lifted_log,
    psi,
    psi_inv,
    resolved_spectrum,
    spectral_split,
    spectrum,
    strip_log,
)

TWO_PI_I = 2j * math.pi
N = np.array([[0, 1], [0, 0]], dtype=complex)

# frozen from a 30-digit mpmath evaluation of the scalar formulas
LOG_OF_TWO = 1 - 0.1103178000763258j
EXP_06PI_MINUS_1 = -1.3090169943749475 + 0.9510565162951536j


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b))


@pytest.mark.parametrize(
    "lam, expected",
    [(0, True), (1, False), (0.5 - 3j, True), (0.3j, True), (-0.3j, False), (1 - 0.2j, True),
     (1 + 0.2j, False), (-1e-3, False), (1.001, False)],
)
def test_in_sigma1_boundary_rules(lam, expected):
    assert in_sigma1(lam) is expected


def test_in_sigma1_tolerance_relaxes_both_sides():
    assert in_sigma1(-1e-12 + 0.1j, 1e-9)
    assert in_sigma1(1 + 1e-12 - 0.1j, 1e-9)
    assert not in_sigma1(-1e-6, 1e-9)


def test_spectrum_examples():
    assert np.allclose(sorted(spectrum(np.eye(2)).real), [1, 1])
    assert np.allclose(spectrum(N), [0, 0])
    assert np.allclose(sorted(spectrum(np.diag([0.3, -1])).real), [-1, 0.3])
    with pytest.raises(ValueError):
        spectrum(np.ones((2, 3)))


def test_resolved_spectrum_averages_jordan_scatter():
    rng = np.random.default_rng(3)
    j = np.diag([0.0, 0.0, 0.0]) + np.diag([1.0, 1.0], 1)
    r = rng.standard_normal((3, 3))
    a = r @ j @ np.linalg.inv(r) + 1j * 1e-13
    assert np.abs(resolved_spectrum(a)).max() < 1e-9


def test_expm_2pii_examples():
    assert rel(expm_2pii(np.eye(3)), np.eye(3)) < 1e-13
    assert rel(expm_2pii([[0.5]]), [[-1]]) < 1e-15
    assert rel(expm_2pii(N), [[1, TWO_PI_I], [0, 1]]) < 1e-15


def test_strip_log_examples():
    assert np.abs(strip_log(np.eye(3))).max() < 1e-15
    assert rel(strip_log([[-1]]), [[0.5]]) < 1e-15
    assert rel(strip_log([[2]]), [[LOG_OF_TWO]]) < 1e-15
    assert rel(expm_2pii(strip_log([[2]])), [[2]]) < 1e-14


def test_lifted_log_on_axis_rule():
    assert lifted_log(0.5).imag == 0
    assert lifted_log(2.0).imag == pytest.approx(2 * math.pi)
    assert lifted_log(1.0).imag == 0
    assert 0 < lifted_log(-1).imag < 2 * math.pi


def test_strip_log_rejects_singular():
    with pytest.raises(SingularMatrixError):
        strip_log([[1, 1], [1, 1]])


def test_strip_log_of_unipotent_jordan_block():
    f = expm_2pii(N)
    assert rel(strip_log(f), N) < 1e-15


def test_strip_log_mixed_sheets_in_one_block():
    # eigenvalues 0.97 + 0.01i and 0.02 - 0.01i map close to each other across the cut
    g = np.array([[0.97 + 0.01j, 0.3], [0, 0.02 + 0.01j]])
    assert rel(strip_log(expm_2pii(g)), g) < 1e-12


def test_psi_examples():
    assert rel(psi([[0]]), [[TWO_PI_I]]) < 1e-15
    assert rel(psi([[0.5]]), [[-4]]) < 1e-14
    assert rel(psi(N), [[TWO_PI_I, -2 * math.pi**2], [0, TWO_PI_I]]) < 1e-14


def test_psi_inv_examples():
    assert rel(psi_inv([[0]]), [[1 / TWO_PI_I]]) < 1e-15
    with pytest.raises(SingularMatrixError):
        psi_inv([[1]])
    with pytest.raises(SingularMatrixError):
        psi_inv([[-2]])
    expected = [[1 / TWO_PI_I, -0.5], [0, 1 / TWO_PI_I]]
    assert rel(np.linalg.inv(np.array([[TWO_PI_I, -2 * math.pi**2], [0, TWO_PI_I]])), expected) < 1e-15
    assert rel(psi_inv(N), expected) < 1e-14


def test_psi_of_scalar_matches_closed_form():
    assert psi([[0.3]])[0, 0] * 0.3 == pytest.approx(EXP_06PI_MINUS_1, rel=1e-14)


def test_spectral_split_projects_onto_nilpotent_part():
    rng = np.random.default_rng(0)
    b = np.zeros((4, 4), dtype=complex)
    b[0, 1] = 1
    b[2, 2], b[3, 3] = 0.7, -0.4 + 0.2j
    r = rng.standard_normal((4, 4))
    b = r @ b @ np.linalg.inv(r)
    p = spectral_split(b)
    assert np.linalg.norm(p @ p - p) < 1e-12
    assert np.linalg.norm(p @ b - b @ p) < 1e-12
    assert np.trace(p).real == pytest.approx(2)
    assert np.linalg.norm(np.linalg.matrix_power(b @ p, 2)) < 1e-10
    assert np.abs(spectral_split(np.eye(2))).max() == 0
    assert np.allclose(spectral_split(N), np.eye(2))


def cmat(draw, rows, cols, scale=1.0):
    re = draw(st.lists(st.floats(-scale, scale), min_size=rows * cols, max_size=rows * cols))
    im = draw(st.lists(st.floats(-scale, scale), min_size=rows * cols, max_size=rows * cols))
    return (np.array(re) + 1j * np.array(im)).reshape(rows, cols)


@st.composite
def square(draw, max_size=5, scale=1.0):
    d = draw(st.integers(1, max_size))
    return cmat(draw, d, d, scale)


@st.composite
def composable(draw):
    p, q = draw(st.integers(1, 4)), draw(st.integers(1, 4))
    return cmat(draw, p, q), cmat(draw, q, p)


@settings(max_examples=60, deadline=None)
@given(square())
def test_psi_series_identity(a):
    lhs = psi(a) @ a
    rhs = expm_2pii(a) - np.eye(a.shape[0])
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * (1 + np.linalg.norm(rhs))
    assert np.linalg.norm(a @ psi(a) - rhs) <= 1e-10 * (1 + np.linalg.norm(rhs))


@settings(max_examples=60, deadline=None)
@given(composable())
def test_psi_intertwines_rectangular(pair):
    a, b = pair
    lhs, rhs = a @ psi(b @ a), psi(a @ b) @ a
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * (1 + np.linalg.norm(lhs))


@settings(max_examples=60, deadline=None)
@given(square(scale=3.0))
def test_strip_log_inverts_exp(f):
    if np.linalg.svd(f, compute_uv=False)[-1] <= 1e-6 * np.linalg.norm(f, 2):
        return
    try:
        g = strip_log(f)
    except ConvergenceError:
        pytest.fail("strip_log failed on an invertible matrix")
    assert np.linalg.norm(expm_2pii(g) - f) <= 1e-9 * np.linalg.norm(f)
    assert all(in_sigma1(lam, 1e-9) for lam in resolved_spectrum(g))


@settings(max_examples=40, deadline=None)
@given(square(max_size=4), st.floats(-2, 2), st.floats(-2, 2))
def test_strip_log_preserves_commutant(f, c1, c2):
    f = f + 2 * np.eye(f.shape[0])
    if np.linalg.svd(f, compute_uv=False)[-1] <= 1e-6 * np.linalg.norm(f, 2):
        return
    h = c1 * f + c2 * f @ f + np.eye(f.shape[0])
    g = strip_log(f)
    assert np.linalg.norm(h @ g - g @ h) <= 1e-9 * (1 + np.linalg.norm(h) * np.linalg.norm(g))


def test_expm_triangular_with_nearly_equal_diagonal():
    # scipy's triangular shortcut divides by the diagonal gap; closed form is [[1, 0], [-2 pi, 1]]
    a = np.array([[-1, 0], [1j, -1 + 1e-13]])
    assert rel(expm_2pii(a), [[1, 0], [-2 * math.pi, 1]]) < 1e-11
    assert rel(expm_2pii(a.T), [[1, -2 * math.pi], [0, 1]]) < 1e-11


def _jordan(lams, sizes, seed, cond=5.0):
    from quiverdm.quiver import well_conditioned
    rng = np.random.default_rng(seed)
    blocks = [lam * np.eye(k) + np.diag(np.ones(k - 1), 1) for lam, k in zip(lams, sizes)]
    j = np.zeros((sum(sizes),) * 2, dtype=complex)
    at = 0
    for b in blocks:
        j[at:at + len(b), at:at + len(b)] = b
        at += len(b)
    s = well_conditioned(rng, len(j), cond)
    return s @ j @ np.linalg.inv(s)


@pytest.mark.parametrize("mu", [0.3, 1.0, 2.5])
def test_strip_log_of_large_jordan_block_on_the_axis(mu):
    # rounding scatters the 5-fold eigenvalue across the cut; the mean decides the branch
    f = _jordan([mu], [5], seed=1)
    g = strip_log(f)
    assert rel(expm_2pii(g), f) < 1e-9
    assert all(in_sigma1(lam, 1e-9) for lam in resolved_spectrum(g))


def test_strip_log_keeps_neighbour_on_its_own_sheet():
    # a defective eigenvalue just inside Re = 0 and a simple one near Re = 1 with close exponentials
    g0 = _jordan([1e-6 - 0.1918j, 0.992 - 0.1783j], [3, 1], seed=2)
    assert rel(strip_log(expm_2pii(g0)), g0) < 1e-8


def test_strip_log_same_sheet_defective_pair_near_cut():
    g0 = _jordan([1 - 1e-6 - 0.2081j, 1 - 1e-6 - 0.2078j], [3, 2], seed=3)
    assert rel(strip_log(expm_2pii(g0)), g0) < 1e-8


def test_strip_log_of_tiny_modulus():
    f = np.array([[2.9e-274 + 2.9e-274j]])
    assert rel(expm_2pii(strip_log(f)), f) < 1e-12


@settings(max_examples=40, deadline=None)
@given(square(max_size=4, scale=2.0), st.integers(0, 10**6))
def test_strip_log_respects_similarity(f, seed):
    from quiverdm.quiver import well_conditioned
    f = f + 2 * np.eye(f.shape[0])
    if np.linalg.svd(f, compute_uv=False)[-1] <= 1e-3 * np.linalg.norm(f, 2):
        return
    r = well_conditioned(np.random.default_rng(seed), f.shape[0], 10.0)
    rinv = np.linalg.inv(r)
    lhs = strip_log(r @ f @ rinv)
    rhs = r @ strip_log(f) @ rinv
    assert np.linalg.norm(lhs - rhs) <= 1e-8 * np.linalg.cond(r) * max(1.0, np.linalg.norm(rhs))
