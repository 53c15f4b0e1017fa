"""Eigensolver tests: dense location, refinement, two-grid filtering."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from truncspec.eig import EigOptions, eigen_dense, refine, solve_operator, spurious_filter
from truncspec.expr import parse
from truncspec.operator import Grid1D, OperatorSpec, TridiagComplex, assemble

ZERO = parse("0*x")


def test_dense_matches_fd_box_formula():
    """FD Dirichlet Laplacian on (0, pi) has eigenvalues (4/h^2) sin^2(j h/2)."""
    g = Grid1D(0.0, math.pi, 60)
    A = assemble(OperatorSpec(potential=ZERO, interval=(0.0, math.pi)), g)
    got = np.sort(eigen_dense(A).real)
    j = np.arange(1, 61)
    want = np.sort(4.0 / g.h**2 * np.sin(j * g.h / 2.0) ** 2)
    assert np.allclose(got, want, rtol=1e-11)


def test_dense_handles_complex_potential():
    g = Grid1D(-4.0, 4.0, 120)
    A = assemble(OperatorSpec(potential=parse("i*x"), interval=(-4.0, 4.0)), g)
    got = eigen_dense(A)
    ref = np.linalg.eigvals(A.to_dense())
    # near-degenerate imaginary parts make positional comparison flaky: use
    # the worst nearest-neighbour distance between the two multisets
    d = np.abs(got[:, None] - ref[None, :]).min(axis=1).max()
    assert d < 1e-9 * A.norm_inf()


def test_dense_output_ordering():
    g = Grid1D(-3.0, 3.0, 50)
    A = assemble(OperatorSpec(potential=parse("i*x^3"), interval=(-3.0, 3.0)), g)
    vals = eigen_dense(A)
    keys = list(zip(vals.imag, vals.real))
    assert keys == sorted(keys)


def test_dense_splits_decoupled_blocks():
    # exact zero subdiagonal entry decouples the matrix; eigenvalues are the
    # union of the block spectra
    sub = np.array([1.0, 0.0, 1.0], dtype=complex)
    diag = np.array([1.0, 2.0, 5.0, 6.0], dtype=complex)
    sup = np.array([1.0, 3.0, 1.0], dtype=complex)
    A = TridiagComplex(sub, diag, sup)
    got = np.sort(eigen_dense(A).real)
    top = np.linalg.eigvals(np.array([[1.0, 1.0], [1.0, 2.0]]))
    bot = np.linalg.eigvals(np.array([[5.0, 1.0], [1.0, 6.0]]))
    want = np.sort(np.concatenate((top, bot)).real)
    assert np.allclose(got, want, atol=1e-12)


def test_dense_size_cap():
    A = TridiagComplex(np.zeros(5100), np.ones(5101), np.zeros(5100))
    with pytest.raises(ValueError):
        eigen_dense(A)


def test_refine_polishes_to_matrix_eigenvalue():
    g = Grid1D(-10.0, 10.0, 400)
    A = assemble(OperatorSpec(potential=parse("x^2"), interval=(-10.0, 10.0)), g)
    lam, psi, res = refine(A, 1.02, EigOptions())
    exact = eigen_dense(A)
    nearest = exact[np.argmin(np.abs(exact - lam))]
    assert abs(lam - nearest) < 1e-10 * A.norm_inf()
    assert res < 1e-10 * A.norm_inf()
    assert np.linalg.norm(psi) == pytest.approx(1.0, rel=1e-12)
    assert np.linalg.norm(A.matvec(psi) - lam * psi) == pytest.approx(res, rel=1e-6)


def test_refine_is_deterministic():
    g = Grid1D(-6.0, 6.0, 200)
    A = assemble(OperatorSpec(potential=parse("i*x^3"), interval=(-6.0, 6.0)), g)
    a1 = refine(A, 2.0 + 2.0j, EigOptions())
    a2 = refine(A, 2.0 + 2.0j, EigOptions())
    assert a1[0] == a2[0] and a1[2] == a2[2]
    assert np.array_equal(a1[1], a2[1])


def test_spurious_filter_trusts_resolved_modes():
    spec = OperatorSpec(potential=parse("x^2"), interval=(-8.0, 8.0))
    coarse = Grid1D(-8.0, 8.0, 320)
    spectrum = spurious_filter(spec, coarse, coarse.refined(), EigOptions(two_grid_tol=1e-3))
    assert len(spectrum.entries) > 0
    trusted = spectrum.trusted_values(extrapolated=True)
    assert len(trusted) >= 5
    # Richardson values for the lowest oscillator levels are near 1, 3, 5
    low = np.sort(trusted.real)[:3]
    assert np.allclose(low, [1.0, 3.0, 5.0], atol=1e-5)
    # dispersion at the top of the FD range never passes the filter
    untrusted = [e.lam for e in spectrum.entries if not e.trusted]
    assert len(untrusted) > 0


def test_spectrum_value_accessors():
    spec = OperatorSpec(potential=ZERO, interval=(0.0, math.pi))
    g = Grid1D(0.0, math.pi, 40)
    spectrum = spurious_filter(spec, g, g.refined(), EigOptions(two_grid_tol=1e-3))
    assert len(spectrum.all_values()) == 40
    plain = spectrum.trusted_values()
    extrap = spectrum.trusted_values(extrapolated=True)
    assert len(plain) == len(extrap) > 0
    assert not np.allclose(plain, extrap)  # extrapolation actually moves them
    # the extrapolated ground state is much closer to the true value 1
    assert abs(extrap[0] - 1.0) < abs(plain[0] - 1.0) / 50


def test_solve_operator_windowed_oscillator():
    spec = OperatorSpec(potential=parse("x^2"), interval=(-10.0, 10.0))
    spectrum = solve_operator(
        spec,
        window_centers=[1.0, 3.0, 5.0],
        window_radius=0.4,
        opts=EigOptions(ppw=80.0, two_grid_tol=1e-4),
    )
    vals = spectrum.trusted_values(extrapolated=True)
    assert len(vals) == 3
    assert np.allclose(np.sort(vals.real), [1.0, 3.0, 5.0], atol=1e-6)
    assert np.max(np.abs(vals.imag)) < 1e-8


def test_solve_operator_dense_route():
    # small interval, no windows: the dense path returns everything
    spec = OperatorSpec(potential=ZERO, interval=(0.0, math.pi))
    spectrum = solve_operator(spec, n=200, opts=EigOptions(two_grid_tol=1e-4))
    assert len(spectrum.all_values()) == 200
    assert spectrum.trusted_values().size > 0


def test_solve_operator_respects_vector_request():
    spec = OperatorSpec(potential=parse("x^2"), interval=(-8.0, 8.0))
    spectrum = solve_operator(
        spec, window_centers=[1.0], window_radius=0.3,
        opts=EigOptions(ppw=40.0, two_grid_tol=1e-3), want_vectors=True,
    )
    entries = [e for e in spectrum.entries if e.vector is not None]
    assert entries
    e = entries[0]
    assert np.linalg.norm(e.vector) == pytest.approx(1.0, rel=1e-10)


def test_options_validation():
    with pytest.raises(ValueError):
        EigOptions(two_grid_tol=0.0)
    with pytest.raises(ValueError):
        EigOptions(refine_iters=0)
    with pytest.raises(ValueError):
        EigOptions(dense_cap=1)


def _reversal_conjugation_matrix(rng: np.random.Generator, m: int) -> TridiagComplex:
    """Random tridiagonal with R A R = conj(A) (R the index reversal).

    Discretizations of -d^2 + even + i*odd on symmetric grids have this
    structure, which forces conjugation-closed spectra.
    """
    half = (m + 1) // 2
    q_half = rng.standard_normal(half) + 1j * rng.standard_normal(half)
    q = np.empty(m, dtype=complex)
    q[:half] = q_half
    q[m - half :] = np.conj(q_half[::-1])
    if m % 2 == 1:
        q[half - 1] = q_half[-1].real  # center entry must be its own conjugate
    off = np.full(m - 1, -1.0, dtype=complex)
    return TridiagComplex(off, 4.0 + q, off)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(8, 40))
def test_conjugation_closure_property(seed, m):
    rng = np.random.default_rng(seed)
    A = _reversal_conjugation_matrix(rng, m)
    vals = eigen_dense(A)
    conj = np.conj(vals)
    # Hausdorff distance between the spectrum and its conjugate
    d = np.abs(vals[:, None] - conj[None, :]).min(axis=1).max()
    assert d < 1e-9 * max(1.0, A.norm_inf())
