"""Eigensolvers for complex tridiagonal discretizations.

Three layers:
  eigen_dense     full spectrum of the (already Hessenberg) tridiagonal,
                  block-deflated and handed to the LAPACK QR driver per block
  refine          shift-invert inverse iteration with banded LU and Rayleigh
                  updates, polishing one eigenpair to near machine residual
  spurious_filter two-grid comparison: an eigenvalue is trusted only when a
                  matching value exists on the half-step grid; trusted values
                  get a Richardson extrapolation attached

solve_operator chains them: dense locate on a capped grid, window selection,
refinement on the accuracy grid and its half-step refinement, dedupe, filter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .operator import Grid1D, OperatorSpec, TridiagComplex, assemble

__all__ = [
    "EigOptions",
    "SpectrumEntry",
    "Spectrum",
    "eigen_dense",
    "refine",
    "spurious_filter",
    "solve_operator",
]

_REFINE_SEED = 160739


@dataclass
class EigOptions:
    qr_tol: float = 1e-12
    max_sweeps: int = 60
    refine_iters: int = 60
    two_grid_tol: float = 1e-6
    dense_cap: int = 900
    ppw: float = 40.0

    def __post_init__(self):
        if self.qr_tol <= 0 or self.two_grid_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_sweeps <= 0 or self.refine_iters <= 0:
            raise ValueError("iteration limits must be positive")
        if self.dense_cap < 3 or self.ppw <= 0:
            raise ValueError("dense_cap and ppw must be positive")


@dataclass
class SpectrumEntry:
    lam: complex
    vector: np.ndarray | None
    residual: float
    trusted: bool
    lam_fine: complex | None = None
    lam_re: complex | None = None
    match_distance: float = math.nan


@dataclass
class Spectrum:
    entries: list[SpectrumEntry]
    h: float
    n: int

    def trusted_values(self, extrapolated: bool = False) -> np.ndarray:
        vals = []
        for e in self.entries:
            if not e.trusted:
                continue
            if extrapolated and e.lam_re is not None:
                vals.append(e.lam_re)
            else:
                vals.append(e.lam)
        return np.asarray(vals, dtype=complex)

    def all_values(self) -> np.ndarray:
        return np.asarray([e.lam for e in self.entries], dtype=complex)


def _sorted_eigs(vals: np.ndarray) -> np.ndarray:
    vals = np.asarray(vals, dtype=complex)
    order = np.lexsort((vals.real, vals.imag))
    return vals[order]


def eigen_dense(A: TridiagComplex, opts: EigOptions | None = None) -> np.ndarray:
    """All eigenvalues, sorted by imaginary then real part.

    Negligible subdiagonal entries (relative to the neighbouring diagonal)
    split the matrix into independent blocks; each block goes to the dense
    LAPACK solver.  Splitting keeps eigenvalues exact: a zeroed subdiagonal
    makes the matrix block upper triangular.
    """
    opts = opts or EigOptions()
    m = A.n
    if m > 5000:
        raise ValueError(f"dense eigensolve limited to n <= 5000, got {m}")
    scale = A.norm_inf()
    splits = [0]
    for i in range(m - 1):
        local = abs(A.diag[i]) + abs(A.diag[i + 1])
        if abs(A.sub[i]) <= opts.qr_tol * (local if local > 0 else scale):
            splits.append(i + 1)
    splits.append(m)
    vals = np.empty(m, dtype=complex)
    pos = 0
    for lo, hi in zip(splits, splits[1:]):
        w = hi - lo
        if w == 1:
            vals[pos] = A.diag[lo]
        else:
            block = np.zeros((w, w), dtype=complex)
            idx = np.arange(w)
            block[idx, idx] = A.diag[lo:hi]
            block[idx[1:], idx[:-1]] = A.sub[lo : hi - 1]
            block[idx[:-1], idx[1:]] = A.super[lo : hi - 1]
            try:
                vals[pos : pos + w] = scipy.linalg.eigvals(block)
            except scipy.linalg.LinAlgError as exc:
                raise RuntimeError(
                    f"QR iteration failed to deflate block [{lo}:{hi}) of size {w}"
                ) from exc
        pos += w
    return _sorted_eigs(vals)


def refine(
    A: TridiagComplex, lambda0: complex, opts: EigOptions | None = None
) -> tuple[complex, np.ndarray, float]:
    """Polish one eigenpair near lambda0 by shift-invert inverse iteration.

    Returns (lambda, psi, residual) with psi normalized and residual the
    2-norm of A psi - lambda psi.  Rayleigh-quotient shifts; keeps the best
    iterate seen, stops on target residual or stagnation.  An exactly
    singular shift is perturbed by 1e-12 * ||A||_inf and retried once.
    """
    opts = opts or EigOptions()
    m = A.n
    norm_a = A.norm_inf()
    floor = 8 * np.finfo(float).eps * norm_a
    rng = np.random.default_rng(_REFINE_SEED)
    v = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    v /= np.linalg.norm(v)
    lam = complex(lambda0)
    best: tuple[complex, np.ndarray, float] | None = None
    stale = 0
    perturbed = False
    # iterate to stagnation, not merely to the documented 1e-10*||A|| bound:
    # Richardson extrapolation downstream wants machine-floor residuals
    for _ in range(opts.refine_iters):
        try:
            w = scipy.linalg.solve_banded((1, 1), A.to_banded(shift=lam), v)
        except scipy.linalg.LinAlgError:
            if perturbed:
                break
            perturbed = True
            lam += 1e-12 * norm_a * (1 + 1j) / math.sqrt(2)
            continue
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0:
            break
        w = w / nw
        aw = A.matvec(w)
        lam_new = complex(np.vdot(w, aw))
        res = float(np.linalg.norm(aw - lam_new * w))
        if best is None or res < best[2]:
            best = (lam_new, w, res)
            stale = 0
        else:
            stale += 1
        if res <= floor or stale >= 3:
            break
        v = w
        lam = lam_new
    if best is None:
        aw = A.matvec(v)
        lam_new = complex(np.vdot(v, aw))
        best = (lam_new, v, float(np.linalg.norm(aw - lam_new * v)))
    return best


def _greedy_match(a: np.ndarray, b: np.ndarray) -> list[tuple[int, int, float]]:
    """Pair entries of a with entries of b, closest pairs first, one-to-one."""
    if len(a) == 0 or len(b) == 0:
        return []
    dist = np.abs(a[:, None] - b[None, :])
    order = np.argsort(dist, axis=None)
    used_a = np.zeros(len(a), dtype=bool)
    used_b = np.zeros(len(b), dtype=bool)
    pairs = []
    for flat in order:
        i, j = divmod(int(flat), len(b))
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = True
        used_b[j] = True
        pairs.append((i, j, float(dist[i, j])))
        if used_a.all() or used_b.all():
            break
    return pairs


def spurious_filter(
    spec: OperatorSpec,
    grid_coarse: Grid1D,
    grid_fine: Grid1D,
    opts: EigOptions | None = None,
    values_coarse: np.ndarray | None = None,
    values_fine: np.ndarray | None = None,
) -> Spectrum:
    """Two-grid validation of a computed spectrum.

    Every coarse eigenvalue whose nearest fine-grid counterpart lies within
    two_grid_tol * max(1, |lambda|) is marked trusted and gets the Richardson
    value (4 lambda_fine - lambda_coarse)/3 attached; everything else is kept
    but untrusted.  Precomputed eigenvalue lists may be passed to avoid
    re-solving.
    """
    opts = opts or EigOptions()
    if values_coarse is None:
        values_coarse = eigen_dense(assemble(spec, grid_coarse), opts)
    if values_fine is None:
        values_fine = eigen_dense(assemble(spec, grid_fine), opts)
    values_coarse = np.asarray(values_coarse, dtype=complex)
    values_fine = np.asarray(values_fine, dtype=complex)
    entries = [
        SpectrumEntry(lam=complex(v), vector=None, residual=math.nan, trusted=False)
        for v in values_coarse
    ]
    for i, j, d in _greedy_match(values_coarse, values_fine):
        e = entries[i]
        e.match_distance = d
        e.lam_fine = complex(values_fine[j])
        if d <= opts.two_grid_tol * max(1.0, abs(e.lam)):
            e.trusted = True
            e.lam_re = (4.0 * e.lam_fine - e.lam) / 3.0
    return Spectrum(entries, h=grid_coarse.h, n=grid_coarse.n)


def _accuracy_n(
    spec: OperatorSpec, ppw: float, target_modulus: float | None, n_override: int | None
) -> int:
    if n_override is not None:
        return max(3, int(n_override))
    a, b = spec.interval
    lam_scale = 1.0 if target_modulus is None else max(1.0, math.sqrt(target_modulus))
    n = int(math.ceil(ppw * (b - a) * lam_scale))
    return min(max(n, 24), 200_000)


def _dedupe(cands: list[tuple[complex, np.ndarray, float]]) -> list[tuple[complex, np.ndarray, float]]:
    keep: list[tuple[complex, np.ndarray, float]] = []
    for lam, psi, res in sorted(cands, key=lambda t: t[2]):
        if all(abs(lam - k[0]) > 1e-8 * (1 + abs(k[0])) for k in keep):
            keep.append((lam, psi, res))
    return keep


def solve_operator(
    spec: OperatorSpec,
    target_modulus: float | None = None,
    window_centers=None,
    window_radius: float | None = None,
    ppw: float | None = None,
    n: int | None = None,
    opts: EigOptions | None = None,
    want_vectors: bool = False,
) -> Spectrum:
    """Locate-and-refine pipeline returning a two-grid validated Spectrum.

    The accuracy grid size follows n = ceil(ppw * (b-a) * max(1, sqrt(|lambda|)))
    from target_modulus unless n is given.  A dense solve on a capped grid
    locates candidates; when window_centers is given only candidates within
    window_radius of some center are refined.  Each surviving candidate is
    refined on the accuracy grid and on its half-step refinement, deduplicated,
    and trusted only under two-grid agreement; trusted entries carry the
    Richardson-extrapolated value.
    """
    opts = opts or EigOptions()
    use_ppw = opts.ppw if ppw is None else ppw
    if target_modulus is None and window_centers is not None:
        target_modulus = max(abs(complex(c)) for c in window_centers)
    n_acc = _accuracy_n(spec, use_ppw, target_modulus, n)
    a, b = spec.interval
    grid_acc = Grid1D(a, b, n_acc)
    grid_fine = grid_acc.refined()

    # pure dense route when the accuracy grid is small and nothing is windowed
    if window_centers is None and n_acc <= opts.dense_cap:
        return spurious_filter(spec, grid_acc, grid_fine, opts)

    n_loc = min(n_acc, opts.dense_cap)
    grid_loc = Grid1D(a, b, n_loc)
    located = eigen_dense(assemble(spec, grid_loc), opts)
    if window_centers is not None:
        centers = np.asarray([complex(c) for c in window_centers])
        radius = window_radius if window_radius is not None else 0.05 * max(
            1.0, float(np.max(np.abs(centers)))
        )
        mask = (np.abs(located[:, None] - centers[None, :]) <= radius).any(axis=1)
        seeds = located[mask]
    else:
        seeds = located

    A_acc = assemble(spec, grid_acc)
    A_fine = assemble(spec, grid_fine)
    norm_acc = A_acc.norm_inf()
    norm_fine = A_fine.norm_inf()
    coarse = _dedupe([refine(A_acc, s, opts) for s in seeds])

    entries = []
    for lam_c, psi, res_c in coarse:
        lam_f, _, res_f = refine(A_fine, lam_c, opts)
        d = abs(lam_c - lam_f)
        ok_resid = res_c <= 1e-8 * norm_acc and res_f <= 1e-8 * norm_fine
        trusted = ok_resid and d <= opts.two_grid_tol * max(1.0, abs(lam_c))
        entries.append(
            SpectrumEntry(
                lam=lam_c,
                vector=psi if want_vectors else None,
                residual=res_c,
                trusted=trusted,
                lam_fine=lam_f,
                lam_re=(4.0 * lam_f - lam_c) / 3.0 if trusted else None,
                match_distance=d,
            )
        )
    entries.sort(key=lambda e: (e.lam.imag, e.lam.real))
    return Spectrum(entries, h=grid_acc.h, n=grid_acc.n)
