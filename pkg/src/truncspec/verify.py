"""Assumption checkers, decay and symmetry diagnostics, and sweep fitting.

Checkers are advisory: they report sampled estimates and flags, never hard
verdicts, since the underlying hypotheses are sufficient rather than
necessary.  All sampling grids and iteration orders are fixed, so reports
are bit-reproducible for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg

from .asymptotics import AsymptoticBranch
from .eig import Spectrum, _greedy_match
from .expr import EvalError, PotentialExpr, constant_fold, differentiate, evaluate, uses_kink_functions
from .operator import Grid1D, TridiagComplex

__all__ = [
    "AssumptionReport",
    "SweepReport",
    "MatchedPoint",
    "BranchFit",
    "check_gradient_condition",
    "graph_norm_constant",
    "check_U_conditions",
    "tau_kappa",
    "decay_fit",
    "pt_symmetry_defect",
    "trace_sum",
    "resolvent_gap",
    "match_and_fit",
]

_EPS_CRIT = 2.0 - math.sqrt(2.0)
_POWER_SEED = 988271


def _as_expr_fn(Q: PotentialExpr, params: dict | None) -> Callable[[float], complex]:
    base = dict(params or {})

    def f(x: float) -> complex:
        b = dict(base)
        b[Q.variable] = x
        return evaluate(Q, b)

    return f


def _sample_nodes(window: tuple[float, float], n: int, kinky: bool) -> np.ndarray:
    xs = np.linspace(window[0], window[1], n)
    if kinky:
        h = (window[1] - window[0]) / max(n - 1, 1)
        xs[xs == 0.0] = h * 1e-3
    return xs


def check_gradient_condition(
    Q: PotentialExpr,
    window: tuple[float, float],
    n_samples: int = 2001,
    params: dict | None = None,
) -> tuple[float, float]:
    """Sampled constants (eps, M) with |Q'| <= eps |Q|^{3/2} + M on the window.

    eps estimates the tail superior limit of |Q'|/|Q|^{3/2}: the supremum
    over the outermost decile of |x|, snapped to zero when the decile-wise
    suprema decrease strictly over the outer half (a decaying tail has
    limit zero).  M is then the sampled supremum of |Q'| - eps |Q|^{3/2}.
    """
    dQ = PotentialExpr(constant_fold(differentiate(Q.root, Q.variable)), Q.variable, Q.symbols)
    f = _as_expr_fn(Q, params)
    df = _as_expr_fn(dQ, params)
    xs = _sample_nodes(window, n_samples, uses_kink_functions(Q.root) or uses_kink_functions(dQ.root))
    q = np.array([f(x) for x in xs])
    dq = np.array([df(x) for x in xs])
    mod_q = np.abs(q) ** 1.5
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mod_q > 0, np.abs(dq) / np.where(mod_q > 0, mod_q, 1.0), np.inf)

    order = np.argsort(np.abs(xs), kind="stable")
    sups = [float(np.max(ratio[chunk])) for chunk in np.array_split(order, 10)]
    eps = sups[-1]
    tail = sups[5:]
    if all(np.isfinite(tail)) and all(b < a * (1.0 - 1e-3) for a, b in zip(tail, tail[1:])):
        eps = 0.0
    M = float(np.max(np.abs(dq) - eps * mod_q))
    return eps, max(M, 0.0)


def graph_norm_constant(eps_nabla: float, eps1: float) -> float:
    """Lower-bound constant (2 - eps_nabla (2+sqrt 2) - eps1) / (2 - eps_nabla).

    Controls ||Af||^2 + ||Qf||^2 against ||Tf||^2 + C||f||^2; positive only
    for eps_nabla below the critical 2 - sqrt(2) and small eps1.
    """
    if eps_nabla < 0 or eps1 <= 0:
        raise ValueError("need eps_nabla >= 0 and eps1 > 0")
    value = (2.0 - eps_nabla * (2.0 + math.sqrt(2.0)) - eps1) / (2.0 - eps_nabla)
    if value <= 0:
        raise ValueError(
            f"constant {value:.6g} is not positive (critical eps_nabla is 2-sqrt(2) ~ {_EPS_CRIT:.6f})"
        )
    return value


@dataclass(frozen=True)
class AssumptionReport:
    """Sampled diagnostics for a truncated-growth potential U.

    Flags record whether each sampled inequality held on the window; the
    constants are sampled suprema, not certified bounds.
    """

    eps_nabla_est: float
    M_nabla_est: float
    nu_exponent: float
    upsilon_sup_tail: float
    monotone: bool
    du_control: bool
    du_constant: float
    d2u_control: bool
    d2u_constant: float
    left_dominance: bool
    delta0: float
    fragile: bool
    window: tuple[float, float]
    n_samples: int

    def __post_init__(self):
        if self.eps_nabla_est < 0:
            raise ValueError("eps estimate cannot be negative")


def _controlled(ratios: np.ndarray) -> tuple[bool, float]:
    finite = ratios[np.isfinite(ratios)]
    if len(finite) == 0:
        return False, math.inf
    const = float(np.max(finite))
    tail = finite[-max(1, len(finite) // 4) :]
    rest = finite[: -max(1, len(finite) // 4)]
    ok = len(rest) == 0 or float(np.max(tail)) <= 1.1 * float(np.max(rest)) + 1e-12
    return ok, const


def check_U_conditions(
    U: PotentialExpr,
    nu_candidate: float,
    window: tuple[float, float],
    n_samples: int = 400,
    params: dict | None = None,
) -> AssumptionReport:
    """Sample the growth-profile conditions for U on the window (x0, X).

    Checks monotone increase, the derivative controls U' <= c U x^nu and
    |U''| <= c U' x^nu, the tail supremum of Upsilon = x^nu / U'^{1/3}, and
    left dominance sup_{x in (-s, x0)} U(x) <= (1 - delta0) U(s) sampled
    over s in the outer half of the window.  Points where U is undefined
    are skipped in the left probe.
    """
    dU_root = constant_fold(differentiate(U.root, U.variable))
    d2U_root = constant_fold(differentiate(dU_root, U.variable))
    dU = PotentialExpr(dU_root, U.variable, U.symbols)
    d2U = PotentialExpr(d2U_root, U.variable, U.symbols)
    fU = _as_expr_fn(U, params)
    fdU = _as_expr_fn(dU, params)
    fd2U = _as_expr_fn(d2U, params)

    x0, X = float(window[0]), float(window[1])
    if not x0 < X:
        raise ValueError("window must be increasing")
    xs = _sample_nodes((x0, X), n_samples, uses_kink_functions(U.root))
    u = np.array([fU(x).real for x in xs])
    du = np.array([fdU(x).real for x in xs])
    d2u = np.array([fd2U(x).real for x in xs])

    monotone = bool(np.all(du > 0) and np.all(u > 0))
    xnu = xs ** float(nu_candidate)
    with np.errstate(divide="ignore", invalid="ignore"):
        du_ratio = np.abs(du) / np.abs(u * xnu)
        d2u_ratio = np.abs(d2u) / np.abs(du * xnu)
        upsilon = xnu / np.cbrt(np.abs(du))
    du_control, du_constant = _controlled(du_ratio)
    d2u_control, d2u_constant = _controlled(d2u_ratio)
    upsilon_sup_tail = float(np.max(upsilon[len(xs) // 2 :]))

    # left dominance: sup U on (-s, x0) against U(s), outer half of window
    delta0 = math.inf
    defined_anywhere = False
    for s in np.linspace(0.5 * (x0 + X), X, 16):
        us = fU(float(s)).real
        if us <= 0:
            delta0 = 0.0
            break
        sup_left = -math.inf
        for x in np.linspace(-s, x0, 128):
            try:
                sup_left = max(sup_left, fU(float(x)).real)
                defined_anywhere = True
            except EvalError:
                continue
        if sup_left == -math.inf:
            continue
        delta0 = min(delta0, 1.0 - sup_left / us)
    if not defined_anywhere or delta0 == math.inf:
        delta0 = math.nan
        left_dominance = False
    else:
        left_dominance = delta0 > 0.0

    eps, M = check_gradient_condition(U, (x0, X), max(n_samples, 801), params)
    return AssumptionReport(
        eps_nabla_est=eps,
        M_nabla_est=M,
        nu_exponent=float(nu_candidate),
        upsilon_sup_tail=upsilon_sup_tail,
        monotone=monotone,
        du_control=du_control,
        du_constant=du_constant,
        d2u_control=d2u_control,
        d2u_constant=d2u_constant,
        left_dominance=left_dominance,
        delta0=delta0 if math.isnan(delta0) else float(delta0),
        fragile=bool(not math.isnan(delta0) and delta0 < 0.05),
        window=(x0, X),
        n_samples=n_samples,
    )


def tau_kappa(
    Q: PotentialExpr,
    r: float,
    psi: np.ndarray | None = None,
    grid: Grid1D | None = None,
    params: dict | None = None,
    outer_reach: float = 3.0,
    n_samples: int = 2001,
) -> tuple[float, float]:
    """Exterior smallness pair (tau, kappa) for the ball of radius r.

    tau = sup over sample nodes |x| > r of 1/|Q(x)| (synthetic nodes up to
    outer_reach * r, or the grid's own exterior nodes when a grid is given);
    kappa = L2 norm of psi restricted to |x| > r by the trapezoid rule, NaN
    when no eigenvector is supplied.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    f = _as_expr_fn(Q, params)
    if grid is not None:
        nodes = grid.nodes[np.abs(grid.nodes) > r]
    else:
        right = np.linspace(r * (1 + 1e-9), outer_reach * r, n_samples // 2)
        nodes = np.concatenate([-right[::-1], right])
    if len(nodes) == 0:
        raise ValueError("no sample nodes outside the ball")
    mods = np.array([abs(f(float(x))) for x in nodes])
    if np.any(mods < 1e-14):
        raise ValueError("|Q| vanishes outside the ball; tau is unbounded")
    tau = float(np.max(1.0 / mods))

    kap = math.nan
    if psi is not None:
        if grid is None:
            raise ValueError("kappa needs the grid carrying psi")
        psi = np.asarray(psi)
        mask = np.abs(grid.nodes) > r
        w = np.full(len(grid.nodes), grid.h)
        kap = float(math.sqrt(np.sum(w[mask] * np.abs(psi[mask]) ** 2)))
    return tau, kap


def decay_fit(
    psi: np.ndarray,
    xs: np.ndarray,
    x_window: tuple[float, float],
    p_grid: np.ndarray | None = None,
) -> tuple[float, float, float]:
    """Fit log|psi(x)| = a - c x^p on the window; returns (c, p, R^2).

    The exponent p runs over a fixed candidate grid (default 0.5 to 4.0 in
    steps of 0.01); for each p the (a, c) pair is linear least squares and
    the best sum of squares wins.
    """
    psi = np.asarray(psi)
    xs = np.asarray(xs, dtype=float)
    mask = (xs >= x_window[0]) & (xs <= x_window[1]) & (np.abs(psi) > 1e-13 * np.max(np.abs(psi)))
    if np.count_nonzero(mask) < 10:
        raise ValueError(f"only {np.count_nonzero(mask)} usable nodes in the fit window")
    x = xs[mask]
    y = np.log(np.abs(psi[mask]))
    if p_grid is None:
        p_grid = np.arange(0.5, 4.0 + 1e-12, 0.01)
    sst = float(np.sum((y - np.mean(y)) ** 2))
    best = None
    for p in p_grid:
        basis = np.column_stack([np.ones_like(x), -(x**p)])
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        sse = float(np.sum((basis @ coef - y) ** 2))
        if best is None or sse < best[0]:
            best = (sse, float(coef[1]), float(p))
    sse, c_hat, p_hat = best
    r2 = 1.0 - sse / sst if sst > 0 else 1.0
    return c_hat, p_hat, r2


def _spectrum_values(spectrum) -> np.ndarray:
    if isinstance(spectrum, Spectrum):
        return spectrum.trusted_values(extrapolated=True)
    return np.asarray(list(spectrum), dtype=complex)


def pt_symmetry_defect(spectrum) -> float:
    """Hausdorff distance between the trusted eigenvalue set and its conjugate."""
    vals = _spectrum_values(spectrum)
    if len(vals) == 0:
        return 0.0
    conj = vals.conjugate()
    dist = np.abs(vals[:, None] - conj[None, :])
    return float(max(np.max(np.min(dist, axis=1)), np.max(np.min(dist, axis=0))))


def trace_sum(spectrum, r: int, z0: complex = 1.0) -> complex:
    """Sum of (lambda + z0)^{-r} over the trusted eigenvalues."""
    if r < 1:
        raise ValueError("order r must be a positive integer")
    vals = _spectrum_values(spectrum)
    shifted = vals + z0
    if np.any(np.abs(shifted) < 1e-12):
        raise ValueError("an eigenvalue hits the pole -z0")
    return complex(np.sum(shifted ** (-r)))


def _solve_shifted(A: TridiagComplex, z0: complex, rhs: np.ndarray, adjoint: bool) -> np.ndarray:
    band = A.to_banded(shift=z0)
    if adjoint:
        flipped = np.empty_like(band)
        flipped[0, 1:] = np.conj(band[2, :-1])
        flipped[1, :] = np.conj(band[1, :])
        flipped[2, :-1] = np.conj(band[0, 1:])
        band = flipped
    return scipy.linalg.solve_banded((1, 1), band, rhs)


def resolvent_gap(
    A_small: TridiagComplex,
    grid_small: Grid1D,
    A_big: TridiagComplex,
    grid_big: Grid1D,
    z0: complex = -1.0,
    tol: float = 1e-6,
    max_iter: int = 500,
) -> float:
    """Spectral norm of the resolvent mismatch between nested truncations.

    The small grid must be a subset of the big grid (equal step, aligned
    nodes).  Measures ||E (A_small - z0)^{-1} R - (A_big - z0)^{-1}|| on the
    big grid, with E/R zero-extension and restriction, by power iteration
    on the normal operator (deterministic start, relative tolerance tol).
    """
    if abs(grid_small.h - grid_big.h) > 1e-9 * grid_big.h:
        raise ValueError("grids must share the mesh size")
    off = int(round((grid_small.nodes[0] - grid_big.nodes[0]) / grid_big.h))
    if off < 0 or off + grid_small.n > grid_big.n:
        raise ValueError("small grid is not contained in the big grid")
    if abs(grid_big.nodes[off] - grid_small.nodes[0]) > 1e-9 * grid_big.h:
        raise ValueError("grid nodes are not aligned")
    sl = slice(off, off + grid_small.n)

    def apply(v: np.ndarray) -> np.ndarray:
        w = -_solve_shifted(A_big, z0, v, adjoint=False)
        w[sl] += _solve_shifted(A_small, z0, v[sl], adjoint=False)
        return w

    def apply_adjoint(v: np.ndarray) -> np.ndarray:
        w = -_solve_shifted(A_big, z0, v, adjoint=True)
        w[sl] += _solve_shifted(A_small, z0, v[sl], adjoint=True)
        return w

    rng = np.random.default_rng(_POWER_SEED)
    v = rng.standard_normal(grid_big.n) + 1j * rng.standard_normal(grid_big.n)
    v /= np.linalg.norm(v)
    sigma2 = 0.0
    for _ in range(max_iter):
        w = apply_adjoint(apply(v))
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(nrm - sigma2) <= tol * max(nrm, 1e-300):
            sigma2 = nrm
            break
        sigma2 = nrm
    return float(math.sqrt(sigma2))


@dataclass(frozen=True)
class MatchedPoint:
    parameter: float
    branch_index: int
    branch_k: int
    lam_computed: complex
    lam_pred: complex
    rho: complex


@dataclass(frozen=True)
class BranchFit:
    branch_index: int
    branch_k: int
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    predicted_exponent: float


@dataclass(frozen=True)
class SweepReport:
    matches: tuple[MatchedPoint, ...]
    unmatched: tuple[tuple[float, complex], ...]
    fits: tuple[BranchFit, ...]
    window_factor: float


def match_and_fit(
    sweep: Sequence[tuple[float, Spectrum]],
    branches: Sequence[AsymptoticBranch],
    window_factor: float = 0.5,
) -> SweepReport:
    """Match trusted eigenvalues to branch predictions and fit remainder rates.

    At each parameter p the predictions leading(p) (including any stored
    correction) are matched greedily one-to-one to the trusted eigenvalues;
    a match is kept when its distance is below window_factor * scale(p) of
    its branch.  The remainder is always taken against the uncorrected
    branch, rho = (lambda - base_leading(p)) / scale(p).  Per branch, the
    slope of log|rho| vs log p is least-squares fitted over the largest
    half of the matched parameters.
    """
    matches: list[MatchedPoint] = []
    unmatched: list[tuple[float, complex]] = []
    for p, spectrum in sweep:
        computed = _spectrum_values(spectrum)
        if len(computed) == 0:
            continue
        preds = np.array([br.leading(p) for br in branches])
        radii = np.array([window_factor * br.scale(p) for br in branches])
        taken = set()
        for i, j, d in _greedy_match(preds, computed):
            if d <= radii[i]:
                br = branches[i]
                lam = complex(computed[j])
                rho = (lam - br.base_leading(p)) / br.scale(p)
                matches.append(
                    MatchedPoint(
                        parameter=float(p),
                        branch_index=i,
                        branch_k=br.k,
                        lam_computed=lam,
                        lam_pred=complex(preds[i]),
                        rho=rho,
                    )
                )
                taken.add(j)
        for j, lam in enumerate(computed):
            if j in taken:
                continue
            if np.any(np.abs(lam - preds) <= radii):
                unmatched.append((float(p), complex(lam)))

    fits: list[BranchFit] = []
    all_params = sorted({p for p, _ in sweep})
    cutoff = all_params[len(all_params) // 2] if all_params else 0.0
    for i, br in enumerate(branches):
        pts = [(m.parameter, abs(m.rho)) for m in matches if m.branch_index == i and m.parameter >= cutoff]
        pts = [(p, r) for p, r in pts if r > 0]
        if len(pts) >= 2:
            lx = np.log([p for p, _ in pts])
            ly = np.log([r for _, r in pts])
            basis = np.column_stack([np.ones_like(lx), lx])
            coef, *_ = np.linalg.lstsq(basis, ly, rcond=None)
            resid = basis @ coef - ly
            sst = float(np.sum((ly - np.mean(ly)) ** 2))
            r2 = 1.0 - float(np.sum(resid**2)) / sst if sst > 0 else 1.0
            fits.append(
                BranchFit(
                    branch_index=i,
                    branch_k=br.k,
                    slope=float(coef[1]),
                    intercept=float(coef[0]),
                    r_squared=r2,
                    n_points=len(pts),
                    predicted_exponent=br.remainder_exponent,
                )
            )
        else:
            fits.append(
                BranchFit(
                    branch_index=i,
                    branch_k=br.k,
                    slope=math.nan,
                    intercept=math.nan,
                    r_squared=math.nan,
                    n_points=len(pts),
                    predicted_exponent=br.remainder_exponent,
                )
            )
    return SweepReport(
        matches=tuple(matches),
        unmatched=tuple(unmatched),
        fits=tuple(fits),
        window_factor=window_factor,
    )
