"""Closed-form predictions for diverging eigenvalue branches.

Every branch is a frozen value object storing the model index, the scale
prefactor, the additive shift, and the conjugation flag; the predicted
eigenvalue is always

    leading(p) = scale(p) * (nu_eff + correction(p)) + shift(p)

with nu_eff = conj(nu) when the branch is conjugated.  Corner branches of a
truncated potential i*U use the half-line Airy model; strong-coupling
branches use the |x|^kappa model computed by the solver itself.

Orientation convention for a corner of i*U at an endpoint of the truncated
interval: the RIGHT endpoint s carries the conjugated model value and shift
+i*U(s); the LEFT endpoint carries the unconjugated value and shift -i*U(s).
For real U the two branches are exact complex conjugates.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .airy import airy_eigenfunction, model_nu
from .eig import EigOptions, refine, spurious_filter
from .expr import (
    BinOp,
    Const,
    EvalError,
    Fun,
    Param,
    PotentialExpr,
    Pow,
    Var,
    constant_fold,
    differentiate,
    evaluate,
    parse,
    power,
    substitute,
)
from .operator import Grid1D, OperatorSpec, assemble, radial_effective_potential

__all__ = [
    "AsymptoticBranch",
    "branch_1d",
    "branch_1d_perturbed",
    "branch_radial",
    "branch_cone",
    "branch_strong_coupling",
    "branch_pt2",
    "model_nu_kappa",
    "first_correction",
    "corner_window_expansion",
]

_REAL_TOL = 1e-9


def _require_real_positive(value: complex, what: str) -> float:
    v = complex(value)
    if abs(v.imag) > _REAL_TOL * max(1.0, abs(v)):
        raise ValueError(f"{what} = {v} is not real")
    if v.real <= 0.0:
        raise ValueError(f"{what} = {v.real:.6g} must be positive")
    return v.real


@dataclass(frozen=True)
class AsymptoticBranch:
    """One predicted eigenvalue branch lambda_pred(parameter).

    ``scale`` and ``shift`` are pure functions of the sweep parameter;
    ``leading`` is derived from them so the decomposition is exact by
    construction.  ``remainder_exponent`` is the predicted algebraic decay
    order of the relative remainder rho in the parameter (NaN when the rate
    is not an algebraic power); exponentially small contributions are never
    quantified.
    """

    k: int
    nu: complex
    scale: Callable[[float], float]
    shift: Callable[[float], complex]
    remainder_exponent: float
    provenance: str
    conjugated: bool
    correction: Optional[Callable[[float], complex]] = None

    @property
    def nu_eff(self) -> complex:
        return self.nu.conjugate() if self.conjugated else self.nu

    def base_leading(self, p: float) -> complex:
        """Prediction without the perturbative correction term."""
        return self.scale(p) * self.nu_eff + self.shift(p)

    def leading(self, p: float) -> complex:
        lam = self.base_leading(p)
        if self.correction is not None:
            lam += self.scale(p) * self.correction(p)
        return lam

    def with_correction(self, correction: Callable[[float], complex]) -> "AsymptoticBranch":
        return replace(self, correction=correction)

    def conjugate_pair(self) -> "AsymptoticBranch":
        """Mirror branch with the opposite conjugation and conjugated shift."""
        shift = self.shift
        return replace(
            self,
            conjugated=not self.conjugated,
            shift=lambda p: shift(p).conjugate(),
            correction=None if self.correction is None else (lambda p, c=self.correction: c(p).conjugate()),
        )


def _power_exponent(expr: PotentialExpr) -> float | None:
    """Exponent alpha when the expression is c * x^alpha with c > 0."""
    node = constant_fold(expr.root)
    coeff = 1.0 + 0.0j
    if isinstance(node, BinOp) and node.op == "*":
        if isinstance(node.left, Const):
            coeff, node = node.left.value, node.right
        elif isinstance(node.right, Const):
            coeff, node = node.right.value, node.left
    if abs(coeff.imag) > _REAL_TOL or coeff.real <= 0:
        return None

    def is_coordinate(n) -> bool:
        # abs(x) == x on the half-axis where the corner lives
        if isinstance(n, Var) and n.name == expr.variable:
            return True
        return isinstance(n, Fun) and n.name == "abs" and is_coordinate(n.arg)

    if is_coordinate(node):
        return 1.0
    if isinstance(node, Pow) and is_coordinate(node.base):
        return node.exponent
    return None


def _eval_expr(expr: PotentialExpr, x: float, params: dict | None) -> complex:
    b = dict(params or {})
    b[expr.variable] = x
    return evaluate(expr, b)


def branch_1d(
    U: PotentialExpr,
    k: int,
    bc: str = "dirichlet",
    orientation: str = "right",
    params: dict | None = None,
) -> AsymptoticBranch:
    """Corner branch of -d^2 + i*U truncated at s.

    lambda_pred(s) = U'(s)^{2/3} nu_eff + i*U(s) (right corner, conjugated)
    or U'(s)^{2/3} nu_k - i*U(s) (left corner).  For U = c x^alpha the
    remainder decays like s^{-(2+alpha)/3}.
    """
    if orientation not in ("left", "right"):
        raise ValueError(f"orientation must be 'left' or 'right', got {orientation!r}")
    conjugated = orientation == "right"
    sign = 1.0 if conjugated else -1.0
    nu = model_nu(k, math.pi / 2, bc).value
    dU = PotentialExpr(constant_fold(differentiate(U.root, U.variable)), U.variable, U.symbols)

    def scale(s: float) -> float:
        return _require_real_positive(_eval_expr(dU, s, params), f"U'({s:.6g})") ** (2.0 / 3.0)

    def shift(s: float) -> complex:
        return sign * 1j * _eval_expr(U, s, params)

    alpha = _power_exponent(U)
    rem = -(2.0 + alpha) / 3.0 if alpha is not None else math.nan
    return AsymptoticBranch(
        k=k,
        nu=nu,
        scale=scale,
        shift=shift,
        remainder_exponent=rem,
        provenance=f"1d-corner-{orientation}",
        conjugated=conjugated,
    )


def branch_1d_perturbed(
    U: PotentialExpr,
    U1: PotentialExpr,
    k: int,
    bc: str = "dirichlet",
    orientation: str = "right",
    params: dict | None = None,
) -> AsymptoticBranch:
    """Corner branch of -d^2 + i*U + U1 for a lower-order real U1.

    Same leading structure with the extra shift -U1(s).  Warns when the
    sampled ratio |U1'|/U' fails to decay.
    """
    base = branch_1d(U, k, bc, orientation, params)
    dU = PotentialExpr(constant_fold(differentiate(U.root, U.variable)), U.variable, U.symbols)
    dU1 = PotentialExpr(constant_fold(differentiate(U1.root, U1.variable)), U1.variable, U1.symbols)
    try:
        ratios = [
            abs(_eval_expr(dU1, s, params)) / max(abs(_eval_expr(dU, s, params)), 1e-300)
            for s in (5.0, 10.0, 20.0, 40.0)
        ]
        if ratios[-1] > 0.5 * max(1e-300, ratios[0]) and ratios[-1] > 1e-12:
            warnings.warn("perturbation derivative does not decay relative to U'", stacklevel=2)
    except EvalError:
        pass

    base_shift = base.shift

    def shift(s: float) -> complex:
        return base_shift(s) - _eval_expr(U1, s, params)

    return replace(base, shift=shift, provenance=base.provenance + "-perturbed")


def branch_radial(
    U: PotentialExpr,
    d: int,
    l: int,
    k: int,
    params: dict | None = None,
) -> AsymptoticBranch:
    """Annulus corner branch of the radially reduced -d^2 + i*U(r) in d >= 2.

    lambda_pred(s) = U'(s)^{2/3} conj(nu_k) + i*U(s) - U1(s) with U1 the
    centrifugal term of (d, l); the remainder order is -4/3.
    """
    if d < 2:
        raise ValueError("radial branches need dimension d >= 2")
    U1 = radial_effective_potential(d, l)
    base = branch_1d(U, k, "dirichlet", "right", params)

    def shift(s: float) -> complex:
        return 1j * _eval_expr(U, s, params) - _eval_expr(U1, s, None)

    return replace(
        base,
        shift=shift,
        remainder_exponent=-4.0 / 3.0,
        provenance=f"radial-d{d}-l{l}",
    )


def branch_cone(
    q_at_corner: Callable[[float], complex],
    grad_at_corner: Callable[[float], float],
    nu_k: complex,
    k: int = 1,
    remainder_exponent: float = math.nan,
) -> AsymptoticBranch:
    """Branch attached to a moving corner of a cone-like truncation.

    lambda_pred(s) = |grad Q(corner(s))|^{2/3} nu_k + Q(corner(s)).  The
    caller supplies the two corner callables and the model value, including
    any conjugation.
    """

    def scale(s: float) -> float:
        g = _require_real_positive(complex(grad_at_corner(s)), f"|grad Q|({s:.6g})")
        return g ** (2.0 / 3.0)

    return AsymptoticBranch(
        k=k,
        nu=complex(nu_k),
        scale=scale,
        shift=lambda s: complex(q_at_corner(s)),
        remainder_exponent=remainder_exponent,
        provenance="cone-corner",
        conjugated=False,
    )


def branch_strong_coupling(
    kappa: float,
    nu_k: complex,
    shift_rule: Callable[[float], complex] | None = None,
    k: int = 1,
    conjugated: bool = False,
    h0_beta_order: float | None = None,
    remainder_override: float | None = None,
) -> AsymptoticBranch:
    """Branch lambda_pred(g) = g^{2/(2+kappa)} nu_eff + shift(g).

    The remainder order is -min(2, kappa*(1-beta))/(2+kappa).  When the
    coupling enters through a non-homogeneous profile whose local defect
    vanishes to order ``h0_beta_order``, beta is chosen to equalize the two
    competing exponents kappa*(1-beta) and h0_beta_order*beta; otherwise the
    beta -> 0 limit applies.  ``remainder_override`` bypasses the rule for
    branches whose published order includes effects outside it.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    ex = 2.0 / (2.0 + kappa)
    if remainder_override is not None:
        rem = remainder_override
    else:
        if h0_beta_order is None:
            inner = min(2.0, kappa)
        else:
            beta = kappa / (kappa + h0_beta_order)
            inner = min(2.0, kappa * (1.0 - beta))
        rem = -inner / (2.0 + kappa)
    shift = shift_rule if shift_rule is not None else (lambda g: 0.0 + 0.0j)
    return AsymptoticBranch(
        k=k,
        nu=complex(nu_k),
        scale=lambda g: float(g) ** ex,
        shift=shift,
        remainder_exponent=rem,
        provenance=f"strong-coupling-kappa{kappa:g}",
        conjugated=conjugated,
    )


def branch_pt2(M: int, which: str, k: int) -> AsymptoticBranch:
    """Branches of -d^2 + x^{2M}/(2M) + i g x^{M-1}/(M-1), M even.

    which = "x3" (M = 2 only): sqrt(3/2) g^{1/3} e^{i pi/6}(2k+1)
            + (3/4) e^{i 5 pi/3} g^{4/3}, k >= 0; "x2" is its conjugate.
    which = "x0" (M >= 4 only): g^{-2/(M+1)} nu_{k,M} with
            nu_{k,M} = (1/(M-1))^{2/(M+1)} mu_{k,M}, mu from the signed
            |x|^{M-1} model, k >= 1.  Interior stationary points other than
            these are not predicted.
    """
    if M < 2 or M % 2 != 0:
        raise ValueError("M must be an even integer >= 2")
    if which in ("x2", "x3"):
        if M != 2:
            raise ValueError(f"branch {which!r} exists only for M = 2")
        if k < 0:
            raise ValueError("oscillator index k starts at 0")
        nu = cmath.exp(1j * math.pi / 6.0) * (2 * k + 1)
        shift_phase = cmath.exp(1j * 5.0 * math.pi / 3.0)
        conjugated = which == "x2"
        if conjugated:
            shift_phase = shift_phase.conjugate()
        return AsymptoticBranch(
            k=k,
            nu=nu,
            scale=lambda g: math.sqrt(1.5) * float(g) ** (1.0 / 3.0),
            shift=lambda g, ph=shift_phase: 0.75 * ph * float(g) ** (4.0 / 3.0),
            remainder_exponent=-1.0 / 6.0,
            provenance=f"pt-sextic-{which}",
            conjugated=conjugated,
        )
    if which == "x0":
        if M < 4:
            raise ValueError("the x0 branch exists only for M >= 4")
        if k < 1:
            raise ValueError("model index k starts at 1")
        mu = model_nu_kappa(M - 1, k, signed=True)
        nu = (1.0 / (M - 1)) ** (2.0 / (M + 1)) * mu
        return AsymptoticBranch(
            k=k,
            nu=nu,
            scale=lambda g: float(g) ** (-2.0 / (M + 1)),
            shift=lambda g: 0.0 + 0.0j,
            remainder_exponent=-2.0 / (M + 1),
            provenance=f"pt-x0-M{M}",
            conjugated=False,
        )
    raise ValueError(f"unknown stationary-point branch {which!r}")


@lru_cache(maxsize=256)
def model_nu_kappa(kappa: float, k: int, signed: bool = False) -> complex:
    """k-th eigenvalue of -d^2 + i|x|^kappa (or i sgn(x)|x|^kappa when signed).

    kappa = 2 unsigned has the closed form e^{i pi/4}(2k-1).  Every other
    case is a documented self-oracle: the solver runs on a large symmetric
    truncation with two-grid trust, and the Richardson value is returned.
    Signed profiles are restricted to odd integer kappa, where the operator
    commutes with combined parity-conjugation and the spectrum is real.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if k < 1:
        raise ValueError("model index k starts at 1")
    if signed:
        if abs(kappa - round(kappa)) > 1e-12 or round(kappa) % 2 != 1:
            raise ValueError("signed profiles need odd integer kappa")
        text = f"i*sgn(x)*abs(x)^{kappa:.12g}"
    else:
        if abs(kappa - 2.0) < 1e-12:
            return cmath.exp(1j * math.pi / 4.0) * (2 * k - 1)
        text = f"i*abs(x)^{kappa:.12g}"
    if k > 8:
        raise ValueError("self-oracle supports k <= 8")
    spec = OperatorSpec(potential=parse(text), interval=(-8.0, 8.0))
    # FD error at these grid sizes puts two-grid distances near 1e-4*|lambda|
    opts = EigOptions(two_grid_tol=1e-4)

    # locate on a coarse dense grid, then refine under two-grid trust
    grid0 = Grid1D(-8.0, 8.0, 700)
    grid1 = Grid1D(-8.0, 8.0, 2400)
    grid2 = grid1.refined()
    from .eig import eigen_dense  # local import keeps module init light

    rough = eigen_dense(assemble(spec, grid0), opts)
    ray = np.pi / (2.0 + kappa)
    cand = [z for z in rough if 0.0 < z.real and abs(np.angle(z) - (0.0 if signed else ray)) < 0.35]
    cand.sort(key=lambda z: z.real)
    cand = cand[: k + 3]
    if len(cand) < k:
        raise RuntimeError(f"self-oracle located only {len(cand)} candidates for k={k}")

    A1 = assemble(spec, grid1)
    A2 = assemble(spec, grid2)
    vals1 = _dedupe_values(refine(A1, z, opts)[0] for z in cand)
    vals2 = _dedupe_values(refine(A2, z, opts)[0] for z in cand)
    filtered = spurious_filter(
        spec,
        grid1,
        grid2,
        opts,
        values_coarse=np.asarray(vals1),
        values_fine=np.asarray(vals2),
    )
    trusted = sorted(filtered.trusted_values(extrapolated=True), key=lambda z: z.real)
    if len(trusted) < k:
        raise RuntimeError(f"self-oracle trusted only {len(trusted)} of {len(cand)} candidates")
    return complex(trusted[k - 1])


def _dedupe_values(values) -> list[complex]:
    keep: list[complex] = []
    for v in values:
        if all(abs(v - w) > 1e-8 * (1.0 + abs(w)) for w in keep):
            keep.append(complex(v))
    return keep


def corner_window_expansion(U: PotentialExpr, param_name: str = "s") -> PotentialExpr:
    """Local potential defect Q_n(x) - i x seen from the corner at s.

    Substituting the stretched coordinate gives
        i * U'(s)^{-2/3} * (U(s) - U(s - U'(s)^{-1/3} x)) - i x,
    an expression in x with the truncation endpoint as a parameter.
    """
    x = Var(U.variable)
    s = Param(param_name)
    if param_name in (U.variable, *U.symbols):
        raise ValueError(f"parameter name {param_name!r} collides with an existing symbol")
    dU = constant_fold(differentiate(U.root, U.variable))
    dU_at_s = substitute(dU, U.variable, s)
    U_at_s = substitute(U.root, U.variable, s)
    inner = BinOp("-", s, BinOp("*", power(dU_at_s, -1.0 / 3.0), x))
    U_shifted = substitute(U.root, U.variable, inner)
    defect = BinOp(
        "*",
        BinOp("*", Const(1j), power(dU_at_s, -2.0 / 3.0)),
        BinOp("-", U_at_s, U_shifted),
    )
    root = constant_fold(BinOp("-", defect, BinOp("*", Const(1j), x)))
    return PotentialExpr(root=root, variable=U.variable, symbols=(U.variable, param_name))


def first_correction(
    k: int,
    q_minus_ix: PotentialExpr,
    params: dict | None = None,
    L: float = 12.0,
    tol: float = 1e-8,
    bc: str = "dirichlet",
) -> complex:
    """First-order eigenvalue correction <(Q_n - ix) psi_k, psi_k*> / <psi_k, psi_k*>.

    psi_k is the half-line Airy eigenfunction; the conjugate-pairing turns
    both inner products into plain integrals of psi_k^2, evaluated by
    composite Simpson on [0, L] with step halving until two consecutive
    refinements agree to tol.
    """
    b = dict(params or {})

    def integrands(n: int) -> tuple[complex, complex]:
        xs = np.linspace(0.0, L, n + 1)
        psi2 = np.array([airy_eigenfunction(k, x, bc=bc) ** 2 for x in xs])
        qv = np.empty(n + 1, dtype=complex)
        for i, x in enumerate(xs):
            b[q_minus_ix.variable] = x
            qv[i] = evaluate(q_minus_ix, b)
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        h = L / n
        return (h / 3.0) * np.sum(w * qv * psi2), (h / 3.0) * np.sum(w * psi2)

    prev = None
    n = 96
    while n <= 12288:
        num, den = integrands(n)
        if abs(den) == 0.0:
            raise RuntimeError("eigenfunction normalization integral vanished")
        val = num / den
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
        n *= 2
    raise RuntimeError("correction quadrature did not converge under step halving")
