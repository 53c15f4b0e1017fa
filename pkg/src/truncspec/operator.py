"""Discretization of truncated 1D and radially reduced Schrodinger operators.

An OperatorSpec describes -d^2/dx^2 + Q(x) on a finite interval with
Dirichlet or Neumann ends.  assemble() produces the second-order central
finite-difference matrix as a complex tridiagonal.  Radial problems in
dimension d with angular index l reduce to the same 1D form after adding
the effective centrifugal term U_1(r) = ((d-1)(d-3)+4l(l+d-2))/(4r^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .expr import (
    BinOp,
    Const,
    Pow,
    PotentialExpr,
    Var,
    evaluate_array,
    make_expr,
    uses_kink_functions,
)

__all__ = [
    "RadialData",
    "OperatorSpec",
    "Grid1D",
    "TridiagComplex",
    "radial_effective_potential",
    "assemble",
    "operator_nodes",
    "truncation_family",
    "grid_for",
]

_BCS = ("dirichlet", "neumann")


@dataclass(frozen=True)
class RadialData:
    """Radial reduction bookkeeping: dimension, angular index, inner radius."""

    d: int
    l: int
    inner: float = 1.0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("radial reduction needs dimension d >= 2")
        if self.l < 0:
            raise ValueError("angular index l must be >= 0")
        if self.inner <= 0:
            raise ValueError("inner radius must be positive")


@dataclass(frozen=True)
class OperatorSpec:
    potential: PotentialExpr
    interval: tuple[float, float]
    bc_left: str = "dirichlet"
    bc_right: str = "dirichlet"
    radial: RadialData | None = None
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        a, b = self.interval
        if not b - a > 0:
            raise ValueError(f"interval must satisfy a < b, got {self.interval}")
        if self.bc_left not in _BCS or self.bc_right not in _BCS:
            raise ValueError(f"boundary conditions must be one of {_BCS}")
        if self.radial is not None and a <= 0:
            raise ValueError("radial problems need a > 0 (annulus truncation)")


@dataclass(frozen=True)
class Grid1D:
    """Uniform interior grid: h = (b-a)/(n+1), nodes x_j = a + j*h, j=1..n.

    Neumann endpoints add ghost-point bookkeeping in assemble(), not nodes here.
    """

    a: float
    b: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs at least 3 interior points")
        if not self.b - self.a > 0:
            raise ValueError("grid endpoints must satisfy a < b")

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.a + self.h * np.arange(1, self.n + 1)

    def refined(self) -> "Grid1D":
        # n -> 2n+1 halves h exactly and keeps the coarse nodes embedded
        return Grid1D(self.a, self.b, 2 * self.n + 1)


@dataclass(frozen=True)
class TridiagComplex:
    sub: np.ndarray
    diag: np.ndarray
    super: np.ndarray

    def __post_init__(self):
        for name in ("sub", "diag", "super"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex))
        m = len(self.diag)
        if len(self.sub) != m - 1 or len(self.super) != m - 1:
            raise ValueError("tridiagonal band lengths inconsistent")
        for arr in (self.sub, self.diag, self.super):
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite matrix entry")

    @property
    def n(self) -> int:
        return len(self.diag)

    def to_dense(self) -> np.ndarray:
        m = self.n
        A = np.zeros((m, m), dtype=complex)
        A[np.arange(m), np.arange(m)] = self.diag
        A[np.arange(1, m), np.arange(m - 1)] = self.sub
        A[np.arange(m - 1), np.arange(1, m)] = self.super
        return A

    def to_banded(self, shift: complex = 0.0) -> np.ndarray:
        """LAPACK band storage of (A - shift*I) for solve_banded((1,1), ...)."""
        m = self.n
        ab = np.zeros((3, m), dtype=complex)
        ab[0, 1:] = self.super
        ab[1, :] = self.diag - shift
        ab[2, :-1] = self.sub
        return ab

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.super * v[1:]
        out[1:] += self.sub * v[:-1]
        return out

    def norm_inf(self) -> float:
        row = np.abs(self.diag)
        row[:-1] += np.abs(self.super)
        row[1:] += np.abs(self.sub)
        return float(row.max())

    def scaled(self, factor: complex) -> "TridiagComplex":
        return TridiagComplex(self.sub * factor, self.diag * factor, self.super * factor)


def radial_effective_potential(d: int, l: int) -> PotentialExpr:
    """Effective 1D term ((d-1)(d-3)+4l(l+d-2))/(4r^2) from the radial reduction."""
    if d < 2:
        raise ValueError("need d >= 2")
    if l < 0:
        raise ValueError("need l >= 0")
    num = (d - 1) * (d - 3) + 4 * l * (l + d - 2)
    root = BinOp("/", Const(complex(num)), BinOp("*", Const(4 + 0j), Pow(Var("r"), 2.0, True)))
    return make_expr(root, variable="r")


def operator_nodes(spec: OperatorSpec, grid: Grid1D) -> np.ndarray:
    """Coordinates of the unknowns: interior nodes plus Neumann endpoints."""
    xs = grid.nodes
    if spec.bc_left == "neumann":
        xs = np.concatenate(([grid.a], xs))
    if spec.bc_right == "neumann":
        xs = np.concatenate((xs, [grid.b]))
    return xs


def _potential_values(spec: OperatorSpec, grid: Grid1D, xs: np.ndarray) -> np.ndarray:
    pts = xs
    if uses_kink_functions(spec.potential) and np.any(xs == 0.0):
        # a.e.-defined kink functions: never sample exactly at the kink
        pts = xs.copy()
        pts[pts == 0.0] = grid.h * 1e-3
    q = evaluate_array(spec.potential, spec.potential.variable, pts, spec.parameters)
    if spec.radial is not None:
        u1 = radial_effective_potential(spec.radial.d, spec.radial.l)
        q = q + evaluate_array(u1, "r", pts, {})
    return q


def assemble(spec: OperatorSpec, grid: Grid1D) -> TridiagComplex:
    """Second-order central FD matrix of -d^2/dx^2 + Q on the grid.

    Dirichlet ends eliminate the boundary value.  A Neumann end keeps the
    endpoint as an unknown and folds the mirror ghost point into that row
    (diagonal 2/h^2 + Q(endpoint), off-diagonal -2/h^2); the matrix loses
    symmetry in that row but stays tridiagonal.
    """
    a, b = spec.interval
    tol = 1e-12
    if abs(grid.a - a) > tol * (1 + abs(a)) or abs(grid.b - b) > tol * (1 + abs(b)):
        raise ValueError(f"grid ({grid.a}, {grid.b}) does not cover interval {spec.interval}")
    xs = operator_nodes(spec, grid)
    q = _potential_values(spec, grid, xs)
    h2 = grid.h * grid.h
    m = len(xs)
    diag = 2.0 / h2 + q
    sub = np.full(m - 1, -1.0 / h2, dtype=complex)
    sup = np.full(m - 1, -1.0 / h2, dtype=complex)
    if spec.bc_left == "neumann":
        sup[0] = -2.0 / h2
    if spec.bc_right == "neumann":
        sub[-1] = -2.0 / h2
    return TridiagComplex(sub, diag, sup)


def grid_for(spec: OperatorSpec, n: int) -> Grid1D:
    a, b = spec.interval
    return Grid1D(a, b, n)


def truncation_family(
    template: OperatorSpec,
    schedule,
    rule: str = "symmetric",
    param_name: str = "s",
    left_pad: float = 40.0,
) -> list[OperatorSpec]:
    """One spec per truncation parameter s in the schedule.

    rule picks how s sets the interval:
      symmetric   -> (-s, s)
      fixed_left  -> (template left endpoint, s): half-line surrogate, annulus
      left_padded -> (-(s + left_pad), s): surrogate for a domain unbounded
                     to the left; left_pad keeps the far cut harmless
    The parameter is also bound in each spec's parameters under param_name.
    """
    schedule = [float(s) for s in schedule]
    if any(s <= 0 for s in schedule):
        raise ValueError("schedule values must be positive")
    if any(s2 <= s1 for s1, s2 in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")
    if rule not in ("symmetric", "fixed_left", "left_padded"):
        raise ValueError(f"unknown truncation rule {rule!r}")
    out = []
    for s in schedule:
        if rule == "symmetric":
            interval = (-s, s)
        elif rule == "fixed_left":
            interval = (template.interval[0], s)
        else:
            interval = (-(s + left_pad), s)
        params = dict(template.parameters)
        params[param_name] = s
        out.append(replace(template, interval=interval, parameters=params))
    return out
