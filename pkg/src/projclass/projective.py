"""Connections, projective structures, and their classical invariants.

Curvature conventions (fixed once, regression-pinned):

    R_ab^c_d = d_a G^c_bd - d_b G^c_ad + G^c_ae G^e_bd - G^c_be G^e_ad
    Ricci_ab = R_ca^c_b
    P_ab     = (2/3) Ricci_ab + (1/3) Ricci_ba        (projective Schouten)
    B_ab     = P_ba - P_ab,   beta = B_ab eps^ab
    L_b      = eps^cd nabla_c P_db                     (Cotton)
    Y_cdb    = nabla_[c P_d]b
    theta_a  = (1/2) eps^bc nabla_a eps_bc
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction as Q
from typing import Optional, Tuple

from . import expr as ex
from .numeric import Context, Verdict, ZeroTestPolicy, is_identically_zero
from .tensor import (Tensor, VolumeForm, antisymmetrize, contract,
                     covariant_derivative, lower_index, raise_index,
                     symmetrize, tensor_product)

__all__ = ["Connection2D", "ProjectiveODE", "CurvatureData",
           "ode_from_connection", "thomas_connection", "projective_change",
           "curvature_data", "liouville_invariants", "nu5",
           "NonSpecialConnection"]


class NonSpecialConnection(ValueError):
    """The operation needs a symmetric Ricci tensor (beta = 0)."""


@dataclass(frozen=True)
class Connection2D:
    """Torsion-free connection: Gamma^a_{bc} symmetric in bc, with an
    attached volume form used for raising/lowering."""

    ctx: Context
    gammas: Tuple[ex.Expr, ...]  # dense, index (a, b, c) row-major
    volume: VolumeForm = VolumeForm()

    def __post_init__(self):
        if len(self.gammas) != 8:
            raise ValueError("a 2D connection has 8 Christoffel entries")
        for a, b, c in itertools.product(range(2), repeat=3):
            if self.gamma(a, b, c) is not self.gamma(a, c, b):
                raise ValueError("Christoffel symbols must be symmetric in bc")

    @staticmethod
    def from_components(ctx: Context, entries: dict,
                        volume: VolumeForm = VolumeForm()) -> "Connection2D":
        """entries maps (a, b, c) with 1-based indices to Expr; omitted
        components are zero and bc-symmetry is filled in."""
        grid = {}
        for (a, b, c), value in entries.items():
            grid[(a - 1, b - 1, c - 1)] = value
            existing = grid.get((a - 1, c - 1, b - 1), value)
            if existing is not value:
                raise ValueError(f"conflicting entries for Gamma^{a}_{b}{c}")
            grid[(a - 1, c - 1, b - 1)] = value
        comps = tuple(grid.get(idx, ex.ZERO)
                      for idx in itertools.product(range(2), repeat=3))
        return Connection2D(ctx, comps, volume)

    @property
    def coords(self) -> Tuple[str, str]:
        return self.ctx.variables[:2]

    def gamma(self, a: int, b: int, c: int) -> ex.Expr:
        return self.gammas[a * 4 + b * 2 + c]

    def tensor(self) -> Tensor:
        return Tensor("udd", self.gammas)

    def with_volume(self, volume: VolumeForm) -> "Connection2D":
        return Connection2D(self.ctx, self.gammas, volume)

    def theta(self) -> Tensor:
        """theta_a = (1/2) eps^bc nabla_a eps_bc."""
        deps = covariant_derivative(self.volume.tensor_lower(), self)
        eps_up = self.volume.tensor_upper()

        def fill(a):
            total = ex.ZERO
            for b in range(2):
                for c in range(2):
                    total = ex.add(total, ex.mul(eps_up[b, c], deps[a, b, c]))
            return ex.mul(Q(1, 2), total)

        return Tensor.build("d", fill)


@dataclass(frozen=True)
class ProjectiveODE:
    """y'' = A3 y'^3 + A2 y'^2 + A1 y' + A0 over the context coordinates."""

    ctx: Context
    A0: ex.Expr
    A1: ex.Expr
    A2: ex.Expr
    A3: ex.Expr

    @property
    def coefficients(self):
        return (self.A0, self.A1, self.A2, self.A3)


@dataclass(frozen=True)
class CurvatureData:
    riemann: Tensor    # R_ab^c_d, valence "dduu"->"ddud": stored "ddud"
    ricci: Tensor      # R_ab
    schouten: Tensor   # P_ab
    B: Tensor          # B_ab = P_ba - P_ab
    beta: ex.Expr
    theta: Tensor      # theta_a
    cotton: Tensor     # L_b
    Y: Tensor          # Y_cdb


def curvature_data(conn: Connection2D) -> CurvatureData:
    x = conn.coords

    def riemann_fill(a, b, c, d):
        total = ex.sub(ex.differentiate(conn.gamma(c, b, d), x[a]),
                       ex.differentiate(conn.gamma(c, a, d), x[b]))
        for e in range(2):
            total = ex.add(total, ex.mul(conn.gamma(c, a, e), conn.gamma(e, b, d)))
            total = ex.sub(total, ex.mul(conn.gamma(c, b, e), conn.gamma(e, a, d)))
        return total

    riemann = Tensor.build("ddud", riemann_fill)
    ricci = Tensor.build("dd", lambda a, b: ex.add(*(riemann[c, a, c, b]
                                                     for c in range(2))))
    schouten = Tensor.build(
        "dd", lambda a, b: ex.add(ex.mul(Q(2, 3), ricci[a, b]),
                                  ex.mul(Q(1, 3), ricci[b, a])))
    B = Tensor.build("dd", lambda a, b: ex.sub(schouten[b, a], schouten[a, b]))
    eps_up = conn.volume.tensor_upper()
    beta = ex.add(*(ex.mul(B[a, b], eps_up[a, b])
                    for a in range(2) for b in range(2)))
    theta = conn.theta()
    dP = covariant_derivative(schouten, conn)  # (c, d, b) = nabla_c P_db
    cotton = Tensor.build(
        "d", lambda b: ex.add(*(ex.mul(eps_up[c, d], dP[c, d, b])
                                for c in range(2) for d in range(2))))
    Y = Tensor.build(
        "ddd", lambda c, d, b: ex.mul(Q(1, 2), ex.sub(dP[c, d, b], dP[d, c, b])))
    return CurvatureData(riemann, ricci, schouten, B, beta, theta, cotton, Y)


def ode_from_connection(conn: Connection2D) -> ProjectiveODE:
    """Unparametrised-geodesic coefficients; projectively invariant."""
    g = conn.gamma
    return ProjectiveODE(
        conn.ctx,
        A0=ex.neg(g(1, 0, 0)),
        A1=ex.sub(g(0, 0, 0), ex.mul(2, g(1, 0, 1))),
        A2=ex.sub(ex.mul(2, g(0, 0, 1)), g(1, 1, 1)),
        A3=g(0, 1, 1),
    )


def thomas_connection(ode: ProjectiveODE,
                      volume: VolumeForm = VolumeForm()) -> Connection2D:
    """The trace-free representative (Gamma^d_{da} = 0) whose
    unparametrised-geodesic coefficients reproduce the given quadruple."""
    A0, A1, A2, A3 = ode.coefficients
    third = Q(1, 3)
    return Connection2D.from_components(ode.ctx, {
        (1, 1, 1): ex.mul(third, A1),
        (1, 1, 2): ex.mul(third, A2),
        (1, 2, 2): A3,
        (2, 1, 1): ex.neg(A0),
        (2, 1, 2): ex.mul(-third, A1),
        (2, 2, 2): ex.mul(-third, A2),
    }, volume)


def projective_change(conn: Connection2D, upsilon: Tensor) -> Connection2D:
    """Gamma^a_{bc} + Upsilon_b delta^a_c + Upsilon_c delta^a_b."""
    if upsilon.valence != "d":
        raise ValueError("the projective change needs a one-form")

    def fill(a, b, c):
        total = conn.gamma(a, b, c)
        if a == c:
            total = ex.add(total, upsilon[b])
        if a == b:
            total = ex.add(total, upsilon[c])
        return total

    comps = tuple(fill(*idx) for idx in itertools.product(range(2), repeat=3))
    return Connection2D(conn.ctx, comps, conn.volume)


def liouville_invariants(ode: ProjectiveODE) -> Tuple[ex.Expr, ex.Expr]:
    """The classical point-invariant pair (L1, L2); both vanish identically
    iff the structure is projectively flat.  The second invariant is the
    x<->y mirror of the first."""
    x, y = ode.ctx.variables[:2]
    A0, A1, A2, A3 = ode.coefficients

    def d(e, v):
        return ex.differentiate(e, v)

    L1 = ex.add(
        ex.mul(Q(2, 3), d(d(A1, x), y)),
        ex.mul(Q(-1, 3), d(d(A2, x), x)),
        ex.neg(d(d(A0, y), y)),
        ex.mul(A0, d(A2, y)),
        ex.mul(A2, d(A0, y)),
        ex.neg(ex.mul(A3, d(A0, x))),
        ex.mul(-2, A0, d(A3, x)),
        ex.mul(Q(-2, 3), A1, d(A1, y)),
        ex.mul(Q(1, 3), A1, d(A2, x)),
    )
    L2 = ex.add(
        ex.mul(Q(2, 3), d(d(A2, x), y)),
        ex.mul(Q(-1, 3), d(d(A1, y), y)),
        ex.neg(d(d(A3, x), x)),
        ex.neg(ex.mul(A3, d(A1, x))),
        ex.neg(ex.mul(A1, d(A3, x))),
        ex.mul(A0, d(A3, y)),
        ex.mul(2, A3, d(A0, y)),
        ex.mul(Q(2, 3), A2, d(A2, x)),
        ex.mul(Q(-1, 3), A2, d(A1, y)),
    )
    return L1, L2


def nu5(conn: Connection2D, policy: ZeroTestPolicy = ZeroTestPolicy()) -> ex.Expr:
    """Liouville's degree-5 semi-invariant L^a L^b nabla_a L_b of a special
    connection; raising uses the attached volume form.  Raises
    NonSpecialConnection when the Ricci tensor is not symmetric."""
    data = curvature_data(conn)
    beta_verdict = is_identically_zero(data.beta, conn.ctx, policy)
    if not beta_verdict.is_zero:
        raise NonSpecialConnection(
            f"nu5 needs a symmetric Ricci tensor; beta verdict: {beta_verdict}")
    L = data.cotton
    dL = covariant_derivative(L, conn)  # (a, b) = nabla_a L_b
    L_up = raise_index(L, 0, conn.volume)
    total = ex.ZERO
    for a in range(2):
        for b in range(2):
            total = ex.add(total, ex.mul(L_up[a], L_up[b], dL[a, b]))
    return total
