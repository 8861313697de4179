"""Hydrodynamic-type systems with two components: the characteristic
connection, Hamiltonian counting, the metric/Killing-form dictionary, the
projective metric, and the Riemann-invariant front end.

Inputs are taken directly in Riemann invariants (X, Y):

    dX/dt = lambda1(X, Y) dX/dx,   dY/dt = lambda2(X, Y) dY/dx

with characteristic functions

    A = d_Y lambda1 / (lambda2 - lambda1),
    B = d_X lambda2 / (lambda1 - lambda2).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as Q
from typing import Dict, Optional, Tuple

from . import expr as ex
from .killing import KillingCount, count_killing_forms
from .metrisability import MetricCandidate
from .numeric import Context, Verdict, ZeroTestPolicy, is_identically_zero
from .projective import Connection2D, projective_change
from .tensor import Tensor, covariant_derivative, symmetrize

__all__ = ["HydroSystem2", "HamiltonianMetric", "characteristic_connection",
           "characteristic_functions", "connection_from_characteristics",
           "hamiltonian_count", "killing_to_metric", "metric_to_killing",
           "hamiltonian_metric_residuals", "projective_metric_h",
           "levi_civita_connection", "riemann_invariants_2",
           "RiemannInvariants", "DegenerateCharacteristic", "CoincidentSpeeds"]


class DegenerateCharacteristic(ValueError):
    """A or B vanishes on the sample box; the connection needs ln A, ln B."""


class CoincidentSpeeds(ValueError):
    """lambda1 - lambda2 vanishes on the sample box."""


@dataclass(frozen=True)
class HydroSystem2:
    ctx: Context
    lambda1: ex.Expr
    lambda2: ex.Expr

    def gap(self) -> ex.Expr:
        return ex.sub(self.lambda1, self.lambda2)


@dataclass(frozen=True)
class HamiltonianMetric:
    """Diagonal flat metric g = k^-1 dX^2 + f^-1 dY^2."""

    k: ex.Expr
    f: ex.Expr


def characteristic_functions(sys: HydroSystem2,
                             policy: ZeroTestPolicy = ZeroTestPolicy()):
    x, y = sys.ctx.variables[:2]
    gap = sys.gap()
    gap_v = is_identically_zero(gap, sys.ctx, policy)
    if not gap_v.is_nonzero:
        raise CoincidentSpeeds(f"lambda1 - lambda2 verdict: {gap_v}")
    A = ex.div(ex.differentiate(sys.lambda1, y), ex.neg(gap))
    B = ex.div(ex.differentiate(sys.lambda2, x), gap)
    return A, B


def connection_from_characteristics(A: ex.Expr, B: ex.Expr, ctx: Context,
                                    policy: ZeroTestPolicy = ZeroTestPolicy(),
                                    check: bool = True) -> Connection2D:
    """The affine connection with nonzero components

        G^1_11 = d_1 ln A - 2B        G^2_22 = d_2 ln B - 2A
        G^1_12 = -(1/2 d_2 ln A + A)  G^2_12 = -(1/2 d_1 ln B + B)

    built over a context that declares zeros of A, B as singular loci."""
    if check:
        for name, func in (("A", A), ("B", B)):
            v = is_identically_zero(func, ctx, policy)
            if not v.is_nonzero:
                raise DegenerateCharacteristic(
                    f"characteristic function {name} verdict: {v}")
    x, y = ctx.variables[:2]
    ctx2 = ctx.with_loci(A, B)
    return Connection2D.from_components(ctx2, {
        (1, 1, 1): ex.sub(ex.div(ex.differentiate(A, x), A), ex.mul(2, B)),
        (2, 2, 2): ex.sub(ex.div(ex.differentiate(B, y), B), ex.mul(2, A)),
        (1, 1, 2): ex.neg(ex.add(ex.div(ex.differentiate(A, y), ex.mul(2, A)), A)),
        (2, 1, 2): ex.neg(ex.add(ex.div(ex.differentiate(B, x), ex.mul(2, B)), B)),
    })


def characteristic_connection(sys: HydroSystem2,
                              policy: ZeroTestPolicy = ZeroTestPolicy()) -> Connection2D:
    A, B = characteristic_functions(sys, policy)
    ctx = sys.ctx.with_loci(sys.gap())
    return connection_from_characteristics(A, B, ctx, policy)


def hamiltonian_count(sys: HydroSystem2,
                      policy: ZeroTestPolicy = ZeroTestPolicy()) -> KillingCount:
    """Number of Dubrovin-Novikov Hamiltonian structures (1, 2, or 3) via
    the Killing count of the characteristic connection."""
    return count_killing_forms(characteristic_connection(sys, policy), policy)


def killing_to_metric(K: Tuple[ex.Expr, ex.Expr], A: ex.Expr, B: ex.Expr,
                      ctx: Context,
                      policy: ZeroTestPolicy = ZeroTestPolicy()):
    """Invert K1 = A f, K2 = B k; returns the metric and the residuals of
    the flat-metric system (both vanish iff K is a Killing form):

        r1 = d_2 k + 2 A k            r2 = d_1 f + 2 B f
        r3 = (d_2 A + A^2) f + (d_1 B + B^2) k + A d_2 f / 2 + B d_1 k / 2
    """
    x, y = ctx.variables[:2]
    f = ex.div(K[0], A)
    k = ex.div(K[1], B)
    metric = HamiltonianMetric(k, f)
    return metric, hamiltonian_metric_residuals(metric, A, B, ctx)


def hamiltonian_metric_residuals(metric: HamiltonianMetric, A, B, ctx: Context):
    x, y = ctx.variables[:2]
    k, f = metric.k, metric.f
    r1 = ex.add(ex.differentiate(k, y), ex.mul(2, A, k))
    r2 = ex.add(ex.differentiate(f, x), ex.mul(2, B, f))
    r3 = ex.add(
        ex.mul(ex.add(ex.differentiate(A, y), ex.mul(A, A)), f),
        ex.mul(ex.add(ex.differentiate(B, x), ex.mul(B, B)), k),
        ex.mul(Q(1, 2), A, ex.differentiate(f, y)),
        ex.mul(Q(1, 2), B, ex.differentiate(k, x)))
    return (r1, r2, r3)


def metric_to_killing(metric: HamiltonianMetric, A: ex.Expr, B: ex.Expr):
    """K = (A f, B k), the Killing-form side of the dictionary."""
    return (ex.mul(A, metric.f), ex.mul(B, metric.k))


def projective_metric_h(sys: HydroSystem2,
                        policy: ZeroTestPolicy = ZeroTestPolicy()):
    """The metrisability witness h = AB dX (.) dY (g_12 = g_21 = AB) and the
    one-form Upsilon shifting the characteristic connection onto h's
    Levi-Civita connection."""
    A, B = characteristic_functions(sys, policy)
    x, y = sys.ctx.variables[:2]
    ab = ex.mul(A, B)
    v = is_identically_zero(ab, sys.ctx, policy)
    if not v.is_nonzero:
        raise DegenerateCharacteristic(f"AB verdict: {v}")
    metric = MetricCandidate(ex.ZERO, ab, ex.ZERO)
    upsilon = Tensor("d", (
        ex.add(ex.div(ex.differentiate(B, x), ex.mul(2, B)), B),
        ex.add(ex.div(ex.differentiate(A, y), ex.mul(2, A)), A),
    ))
    return metric, upsilon


def levi_civita_connection(metric: MetricCandidate, ctx: Context) -> Connection2D:
    """Levi-Civita connection of a metric candidate (needs det != 0)."""
    x, y = ctx.variables[:2]
    g = ((metric.E, metric.F), (metric.F, metric.G))
    det = metric.determinant
    ginv = ((ex.div(metric.G, det), ex.neg(ex.div(metric.F, det))),
            (ex.neg(ex.div(metric.F, det)), ex.div(metric.E, det)))
    coords = (x, y)

    def dg(a, b, v):
        return ex.differentiate(g[a][b], coords[v])

    entries = {}
    for a in range(2):
        for b in range(2):
            for c in range(b, 2):
                total = ex.ZERO
                for m in range(2):
                    total = ex.add(total, ex.mul(
                        Q(1, 2), ginv[a][m],
                        ex.add(dg(c, m, b), ex.sub(dg(b, m, c), dg(b, c, m)))))
                entries[(a + 1, b + 1, c + 1)] = total
    return Connection2D.from_components(ctx, entries)


# ---------------------------------------------------------------------------
# Riemann invariants for 2x2 systems


@dataclass(frozen=True)
class RiemannInvariants:
    R1: ex.Expr
    R2: ex.Expr
    lambda1: ex.Expr
    lambda2: ex.Expr


def riemann_invariants_2(v: Tuple[Tuple[ex.Expr, ...], ...], ctx: Context,
                         policy: ZeroTestPolicy = ZeroTestPolicy()
                         ) -> Optional[RiemannInvariants]:
    """Riemann invariants of dt^i/dT = v^i_j dt^j/dX when the construction
    stays inside the expression class; None otherwise.

    Handled shapes: diagonal matrices; the symmetric-flow shape
    [[0, m(t2)], [1, 0]] (velocities +-sqrt(m), invariants t1 + int sqrt(m));
    and general matrices whose left eigenform (v21, lambda - v11) is exact.
    """
    (v11, v12), (v21, v22) = v
    t1, t2 = ctx.variables[:2]

    gap_check = None
    if v12 is ex.ZERO and v21 is ex.ZERO:
        gap = ex.sub(v11, v22)
        if not is_identically_zero(gap, ctx, policy).is_nonzero:
            raise CoincidentSpeeds("diagonal entries coincide on the box")
        return RiemannInvariants(ex.sym(t1), ex.sym(t2), v11, v22)

    if v11 is ex.ZERO and v22 is ex.ZERO and v21 is ex.ONE \
            and t1 not in ex.free_symbols(v12):
        m = v12
        if not is_identically_zero(m, ctx, policy).is_nonzero:
            raise CoincidentSpeeds(
                "both characteristic velocities vanish (m = 0)")
        lam = ex.pow_(m, Q(1, 2))
        integral = ex.antiderivative(lam, t2)
        if integral is None:
            return None
        return RiemannInvariants(ex.add(ex.sym(t1), integral),
                                 ex.sub(ex.sym(t1), integral),
                                 lam, ex.neg(lam))

    # generic: lambda = (tr +- sqrt(disc)) / 2, left form (v21, lambda - v11)
    tr = ex.add(v11, v22)
    disc = ex.add(ex.mul(ex.sub(v11, v22), ex.sub(v11, v22)),
                  ex.mul(4, v12, v21))
    disc_v = is_identically_zero(disc, ctx, policy)
    if not disc_v.is_nonzero:
        raise CoincidentSpeeds(f"eigenvalue gap verdict: {disc_v}")
    root = ex.pow_(disc, Q(1, 2))
    out = []
    for sign in (1, -1):
        lam = ex.mul(Q(1, 2), ex.add(tr, ex.mul(sign, root)))
        omega = (v21, ex.sub(lam, v11))
        curl = ex.sub(ex.differentiate(omega[1], t1),
                      ex.differentiate(omega[0], t2))
        if not is_identically_zero(curl, ctx, policy).is_zero:
            return None
        h1 = ex.antiderivative(omega[0], t1)
        if h1 is None:
            return None
        rest = ex.sub(omega[1], ex.differentiate(h1, t2))
        if t1 in ex.free_symbols(rest):
            return None
        h2 = ex.antiderivative(rest, t2)
        if h2 is None:
            return None
        out.append((ex.add(h1, h2), lam))
    return RiemannInvariants(out[0][0], out[1][0], out[0][1], out[1][1])
