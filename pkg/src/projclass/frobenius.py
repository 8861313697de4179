"""Two-dimensional Frobenius-manifold front end: the prepotential catalog,
WDVV residuals, the primary hydrodynamic flow in Riemann invariants, the
tri-Hamiltonian metric family, and the third-metric flatness witness.

All computations here run in flat t-coordinates on dedicated 2x2 grids; the
hand-off to the hydro module happens in Riemann invariants.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction as Q
from typing import Dict, Optional, Tuple

from . import expr as ex
from .hydro import (HamiltonianMetric, HydroSystem2, characteristic_functions,
                    hamiltonian_metric_residuals, metric_to_killing)
from .numeric import Context, ZeroTestPolicy, is_identically_zero
from .tensor import Tensor

__all__ = ["Prepotential2D", "FrobeniusData", "wdvv_residual", "primary_flow",
           "trimetric_family", "third_flatness_witness", "frobenius_data",
           "contravariant_lc", "FlowUnavailable", "CATALOG_TAGS"]

T1, T2 = "t1", "t2"

CATALOG_TAGS = ("power", "qlog", "log", "exponential", "trivial", "cubic")


class FlowUnavailable(ValueError):
    """The primary flow degenerates for this prepotential."""


@dataclass(frozen=True)
class Prepotential2D:
    """F = (1/2) t1^2 t2 + f(t2) for the first five catalog shapes; the
    cubic entry adds (c/6) t1^3 and has f = (K/6) t2^3.

    tag: one of CATALOG_TAGS, or "custom" with an explicit f.
    constants: exprs for K, k, r, c as the tag requires (defaults 1).
    """

    ctx: Context
    tag: str
    f: ex.Expr
    constants: Tuple[Tuple[str, ex.Expr], ...] = ()
    d2: Optional[Q] = None  # Euler weight of t2; None for custom f

    @staticmethod
    def catalog(tag: str, ctx: Optional[Context] = None,
                **constants) -> "Prepotential2D":
        if ctx is None:
            ctx = Context.make((T1, T2))
        t2 = ex.sym(T2)
        consts = {name: ex._coerce(value) for name, value in constants.items()}

        def const(name, default=1):
            return consts.setdefault(name, ex.num(default))

        if tag == "power":
            K, k = const("K"), const("k", 4)
            if not isinstance(k, ex.Num):
                raise ValueError("the power-entry exponent k must be rational")
            kq = k.value
            if kq in (1, 2):
                raise ValueError("k = 1, 2 degenerate to quadratic prepotentials")
            f = ex.mul(K, ex.pow_(t2, kq))
            d2 = Q(2, kq - 1)
        elif tag == "qlog":
            K = const("K")
            f = ex.mul(K, t2, t2, ex.fn("ln", t2))
            d2 = Q(2)
        elif tag == "log":
            K = const("K")
            f = ex.mul(K, ex.fn("ln", t2))
            d2 = Q(-2)
        elif tag == "exponential":
            K, r = const("K"), const("r")
            if not isinstance(r, ex.Num) or r.value == 0:
                raise ValueError("the exponential entry needs rational r != 0")
            f = ex.mul(K, ex.fn("exp", ex.mul(ex.num(Q(2) / r.value), t2)))
            d2 = Q(0)
        elif tag == "trivial":
            f = ex.ZERO
            d2 = Q(0)
        elif tag == "cubic":
            K, c = const("K"), const("c")
            f = ex.mul(ex.div(K, 6), t2, t2, t2)
            d2 = Q(1)
        else:
            raise ValueError(f"unknown catalog tag {tag!r}")
        return Prepotential2D(ctx, tag, f, tuple(sorted(consts.items())), d2)

    @staticmethod
    def custom(f: ex.Expr, ctx: Optional[Context] = None) -> "Prepotential2D":
        if ctx is None:
            ctx = Context.make((T1, T2))
        return Prepotential2D(ctx, "custom", f, (), None)

    def const(self, name, default=None):
        for n, v in self.constants:
            if n == name:
                return v
        if default is None:
            raise KeyError(name)
        return ex._coerce(default)

    def full(self) -> ex.Expr:
        t1, t2 = ex.sym(T1), ex.sym(T2)
        F = ex.add(ex.mul(Q(1, 2), t1, t1, t2), self.f)
        if self.tag == "cubic":
            F = ex.add(F, ex.mul(ex.div(self.const("c"), 6), t1, t1, t1))
        return F

    def euler_field(self) -> Optional[Tuple[ex.Expr, ex.Expr]]:
        t1, t2 = ex.sym(T1), ex.sym(T2)
        if self.tag == "exponential":
            return (t1, self.const("r"))
        if self.tag == "trivial":
            return (t1, ex.ZERO)
        if self.d2 is None:
            return None
        return (t1, ex.mul(ex.num(self.d2), t2))

    @property
    def weight(self) -> Optional[Q]:
        # scaling weight of F modulo quadratic slack
        return None if self.d2 is None else 2 + self.d2


def _third_derivatives(F: ex.Expr) -> Tensor:
    coords = (T1, T2)

    def fill(a, b, c):
        return ex.differentiate(
            ex.differentiate(ex.differentiate(F, coords[a]), coords[b]),
            coords[c])

    return Tensor.build("ddd", fill)


def _inv2(m):
    det = ex.sub(ex.mul(m[0][0], m[1][1]), ex.mul(m[0][1], m[1][0]))
    return ((ex.div(m[1][1], det), ex.neg(ex.div(m[0][1], det))),
            (ex.neg(ex.div(m[1][0], det)), ex.div(m[0][0], det))), det


@dataclass(frozen=True)
class FrobeniusData:
    eta: Tuple[Tuple[ex.Expr, ...], ...]
    eta_inv: Tuple[Tuple[ex.Expr, ...], ...]
    c_low: Tensor                 # c_abc
    euler: Tuple[ex.Expr, ex.Expr]
    intersection: Tuple[Tuple[ex.Expr, ...], ...]   # g^{ab} = E^c c_c^{ab}
    third: Tuple[Tuple[ex.Expr, ...], ...]          # h^{ab} = g^{ac} g^{bd} eta_dc
    R_op: Tuple[Tuple[ex.Expr, ...], ...]           # R^c_b
    gamma_g: Dict[Tuple[int, int, int], ex.Expr]    # Gamma^{bc}_a of g
    gamma_h: Dict[Tuple[int, int, int], ex.Expr]    # Gamma~^{bc}_a of h


def frobenius_data(prep: Prepotential2D) -> FrobeniusData:
    F = prep.full()
    c_low = _third_derivatives(F)
    eta = tuple(tuple(c_low[0, a, b] for b in range(2)) for a in range(2))
    eta_inv, _ = _inv2(eta)
    euler = prep.euler_field()
    if euler is None:
        raise ValueError("the Euler field needs catalog scaling data")

    def c_raise2(a, b, d):  # c_a^{bd}
        return ex.add(*(ex.mul(eta_inv[b][e], eta_inv[d][f], c_low[a, e, f])
                        for e in range(2) for f in range(2)))

    g = tuple(tuple(ex.add(*(ex.mul(euler[cc], c_raise2(cc, a, b))
                             for cc in range(2)))
                    for b in range(2)) for a in range(2))
    h = tuple(tuple(ex.add(*(ex.mul(g[a][cc], g[b][d], eta[d][cc])
                             for cc in range(2) for d in range(2)))
                    for b in range(2)) for a in range(2))
    d_charge = 1 - prep.d2
    coords = (T1, T2)
    R_op = tuple(tuple(
        ex.add(ex.num(Q(d_charge - 1, 2)) if a == b else ex.ZERO,
               ex.differentiate(euler[a], coords[b]))
        for b in range(2)) for a in range(2))
    gamma_g = {}
    for a in range(2):
        for b in range(2):
            for cc in range(2):
                gamma_g[(b, cc, a)] = ex.add(
                    *(ex.mul(R_op[cc][d], c_raise2(a, b, d)) for d in range(2)))
    gmix = tuple(tuple(ex.add(*(ex.mul(g[cc][e], eta[e][d]) for e in range(2)))
                       for d in range(2)) for cc in range(2))
    gamma_h = {}
    for a in range(2):
        for b in range(2):
            for cc in range(2):
                gamma_h[(b, cc, a)] = ex.add(
                    ex.add(*(ex.mul(gmix[cc][d], gamma_g[(b, d, a)])
                             for d in range(2))),
                    ex.add(*(ex.mul(gmix[b][d], gamma_g[(d, cc, a)])
                             for d in range(2))))
    return FrobeniusData(eta, eta_inv, c_low, euler, g, h, R_op,
                         gamma_g, gamma_h)


def wdvv_residual(prep: Prepotential2D):
    """(associativity residual tensor, Euler residual tensor).

    The associativity residual c^c_ab c_cde - c^c_ad c_cbe vanishes
    identically in two dimensions; the Euler residual compares third
    derivatives of L_E F against the scaling weight, killing the quadratic
    slack the scaling law allows."""
    F = prep.full()
    c_low = _third_derivatives(F)
    eta = tuple(tuple(c_low[0, a, b] for b in range(2)) for a in range(2))
    eta_inv, _ = _inv2(eta)

    def c_mixed(cc, a, b):  # c^cc_{ab}
        return ex.add(*(ex.mul(eta_inv[cc][e], c_low[e, a, b])
                        for e in range(2)))

    def assoc_fill(a, b, d, e):
        total = ex.ZERO
        for cc in range(2):
            total = ex.add(total, ex.mul(c_mixed(cc, a, b), c_low[cc, d, e]))
            total = ex.sub(total, ex.mul(c_mixed(cc, a, d), c_low[cc, b, e]))
        return total

    assoc = Tensor.build("dddd", assoc_fill)

    if prep.weight is None:
        return assoc, None
    euler = prep.euler_field()
    lie = ex.add(ex.mul(euler[0], ex.differentiate(F, T1)),
                 ex.mul(euler[1], ex.differentiate(F, T2)))
    resid = ex.sub(lie, ex.mul(ex.num(prep.weight), F))
    return assoc, _third_derivatives(resid)


def primary_flow(prep: Prepotential2D, invariant_names=("X", "Y"),
                 policy: ZeroTestPolicy = ZeroTestPolicy()) -> HydroSystem2:
    """The first nontrivial flow dt1/dT = f'''(t2) dX t2, dt2/dT = dX t1,
    rewritten in Riemann invariants R = t1 +- int sqrt(f''') dt2; the
    returned system carries the characteristic velocities as functions of
    the invariants, ready for Hamiltonian counting."""
    if prep.tag == "trivial":
        raise FlowUnavailable(
            "the flow has two identical characteristic velocities (f''' = 0)")
    if prep.tag == "cubic":
        raise FlowUnavailable(
            "the characteristic functions A and B vanish for every flow of "
            "the cubic entry (constant velocities)")
    fppp = ex.differentiate(
        ex.differentiate(ex.differentiate(prep.f, T2), T2), T2)
    v = is_identically_zero(fppp, prep.ctx, policy)
    if not v.is_nonzero:
        raise FlowUnavailable(
            f"the flow has two identical characteristic velocities: f''' {v}")
    lam_t = ex.pow_(fppp, Q(1, 2))
    S = ex.antiderivative(lam_t, T2)
    if S is None:
        raise FlowUnavailable("the Riemann-invariant quadrature leaves the "
                              "closed expression class")
    lam_s = _invert_half_gap(S, lam_t)
    if lam_s is None:
        raise FlowUnavailable("the characteristic velocity cannot be "
                              "expressed in the invariants")
    xn, yn = invariant_names
    gap_half = ex.mul(Q(1, 2), ex.sub(ex.sym(xn), ex.sym(yn)))
    lam1 = ex.substitute(lam_s, _GAP, gap_half)
    params = {n: kind for n, kind in prep.ctx.parameters}
    ctx = Context.make((xn, yn), params)
    sys = HydroSystem2(ctx.with_loci(ex.sub(ex.sym(xn), ex.sym(yn)), lam1),
                       lam1, ex.neg(lam1))
    return sys


_GAP = "_half_gap"


def _invert_half_gap(S: ex.Expr, lam_t: ex.Expr) -> Optional[ex.Expr]:
    """With R1 - R2 = 2 S(t2), solve S(t2) = s for t2 and return the
    velocity lambda = S'(t2) as an expression in s (the symbol _GAP).

    Handled closed forms: S = C*u^m with u affine in t2, and S = C*e^(q t2).
    """
    s = ex.sym(_GAP)
    coeff, factors = ex._term_parts(S)
    const_fs = [f for f in factors if T2 not in ex.free_symbols(f[0])]
    var_fs = [f for f in factors if T2 in ex.free_symbols(f[0])]
    if len(var_fs) != 1:
        return None
    C = ex._make_term(coeff, tuple(const_fs))
    base, m = var_fs[0]
    if isinstance(base, ex.Fn) and base.fname == "exp":
        w = ex.mul(ex.num(m), base.arg)
        aff = ex._affine_in(w, T2)
        if aff is None:
            return None
        q, _ = aff
        # S = C e^w, lambda = S' = q C e^w = q s
        return ex.mul(q, s)
    aff = ex._affine_in(base, T2)
    if aff is None:
        return None
    a, _ = aff
    # S = C u^m -> u = (s/C)^(1/m), lambda = S' = C m a u^(m-1); the single
    # combined exponent keeps the odd-root (sign-preserving) continuation
    expo = (Q(m) - 1) / Q(m)
    return ex.mul(C, ex.num(m), a, ex.pow_(ex.div(s, C), expo))


def trimetric_family(sys: HydroSystem2, C1, C2, C3,
                     policy: ZeroTestPolicy = ZeroTestPolicy()):
    """The diagonal flat-metric family

        [(C1 + C2 R^1 + C3 (R^1)^2) lambda^1]^{-1} dR^1 dR^1 +
        [(C1 + C2 R^2 + C3 (R^2)^2) lambda^2]^{-1} dR^2 dR^2

    in the Riemann invariants the system already uses.  Returns the metric
    (k = bracket1 * lambda1, f = bracket2 * lambda2), the Killing form of
    the dictionary, and the flat-system residuals, which vanish iff the
    member solves the Killing equations."""
    x, y = sys.ctx.variables[:2]
    X, Y = ex.sym(x), ex.sym(y)
    C1, C2, C3 = (ex._coerce(C) for C in (C1, C2, C3))
    bracket1 = ex.add(C1, ex.mul(C2, X), ex.mul(C3, X, X))
    bracket2 = ex.add(C1, ex.mul(C2, Y), ex.mul(C3, Y, Y))
    for br in (bracket1, bracket2):
        v = is_identically_zero(br, sys.ctx, policy)
        if not v.is_nonzero:
            raise ValueError(f"trimetric bracket degenerates on the box: {v}")
    metric = HamiltonianMetric(ex.mul(bracket1, sys.lambda1),
                               ex.mul(bracket2, sys.lambda2))
    A, B = characteristic_functions(sys, policy)
    K = metric_to_killing(metric, A, B)
    residuals = hamiltonian_metric_residuals(metric, A, B, sys.ctx)
    return metric, K, residuals


def third_flatness_witness(prep: Prepotential2D) -> ex.Expr:
    """The curvature wedge d_2 Gamma~^{12}_1 - d_1 Gamma~^{12}_2 of the
    third metric's contravariant connection."""
    data = frobenius_data(prep)
    return ex.sub(ex.differentiate(data.gamma_h[(0, 1, 0)], T2),
                  ex.differentiate(data.gamma_h[(0, 1, 1)], T1))


def contravariant_lc(m_up, coords=( T1, T2)):
    """Contravariant Levi-Civita symbols Gamma^{bc}_a = -m^{bl} G^c_{la} of
    a contravariant 2x2 metric given as nested tuples of Expr."""
    m_cov, _ = _inv2(m_up)

    def dm(a, b, v):
        return ex.differentiate(m_cov[a][b], coords[v])

    lc = {}
    for a in range(2):
        for l in range(2):
            for a2 in range(2):
                total = ex.ZERO
                for mm in range(2):
                    total = ex.add(total, ex.mul(
                        Q(1, 2), m_up[a][mm],
                        ex.add(dm(l, mm, a2),
                               ex.sub(dm(a2, mm, l), dm(l, a2, mm)))))
                lc[(a, l, a2)] = total
    out = {}
    for b in range(2):
        for cc in range(2):
            for a in range(2):
                out[(b, cc, a)] = ex.neg(ex.add(
                    *(ex.mul(m_up[b][l], lc[(cc, l, a)]) for l in range(2))))
    return out
