"""Metrisability machinery: the component system for the mobility tensor,
candidate verification, the degenerate branch, metric reconstruction, and
quadratic first integrals, with the Painleve catalog as the test bed.

The component system for psi_1 = sigma_11, psi_2 = sigma_12,
psi_3 = sigma_22 against y'' = A3 y'^3 + A2 y'^2 + A1 y' + A0:

    d psi1/dx                 = (2/3) A1 psi1 - 2 A0 psi2
    d psi3/dy                 = 2 A3 psi2 - (2/3) A2 psi3
    d psi1/dy + 2 d psi2/dx   = (4/3) A2 psi1 - (2/3) A1 psi2 - 2 A0 psi3
    d psi3/dx + 2 d psi2/dy   = 2 A3 psi1 - (4/3) A1 psi3 + (2/3) A2 psi2
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as Q
from typing import Dict, Optional, Tuple

from . import expr as ex
from .numeric import Context, Verdict, ZeroTestPolicy, is_identically_zero
from .projective import ProjectiveODE

__all__ = ["SigmaCandidate", "MetricCandidate", "QuadraticIntegral",
           "metrisability_residual", "degenerate_branch", "sigma_to_metric",
           "metric_to_sigma", "ratio_first_integral", "conservation_residual",
           "painleve_structure", "painleve_context", "DEGENERATE_PSI1",
           "killing_vector_first_integral", "DegenerateBranch",
           "DegenerateSigma", "NoDegenerateSolution", "YPRIME"]

YPRIME = "p"  # spelling of y' in first-integral expressions


class DegenerateSigma(ValueError):
    pass


class NoDegenerateSolution(ValueError):
    pass


@dataclass(frozen=True)
class SigmaCandidate:
    psi1: ex.Expr
    psi2: ex.Expr
    psi3: ex.Expr

    @property
    def delta(self) -> ex.Expr:
        return ex.sub(ex.mul(self.psi1, self.psi3), ex.mul(self.psi2, self.psi2))

    def scaled(self, factor) -> "SigmaCandidate":
        return SigmaCandidate(ex.mul(factor, self.psi1),
                              ex.mul(factor, self.psi2),
                              ex.mul(factor, self.psi3))


@dataclass(frozen=True)
class MetricCandidate:
    E: ex.Expr
    F: ex.Expr
    G: ex.Expr

    @property
    def determinant(self) -> ex.Expr:
        return ex.sub(ex.mul(self.E, self.G), ex.mul(self.F, self.F))


@dataclass(frozen=True)
class QuadraticIntegral:
    """Ratio of two quadratics in y' (spelled p); denominator 1 encodes a
    plain polynomial integral."""

    numerator: ex.Expr
    denominator: ex.Expr = ex.ONE

    def expression(self) -> ex.Expr:
        if self.denominator is ex.ONE:
            return self.numerator
        return ex.div(self.numerator, self.denominator)


def metrisability_residual(ode: ProjectiveODE, sigma: SigmaCandidate):
    """Left minus right of the four component equations, normalized."""
    x, y = ode.ctx.variables[:2]
    A0, A1, A2, A3 = ode.coefficients
    p1, p2, p3 = sigma.psi1, sigma.psi2, sigma.psi3
    d = ex.differentiate
    r1 = ex.sub(d(p1, x),
                ex.sub(ex.mul(Q(2, 3), A1, p1), ex.mul(2, A0, p2)))
    r2 = ex.sub(d(p3, y),
                ex.sub(ex.mul(2, A3, p2), ex.mul(Q(2, 3), A2, p3)))
    r3 = ex.sub(ex.add(d(p1, y), ex.mul(2, d(p2, x))),
                ex.add(ex.mul(Q(4, 3), A2, p1),
                       ex.mul(Q(-2, 3), A1, p2),
                       ex.mul(-2, A0, p3)))
    r4 = ex.sub(ex.add(d(p3, x), ex.mul(2, d(p2, y))),
                ex.add(ex.mul(2, A3, p1),
                       ex.mul(Q(-4, 3), A1, p3),
                       ex.mul(Q(2, 3), A2, p2)))
    return (r1, r2, r3, r4)


@dataclass(frozen=True)
class DegenerateBranch:
    condition: ex.Expr
    condition_verdict: Verdict
    psi1: Optional[ex.Expr]
    note: str = ""


def degenerate_branch(ode: ProjectiveODE,
                      policy: ZeroTestPolicy = ZeroTestPolicy()) -> DegenerateBranch:
    """Rank-one mobility branch psi2 = psi3 = 0.  A nonvanishing psi1 exists
    iff d_y A1 = 2 d_x A2; when the quadratures stay in the closed class the
    solution psi1 = exp((2/3) int A1 dx + g(y)) is returned explicitly."""
    x, y = ode.ctx.variables[:2]
    A1, A2 = ode.A1, ode.A2
    condition = ex.sub(ex.differentiate(A1, y),
                       ex.mul(2, ex.differentiate(A2, x)))
    verdict = is_identically_zero(condition, ode.ctx, policy)
    if not verdict.is_zero:
        raise NoDegenerateSolution(
            f"d_y A1 - 2 d_x A2 does not vanish: {verdict}")
    hx = ex.antiderivative(ex.mul(Q(2, 3), A1), x)
    if hx is None:
        return DegenerateBranch(condition, verdict, None,
                                "closed form unavailable")
    rest = ex.sub(ex.mul(Q(4, 3), A2), ex.differentiate(hx, y))
    if x in ex.free_symbols(rest):
        return DegenerateBranch(condition, verdict, None,
                                "closed form unavailable")
    gy = ex.antiderivative(rest, y)
    if gy is None:
        return DegenerateBranch(condition, verdict, None,
                                "closed form unavailable")
    psi1 = ex.fn("exp", ex.add(hx, gy))
    return DegenerateBranch(condition, verdict, psi1)


def sigma_to_metric(sigma: SigmaCandidate, ctx: Context,
                    policy: ZeroTestPolicy = ZeroTestPolicy()) -> MetricCandidate:
    """E = psi1/Delta^2, F = psi2/Delta^2, G = psi3/Delta^2."""
    delta = sigma.delta
    v = is_identically_zero(delta, ctx, policy)
    if not v.is_nonzero:
        raise DegenerateSigma(f"sigma is degenerate on the box: {v}")
    d2 = ex.mul(delta, delta)
    return MetricCandidate(ex.div(sigma.psi1, d2),
                           ex.div(sigma.psi2, d2),
                           ex.div(sigma.psi3, d2))


def metric_to_sigma(metric: MetricCandidate, ctx: Context,
                    policy: ZeroTestPolicy = ZeroTestPolicy()) -> SigmaCandidate:
    """psi_i = g_i (det g)^(-2/3); the even numerator makes the power real
    for Lorentzian candidates."""
    det = metric.determinant
    v = is_identically_zero(det, ctx, policy)
    if not v.is_nonzero:
        raise DegenerateSigma(f"metric is degenerate on the box: {v}")
    scale = ex.pow_(det, Q(-2, 3))
    return SigmaCandidate(ex.mul(metric.E, scale),
                          ex.mul(metric.F, scale),
                          ex.mul(metric.G, scale))


def ratio_first_integral(sigma1: SigmaCandidate,
                         sigma2: SigmaCandidate) -> QuadraticIntegral:
    p = ex.sym(YPRIME)

    def quad(s):
        return ex.add(s.psi1, ex.mul(2, s.psi2, p), ex.mul(s.psi3, p, p))

    return QuadraticIntegral(quad(sigma1), quad(sigma2))


def conservation_residual(integral, ode: ProjectiveODE) -> ex.Expr:
    """d_x I + p d_y I + Lambda d_p I with Lambda the ODE right-hand side;
    zero iff I is a first integral of the unparametrised geodesics."""
    x, y = ode.ctx.variables[:2]
    p = ex.sym(YPRIME)
    I = integral.expression() if isinstance(integral, QuadraticIntegral) else integral
    A0, A1, A2, A3 = ode.coefficients
    lam = ex.add(ex.mul(A3, p, p, p), ex.mul(A2, p, p), ex.mul(A1, p), A0)
    return ex.add(ex.differentiate(I, x),
                  ex.mul(p, ex.differentiate(I, y)),
                  ex.mul(lam, ex.differentiate(I, YPRIME)))


def killing_vector_first_integral(metric: MetricCandidate,
                                  K_up: Tuple[ex.Expr, ex.Expr]) -> QuadraticIntegral:
    """(E + 2 F p + G p^2) / (K_1 + K_2 p)^2 with K lowered by the metric."""
    p = ex.sym(YPRIME)
    K1 = ex.add(ex.mul(metric.E, K_up[0]), ex.mul(metric.F, K_up[1]))
    K2 = ex.add(ex.mul(metric.F, K_up[0]), ex.mul(metric.G, K_up[1]))
    numerator = ex.add(metric.E, ex.mul(2, metric.F, p),
                       ex.mul(metric.G, p, p))
    den_lin = ex.add(K1, ex.mul(K2, p))
    return QuadraticIntegral(numerator, ex.mul(den_lin, den_lin))


# ---------------------------------------------------------------------------
# Painleve catalog


_PARAM_SLOTS = {
    "I": (),
    "II": ("alpha",),
    "III": ("alpha", "beta", "gamma", "delta"),
    "IV": ("alpha", "beta"),
    "V": ("alpha", "beta", "gamma", "delta"),
    "VI": ("alpha", "beta", "gamma", "delta"),
}


def painleve_structure(which: str, params: Dict[str, ex.Expr],
                       ctx: Context) -> ProjectiveODE:
    """The projective structure of Painleve equation I..VI; params supplies
    exprs for the constants the equation uses (missing ones default to
    symbols that must then be declared in ctx)."""
    which = which.upper()
    if which not in _PARAM_SLOTS:
        raise ValueError(f"unknown Painleve equation {which!r}")
    x = ex.sym(ctx.variables[0])
    y = ex.sym(ctx.variables[1])

    def par(name):
        if name in params:
            return ex._coerce(params[name])
        return ex.sym(name)

    zero = ex.ZERO
    if which == "I":
        return ProjectiveODE(ctx, ex.add(ex.mul(6, y, y), x), zero, zero, zero)
    if which == "II":
        return ProjectiveODE(
            ctx, ex.add(ex.mul(2, y, y, y), ex.mul(x, y), par("alpha")),
            zero, zero, zero)
    if which == "III":
        a, b, g, d = par("alpha"), par("beta"), par("gamma"), par("delta")
        A0 = ex.add(ex.div(ex.add(ex.mul(a, y, y), b), x),
                    ex.mul(g, y, y, y), ex.div(d, y))
        return ProjectiveODE(ctx, A0, ex.neg(ex.div(ex.ONE, x)),
                             ex.div(ex.ONE, y), zero)
    if which == "IV":
        a, b = par("alpha"), par("beta")
        A0 = ex.add(ex.mul(Q(3, 2), y, y, y), ex.mul(4, x, y, y),
                    ex.mul(2, ex.sub(ex.mul(x, x), a), y), ex.div(b, y))
        return ProjectiveODE(ctx, A0, zero, ex.div(ex.ONE, ex.mul(2, y)), zero)
    if which == "V":
        a, b, g, d = par("alpha"), par("beta"), par("gamma"), par("delta")
        ym1 = ex.sub(y, ex.ONE)
        A0 = ex.add(
            ex.mul(ym1, ym1, ex.add(ex.mul(a, y), ex.div(b, y)),
                   ex.pow_(x, -2)),
            ex.div(ex.mul(g, y), x),
            ex.div(ex.mul(d, y, ex.add(y, ex.ONE)), ym1))
        A2 = ex.add(ex.div(ex.ONE, ex.mul(2, y)), ex.div(ex.ONE, ym1))
        return ProjectiveODE(ctx, A0, ex.neg(ex.div(ex.ONE, x)), A2, zero)
    # PVI
    a, b, g, d = par("alpha"), par("beta"), par("gamma"), par("delta")
    ym1 = ex.sub(y, ex.ONE)
    xm1 = ex.sub(x, ex.ONE)
    ymx = ex.sub(y, x)
    A2 = ex.mul(Q(1, 2), ex.add(ex.div(ex.ONE, y), ex.div(ex.ONE, ym1),
                                ex.div(ex.ONE, ymx)))
    A1 = ex.neg(ex.add(ex.div(ex.ONE, x), ex.div(ex.ONE, xm1),
                       ex.div(ex.ONE, ymx)))
    bracket = ex.add(a,
                     ex.div(ex.mul(b, x), ex.mul(y, y)),
                     ex.div(ex.mul(g, xm1), ex.mul(ym1, ym1)),
                     ex.div(ex.mul(d, x, xm1), ex.mul(ymx, ymx)))
    A0 = ex.mul(ex.div(ex.mul(y, ym1, ymx),
                       ex.mul(x, x, xm1, xm1)), bracket)
    return ProjectiveODE(ctx, A0, A1, A2, zero)


def painleve_context(which: str, fixed: Dict[str, object] = None,
                     extra_loci=()) -> Tuple[Context, Dict[str, ex.Expr]]:
    """Context for a Painleve analysis: variables (x, y), the unfixed
    parameters declared as free, and the equation's own singular loci."""
    which = which.upper()
    fixed = dict(fixed or {})
    params = {}
    free = []
    for name in _PARAM_SLOTS[which]:
        if name in fixed:
            params[name] = ex.num(Q(fixed[name]))
        else:
            free.append(name)
    x, y = ex.sym("x"), ex.sym("y")
    loci = []
    if which in ("III", "IV", "V", "VI"):
        loci.append(y)
    if which in ("V", "VI"):
        loci.append(ex.sub(y, ex.ONE))
    if which == "VI":
        loci.extend((ex.sub(x, ex.ONE), ex.sub(y, x)))
    ctx = Context.make(("x", "y"), {n: "free" for n in free},
                       tuple(loci) + tuple(extra_loci))
    return ctx, params


DEGENERATE_PSI1 = {
    "I": "1",
    "II": "1",
    "III": "y^(4/3)/x^(2/3)",
    "IV": "y^(2/3)",
    "V": "(1-y)^(4/3)*y^(2/3)/x^(2/3)",
    "VI": "(x-y)^(2/3)*((y-1)*y/((x-1)*x))^(2/3)",
}
