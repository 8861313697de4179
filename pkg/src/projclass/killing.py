"""Prolongation connection, obstruction tensors, and the counting theorem
for linear first integrals of a 2D affine connection.

The decision tree:
  (i)   beta -> Zero and both Liouville invariants -> Zero: three integrals
  (ii)  beta NonZero and T -> Zero entrywise: exactly two
  (iii) I_N -> Zero and I_S -> Zero: exactly one
  (iv)  otherwise none.
Indeterminate verdicts raise UnclassifiedStratum instead of guessing.

The third-level rows (U, V below) come from covariantly differentiating the
algebraic conditions and substituting the parallel-transport relations; see
the decisions ledger for why the closed forms are built this way.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction as Q
from typing import Dict, List, Optional, Tuple

import mpmath

from . import expr as ex
from .numeric import (Context, PoleError, UnclassifiedStratum, Verdict,
                      ZeroTestPolicy, evaluate_tracked, is_identically_zero,
                      is_identically_zero_many, sample_points)
from .projective import (Connection2D, CurvatureData, ProjectiveODE,
                         curvature_data, liouville_invariants,
                         ode_from_connection)
from .tensor import Tensor, covariant_derivative, lower_index, raise_index

__all__ = ["ProlongationSection", "ObstructionSet", "prolongation_apply",
           "obstruction_set", "count_killing_forms", "rank_stack_check",
           "reconstruct_candidate", "normal_form_rank2", "KillingCount"]


@dataclass(frozen=True)
class ProlongationSection:
    """Section (K_1, K_2, mu) of the rank-3 bundle carrying the Killing
    system; parallel sections correspond to linear first integrals."""

    K1: ex.Expr
    K2: ex.Expr
    mu: ex.Expr

    def as_tuple(self):
        return (self.K1, self.K2, self.mu)


@dataclass(frozen=True)
class ObstructionSet:
    F: Tensor                 # F^a
    M: Tensor                 # M_a^b, valence "du"
    N: Tensor                 # N_a
    matrix: Tuple[Tuple[ex.Expr, ...], ...]  # 3x3 algebraic system
    I_N: ex.Expr
    U: Tensor                 # U^b_{ca}, valence "udd" (b, c, a)
    V: Tensor                 # V_{ca}
    W: Tensor                 # W_{abc}
    I_S: Tuple[ex.Expr, ex.Expr]
    T: Tensor                 # T_a^b, valence "du"
    beta: ex.Expr
    P: Optional[Tensor]       # kernel one-form of T (when T is degenerate)
    curvature: CurvatureData
    consistency: Dict[str, Verdict]


def _schouten_mixed(conn: Connection2D, data: CurvatureData) -> Tensor:
    # P^b_a = eps^{bc} P_ca
    return raise_index(data.schouten, 0, conn.volume)


def prolongation_apply(conn: Connection2D, section: ProlongationSection,
                       data: Optional[CurvatureData] = None):
    """Apply the prolongation connection to a section; returns the pair
    (rank-2 tensor D_a K_b, one-form D_a mu).  A parallel section (both
    parts zero) is exactly a Killing form with its curl potential."""
    if data is None:
        data = curvature_data(conn)
    K = Tensor("d", (section.K1, section.K2))
    mu = section.mu
    dK = covariant_derivative(K, conn)
    eps = conn.volume.tensor_lower()
    first = Tensor.build(
        "dd", lambda a, b: ex.sub(dK[a, b], ex.mul(eps[a, b], mu)))
    P_ud = _schouten_mixed(conn, data)
    theta = data.theta

    def second_fill(a):
        total = ex.differentiate(mu, conn.coords[a])
        for b in range(2):
            coeff = P_ud[b, a]
            if a == b:
                coeff = ex.add(coeff, ex.mul(Q(1, 2), data.beta))
            total = ex.sub(total, ex.mul(coeff, K[b]))
        return ex.add(total, ex.mul(mu, theta[a]))

    second = Tensor.build("d", second_fill)
    return first, second


def obstruction_set(conn: Connection2D,
                    policy: ZeroTestPolicy = ZeroTestPolicy(),
                    check_identities: bool = True) -> ObstructionSet:
    data = curvature_data(conn)
    eps_up = conn.volume.tensor_upper()
    eps_lo = conn.volume.tensor_lower()
    P_ud = _schouten_mixed(conn, data)
    beta = data.beta

    dB = covariant_derivative(data.B, conn)    # (b, c, d) = nabla_b B_cd

    def F_fill(a):
        total = ex.ZERO
        for b in range(2):
            curl = ex.add(*(ex.mul(eps_up[c, d], dB[b, c, d])
                            for c in range(2) for d in range(2)))
            total = ex.add(total, ex.mul(eps_up[a, b],
                                         ex.sub(data.cotton[b], curl)))
        return ex.mul(Q(1, 3), total)

    F = Tensor.build("u", F_fill)
    F_lo = lower_index(F, 0, conn.volume)

    dY = covariant_derivative(data.Y, conn)    # (a, d, e, c) = nabla_a Y_dec
    ddB = covariant_derivative(dB, conn)       # (a, c, d, e) = nabla_a nabla_c B_de

    def M_fill(a, b):
        total = ex.ZERO
        for c in range(2):
            for d in range(2):
                for e in range(2):
                    total = ex.add(total, ex.mul(
                        Q(1, 3), eps_up[b, c], eps_up[d, e],
                        ex.sub(dY[a, d, e, c], ddB[a, c, d, e])))
        total = ex.add(total, ex.mul(beta, P_ud[b, a]))
        if a == b:
            total = ex.add(total, ex.mul(Q(1, 2), beta, beta))
        return total

    M = Tensor.build("du", M_fill)

    def N_fill(a):
        total = ex.neg(F_lo[a])
        for b in range(2):
            for c in range(2):
                total = ex.add(total, ex.mul(eps_up[b, c], dB[a, b, c]))
        return total

    N = Tensor.build("d", N_fill)

    matrix = ((F[0], F[1], beta),
              (M[0, 0], M[0, 1], N[0]),
              (M[1, 0], M[1, 1], N[1]))

    I_N = ex.ZERO
    for c in range(2):
        for d in range(2):
            for b in range(2):
                for e in range(2):
                    I_N = ex.add(I_N, ex.mul(
                        eps_lo[c, d], eps_up[b, e], M[e, c],
                        ex.sub(ex.mul(N[b], F[d]),
                               ex.mul(Q(1, 2), beta, M[b, d]))))

    T = Tensor.build("du", lambda a, b: ex.sub(ex.mul(N[a], F[b]),
                                               ex.mul(beta, M[a, b])))

    # third-level rows by differentiating M_a^b K_b + N_a mu = 0 along D
    dM = covariant_derivative(M, conn)  # (c, a, b) = nabla_c M_a^b
    dN = covariant_derivative(N, conn)  # (c, a)   = nabla_c N_a
    theta = data.theta

    def U_fill(b, c, a):
        total = dM[c, a, b]
        coeff = P_ud[b, c]
        if b == c:
            coeff = ex.add(coeff, ex.mul(Q(1, 2), beta))
        return ex.add(total, ex.mul(N[a], coeff))

    U = Tensor.build("udd", U_fill)

    def V_fill(c, a):
        total = dN[c, a]
        for b in range(2):
            total = ex.add(total, ex.mul(M[a, b], eps_lo[c, b]))
        return ex.sub(total, ex.mul(N[a], theta[c]))

    V = Tensor.build("dd", V_fill)

    M_lo = lower_index(M, 1, conn.volume)  # M_ae

    def W_fill(a, b, c):
        V_sym = ex.mul(Q(1, 2), ex.add(V[b, c], V[c, b]))
        total = ex.mul(ex.add(*(ex.mul(F_lo[e], M[a, e]) for e in range(2))),
                       V_sym)
        for e in range(2):
            U_sym = ex.mul(Q(1, 2), ex.add(U[e, b, c], U[e, c, b]))
            total = ex.sub(total, ex.mul(F_lo[e], U_sym, N[a]))
            total = ex.add(total, ex.mul(beta, M_lo[a, e], U_sym))
        return total

    W = Tensor.build("ddd", W_fill)
    I_S = (W[0, 0, 0], W[1, 1, 1])

    P_form = _kernel_one_form(conn, T, policy)

    consistency: Dict[str, Verdict] = {}
    if check_identities:
        det_m = _det3(matrix)
        consistency["detM_minus_IN"] = is_identically_zero(
            ex.sub(det_m, I_N), conn.ctx, policy)
        det_t = ex.ZERO
        for a in range(2):
            for b in range(2):
                for c in range(2):
                    for d in range(2):
                        det_t = ex.add(det_t, ex.mul(
                            Q(1, 2), eps_up[a, b], eps_lo[c, d],
                            T[a, c], T[b, d]))
        consistency["detT_minus_beta_IN"] = is_identically_zero(
            ex.sub(det_t, ex.mul(beta, I_N)), conn.ctx, policy)

    return ObstructionSet(F, M, N, matrix, I_N, U, V, W, I_S, T, beta,
                          P_form, data, consistency)


def _det3(m) -> ex.Expr:
    return ex.add(
        ex.mul(m[0][0], ex.sub(ex.mul(m[1][1], m[2][2]), ex.mul(m[1][2], m[2][1]))),
        ex.neg(ex.mul(m[0][1], ex.sub(ex.mul(m[1][0], m[2][2]), ex.mul(m[1][2], m[2][0])))),
        ex.mul(m[0][2], ex.sub(ex.mul(m[1][0], m[2][1]), ex.mul(m[1][1], m[2][0]))),
    )


def _kernel_one_form(conn, T, policy) -> Optional[Tensor]:
    """Non-zero P with P^a T_a^b = 0 (when T is degenerate), lowered to a
    one-form.  Candidates are the two column-built kernels of T."""
    for P_up in (Tensor("u", (T[1, 0], ex.neg(T[0, 0]))),
                 Tensor("u", (T[1, 1], ex.neg(T[0, 1])))):
        nonzero = any(
            is_identically_zero(comp, conn.ctx, policy).is_nonzero
            for comp in P_up.comps)
        if nonzero:
            return lower_index(P_up, 0, conn.volume)
    return None


@dataclass(frozen=True)
class KillingCount:
    count: int
    evidence: Dict[str, str]
    obstructions: ObstructionSet


def _require_classified(name: str, verdict: Verdict, evidence: Dict[str, str]):
    evidence[name] = str(verdict)
    if verdict.indeterminate:
        raise UnclassifiedStratum(
            f"zero test for {name} is indeterminate on the sample box: "
            f"{verdict.detail}")
    return verdict


def count_killing_forms(conn: Connection2D,
                        policy: ZeroTestPolicy = ZeroTestPolicy()) -> KillingCount:
    """Count linearly independent linear first integrals (0, 1, 2, or 3)."""
    obs = obstruction_set(conn, policy, check_identities=False)
    ctx = conn.ctx
    evidence: Dict[str, str] = {}

    beta_v = _require_classified("beta", is_identically_zero(obs.beta, ctx, policy),
                                 evidence)
    if beta_v.is_zero:
        L1, L2 = liouville_invariants(ode_from_connection(conn))
        l1_v, l2_v = is_identically_zero_many([L1, L2], ctx, policy)
        _require_classified("L1", l1_v, evidence)
        _require_classified("L2", l2_v, evidence)
        if l1_v.is_zero and l2_v.is_zero:
            return KillingCount(3, evidence, obs)
    else:
        t_verdicts = is_identically_zero_many(
            [obs.T[a, b] for a in range(2) for b in range(2)], ctx, policy)
        t_zero = True
        for (a, b), v in zip(itertools.product(range(2), range(2)), t_verdicts):
            _require_classified(f"T_{a + 1}^{b + 1}", v, evidence)
            t_zero = t_zero and v.is_zero
        if t_zero:
            return KillingCount(2, evidence, obs)

    in_v, w1_v, w2_v = is_identically_zero_many(
        [obs.I_N, obs.I_S[0], obs.I_S[1]], ctx, policy)
    _require_classified("I_N", in_v, evidence)
    if in_v.is_zero:
        _require_classified("I_S[0]", w1_v, evidence)
        _require_classified("I_S[1]", w2_v, evidence)
        if w1_v.is_zero and w2_v.is_zero:
            return KillingCount(1, evidence, obs)
    return KillingCount(0, evidence, obs)


# ---------------------------------------------------------------------------
# rank of the stacked dual-section derivatives


def _dual_derivative(conn, data, P_ud, v_parts, n_parts, extra: int):
    """One application of the dual prolongation connection to an E*-valued
    tensor with `extra` extra down slots.  v_parts maps (b,) + idx -> Expr
    (vector part), n_parts maps idx -> Expr."""
    theta = data.theta
    beta = data.beta
    eps_lo = conn.volume.tensor_lower()
    v_tensor = Tensor.build("u" + "d" * extra,
                            lambda *i: v_parts[i])
    n_tensor = Tensor.build("d" * extra, lambda *i: n_parts[i]) if extra \
        else Tensor.scalar(n_parts[()])
    dv = covariant_derivative(v_tensor, conn)   # (c, b) + idx
    dn = covariant_derivative(n_tensor, conn)   # (c,) + idx
    new_v, new_n = {}, {}
    for c in range(2):
        for idx in itertools.product(range(2), repeat=extra):
            for b in range(2):
                coeff = P_ud[b, c]
                if b == c:
                    coeff = ex.add(coeff, ex.mul(Q(1, 2), beta))
                new_v[(b, c) + idx] = ex.add(dv[(c, b) + idx],
                                             ex.mul(n_parts[idx], coeff))
            acc = dn[(c,) + idx]
            for b in range(2):
                acc = ex.add(acc, ex.mul(eps_lo[c, b], v_parts[(b,) + idx]))
            new_n[(c,) + idx] = ex.sub(acc, ex.mul(n_parts[idx], theta[c]))
    return new_v, new_n


def _stack_rows(conn, obs) -> List[Tuple[ex.Expr, ex.Expr, ex.Expr]]:
    """Rows V, D1 V, D2 V, D1D1 V, D(1 D2) V, D2D2 V of the dual section
    V = (F^1, F^2, beta)."""
    data = obs.curvature
    P_ud = _schouten_mixed(conn, data)
    v0 = {(0,): obs.F[0], (1,): obs.F[1]}
    n0 = {(): obs.beta}
    v1, n1 = _dual_derivative(conn, data, P_ud, v0, n0, extra=0)
    # reindex first-derivative parts to (b, a) with a the derivative slot
    v1_t = {(b, a): v1[(b, a)] for b in range(2) for a in range(2)}
    n1_t = {(a,): n1[(a,)] for a in range(2)}
    v2, n2 = _dual_derivative(conn, data, P_ud,
                              {(b, a): v1_t[(b, a)] for b in range(2) for a in range(2)},
                              n1_t, extra=1)
    rows = [(obs.F[0], obs.F[1], obs.beta)]
    for a in range(2):
        rows.append((v1_t[(0, a)], v1_t[(1, a)], n1_t[(a,)]))
    # second derivatives: v2[(b, c, a)] = D_c (D V)_a
    half = Q(1, 2)
    rows.append((v2[(0, 0, 0)], v2[(1, 0, 0)], n2[(0, 0)]))
    rows.append((
        ex.mul(half, ex.add(v2[(0, 0, 1)], v2[(0, 1, 0)])),
        ex.mul(half, ex.add(v2[(1, 0, 1)], v2[(1, 1, 0)])),
        ex.mul(half, ex.add(n2[(0, 1)], n2[(1, 0)])),
    ))
    rows.append((v2[(0, 1, 1)], v2[(1, 1, 1)], n2[(1, 1)]))
    return rows


def rank_stack_check(conn: Connection2D,
                     policy: ZeroTestPolicy = ZeroTestPolicy()) -> int:
    """Numeric rank of the six stacked dual-section derivative rows at the
    sample points (SVD at the policy precision, relative threshold 1e-20);
    raises UnclassifiedStratum when the points disagree."""
    obs = obstruction_set(conn, policy, check_identities=False)
    rows = _stack_rows(conn, obs)
    points = sample_points(conn.ctx, policy)
    mp = mpmath.mp.clone()
    mp.prec = policy.precision_bits + 32
    ranks = []
    for point in points:
        numeric = []
        try:
            for row in rows:
                numeric.append([evaluate_tracked(c, point, policy.precision_bits)[0]
                                for c in row])
        except (PoleError, ZeroDivisionError):
            continue
        A = mp.matrix(numeric)
        sv = mp.svd_r(A, compute_uv=False)
        top = max(sv)
        if top == 0:
            ranks.append(0)
        else:
            ranks.append(sum(1 for s in sv if s / top > mp.mpf(10) ** -20))
    if not ranks:
        raise UnclassifiedStratum("all sample points hit poles")
    if len(set(ranks)) != 1:
        raise UnclassifiedStratum(f"stack rank varies across samples: {sorted(set(ranks))}")
    return ranks[0]


# ---------------------------------------------------------------------------
# candidate reconstruction


def reconstruct_candidate(conn: Connection2D,
                          policy: ZeroTestPolicy = ZeroTestPolicy()):
    """Nullspace direction of the 3x3 algebraic system, with the scale
    quadrature attempted.  Returns (section, status) where status is
    "closed-form" or "consistent, closed form unavailable"; raises when the
    system does not have rank 2."""
    obs = obstruction_set(conn, policy, check_identities=False)
    m = obs.matrix
    rows = [Tensor("u", tuple(m[i])) for i in range(3)]

    direction = None
    for i, j in ((0, 1), (0, 2), (1, 2)):
        cand = _cross3(m[i], m[j])
        if any(is_identically_zero(c, conn.ctx, policy).is_nonzero for c in cand):
            direction = cand
            break
    if direction is None:
        raise UnclassifiedStratum(
            "the algebraic system does not have rank 2 on the sample box")

    # residual check: the matrix annihilates the direction
    for i in range(3):
        resid = ex.add(*(ex.mul(m[i][k], direction[k]) for k in range(3)))
        v = is_identically_zero(resid, conn.ctx, policy)
        if v.is_nonzero:
            raise UnclassifiedStratum(
                f"nullspace direction fails row {i}: {v}")

    data = obs.curvature
    section = ProlongationSection(direction[0], direction[1], direction[2])
    # D(lambda n) = 0 needs D_a n = omega_a n for a closed one-form omega
    dfirst, dsecond = prolongation_apply(conn, section, data)
    comps = {(b,): direction[b] for b in range(2)}
    comps[(2,)] = direction[2]

    # build D_a n componentwise: rows (D_a n)_k for k = K1, K2, mu
    Dn = {}
    for a in range(2):
        Dn[(a, 0)] = dfirst[a, 0]
        Dn[(a, 1)] = dfirst[a, 1]
        Dn[(a, 2)] = dsecond[a]

    pivot = None
    for k in range(3):
        if is_identically_zero(direction[k], conn.ctx, policy).is_nonzero:
            pivot = k
            break
    if pivot is None:
        raise UnclassifiedStratum("nullspace direction vanishes on the box")

    omega = [ex.div(Dn[(a, pivot)], direction[pivot]) for a in range(2)]
    # proportionality: D_a n - omega_a n must vanish for the other slots
    proportional = True
    for a in range(2):
        for k in range(3):
            resid = ex.sub(Dn[(a, k)], ex.mul(omega[a], direction[k]))
            if is_identically_zero(resid, conn.ctx, policy).is_nonzero:
                proportional = False
    x, y = conn.coords
    closed = is_identically_zero(
        ex.sub(ex.differentiate(omega[1], x), ex.differentiate(omega[0], y)),
        conn.ctx, policy)
    if not proportional or not closed.is_zero:
        raise UnclassifiedStratum(
            "the connection one-form along the nullspace is not closed")

    phi = _potential_of_closed_form(omega, conn.ctx)
    if phi is None:
        return section, "consistent, closed form unavailable"
    scale = ex.fn("exp", ex.neg(phi))
    return ProlongationSection(ex.mul(scale, direction[0]),
                               ex.mul(scale, direction[1]),
                               ex.mul(scale, direction[2])), "closed-form"


def _cross3(u, v):
    return (
        ex.sub(ex.mul(u[1], v[2]), ex.mul(u[2], v[1])),
        ex.sub(ex.mul(u[2], v[0]), ex.mul(u[0], v[2])),
        ex.sub(ex.mul(u[0], v[1]), ex.mul(u[1], v[0])),
    )


def _potential_of_closed_form(omega, ctx) -> Optional[ex.Expr]:
    """phi with d phi = omega, via the restricted antiderivative; None when
    the quadrature leaves the closed class."""
    x, y = ctx.variables[:2]
    hx = ex.antiderivative(omega[0], x)
    if hx is None:
        return None
    rest = ex.sub(omega[1], ex.differentiate(hx, y))
    if x in ex.free_symbols(rest):
        return None
    hy = ex.antiderivative(rest, y)
    if hy is None:
        return None
    return ex.add(hx, hy)


# ---------------------------------------------------------------------------
# normal forms with exactly two integrals


def normal_form_rank2(c: int, P: ex.Expr, Q_expr: ex.Expr, ctx: Context,
                      policy: ZeroTestPolicy = ZeroTestPolicy()):
    """Connection admitting exactly two first integrals in adapted
    coordinates, together with the two Killing forms and the
    unparametrised-ODE integral e^{-cY}(P + Y'Q) (Y' spelled p).

    Returns (connection, (K_form, L_form), ode_integral_expr)."""
    if c not in (0, 1):
        raise ValueError("c must be 0 or 1")
    q_v = is_identically_zero(Q_expr, ctx, policy)
    if not q_v.is_nonzero:
        raise ValueError("Q must be nonzero on the sample box")
    x, y = ctx.variables[:2]
    Px = ex.differentiate(P, x)
    Py = ex.differentiate(P, y)
    Qx = ex.differentiate(Q_expr, x)
    Qy = ex.differentiate(Q_expr, y)
    conn = Connection2D.from_components(ctx, {
        (1, 1, 2): ex.div(ex.num(c), 2),
        (2, 1, 1): ex.div(Px, Q_expr),
        (2, 1, 2): ex.div(ex.sub(ex.add(Py, Qx), ex.mul(c, P)),
                          ex.mul(2, Q_expr)),
        (2, 2, 2): ex.div(Qy, Q_expr),
    })
    expcy = ex.fn("exp", ex.mul(c, ex.sym(y))) if c else ex.ONE
    K_form = Tensor("d", (expcy, ex.ZERO))
    L_form = Tensor("d", (P, Q_expr))
    p = ex.sym("p")
    integral = ex.mul(ex.fn("exp", ex.mul(-c, ex.sym(y))) if c else ex.ONE,
                      ex.add(P, ex.mul(p, Q_expr)))
    return conn, (K_form, L_form), integral
