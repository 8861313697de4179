#!/usr/bin/env python3
"""Independent sympy reference for the curvature/obstruction chain.

Run by hand; its printed values are frozen into the test suite.  This script
deliberately shares no code with the package: everything is computed with
plain sympy matrices and derivatives.

Conventions checked here (and pinned by the frozen values):
  R_ab^c_d = d_a G^c_bd - d_b G^c_ad + G^c_ae G^e_bd - G^c_be G^e_ad
  Ricci_ab = R_ca^c_b,  P_ab = (2/3) Ricci_ab + (1/3) Ricci_ba
  B_ab = P_ba - P_ab,   beta = B_ab eps^ab,  eps_12 = eps^12 = 1
  raising: v^a = eps^ab v_b, lowering: v_a = v^b eps_ba
"""

import sympy as sp

X, Y = sp.symbols("X Y")
COORDS = (X, Y)
EPS_LO = sp.Matrix([[0, 1], [-1, 0]])   # eps_ab
EPS_UP = sp.Matrix([[0, 1], [-1, 0]])   # eps^ab (eps^ab eps_cb = delta^a_c)


def conn_of(G111, G112, G122, G211, G212, G222):
    """Christoffel symbols G[a][b][c] = Gamma^a_bc, symmetric in bc."""
    return [[[G111, G112], [G112, G122]], [[G211, G212], [G212, G222]]]


def d(expr, a):
    return sp.diff(expr, COORDS[a])


def cov_deriv(t, valence, G):
    """Covariant derivative; new lower index is prepended.

    t is a nested list indexed t[i1][i2]..., valence a string of 'u'/'d'.
    """
    import itertools
    rank = len(valence)

    def get(tt, idx):
        for i in idx:
            tt = tt[i]
        return tt

    out = []
    for a in range(2):
        comp = {}
        for idx in itertools.product(range(2), repeat=rank):
            term = d(get(t, idx), a)
            for slot in range(rank):
                for e in range(2):
                    swapped = idx[:slot] + (e,) + idx[slot + 1:]
                    if valence[slot] == "u":
                        term += G[idx[slot]][a][e] * get(t, swapped)
                    else:
                        term -= G[e][a][idx[slot]] * get(t, swapped)
            comp[idx] = sp.together(term)
        out.append(comp)

    def build(a_idx):
        import itertools as it
        res = []
        for idx in it.product(range(2), repeat=rank):
            pass
        # return nested list [a][i1][i2]...
        def nest(prefix, depth):
            if depth == rank:
                return out[prefix[0]][tuple(prefix[1:])]
            return [nest(prefix + (i,), depth + 1) for i in range(2)]
        return nest((a_idx,), 0)

    return [build(a) for a in range(2)]


def obstruction_data(G):
    """Return dict with Ricci, P, B, beta, F, M, N, calM, I_N, T, detT, L."""
    R = [[[[sp.S(0)] * 2 for _ in range(2)] for _ in range(2)] for _ in range(2)]
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for dd in range(2):
                    term = d(G[c][b][dd], a) - d(G[c][a][dd], b)
                    for e in range(2):
                        term += G[c][a][e] * G[e][b][dd] - G[c][b][e] * G[e][a][dd]
                    R[a][b][c][dd] = sp.together(term)
    ric = [[sp.together(sum(R[c][a][c][b] for c in range(2))) for b in range(2)]
           for a in range(2)]
    P = [[sp.together(sp.Rational(2, 3) * ric[a][b] + sp.Rational(1, 3) * ric[b][a])
          for b in range(2)] for a in range(2)]
    B = [[sp.together(P[b][a] - P[a][b]) for b in range(2)] for a in range(2)]
    beta = sp.together(sum(B[a][b] * EPS_UP[a, b] for a in range(2) for b in range(2)))

    dP = cov_deriv(P, "dd", G)          # dP[c][d][b] = nabla_c P_db
    dB = cov_deriv(B, "dd", G)          # dB[b][c][d] = nabla_b B_cd
    L = [sp.together(sum(EPS_UP[c, dd] * dP[c][dd][b] for c in range(2) for dd in range(2)))
         for b in range(2)]
    F_up = [sp.together(sp.Rational(1, 3) * sum(
        EPS_UP[a, b] * (L[b] - sum(EPS_UP[c, dd] * dB[b][c][dd]
                                   for c in range(2) for dd in range(2)))
        for b in range(2))) for a in range(2)]

    # Y_cdb = nabla_[c P_d]b
    Yt = [[[sp.together(sp.Rational(1, 2) * (dP[c][dd][b] - dP[dd][c][b]))
            for b in range(2)] for dd in range(2)] for c in range(2)]
    dY = cov_deriv(Yt, "ddd", G)        # dY[a][d][e][c] = nabla_a Y_dec
    ddB = cov_deriv(dB, "ddd", G)       # ddB[a][c][d][e] = nabla_a nabla_c B_de

    P_updown = [[sp.together(sum(EPS_UP[b, c] * P[c][a] for c in range(2)))
                 for a in range(2)] for b in range(2)]   # P^b_a = eps^bc P_ca

    M = [[sp.S(0)] * 2 for _ in range(2)]
    for a in range(2):
        for b in range(2):
            acc = sp.S(0)
            for c in range(2):
                for dd in range(2):
                    for e in range(2):
                        acc += sp.Rational(1, 3) * EPS_UP[b, c] * EPS_UP[dd, e] * (
                            dY[a][dd][e][c] - ddB[a][c][dd][e])
            acc += beta * P_updown[b][a]
            if a == b:
                acc += sp.Rational(1, 2) * beta ** 2
            M[a][b] = sp.together(acc)

    F_lo = [sp.together(sum(F_up[b] * EPS_LO[b, a] for b in range(2))) for a in range(2)]
    N = [sp.together(-F_lo[a] + sum(EPS_UP[b, c] * dB[a][b][c]
                                    for b in range(2) for c in range(2)))
         for a in range(2)]

    calM = sp.Matrix([[F_up[0], F_up[1], beta],
                      [M[0][0], M[0][1], N[0]],
                      [M[1][0], M[1][1], N[1]]])
    I_N = sp.S(0)
    for c in range(2):
        for dd in range(2):
            for b in range(2):
                for e in range(2):
                    I_N += EPS_LO[c, dd] * EPS_UP[b, e] * M[e][c] * (
                        N[b] * F_up[dd] - sp.Rational(1, 2) * beta * M[b][dd])
    T = [[sp.together(N[a] * F_up[b] - beta * M[a][b]) for b in range(2)]
         for a in range(2)]
    detT = sp.S(0)
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for dd in range(2):
                    detT += sp.Rational(1, 2) * EPS_UP[a, b] * EPS_LO[c, dd] * T[a][c] * T[b][dd]

    dL = cov_deriv(L, "d", G)           # dL[a][b] = nabla_a L_b
    L_up = [sum(EPS_UP[a, b] * L[b] for b in range(2)) for a in range(2)]
    nu5 = sp.together(sum(L_up[a] * L_up[b] * dL[a][b] for a in range(2) for b in range(2)))

    return dict(R=R, ric=ric, P=P, B=B, beta=beta, L=L, F=F_up, M=M, N=N,
                calM=calM, I_N=sp.together(I_N), T=T, detT=sp.together(detT), nu5=nu5)


def thomas(A0, A1, A2, A3):
    return conn_of(sp.Rational(1, 3) * A1, sp.Rational(1, 3) * A2, A3,
                   -A0, -sp.Rational(1, 3) * A1, -sp.Rational(1, 3) * A2)


def hydro_connection(Afun, Bfun):
    G111 = sp.together(d(Afun, 0) / Afun - 2 * Bfun)
    G222 = sp.together(d(Bfun, 1) / Bfun - 2 * Afun)
    G112 = sp.together(-(sp.Rational(1, 2) * d(Afun, 1) / Afun + Afun))
    G212 = sp.together(-(sp.Rational(1, 2) * d(Bfun, 0) / Bfun + Bfun))
    return conn_of(G111, G112, sp.S(0), sp.S(0), G212, G222)


def main():
    c = sp.Symbol("c")

    print("== Example 1 (A = cX+Y, B = X+cY), symbolic c ==")
    data = obstruction_data(hydro_connection(c * X + Y, X + c * Y))
    beta = sp.simplify(data["beta"])
    print("beta =", beta)
    print("beta at c=1:", sp.simplify(beta.subs(c, 1)))
    print("beta at c=3 at (1,1):", sp.simplify(beta.subs({c: 3, X: 1, Y: 1})))
    T11 = sp.simplify(data["T"][0][0])
    print("T_X^X =", sp.factor(T11))
    subs_11 = {c: 1, X: 1, Y: 1}
    print("T at c=1,(1,1):",
          [sp.nsimplify(sp.simplify(data["T"][a][b].subs(subs_11)))
           for a in range(2) for b in range(2)])
    I_N = sp.simplify(data["I_N"])
    print("I_N (symbolic c) =", I_N)
    detM = sp.simplify(data["calM"].det())
    ratio = sp.simplify(detM / I_N) if I_N != 0 else "I_N == 0"
    print("det(calM)/I_N =", ratio)
    print("detT - beta*I_N =", sp.simplify(data["detT"] - beta * I_N))

    print()
    print("== det(calM)/I_N on a random polynomial connection ==")
    G = conn_of(X + Y, X * Y, Y ** 2, X ** 2 - Y, X, 2 * X + Y ** 2)
    data = obstruction_data(G)
    detM = data["calM"].det()
    pt = {X: sp.Rational(5, 7), Y: sp.Rational(9, 11)}
    dm = detM.subs(pt)
    innum = data["I_N"].subs(pt)
    print("det(calM) at pt =", sp.nsimplify(dm))
    print("I_N at pt       =", sp.nsimplify(innum))
    print("ratio           =", sp.nsimplify(sp.simplify(dm / innum)))
    print("detT - beta*I_N at pt =", sp.simplify((data["detT"] - data["beta"] * data["I_N"]).subs(pt)))

    print()
    print("== nu5 for Thomas connection of A = (xy, y^2, x, 0) ==")
    # variables renamed: x->X, y->Y
    data = obstruction_data(thomas(X * Y, Y ** 2, X, sp.S(0)))
    print("beta =", sp.simplify(data["beta"]))
    nu5 = data["nu5"]
    for pt in [{X: 1, Y: 2}, {X: sp.Rational(3, 2), Y: sp.Rational(5, 3)},
               {X: sp.Rational(7, 5), Y: sp.Rational(11, 7)}]:
        print("nu5 at", pt, "=", sp.nsimplify(sp.simplify(nu5.subs(pt))))
    print("I_N + nu5/27 == 0?", sp.simplify(data["I_N"] + data["nu5"] / 27) == 0)

    print()
    print("== Example 1, rank of stacked dual sections at (1,1) (c=3 and c=1) ==")
    # dual connection: D_a(v^b, n) = (nabla_a v^b + n (P^b_a + beta/2 delta),
    #                                 nabla_a n + eps_ab v^b - n theta_a)
    for cval in (3, 1):
        Gc = hydro_connection(cval * X + Y, X + cval * Y)
        data = obstruction_data(Gc)
        theta = [sp.together(-(Gc[0][a][0] + Gc[1][a][1])) for a in range(2)]
        P_ud = [[sp.together(sum(EPS_UP[b, cc] * data["P"][cc][a] for cc in range(2)))
                 for a in range(2)] for b in range(2)]

        def Dop(v, n, extra_valence):
            # v: nested list with valence 'u' + extra (down indices), n: valence extra
            import itertools
            dv = cov_deriv(v, "u" + extra_valence, Gc)
            dn = cov_deriv(n, extra_valence, Gc) if extra_valence else [d(n, a) for a in range(2)]
            rank = len(extra_valence)
            newv, newn = [], []
            for a in range(2):
                vcomp = {}
                ncomp = {}
                for idx in itertools.product(range(2), repeat=rank):
                    for b in range(2):
                        nval = n
                        for i in idx:
                            nval = nval[i]
                        base = dv[a][b] if rank == 0 else None
                        if rank == 0:
                            vcomp[(b,)] = dv[a][b] + nval * (
                                P_ud[b][a] + sp.Rational(1, 2) * data["beta"] * (1 if a == b else 0))
                        else:
                            tt = dv[a][b]
                            for i in idx:
                                tt = tt[i]
                            vcomp[(b,) + idx] = tt + nval * (
                                P_ud[b][a] + sp.Rational(1, 2) * data["beta"] * (1 if a == b else 0))
                    vsum = sp.S(0)
                    for b in range(2):
                        vv = v[b]
                        for i in idx:
                            vv = vv[i]
                        vsum += EPS_LO[a, b] * vv
                    nval = n
                    for i in idx:
                        nval = nval[i]
                    dnv = dn[a]
                    for i in idx:
                        dnv = dnv[i]
                    ncomp[idx] = dnv + vsum - nval * theta[a]
                newv.append(vcomp)
                newn.append(ncomp)
            return newv, newn

        v0 = [data["F"][0], data["F"][1]]
        n0 = data["beta"]
        dv1, dn1 = Dop(v0, n0, "")
        # rows: V, D1 V, D2 V, D11, D(12), D22
        v_list = [[v0[0], v0[1]]]
        n_list = [n0]
        for a in range(2):
            v_list.append([dv1[a][(0,)], dv1[a][(1,)]])
            n_list.append(dn1[a][()])
        # second derivatives: treat (dv1, dn1) as valence 'd'
        v1 = [[dv1[a][(b,)] for a in range(2)] for b in range(2)]  # v1[b][a]
        n1 = [dn1[a][()] for a in range(2)]
        dv2, dn2 = Dop(v1, n1, "d")
        def row2(aa, bb):
            return ([dv2[aa][(0, bb)], dv2[aa][(1, bb)]], dn2[aa][(bb,)])
        r11 = row2(0, 0)
        r12 = row2(0, 1)
        r21 = row2(1, 0)
        r22 = row2(1, 1)
        sym12 = ([sp.Rational(1, 2) * (r12[0][i] + r21[0][i]) for i in range(2)],
                 sp.Rational(1, 2) * (r12[1] + r21[1]))
        rows = []
        pt = {X: 1, Y: 1}
        for vv, nn in [ (v_list[0], n_list[0]), (v_list[1], n_list[1]), (v_list[2], n_list[2]),
                        r11, sym12, r22 ]:
            rows.append([sp.nsimplify(sp.simplify(vv[0].subs(pt))),
                         sp.nsimplify(sp.simplify(vv[1].subs(pt))),
                         sp.nsimplify(sp.simplify(nn.subs(pt)))])
        Mstack = sp.Matrix(rows)
        print(f"c={cval}: stacked matrix rank at (1,1) =", Mstack.rank())

    print()
    print("== Liouville L1/L2 for PVI(0,0,0,1/2) variant check ==")
    x, y = X, Y
    A2 = sp.Rational(1, 2) * (1 / y + 1 / (y - 1) + 1 / (y - x))
    A1 = -(1 / x + 1 / (x - 1) + 1 / (y - x))
    A0 = (y * (y - 1) * (y - x) / (x ** 2 * (x - 1) ** 2)) * (sp.Rational(1, 2) * x * (x - 1) / (y - x) ** 2)
    A3 = sp.S(0)
    L1 = (sp.Rational(2, 3) * sp.diff(A1, x, y) - sp.Rational(1, 3) * sp.diff(A2, x, x)
          - sp.diff(A0, y, y) + A0 * sp.diff(A2, y) + A2 * sp.diff(A0, y)
          - A3 * sp.diff(A0, x) - 2 * A0 * sp.diff(A3, x)
          - sp.Rational(2, 3) * A1 * sp.diff(A1, y) + sp.Rational(1, 3) * A1 * sp.diff(A2, x))
    L2_printed = (sp.Rational(2, 3) * sp.diff(A2, x, y) - sp.Rational(1, 3) * sp.diff(A1, x, x)
                  - sp.diff(A3, x, x) - A3 * sp.diff(A1, x) - A1 * sp.diff(A3, x)
                  + A0 * sp.diff(A3, y) + 2 * A3 * sp.diff(A0, y)
                  + sp.Rational(2, 3) * A2 * sp.diff(A2, x) - sp.Rational(1, 3) * A2 * sp.diff(A1, y))
    L2_sym = (sp.Rational(2, 3) * sp.diff(A2, x, y) - sp.Rational(1, 3) * sp.diff(A1, y, y)
              - sp.diff(A3, x, x) - A3 * sp.diff(A1, x) - A1 * sp.diff(A3, x)
              + A0 * sp.diff(A3, y) + 2 * A3 * sp.diff(A0, y)
              + sp.Rational(2, 3) * A2 * sp.diff(A2, x) - sp.Rational(1, 3) * A2 * sp.diff(A1, y))
    print("L1 simplified:", sp.simplify(L1))
    print("L2 as printed (d^2A1/dx^2):", sp.simplify(L2_printed))
    print("L2 x<->y corrected (d^2A1/dy^2):", sp.simplify(L2_sym))


if __name__ == "__main__":
    main()
