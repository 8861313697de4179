"""Exact symbolic expression kernel.

Expressions are immutable, interned trees over exact rationals, symbols,
sums, products with rational exponents, and ln/exp/sin/cos.  The normal form
is a flattened sum of monomials c * prod(base_i ^ q_i); bases are symbols,
function nodes, unexpanded sums, or rational numbers under a fractional
exponent (24^(1/2) stays 24^(1/2)).  Normalization is deterministic and
idempotent; it is a cheap syntactic quotient, not a decision procedure --
the sampling zero test is the semantic arbiter.

Fractional powers use the real-root convention: u^(p/q) in lowest terms with
q odd is sign(u)^p |u|^(p/q) for every real u, while q even requires u > 0.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from typing import Iterable, Optional, Union

Q = Fraction

__all__ = [
    "Expr", "Num", "Sym", "Fn", "Add", "Mul", "ExprError",
    "num", "sym", "fn", "add", "mul", "div", "pow_", "sub", "neg",
    "ZERO", "ONE", "differentiate", "antiderivative", "free_symbols",
    "is_rational_monomial_form", "to_string",
]

# products of sums are multiplied out only while the predicted term count
# stays below this; bigger products stay factored and the sampling zero
# test takes over
EXPAND_BUDGET = 128

_FN_NAMES = ("ln", "exp", "sin", "cos")


class ExprError(ValueError):
    pass


class Expr:
    """Base class; instances are interned, compare by identity."""

    __slots__ = ("_key",)

    def __add__(self, other):
        return add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), neg(self))

    def __mul__(self, other):
        return mul(self, _coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __pow__(self, expo):
        return pow_(self, Q(expo))

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        return f"<{to_string(self)}>"

    def __str__(self):
        return to_string(self)


class Num(Expr):
    __slots__ = ("value",)


class Sym(Expr):
    __slots__ = ("name",)


class Fn(Expr):
    __slots__ = ("fname", "arg")


class Add(Expr):
    # terms: tuple of non-Add exprs, canonically sorted, length >= 2
    __slots__ = ("terms",)


class Mul(Expr):
    # coeff: nonzero Fraction; factors: tuple of (base, exponent) with
    # bases sorted and exponents nonzero; never (coeff 1, single factor
    # with exponent 1) -- that is just the base itself
    __slots__ = ("coeff", "factors")


_intern_lock = threading.Lock()
_registry: dict = {}


def _interned(key, build):
    try:
        return _registry[key]
    except KeyError:
        pass
    with _intern_lock:
        obj = _registry.get(key)
        if obj is None:
            obj = build()
            obj._key = key
            _registry[key] = obj
        return obj


def num(value) -> Num:
    q = value if isinstance(value, Q) else Q(value)

    def build():
        e = Num.__new__(Num)
        e.value = q
        return e

    return _interned(("n", q), build)


ZERO = num(0)
ONE = num(1)


def sym(name: str) -> Sym:
    if not name or not (name[0].isalpha() or name[0] == "_"):
        raise ExprError(f"bad symbol name {name!r}")

    def build():
        e = Sym.__new__(Sym)
        e.name = name
        return e

    return _interned(("s", name), build)


def _coerce(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Q)):
        return num(v)
    raise ExprError(f"cannot coerce {v!r} to Expr")


# ---------------------------------------------------------------------------
# canonical ordering

_sort_key_cache: dict = {}


def _sort_key(e: Expr):
    k = _sort_key_cache.get(id(e))
    if k is None:
        if isinstance(e, Num):
            k = (0, e.value)
        elif isinstance(e, Sym):
            k = (1, e.name)
        elif isinstance(e, Fn):
            k = (2, e.fname, _sort_key(e.arg))
        elif isinstance(e, Add):
            k = (3, tuple(_sort_key(t) for t in e.terms))
        else:
            k = (4, tuple((_sort_key(b), q) for b, q in e.factors), e.coeff)
        _sort_key_cache[id(e)] = k
    return k


# ---------------------------------------------------------------------------
# construction / normalization


def _term_parts(e: Expr):
    """Split a non-Add expr into (coefficient, factor tuple)."""
    if isinstance(e, Num):
        return e.value, ()
    if isinstance(e, Mul):
        return e.coeff, e.factors
    return Q(1), ((e, Q(1)),)


def _make_term(coeff: Q, factors) -> Expr:
    if coeff == 0:
        return ZERO
    if not factors:
        return num(coeff)
    if coeff == 1 and len(factors) == 1 and factors[0][1] == 1:
        return factors[0][0]

    factors = tuple(factors)

    def build():
        e = Mul.__new__(Mul)
        e.coeff = coeff
        e.factors = factors
        return e

    return _interned(("m", coeff, tuple((id(b), q) for b, q in factors)), build)


def add(*exprs) -> Expr:
    coeff_by_factors: dict = {}
    order: list = []
    const = Q(0)

    def absorb(e):
        nonlocal const
        if isinstance(e, Add):
            for t in e.terms:
                absorb(t)
            return
        c, fs = _term_parts(e)
        if not fs:
            const += c
            return
        if fs in coeff_by_factors:
            coeff_by_factors[fs] += c
        else:
            coeff_by_factors[fs] = c
            order.append(fs)

    for e in exprs:
        absorb(_coerce(e))

    terms = [_make_term(c, fs) for fs in order if (c := coeff_by_factors[fs]) != 0]
    if const != 0:
        terms.append(num(const))
    if not terms:
        return ZERO
    terms.sort(key=_sort_key)
    if len(terms) == 1:
        return terms[0]

    tt = tuple(terms)

    def build():
        e = Add.__new__(Add)
        e.terms = tt
        return e

    return _interned(("a", tuple(id(t) for t in tt)), build)


def neg(e) -> Expr:
    return mul(num(-1), _coerce(e))


_content_cache: dict = {}


def _content_primitive(e: Add):
    """Split a sum into (content, primitive) with content a rational making
    the primitive's first term have coefficient +1-reduced form; merging
    scalar multiples of the same sum into one interned base."""
    got = _content_cache.get(id(e))
    if got is not None:
        return got
    coeffs = [_term_parts(t)[0] for t in e.terms]
    from math import gcd
    g_num = 0
    g_den = 1
    for c in coeffs:
        g_num = gcd(g_num, abs(c.numerator))
        g_den = g_den * c.denominator // gcd(g_den, c.denominator)
    content = Q(g_num, g_den)
    if coeffs[0] < 0:
        content = -content
    if content == 1:
        out = (Q(1), e)
    else:
        inv = Q(1) / content
        prim = add(*(mul(num(inv), t) for t in e.terms))
        out = (content, prim)
    _content_cache[id(e)] = out
    return out


def sub(a, b) -> Expr:
    return add(_coerce(a), neg(b))


def _nth_root_exact(n: int, k: int) -> Optional[int]:
    """Integer k-th root of n >= 0 if exact, else None."""
    if n in (0, 1):
        return n
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1, r + 2):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def _rational_power(value: Q, expo: Q):
    """Exact value**expo if representable as a rational, else None.

    Real-root convention: negative base needs an odd exponent denominator.
    """
    if expo.denominator == 1:
        e = int(expo)
        if value == 0:
            if e < 0:
                raise ExprError("zero raised to a negative power")
            return Q(1) if e == 0 else Q(0)
        return value ** e
    if value == 0:
        if expo < 0:
            raise ExprError("zero raised to a negative power")
        return Q(0)
    sign = 1
    if value < 0:
        if expo.denominator % 2 == 0:
            return None  # preserved; evaluation will flag the branch
        sign = (-1) ** expo.numerator
        value = -value
    p, qd = expo.numerator, expo.denominator
    rn = _nth_root_exact(value.numerator, qd)
    rd = _nth_root_exact(value.denominator, qd)
    if rn is None or rd is None:
        return None
    return sign * Q(rn, rd) ** p


def _pow_of_pow_safe(inner: Q, outer: Q) -> bool:
    # (b^inner)^outer -> b^(inner*outer): sound for integer outer, for
    # positive-base-only inner (even denominator), and for odd inner
    # numerator (sign-preserving); unsound e.g. ((-2)^2)^(1/2)
    if outer.denominator == 1:
        return True
    if inner.denominator % 2 == 0:
        return True
    return inner.numerator % 2 != 0


def pow_(e, expo) -> Expr:
    e = _coerce(e)
    expo = Q(expo)
    if expo == 0:
        return ONE
    if expo == 1:
        return e
    if isinstance(e, Num):
        exact = _rational_power(e.value, expo)
        if exact is not None:
            return num(exact)
        v = e.value
        if v < 0 and expo.denominator % 2 == 1:
            s = Q(1) if expo.numerator % 2 == 0 else Q(-1)
            return _make_term(s, ((num(-v), expo),))
        return _make_term(Q(1), ((e, expo),))
    if isinstance(e, Mul):
        if all(_pow_of_pow_safe(q, expo) for _, q in e.factors):
            coeff_part = pow_(num(e.coeff), expo)
            return mul(coeff_part, *[_factor_power(b, q * expo) for b, q in e.factors])
        return _make_term(Q(1), ((e, expo),))
    return _factor_power(e, expo)


def _factor_power(base: Expr, expo: Q) -> Expr:
    if expo == 0:
        return ONE
    if isinstance(base, Num):
        return pow_(base, expo)
    if isinstance(base, Fn) and base.fname == "exp":
        # (e^u)^q = e^(q u), valid on all of R
        return fn("exp", mul(num(expo), base.arg))
    if isinstance(base, Mul):
        return pow_(base, expo)
    if isinstance(base, Add):
        content, prim = _content_primitive(base)
        if expo.denominator == 1 and expo > 0:
            n_terms = len(prim.terms)
            if n_terms ** int(expo) <= EXPAND_BUDGET:
                out = pow_(num(content), expo)
                for _ in range(int(expo)):
                    out = mul(out, prim)
                return out
        if content != 1 and (content > 0 or expo.denominator % 2 == 1):
            return mul(pow_(num(content), expo),
                       _make_term(Q(1), ((prim, expo),)))
    return _make_term(Q(1), ((base, expo),))


def mul(*exprs) -> Expr:
    coeff = Q(1)
    powers: dict = {}
    order: list = []
    exp_args: list = []  # accumulated exponential arguments, merged at the end
    sums: list = []  # (Add base, positive int exponent) candidates for expansion

    def put(base, q):
        if id(base) in powers:
            powers[id(base)] = (base, powers[id(base)][1] + q)
        else:
            powers[id(base)] = (base, q)
            order.append(id(base))

    def absorb(e, q: Q):
        nonlocal coeff
        if isinstance(e, Num):
            c = pow_(e, q)
            if isinstance(c, Num):
                coeff *= c.value
            else:
                cc, fs = _term_parts(c)
                coeff *= cc
                for b, qq in fs:
                    put(b, qq)
            return
        if isinstance(e, Mul):
            c = pow_(num(e.coeff), q)
            absorb(c, Q(1))
            for b, qq in e.factors:
                if _pow_of_pow_safe(qq, q):
                    absorb_base(b, qq * q)
                else:
                    put(_make_term(Q(1), ((b, qq),)), q)
            return
        absorb_base(e, q)

    def absorb_base(b, q: Q):
        if q == 0:
            return
        if isinstance(b, (Num, Mul)):
            absorb(b, q)
            return
        if isinstance(b, Fn) and b.fname == "exp":
            exp_args.append(mul(num(q), b.arg) if q != 1 else b.arg)
            return
        if isinstance(b, Add):
            content, prim = _content_primitive(b)
            # splitting (c*p)^q needs real multiplicativity: positive
            # content always works, negative only through odd roots
            if content != 1 and (content > 0 or q.denominator % 2 == 1):
                absorb(pow_(num(content), q), Q(1))
                put(prim, q)
                return
        put(b, q)

    for e in exprs:
        absorb(_coerce(e), Q(1))

    while exp_args:
        args, exp_args = exp_args, []
        merged = fn("exp", add(*args))
        if merged is ONE:
            continue
        if isinstance(merged, Fn):
            put(merged, Q(1))  # settled exponential; do not re-absorb
        else:
            absorb(merged, Q(1))  # exp split off powers; may refill exp_args

    if coeff == 0:
        return ZERO

    factors = []
    for key in order:
        b, q = powers[key]
        if q == 0:
            continue
        if isinstance(b, Add) and q.denominator == 1 and q > 0:
            sums.append((b, int(q)))
        else:
            factors.append((b, q))

    # distribute products of sums while small enough
    if sums:
        total = 1
        for b, n in sums:
            total *= len(b.terms) ** n
        if total <= EXPAND_BUDGET:
            expanded = [_make_term(coeff, tuple(sorted(factors, key=lambda f: _sort_key(f[0]))))]
            for b, n in sums:
                for _ in range(n):
                    expanded = [mul(t, s) for t in expanded for s in b.terms]
                    if len(expanded) > EXPAND_BUDGET:
                        break
            if len(expanded) <= EXPAND_BUDGET:
                return add(*expanded)
        for b, n in sums:
            factors.append((b, Q(n)))

    factors.sort(key=lambda f: _sort_key(f[0]))
    return _make_term(coeff, tuple(factors))


def div(a, b) -> Expr:
    b = _coerce(b)
    if isinstance(b, Num):
        if b.value == 0:
            raise ExprError("division by zero")
        return mul(_coerce(a), num(Q(1) / b.value))
    return mul(_coerce(a), pow_(b, Q(-1)))


def fn(name: str, arg) -> Expr:
    if name == "sqrt":
        return pow_(_coerce(arg), Q(1, 2))
    if name not in _FN_NAMES:
        raise ExprError(f"unknown function {name!r}")
    arg = _coerce(arg)
    if name == "ln":
        if arg is ONE:
            return ZERO
        if isinstance(arg, Fn) and arg.fname == "exp":
            return arg.arg
        if isinstance(arg, Num) and arg.value <= 0:
            raise ExprError("ln of a non-positive constant")
    elif name == "exp":
        if arg is ZERO:
            return ONE
        if isinstance(arg, Fn) and arg.fname == "ln":
            return arg.arg
        # exp(sum q_i ln(u_i) + rest) -> prod u_i^{q_i} * exp(rest)
        pieces = arg.terms if isinstance(arg, Add) else (arg,)
        pows, rest = [], []
        for t in pieces:
            c, fs = _term_parts(t)
            if len(fs) == 1 and fs[0][1] == 1 and isinstance(fs[0][0], Fn) \
                    and fs[0][0].fname == "ln":
                pows.append(pow_(fs[0][0].arg, c))
            else:
                rest.append(t)
        if pows:
            rest_e = add(*rest) if rest else ZERO
            return mul(*pows, fn("exp", rest_e)) if rest else mul(*pows)
    elif name == "sin":
        if arg is ZERO:
            return ZERO
    elif name == "cos":
        if arg is ZERO:
            return ONE

    def build():
        e = Fn.__new__(Fn)
        e.fname = name
        e.arg = arg
        return e

    return _interned(("f", name, id(arg)), build)


# ---------------------------------------------------------------------------
# structural queries


_free_cache: dict = {}


def free_symbols(e: Expr) -> frozenset:
    got = _free_cache.get(id(e))
    if got is None:
        if isinstance(e, Num):
            got = frozenset()
        elif isinstance(e, Sym):
            got = frozenset((e.name,))
        elif isinstance(e, Fn):
            got = free_symbols(e.arg)
        elif isinstance(e, Add):
            got = frozenset().union(*(free_symbols(t) for t in e.terms))
        else:
            got = frozenset().union(*(free_symbols(b) for b, _ in e.factors))
        _free_cache[id(e)] = got
    return got


def is_rational_monomial_form(e: Expr) -> bool:
    """True when e is in the exactly-decidable tier: a sum of monomials
    whose bases are all plain symbols.  Such a normal form is zero as a
    function on the positive orthant iff it is the literal zero."""
    terms = e.terms if isinstance(e, Add) else (e,)
    for t in terms:
        _, fs = _term_parts(t)
        if any(not isinstance(b, Sym) for b, _ in fs):
            return False
    return True


# ---------------------------------------------------------------------------
# differentiation


_diff_cache: dict = {}


def differentiate(e: Expr, var: str) -> Expr:
    key = (id(e), var)
    got = _diff_cache.get(key)
    if got is not None:
        return got
    if isinstance(e, Num):
        out = ZERO
    elif isinstance(e, Sym):
        out = ONE if e.name == var else ZERO
    elif isinstance(e, Add):
        out = add(*(differentiate(t, var) for t in e.terms))
    elif isinstance(e, Mul):
        if var not in free_symbols(e):
            out = ZERO
        else:
            pieces = []
            fs = e.factors
            for i, (b, q) in enumerate(fs):
                db = differentiate(b, var)
                if db is ZERO:
                    continue
                others = fs[:i] + fs[i + 1:]
                rest = _make_term(e.coeff, others)
                pieces.append(mul(num(q), _factor_power(b, q - 1), db, rest))
            out = add(*pieces) if pieces else ZERO
    else:  # Fn
        if var not in free_symbols(e):
            out = ZERO
        else:
            da = differentiate(e.arg, var)
            if e.fname == "ln":
                out = div(da, e.arg)
            elif e.fname == "exp":
                out = mul(e, da)
            elif e.fname == "sin":
                out = mul(fn("cos", e.arg), da)
            else:
                out = mul(num(-1), fn("sin", e.arg), da)
    _diff_cache[key] = out
    return out


def substitute(e: Expr, name: str, replacement: Expr) -> Expr:
    """Replace every occurrence of the symbol by an expression,
    renormalizing on the way up."""
    if name not in free_symbols(e):
        return e
    if isinstance(e, Sym):
        return replacement
    if isinstance(e, Fn):
        return fn(e.fname, substitute(e.arg, name, replacement))
    if isinstance(e, Add):
        return add(*(substitute(t, name, replacement) for t in e.terms))
    # Mul
    parts = [num(e.coeff)]
    for b, q in e.factors:
        parts.append(pow_(substitute(b, name, replacement), q))
    return mul(*parts)


# ---------------------------------------------------------------------------
# restricted antiderivative


def _affine_in(u: Expr, var: str):
    """Return (a, b) with u = a*var + b, a nonzero and a, b free of var;
    None when u is not affine in var."""
    a = differentiate(u, var)
    if a is ZERO or var in free_symbols(a):
        return None
    b = sub(u, mul(a, sym(var)))
    if var in free_symbols(b):
        return None
    return a, b


def antiderivative(e: Expr, var: str) -> Optional[Expr]:
    """Antiderivative of a sum of terms c*u^q (u affine in var), c*u^(-1),
    and c*exp(w) (w affine in var); None when a term falls outside that
    class.  Never returns a wrong answer: each success is differentiable
    back to the input by construction."""
    terms = e.terms if isinstance(e, Add) else (e,)
    out = []
    v = sym(var)
    for t in terms:
        c, fs = _term_parts(t)
        const_fs = [f for f in fs if var not in free_symbols(f[0])]
        var_fs = [f for f in fs if var in free_symbols(f[0])]
        cpart = _make_term(c, tuple(const_fs))
        if not var_fs:
            out.append(mul(cpart, v))
            continue
        if len(var_fs) != 1:
            return None
        base, q = var_fs[0]
        if isinstance(base, Fn) and base.fname == "exp":
            w = mul(num(q), base.arg)
            aff = _affine_in(w, var)
            if aff is None:
                return None
            k, _ = aff
            out.append(mul(cpart, div(fn("exp", w), k)))
            continue
        aff = _affine_in(base, var)
        if aff is None:
            return None
        a, _ = aff
        if q == -1:
            out.append(mul(cpart, div(fn("ln", base), a)))
        else:
            out.append(mul(cpart, div(_factor_power(base, q + 1), mul(num(q + 1), a))))
    return add(*out)


# ---------------------------------------------------------------------------
# printing (canonical, grammar round-trippable)


def _q_str(q: Q) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _expo_str(q: Q) -> str:
    if q.denominator == 1 and q >= 0:
        return f"^{q.numerator}"
    return f"^({_q_str(q)})"


def _base_str(b: Expr) -> str:
    if isinstance(b, Sym):
        return b.name
    if isinstance(b, Fn):
        return f"{b.fname}({to_string(b.arg)})"
    if isinstance(b, Num):
        return _q_str(b.value) if b.value >= 0 and b.value.denominator == 1 \
            else f"({_q_str(b.value)})"
    return f"({to_string(b)})"


def _term_str(t: Expr):
    """Return (sign, body) for one Add term."""
    c, fs = _term_parts(t)
    sign = "-" if c < 0 else "+"
    c = abs(c)
    parts = []
    if c != 1 or not fs:
        parts.append(_q_str(c))
    for b, q in fs:
        s = _base_str(b)
        if q != 1:
            s += _expo_str(q)
        parts.append(s)
    return sign, "*".join(parts)


def to_string(e: Expr) -> str:
    terms = e.terms if isinstance(e, Add) else (e,)
    chunks = []
    for i, t in enumerate(terms):
        sign, body = _term_str(t)
        if i == 0:
            chunks.append(body if sign == "+" else "-" + body)
        else:
            chunks.append(f" {sign} {body}")
    return "".join(chunks)
