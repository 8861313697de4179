"""Contexts, policies, high-precision evaluation, and the zero test.

Zero testing is two-tier.  Expressions whose normal form is a collected sum
of symbol-monomials are decided exactly (such a form vanishes on the
positive orthant iff it is literally zero).  Everything else is sampled at
exact rational points drawn from a seeded generator inside the policy box,
evaluated in high-precision floating point with the largest intermediate
magnitude tracked, and classified by relative smallness.  Indeterminate is
an explicit outcome, never silently collapsed.
"""

from __future__ import annotations

import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction as Q
from typing import Dict, Iterable, Optional, Sequence, Tuple

import mpmath

from . import expr as ex
from .parser import parse_expr

__all__ = [
    "Context", "ZeroTestPolicy", "Verdict", "PoleError",
    "evaluate_bigfloat", "evaluate_tracked", "is_identically_zero",
    "is_identically_zero_many", "sample_points", "UnclassifiedStratum",
]

_GUARD_BITS = 32
_WITNESS_FACTOR = 1000  # NonZero needs |e| >= factor * tolerance (relative)

_mp_lock = threading.Lock()


class PoleError(ArithmeticError):
    """Evaluation hit a pole or a branch violation (ln or even-denominator
    power of a non-positive value, zero to a negative power)."""


class UnclassifiedStratum(RuntimeError):
    """Raised when zero-test verdicts are Indeterminate on the sample box,
    typically on a non-generic parameter stratum."""


@dataclass(frozen=True)
class Context:
    """Declared identifiers for one analysis session.

    variables: coordinate names in order (two for the geometry modules).
    parameters: mapping name -> "free" | "nonzero".
    singular_loci: expressions whose zero sets sampling must avoid.
    """

    variables: Tuple[str, ...]
    parameters: Tuple[Tuple[str, str], ...] = ()
    singular_loci: Tuple[ex.Expr, ...] = ()

    def __post_init__(self):
        names = list(self.variables) + [n for n, _ in self.parameters]
        if len(set(names)) != len(names):
            raise ValueError("variable and parameter names must be disjoint")
        for _, kind in self.parameters:
            if kind not in ("free", "nonzero"):
                raise ValueError(f"bad parameter assumption {kind!r}")

    @staticmethod
    def make(variables: Sequence[str], parameters=(), singular_loci=()):
        if isinstance(parameters, dict):
            parameters = tuple(sorted(parameters.items()))
        else:
            parameters = tuple(
                (p, "free") if isinstance(p, str) else tuple(p) for p in parameters
            )
        return Context(tuple(variables), parameters, tuple(singular_loci))

    @property
    def identifiers(self) -> Tuple[str, ...]:
        return tuple(self.variables) + tuple(n for n, _ in self.parameters)

    def knows(self, name: str) -> bool:
        return name in self.variables or any(n == name for n, _ in self.parameters)

    def parse(self, source: str) -> ex.Expr:
        return parse_expr(source, self)

    def with_loci(self, *loci: ex.Expr) -> "Context":
        return Context(self.variables, self.parameters,
                       self.singular_loci + tuple(loci))

    def with_variables(self, *names: str) -> "Context":
        return Context(self.variables + tuple(n for n in names
                                              if n not in self.variables),
                       self.parameters, self.singular_loci)


@dataclass(frozen=True)
class ZeroTestPolicy:
    sample_count: int = 12
    precision_bits: int = 256
    relative_tolerance: Q = Q(1, 10 ** 30)
    rng_seed: int = 0
    # closed rational box per identifier; identifiers not listed use default_box
    default_box: Tuple[Q, Q] = (Q(1), Q(3))
    boxes: Tuple[Tuple[str, Tuple[Q, Q]], ...] = ()
    threads: int = 1

    def box_for(self, name: str) -> Tuple[Q, Q]:
        for n, box in self.boxes:
            if n == name:
                return box
        return self.default_box

    def with_boxes(self, **boxes) -> "ZeroTestPolicy":
        merged = dict(self.boxes)
        merged.update({k: (Q(lo), Q(hi)) for k, (lo, hi) in boxes.items()})
        return ZeroTestPolicy(self.sample_count, self.precision_bits,
                              self.relative_tolerance, self.rng_seed,
                              self.default_box, tuple(sorted(merged.items())),
                              self.threads)


@dataclass(frozen=True)
class Verdict:
    kind: str  # "zero" | "nonzero" | "indeterminate"
    exact: bool = False
    witness: Optional[Tuple[Tuple[str, Q], ...]] = None
    detail: str = ""

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    @property
    def is_nonzero(self) -> bool:
        return self.kind == "nonzero"

    @property
    def indeterminate(self) -> bool:
        return self.kind == "indeterminate"

    def __str__(self):
        if self.kind == "zero":
            return "Zero(exact)" if self.exact else "Zero"
        if self.kind == "nonzero":
            pt = ", ".join(f"{n}={v}" for n, v in (self.witness or ()))
            return f"NonZero({pt})"
        return f"Indeterminate({self.detail})"


ZERO_EXACT = Verdict("zero", exact=True)


# ---------------------------------------------------------------------------
# evaluation


def _eval_node(mp, e, point, cache):
    """Returns (value, subtree_max) with subtree_max the largest magnitude
    of any node in e's DAG; cached per node so shared subtrees are walked
    once per point without losing per-expression scale tracking."""
    got = cache.get(id(e))
    if got is not None:
        return got
    submax = mp.mpf(0)
    if isinstance(e, ex.Num):
        v = mp.mpf(e.value.numerator) / e.value.denominator
    elif isinstance(e, ex.Sym):
        try:
            q = point[e.name]
        except KeyError:
            raise ex.ExprError(f"no value assigned to {e.name!r}") from None
        v = mp.mpf(q.numerator) / q.denominator
    elif isinstance(e, ex.Add):
        v = mp.mpf(0)
        for t in e.terms:
            tv, tm = _eval_node(mp, t, point, cache)
            v += tv
            if tm > submax:
                submax = tm
    elif isinstance(e, ex.Mul):
        v = mp.mpf(e.coeff.numerator) / e.coeff.denominator
        for b, q in e.factors:
            bv, bm = _eval_node(mp, b, point, cache)
            v *= _eval_power(mp, bv, q)
            if bm > submax:
                submax = bm
    else:  # Fn
        a, submax = _eval_node(mp, e.arg, point, cache)
        if e.fname == "ln":
            if a <= 0:
                raise PoleError("ln of a non-positive value")
            v = mp.log(a)
        elif e.fname == "exp":
            v = mp.exp(a)
        elif e.fname == "sin":
            v = mp.sin(a)
        else:
            v = mp.cos(a)
    av = abs(v)
    if av > submax:
        submax = av
    out = (v, submax)
    cache[id(e)] = out
    return out


def _eval_power(mp, base, q: Q):
    if q.denominator == 1:
        n = int(q)
        if base == 0:
            if n < 0:
                raise PoleError("zero to a negative power")
            return mp.mpf(1) if n == 0 else mp.mpf(0)
        return base ** n
    if base == 0:
        if q < 0:
            raise PoleError("zero to a negative power")
        return mp.mpf(0)
    if base < 0:
        if q.denominator % 2 == 0:
            raise PoleError("even root of a negative value")
        root = mp.root(-base, q.denominator)
        out = root ** q.numerator
        return -out if q.numerator % 2 else out
    root = mp.root(base, q.denominator)
    return root ** q.numerator


def evaluate_bigfloat(e: ex.Expr, point: Dict[str, Q], precision_bits: int = 256):
    """Evaluate e at an exact rational point; returns an mpmath float.

    Arithmetic runs at precision_bits + guard bits in a private context
    (thread-safe); the relative error stays within 2^(8 - precision_bits)
    for the expression sizes in this package, and the zero test tracks the
    largest intermediate magnitude to expose catastrophic cancellation
    instead of hiding it."""
    v, _ = evaluate_tracked(e, point, precision_bits)
    return v


def evaluate_tracked(e: ex.Expr, point: Dict[str, Q], precision_bits: int,
                     cache: Optional[dict] = None):
    """Evaluate returning (value, largest intermediate magnitude); a cache
    may be shared between expressions evaluated at the same point."""
    mp = mpmath.mp.clone()
    mp.prec = precision_bits + _GUARD_BITS
    return _eval_node(mp, e, point, {} if cache is None else cache)


# ---------------------------------------------------------------------------
# sampling


_SAMPLE_DENOMINATOR = 9973


def sample_points(ctx: Context, policy: ZeroTestPolicy, count: Optional[int] = None):
    """Deterministic exact-rational sample points inside the policy box.

    Points at which a declared singular locus evaluates below tolerance (or
    fails to evaluate) are rejected and redrawn, up to 10 retries per point;
    exhaustion raises UnclassifiedStratum.
    """
    rng = random.Random(policy.rng_seed)
    names = ctx.identifiers
    want = policy.sample_count if count is None else count
    pts = []
    for _ in range(want):
        for _retry in range(11):
            point = {}
            for name in names:
                lo, hi = policy.box_for(name)
                n = rng.randrange(int(lo * _SAMPLE_DENOMINATOR),
                                  int(hi * _SAMPLE_DENOMINATOR) + 1)
                point[name] = Q(n, _SAMPLE_DENOMINATOR)
            if _point_clears_loci(ctx, policy, point):
                pts.append(point)
                break
        else:
            raise UnclassifiedStratum(
                "could not sample off the declared singular loci")
    return pts


def _point_clears_loci(ctx, policy, point) -> bool:
    tol = mpmath.mpf(policy.relative_tolerance.numerator) / policy.relative_tolerance.denominator
    for locus in ctx.singular_loci:
        try:
            v, scale = evaluate_tracked(locus, point, policy.precision_bits)
        except (PoleError, ZeroDivisionError):
            return False
        if abs(v) <= tol * max(scale, mpmath.mpf(1)):
            return False
    return True


def is_identically_zero(e: ex.Expr, ctx: Context,
                        policy: ZeroTestPolicy = ZeroTestPolicy()) -> Verdict:
    """Two-tier zero test; see module docstring.

    Zero: exact normal form is 0, or every sample is relatively below
    tolerance.  NonZero: the first sample exceeding tolerance by a factor of
    1000 becomes the witness.  Indeterminate: some sample lands between the
    thresholds, or a sample point keeps hitting poles.
    """
    return is_identically_zero_many([e], ctx, policy)[0]


def is_identically_zero_many(exprs, ctx: Context,
                             policy: ZeroTestPolicy = ZeroTestPolicy()):
    """Zero-test several expressions over the same sample set, sharing the
    evaluation cache at each point; verdicts equal the one-at-a-time ones."""
    exprs = list(exprs)
    for e in exprs:
        undeclared = ex.free_symbols(e) - set(ctx.identifiers)
        if undeclared:
            raise ex.ExprError(f"undeclared identifiers: {sorted(undeclared)}")
    verdicts: list = [None] * len(exprs)
    pending = []
    for i, e in enumerate(exprs):
        if e is ex.ZERO:
            verdicts[i] = ZERO_EXACT
        else:
            pending.append(i)
    if not pending:
        return verdicts

    tol = mpmath.mpf(policy.relative_tolerance.numerator) \
        / policy.relative_tolerance.denominator
    points = sample_points(ctx, policy)

    def measure(indexed):
        """Per point: (candidate, magnitude) per pending expression."""
        index, point = indexed
        cache: dict = {}
        out = []
        retries = None
        for i in pending:
            try:
                v, scale = evaluate_tracked(exprs[i], point,
                                            policy.precision_bits, cache)
                out.append((point, abs(v) / max(scale, mpmath.mpf(1))))
                continue
            except (PoleError, ZeroDivisionError):
                pass
            if retries is None:
                retries = _fresh_points(ctx, policy, index)
            done = False
            for candidate in retries:
                try:
                    v, scale = evaluate_tracked(exprs[i], candidate,
                                                policy.precision_bits)
                    out.append((candidate, abs(v) / max(scale, mpmath.mpf(1))))
                    done = True
                    break
                except (PoleError, ZeroDivisionError):
                    continue
            if not done:
                out.append((point, None))
        return out

    if policy.threads > 1:
        with ThreadPoolExecutor(max_workers=policy.threads) as pool:
            per_point = list(pool.map(measure, enumerate(points)))
    else:
        per_point = [measure(ip) for ip in enumerate(points)]

    for slot, i in enumerate(pending):
        verdict = None
        saw_band = None
        for results in per_point:
            candidate, m = results[slot]
            if m is None:
                verdict = Verdict("indeterminate", detail="pole retries exhausted")
                break
            if m >= tol * _WITNESS_FACTOR:
                verdict = Verdict("nonzero", witness=tuple(sorted(candidate.items())))
                break
            if m >= tol and saw_band is None:
                saw_band = candidate
        if verdict is None:
            if saw_band is not None:
                verdict = Verdict("indeterminate",
                                  detail="magnitude between tolerance thresholds",
                                  witness=tuple(sorted(saw_band.items())))
            else:
                verdict = Verdict("zero")
        verdicts[i] = verdict
    return verdicts


def _fresh_points(ctx, policy, point_index: int, count: int = 10):
    """Replacement points for pole retries; seeded by the point index so
    parallel sampling stays order-independent and runs are reproducible."""
    rng = random.Random(policy.rng_seed * 1000003 + 7919 * (point_index + 1))
    names = ctx.identifiers
    out = []
    for _ in range(count):
        point = {}
        for name in names:
            lo, hi = policy.box_for(name)
            n = rng.randrange(int(lo * _SAMPLE_DENOMINATOR),
                              int(hi * _SAMPLE_DENOMINATOR) + 1)
            point[name] = Q(n, _SAMPLE_DENOMINATOR)
        if _point_clears_loci(ctx, policy, point):
            out.append(point)
    return out
