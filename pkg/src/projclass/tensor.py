"""Dense tensor algebra in two dimensions over Expr entries.

Valence is a string of 'u'/'d' slots; components live in a dense dict keyed
by index tuples.  The covariant derivative prepends its new lower index, so
(nabla T)[a, i1, ...] = nabla_a T_{i1...}, matching the layout used
throughout the geometry modules.  Raising and lowering use the attached
volume form: V^a = eps^{ab} V_b and V_a = V^b eps_{ba}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction as Q
from typing import Dict, Iterable, Tuple

from . import expr as ex

__all__ = ["Tensor", "VolumeForm", "covariant_derivative", "contract",
           "raise_index", "lower_index", "symmetrize", "antisymmetrize",
           "tensor_product"]

_DIM = 2


def _indices(rank: int):
    return itertools.product(range(_DIM), repeat=rank)


@dataclass(frozen=True)
class Tensor:
    valence: str  # e.g. "udd"; "" is a scalar
    comps: Tuple[ex.Expr, ...]  # dense, row-major over _indices(rank)

    def __post_init__(self):
        if any(ch not in "ud" for ch in self.valence):
            raise ValueError(f"bad valence {self.valence!r}")
        if len(self.comps) != _DIM ** len(self.valence):
            raise ValueError("component count does not match valence")

    @staticmethod
    def build(valence: str, fill) -> "Tensor":
        comps = tuple(fill(*idx) for idx in _indices(len(valence)))
        return Tensor(valence, comps)

    @staticmethod
    def scalar(e: ex.Expr) -> "Tensor":
        return Tensor("", (e,))

    @property
    def rank(self) -> int:
        return len(self.valence)

    def __getitem__(self, idx) -> ex.Expr:
        if isinstance(idx, int):
            idx = (idx,)
        flat = 0
        for i in idx:
            flat = flat * _DIM + i
        return self.comps[flat]

    def map(self, f) -> "Tensor":
        return Tensor(self.valence, tuple(f(c) for c in self.comps))

    def __add__(self, other: "Tensor") -> "Tensor":
        if self.valence != other.valence:
            raise ValueError("valence mismatch in tensor addition")
        return Tensor(self.valence,
                      tuple(ex.add(a, b) for a, b in zip(self.comps, other.comps)))

    def __sub__(self, other: "Tensor") -> "Tensor":
        if self.valence != other.valence:
            raise ValueError("valence mismatch in tensor subtraction")
        return Tensor(self.valence,
                      tuple(ex.sub(a, b) for a, b in zip(self.comps, other.comps)))

    def scale(self, factor) -> "Tensor":
        return self.map(lambda c: ex.mul(factor, c))


@dataclass(frozen=True)
class VolumeForm:
    """Area form eps_{ab}; eps12 is the (1,2) entry, eps^{12} = 1/eps12 so
    that eps^{ab} eps_{cb} = delta^a_c."""

    eps12: ex.Expr = ex.ONE

    def lower(self, a: int, b: int) -> ex.Expr:
        if a == b:
            return ex.ZERO
        return self.eps12 if (a, b) == (0, 1) else ex.neg(self.eps12)

    def upper(self, a: int, b: int) -> ex.Expr:
        if a == b:
            return ex.ZERO
        inv = ex.div(ex.ONE, self.eps12)
        return inv if (a, b) == (0, 1) else ex.neg(inv)

    def tensor_lower(self) -> Tensor:
        return Tensor.build("dd", self.lower)

    def tensor_upper(self) -> Tensor:
        return Tensor.build("uu", self.upper)


def tensor_product(a: Tensor, b: Tensor) -> Tensor:
    comps = tuple(ex.mul(x, y) for x in a.comps for y in b.comps)
    return Tensor(a.valence + b.valence, comps)


def contract(t: Tensor, pos_u: int, pos_d: int) -> Tensor:
    """Contract an up slot with a down slot."""
    if {t.valence[pos_u], t.valence[pos_d]} != {"u", "d"}:
        raise ValueError("contraction needs one up and one down slot")
    keep = [i for i in range(t.rank) if i not in (pos_u, pos_d)]
    valence = "".join(t.valence[i] for i in keep)

    def fill(*idx):
        total = ex.ZERO
        for s in range(_DIM):
            full = [0] * t.rank
            for slot, value in zip(keep, idx):
                full[slot] = value
            full[pos_u] = s
            full[pos_d] = s
            total = ex.add(total, t[tuple(full)])
        return total

    return Tensor.build(valence, fill)


def raise_index(t: Tensor, pos: int, vol: VolumeForm) -> Tensor:
    """V^a = eps^{ab} V_b on the given slot."""
    if t.valence[pos] != "d":
        raise ValueError("can only raise a down slot")
    valence = t.valence[:pos] + "u" + t.valence[pos + 1:]

    def fill(*idx):
        total = ex.ZERO
        for b in range(_DIM):
            src = idx[:pos] + (b,) + idx[pos + 1:]
            total = ex.add(total, ex.mul(vol.upper(idx[pos], b), t[src]))
        return total

    return Tensor.build(valence, fill)


def lower_index(t: Tensor, pos: int, vol: VolumeForm) -> Tensor:
    """V_a = V^b eps_{ba} on the given slot."""
    if t.valence[pos] != "u":
        raise ValueError("can only lower an up slot")
    valence = t.valence[:pos] + "d" + t.valence[pos + 1:]

    def fill(*idx):
        total = ex.ZERO
        for b in range(_DIM):
            src = idx[:pos] + (b,) + idx[pos + 1:]
            total = ex.add(total, ex.mul(t[src], vol.lower(b, idx[pos])))
        return total

    return Tensor.build(valence, fill)


def _sym_group(t: Tensor, positions, sign_of_parity: bool) -> Tensor:
    positions = tuple(positions)
    if any(t.valence[p] != t.valence[positions[0]] for p in positions):
        raise ValueError("(anti)symmetrization needs slots of equal variance")
    perms = list(itertools.permutations(range(len(positions))))
    weight = Q(1, len(perms))

    def parity(perm):
        sign = 1
        seen = [False] * len(perm)
        for i in range(len(perm)):
            if seen[i]:
                continue
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            if length % 2 == 0:
                sign = -sign
        return sign

    def fill(*idx):
        total = ex.ZERO
        for perm in perms:
            src = list(idx)
            for slot, source_slot in enumerate(perm):
                src[positions[slot]] = idx[positions[source_slot]]
            piece = t[tuple(src)]
            if sign_of_parity and parity(perm) < 0:
                piece = ex.neg(piece)
            total = ex.add(total, piece)
        return ex.mul(weight, total)

    return Tensor.build(t.valence, fill)


def symmetrize(t: Tensor, positions: Iterable[int]) -> Tensor:
    return _sym_group(t, positions, sign_of_parity=False)


def antisymmetrize(t: Tensor, positions: Iterable[int]) -> Tensor:
    return _sym_group(t, positions, sign_of_parity=True)


def covariant_derivative(t: Tensor, conn) -> Tensor:
    """Covariant derivative for the given connection; the new lower index
    comes first.  conn is a projective.Connection2D."""
    if t.rank > 4:
        raise ValueError("covariant_derivative supports rank <= 4")
    valence = "d" + t.valence

    def fill(a, *idx):
        total = ex.differentiate(t[idx], conn.coords[a])
        for slot, variance in enumerate(t.valence):
            for e in range(_DIM):
                swapped = idx[:slot] + (e,) + idx[slot + 1:]
                if variance == "u":
                    total = ex.add(total, ex.mul(conn.gamma(idx[slot], a, e),
                                                 t[swapped]))
                else:
                    total = ex.sub(total, ex.mul(conn.gamma(e, a, idx[slot]),
                                                 t[swapped]))
        return total

    return Tensor.build(valence, fill)
