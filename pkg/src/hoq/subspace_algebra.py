"""Bitstring index sets for block decompositions of operator spaces.

An operator space over factors of dimensions (d_1, .., d_k) splits into
orthogonal blocks L_b indexed by bitstrings b of length k: bit 1 at position i
means "proportional to the identity on factor i", bit 0 means "traceless on
factor i".  Strings are displayed left to right in factor order; internally
they are stored as integers with the leftmost factor in the highest bit.

W is the full set {0,1}^k, e the all-ones string (the identity block) and
T = W \\ {e}.  Concatenation of index sets mirrors the tensor product of the
underlying spaces; the empty string (k = 0) is its neutral element.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Iterator, Sequence

from hoq.type_ast import Arrow, Elementary, TypeExpr, factor_dims, print_canonical

MAX_FACTORS = 64


class CapacityError(ValueError):
    """More tensor factors than the index representation supports."""


def bits_to_int(bits: str) -> int:
    if bits and (set(bits) - {"0", "1"}):
        raise ValueError(f"not a bitstring: {bits!r}")
    return int(bits, 2) if bits else 0


def int_to_bits(value: int, length: int) -> str:
    return format(value, f"0{length}b") if length else ""


@dataclass(frozen=True)
class StringSet:
    """A set of index strings of a common length."""

    length: int
    strings: frozenset[int]

    def __post_init__(self) -> None:
        if self.length < 0 or self.length > MAX_FACTORS:
            raise CapacityError(
                f"string length {self.length} outside [0, {MAX_FACTORS}]"
            )
        if not isinstance(self.strings, frozenset):
            object.__setattr__(self, "strings", frozenset(self.strings))
        limit = 1 << self.length
        for s in self.strings:
            if not 0 <= s < limit:
                raise ValueError(f"string {s} does not fit length {self.length}")

    @staticmethod
    def from_bitstrings(length: int, bitstrings: Iterable[str]) -> "StringSet":
        vals = set()
        for b in bitstrings:
            if len(b) != length:
                raise ValueError(f"{b!r} has length {len(b)}, expected {length}")
            vals.add(bits_to_int(b))
        return StringSet(length, frozenset(vals))

    def as_bitstrings(self) -> list[str]:
        return [int_to_bits(s, self.length) for s in sorted(self.strings)]

    def __len__(self) -> int:
        return len(self.strings)

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.strings))

    def __contains__(self, item: object) -> bool:
        if isinstance(item, str):
            return len(item) == self.length and bits_to_int(item) in self.strings
        return item in self.strings


@dataclass(frozen=True)
class FactorProfile:
    """Ordered factor dimensions accompanying an index set."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(d < 1 for d in self.dims):
            raise ValueError(f"dimensions must be >= 1: {self.dims}")

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self) -> Iterator[int]:
        return iter(self.dims)

    @property
    def total_dim(self) -> int:
        return prod(self.dims)


def full_sets(length: int) -> tuple[StringSet, StringSet, StringSet]:
    """Return (W, T, e) at the given length: everything, everything but the
    all-ones string, and the all-ones singleton.  At length 0, W = e = {ε}
    and T is empty."""
    if length < 0 or length > MAX_FACTORS:
        raise CapacityError(f"length {length} outside [0, {MAX_FACTORS}]")
    if length > 24:
        # W is materialized element by element; beyond ~2^24 this is no
        # longer an index set but a memory hazard.
        raise CapacityError(f"refusing to materialize 2^{length} strings")
    e = (1 << length) - 1
    everything = frozenset(range(1 << length))
    return (
        StringSet(length, everything),
        StringSet(length, everything - {e}),
        StringSet(length, frozenset({e})),
    )


def complement_in_T(J: StringSet) -> StringSet:
    """T \\ J.  The all-ones string must not be in J."""
    e = (1 << J.length) - 1
    if e in J.strings:
        raise ValueError("complement_in_T: the identity string is not in T")
    _, t, _ = full_sets(J.length)
    return StringSet(J.length, t.strings - J.strings)


def perp_in_W(J: StringSet) -> StringSet:
    """W \\ J."""
    w, _, _ = full_sets(J.length)
    return StringSet(J.length, w.strings - J.strings)


def union(a: StringSet, b: StringSet) -> StringSet:
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} vs {b.length}")
    return StringSet(a.length, a.strings | b.strings)


def intersection(a: StringSet, b: StringSet) -> StringSet:
    if a.length != b.length:
        raise ValueError(f"length mismatch: {a.length} vs {b.length}")
    return StringSet(a.length, a.strings & b.strings)


def concat(a: StringSet, b: StringSet) -> StringSet:
    """Pairwise concatenation {uv : u in a, v in b}; lengths add."""
    length = a.length + b.length
    if length > MAX_FACTORS:
        raise CapacityError(f"concatenated length {length} exceeds {MAX_FACTORS}")
    if not a.strings or not b.strings:
        return StringSet(length, frozenset())
    shift = b.length
    return StringSet(
        length, frozenset((u << shift) | v for u in a.strings for v in b.strings)
    )


def concat_power(J: StringSet, k: int) -> StringSet:
    """k-fold concatenation of J with itself; k = 0 gives {ε}."""
    if k < 0:
        raise ValueError("negative power")
    out = StringSet(0, frozenset({0}))
    for _ in range(k):
        out = concat(out, J)
    return out


def permute(J: StringSet, perm: Sequence[int]) -> StringSet:
    """Reindex factors: output position i reads input position perm[i]."""
    if sorted(perm) != list(range(J.length)):
        raise ValueError(f"not a permutation of range({J.length}): {perm}")
    ell = J.length
    out = set()
    for s in J.strings:
        v = 0
        for i, p in enumerate(perm):
            bit = (s >> (ell - 1 - p)) & 1
            v |= bit << (ell - 1 - i)
        out.add(v)
    return StringSet(ell, frozenset(out))


def normal_form(
    J: StringSet, dims: Sequence[int]
) -> tuple[StringSet, FactorProfile]:
    """Drop trivial (d = 1) positions.

    Strings that are traceless on a one-dimensional factor index a
    zero-dimensional block, so only strings with bit 1 at every trivial
    position survive; those bits are then removed.  Idempotent: applying it
    to its own output changes nothing.
    """
    dims = tuple(dims)
    if len(dims) != J.length:
        raise ValueError(f"{len(dims)} dims for strings of length {J.length}")
    keep = [i for i, d in enumerate(dims) if d > 1]
    if len(keep) == len(dims):
        return J, FactorProfile(dims)
    ell = J.length
    out = set()
    for s in J.strings:
        ok = True
        for i, d in enumerate(dims):
            if d == 1 and not (s >> (ell - 1 - i)) & 1:
                ok = False
                break
        if not ok:
            continue
        v = 0
        for j, i in enumerate(keep):
            bit = (s >> (ell - 1 - i)) & 1
            v |= bit << (len(keep) - 1 - j)
        out.add(v)
    return (
        StringSet(len(keep), frozenset(out)),
        FactorProfile(tuple(d for d in dims if d > 1)),
    )


def dim_of_delta(J: StringSet, dims: Sequence[int]) -> int:
    """Real dimension of the direct sum of the blocks indexed by J."""
    dims = tuple(dims)
    if len(dims) != J.length:
        raise ValueError(f"{len(dims)} dims for strings of length {J.length}")
    ell = J.length
    total = 0
    for s in J.strings:
        term = 1
        for i, d in enumerate(dims):
            if not (s >> (ell - 1 - i)) & 1:
                term *= d * d - 1
        total += term
    return total


# --------------------------------------------------------------------------
# the index set of a type
# --------------------------------------------------------------------------

_DELTA_CACHE: dict[str, StringSet] = {}


def delta_of_type(x: TypeExpr) -> StringSet:
    """Index set of the fluctuation space of deterministic events of ``x``.

    Computed over *all* atom positions of ``x`` (no normal-form reduction
    here).  Elementary layer: every non-identity pattern, i.e. T over its
    atoms — except that an all-trivial group contributes the empty set, so
    the trivial type has an empty index set exactly.  Arrow x -> y:
    W_x · D_y  ∪  (T_x \\ D_x) · (W_y \\ D_y).  Results are memoized on the
    canonical rendering.
    """
    key = print_canonical(x)
    cached = _DELTA_CACHE.get(key)
    if cached is not None:
        return cached
    if isinstance(x, Elementary):
        k = len(x.atoms)
        if all(a.dim == 1 for a in x.atoms):
            out = StringSet(k, frozenset())
        else:
            out = full_sets(k)[1]
    elif isinstance(x, Arrow):
        d_tail = delta_of_type(x.tail)
        d_head = delta_of_type(x.head)
        w_tail = full_sets(d_tail.length)[0]
        out = union(
            concat(w_tail, d_head),
            concat(complement_in_T(d_tail), perp_in_W(d_head)),
        )
    else:
        raise TypeError(f"not a type expression: {x!r}")
    _DELTA_CACHE[key] = out
    return out


def delta_normal_form(x: TypeExpr) -> tuple[StringSet, FactorProfile]:
    """delta_of_type followed by normal_form over the type's factor dims."""
    return normal_form(delta_of_type(x), factor_dims(x))


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def to_json_obj(J: StringSet, dims: Sequence[int]) -> dict:
    """JSON form: sorted bitstrings plus the sibling dims list."""
    dims = tuple(dims)
    if len(dims) != J.length:
        raise ValueError(f"{len(dims)} dims for strings of length {J.length}")
    return {"strings": J.as_bitstrings(), "dims": list(dims)}


def from_json_obj(obj: dict) -> tuple[StringSet, FactorProfile]:
    if not isinstance(obj, dict) or "strings" not in obj or "dims" not in obj:
        raise ValueError("expected an object with 'strings' and 'dims'")
    dims = tuple(int(d) for d in obj["dims"])
    sset = StringSet.from_bitstrings(len(dims), obj["strings"])
    return sset, FactorProfile(dims)
