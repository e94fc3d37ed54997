"""Exact characterization data for types and decidable type equivalence.

Every deterministic event of a type x is λ_x·I plus a fluctuation from the
block direct sum indexed by delta_of_type(x).  This module computes the exact
rational λ_x, packages the normal-formed index data as :class:`TypeSemantics`,
and decides whether two types have the same semantics up to a relabelling of
tensor factors.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from math import prod
from typing import Optional, Sequence

from hoq.subspace_algebra import (
    FactorProfile,
    StringSet,
    complement_in_T,
    delta_of_type,
    normal_form,
    permute,
)
from hoq.type_ast import (
    Arrow,
    Elementary,
    TypeExpr,
    bar,
    factor_dims,
    tensor,
    total_dim,
)

__all__ = [
    "TypeSemantics",
    "EquivalenceVerdict",
    "AlignmentCapExceeded",
    "ALIGNMENT_CAP",
    "lambda_recursive",
    "delta_dimension",
    "upsilon",
    "find_alignment",
    "check_equiv",
    "check_identity",
]

# Permutation search is factorial; above this many non-trivial factors we
# refuse loudly instead of silently answering "not equivalent".
ALIGNMENT_CAP = 8


class AlignmentCapExceeded(ValueError):
    """Equivalence would need a permutation search beyond the supported size."""


def lambda_recursive(x: TypeExpr) -> Fraction:
    """The exact identity coefficient λ_x.

    Elementary layer: 1/d.  Arrow: λ_head / (d_tail · λ_tail).
    """
    if isinstance(x, Elementary):
        return Fraction(1, prod(a.dim for a in x.atoms))
    lam_tail = lambda_recursive(x.tail)
    lam_head = lambda_recursive(x.head)
    d_tail = total_dim(x.tail)
    return lam_head / (d_tail * lam_tail)


def delta_dimension(x: TypeExpr) -> int:
    """Dimension of the fluctuation span of x, without building string sets.

    Satisfies delta_dimension(x) == dim_of_delta(delta_of_type(x),
    factor_dims(x)) but runs in time linear in the tree, so it is usable as a
    cheap pruning key when scanning large families of candidate types.

    Elementary layer of total dimension d contributes d**2 - 1 (zero when the
    layer is trivial).  For an arrow with tail dimension d_t, head dimension
    d_h and child values a_t, a_h:

        a = a_h * (1 + a_t) + d_h**2 * (d_t**2 - 1 - a_t)
    """
    if isinstance(x, Elementary):
        return total_dim(x) ** 2 - 1
    a_tail = delta_dimension(x.tail)
    a_head = delta_dimension(x.head)
    d_tail = total_dim(x.tail)
    d_head = total_dim(x.head)
    return a_head * (1 + a_tail) + d_head**2 * (d_tail**2 - 1 - a_tail)


@dataclass(frozen=True)
class TypeSemantics:
    """Everything membership checks need to know about a type.

    ``lambda_`` is exact (serialized under the key "lambda"); ``delta`` and
    ``dims`` are in normal form (trivial factors dropped); ``total_dim`` is
    the dimension of the full Hilbert space, trivial factors included.
    """

    lambda_: Fraction
    delta: StringSet
    dims: FactorProfile
    total_dim: int


def upsilon(x: TypeExpr) -> TypeSemantics:
    """Compute the semantics triple of a type."""
    delta, dims = normal_form(delta_of_type(x), factor_dims(x))
    return TypeSemantics(
        lambda_=lambda_recursive(x),
        delta=delta,
        dims=dims,
        total_dim=total_dim(x),
    )


@dataclass(frozen=True)
class EquivalenceVerdict:
    """Outcome of check_equiv.

    When ``equivalent`` is true, ``permutation`` is a factor alignment on the
    normal-formed positions: position i of the second type corresponds to
    position permutation[i] of the first, so gathering the first type's index
    data along it reproduces the second's.
    """

    equivalent: bool
    permutation: Optional[tuple[int, ...]]


def _aligns(
    sx: TypeSemantics, sy: TypeSemantics, perm: Sequence[int]
) -> bool:
    if tuple(sy.dims) != tuple(sx.dims.dims[p] for p in perm):
        return False
    return permute(sx.delta, perm) == sy.delta


def find_alignment(
    delta_x: StringSet,
    dims_x: Sequence[int],
    delta_y: StringSet,
    dims_y: Sequence[int],
    cap: int = ALIGNMENT_CAP,
) -> Optional[tuple[int, ...]]:
    """Least permutation carrying (delta_x, dims_x) onto (delta_y, dims_y).

    Gather convention: candidate perm matches when dims_y[i] == dims_x[perm[i]]
    for all i and permute(delta_x, perm) == delta_y.  Identity is tried first;
    None when no alignment exists; :class:`AlignmentCapExceeded` when more
    than ``cap`` positions would have to be searched.
    """
    dims_x = tuple(dims_x)
    dims_y = tuple(dims_y)
    k = len(dims_x)
    if len(dims_y) != k or delta_x.length != k or delta_y.length != k:
        return None
    if dims_x == dims_y and delta_x == delta_y:
        return tuple(range(k))
    if sorted(dims_x) != sorted(dims_y) or len(delta_x) != len(delta_y):
        return None
    if k > cap:
        raise AlignmentCapExceeded(
            f"{k} non-trivial factors exceed the search cap {cap}; "
            f"pass an explicit permutation"
        )
    for cand in permutations(range(k)):
        if dims_y != tuple(dims_x[p] for p in cand):
            continue
        if permute(delta_x, cand) == delta_y:
            return cand
    return None


def check_equiv(
    x: TypeExpr,
    y: TypeExpr,
    perm: Optional[Sequence[int]] = None,
    search: bool = True,
) -> EquivalenceVerdict:
    """Decide x ≡ y: equal λ and matching index data under a factor alignment.

    With an explicit ``perm`` only that alignment is verified.  Otherwise the
    identity alignment is tried first and, when ``search`` is enabled, a
    bounded search over dimension-compatible permutations follows (the
    lexicographically least witness is reported).  More than
    ``ALIGNMENT_CAP`` non-trivial factors without an explicit permutation
    raises :class:`AlignmentCapExceeded` rather than guessing.
    """
    sx = upsilon(x)
    sy = upsilon(y)
    if perm is not None:
        perm = tuple(int(p) for p in perm)
        if sorted(perm) != list(range(len(sx.dims))):
            raise ValueError(
                f"perm must permute range({len(sx.dims)}), got {perm}"
            )
        if len(sy.dims) != len(sx.dims) or sx.lambda_ != sy.lambda_:
            return EquivalenceVerdict(False, None)
        ok = _aligns(sx, sy, perm)
        return EquivalenceVerdict(ok, perm if ok else None)

    if sx.lambda_ != sy.lambda_ or len(sx.dims) != len(sy.dims):
        return EquivalenceVerdict(False, None)
    k = len(sx.dims)
    identity = tuple(range(k))
    if _aligns(sx, sy, identity):
        return EquivalenceVerdict(True, identity)
    if not search:
        return EquivalenceVerdict(False, None)
    found = find_alignment(sx.delta, tuple(sx.dims), sy.delta, tuple(sy.dims))
    return EquivalenceVerdict(found is not None, found)


# --------------------------------------------------------------------------
# named identities
# --------------------------------------------------------------------------


def _expect_arity(name: str, args: Sequence[TypeExpr], n: int) -> None:
    if len(args) != n:
        raise ValueError(f"identity {name!r} takes {n} argument(s), got {len(args)}")


def check_identity(name: str, args: Sequence[TypeExpr]) -> bool:
    """Verify one of the named structural identities on concrete types.

    Supported names:

    - ``involution``        bar(bar(x)) ≡ x
    - ``uncurry``           x→(y→z) ≡ (x⊗y)→z
    - ``tensor_comm``       x⊗y ≡ y⊗x
    - ``tensor_assoc``      (x⊗y)⊗z ≡ x⊗(y⊗z)
    - ``tensor_elem``       A⊗B ≡ AB for elementary layers A, B
    - ``functional_dual``   λ_x̄ = 1/(λ_x·d_x) and Δ_x̄ is the complement of Δ_x

    Unknown names and wrong arities raise ``ValueError``.
    """
    args = list(args)
    if name == "involution":
        _expect_arity(name, args, 1)
        (x,) = args
        return check_equiv(bar(bar(x)), x).equivalent
    if name == "uncurry":
        _expect_arity(name, args, 3)
        x, y, z = args
        return check_equiv(
            Arrow(x, Arrow(y, z)), Arrow(tensor(x, y), z)
        ).equivalent
    if name == "tensor_comm":
        _expect_arity(name, args, 2)
        x, y = args
        return check_equiv(tensor(x, y), tensor(y, x)).equivalent
    if name == "tensor_assoc":
        _expect_arity(name, args, 3)
        x, y, z = args
        return check_equiv(
            tensor(tensor(x, y), z), tensor(x, tensor(y, z))
        ).equivalent
    if name == "tensor_elem":
        _expect_arity(name, args, 2)
        a, b = args
        if not isinstance(a, Elementary) or not isinstance(b, Elementary):
            raise ValueError("tensor_elem needs two elementary layers")
        return check_equiv(tensor(a, b), Elementary(a.atoms + b.atoms)).equivalent
    if name == "functional_dual":
        _expect_arity(name, args, 1)
        (x,) = args
        sx = upsilon(x)
        sb = upsilon(bar(x))
        if sb.lambda_ != 1 / (sx.lambda_ * total_dim(x)):
            return False
        comp, comp_dims = normal_form(
            complement_in_T(delta_of_type(x)), factor_dims(x)
        )
        return sb.delta == comp and tuple(sb.dims) == tuple(comp_dims)
    raise ValueError(f"unknown identity {name!r}")
