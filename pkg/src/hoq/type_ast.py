"""Core type language for higher-order quantum maps.

A *type* names a convex set of operators (events) on a tensor product of
finite-dimensional Hilbert spaces.  Types are built from dimension-labelled
atoms by grouping (tensor juxtaposition inside an elementary layer) and the
arrow constructor ``x -> y`` (maps from events of type ``x`` to events of
type ``y``).

Concrete syntax::

    type      := term ("->" type)?          # right associative
    term      := atomgroup | "(" type ")"
    atomgroup := atom ("*" atom)*
    atom      := IDENT (":" INT)? | "I"

Whitespace is insignificant.  An atom without an explicit dimension defaults
to dimension 2.  The label ``I`` is reserved for the trivial (one-dimensional)
system: it never takes an annotation, and no other label may carry dimension
one.  The canonical printer emits no whitespace, spells every dimension except
the trivial one, parenthesizes every arrow that occurs as a subterm and omits
the outermost pair, e.g. ``(A:2->B:2)->C:2``.  ``parse_type`` and
``print_canonical`` are mutually inverse on canonical strings.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Sequence, Union

__all__ = [
    "Atom",
    "Elementary",
    "Arrow",
    "TypeExpr",
    "Star",
    "Trivial",
    "StructureArrow",
    "TypeStructure",
    "ParseError",
    "TRIVIAL_LABEL",
    "parse_type",
    "print_canonical",
    "print_structure",
    "factor_dims",
    "atoms_in_order",
    "total_dim",
    "type_depth",
    "extend_by",
    "bar",
    "tensor",
    "make_comb",
    "precedes",
    "natural_structure",
    "belongs_to",
    "k_exponents",
]

TRIVIAL_LABEL = "I"


class ParseError(ValueError):
    """Raised when a type string violates the grammar.

    Carries the zero-based character ``position`` at which the problem was
    detected, so the CLI can point at the offending character.
    """

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class Atom:
    """One elementary system: a label and a Hilbert-space dimension.

    The trivial system is exactly ``Atom("I", 1)``; the invariant
    ``dim == 1  <=>  label == "I"`` keeps the canonical printer total
    (a one-dimensional atom always prints as ``I``).
    """

    label: str
    dim: int = 2

    def __post_init__(self) -> None:
        if not self.label or not self.label[0].isalpha() or not all(
            c.isalnum() or c == "_" for c in self.label
        ):
            raise ValueError(f"bad atom label {self.label!r}")
        if self.dim < 1:
            raise ValueError(f"atom dimension must be >= 1, got {self.dim}")
        if (self.dim == 1) != (self.label == TRIVIAL_LABEL):
            raise ValueError(
                f"label {self.label!r} with dim {self.dim}: dimension 1 is "
                f"reserved for the trivial label {TRIVIAL_LABEL!r} and vice versa"
            )

    def __str__(self) -> str:
        if self.dim == 1:
            return TRIVIAL_LABEL
        return f"{self.label}:{self.dim}"


@dataclass(frozen=True)
class Elementary:
    """An elementary layer: a nonempty group of atoms, written A:2*B:3."""

    atoms: tuple[Atom, ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ValueError("elementary type needs at least one atom")

    def __str__(self) -> str:
        return print_canonical(self)


@dataclass(frozen=True)
class Arrow:
    """The map type ``tail -> head``."""

    tail: "TypeExpr"
    head: "TypeExpr"

    def __str__(self) -> str:
        return print_canonical(self)


TypeExpr = Union[Elementary, Arrow]


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

_SIMPLE_TOKENS = {"*": "STAR", "(": "LPAREN", ")": "RPAREN", ":": "COLON"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens: list[tuple[str, str, int]] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if text.startswith("->", i):
            tokens.append(("ARROW", "->", i))
            i += 2
            continue
        if c in _SIMPLE_TOKENS:
            tokens.append((_SIMPLE_TOKENS[c], c, i))
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(("INT", text[i:j], i))
            i = j
            continue
        if c.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("IDENT", text[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("END", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self, kind: str) -> tuple[str, str, int]:
        tok = self.tokens[self.pos]
        if tok[0] != kind:
            raise ParseError(f"expected {kind}, found {tok[1]!r}", tok[2])
        self.pos += 1
        return tok

    def parse_type(self) -> TypeExpr:
        left = self.parse_term()
        if self.peek()[0] == "ARROW":
            self.take("ARROW")
            right = self.parse_type()  # right associative
            return Arrow(left, right)
        return left

    def parse_term(self) -> TypeExpr:
        kind, _, _ = self.peek()
        if kind == "LPAREN":
            self.take("LPAREN")
            inner = self.parse_type()
            self.take("RPAREN")
            return inner
        return self.parse_atomgroup()

    def parse_atomgroup(self) -> Elementary:
        atoms = [self.parse_atom()]
        while self.peek()[0] == "STAR":
            self.take("STAR")
            atoms.append(self.parse_atom())
        return Elementary(tuple(atoms))

    def parse_atom(self) -> Atom:
        kind, label, pos = self.take("IDENT")
        if label == TRIVIAL_LABEL:
            if self.peek()[0] == "COLON":
                raise ParseError(
                    f"the trivial system {TRIVIAL_LABEL!r} takes no dimension",
                    self.peek()[2],
                )
            return Atom(TRIVIAL_LABEL, 1)
        dim = 2
        if self.peek()[0] == "COLON":
            self.take("COLON")
            _, digits, dpos = self.take("INT")
            dim = int(digits)
            if dim < 2:
                raise ParseError(
                    f"dimension {dim} not allowed for {label!r}; dimension 1 "
                    f"is written {TRIVIAL_LABEL!r}",
                    dpos,
                )
        return Atom(label, dim)


def parse_type(text: str) -> TypeExpr:
    """Parse the concrete syntax into a type expression.

    Raises :class:`ParseError` (a ``ValueError``) on malformed input, with
    the offending character position attached.
    """
    parser = _Parser(text)
    expr = parser.parse_type()
    kind, value, pos = parser.peek()
    if kind != "END":
        raise ParseError(f"trailing input {value!r}", pos)
    return expr


def print_canonical(x: TypeExpr) -> str:
    """Render canonically: no spaces, inner arrows parenthesized.

    ``parse_type(print_canonical(x)) == x`` for every type expression, and
    ``print_canonical(parse_type(s)) == s`` for canonical strings ``s``.
    """
    if isinstance(x, Elementary):
        return "*".join(str(a) for a in x.atoms)
    if isinstance(x, Arrow):
        def wrap(sub: TypeExpr) -> str:
            rendered = print_canonical(sub)
            return f"({rendered})" if isinstance(sub, Arrow) else rendered

        return f"{wrap(x.tail)}->{wrap(x.head)}"
    raise TypeError(f"not a type expression: {x!r}")


# --------------------------------------------------------------------------
# structural queries
# --------------------------------------------------------------------------


def atoms_in_order(x: TypeExpr) -> tuple[Atom, ...]:
    """All atom occurrences in order: tails before heads, groups left to right."""
    if isinstance(x, Elementary):
        return x.atoms
    return atoms_in_order(x.tail) + atoms_in_order(x.head)


def factor_dims(x: TypeExpr) -> tuple[int, ...]:
    """Dimension of every atom occurrence, in factor order (trivial ones included)."""
    return tuple(a.dim for a in atoms_in_order(x))


def total_dim(x: TypeExpr) -> int:
    """Dimension of the full Hilbert space carrying events of type ``x``."""
    return prod(factor_dims(x))


def type_depth(x: TypeExpr) -> int:
    """Tree depth: an elementary layer has depth 1, an arrow 1 + max of its sides."""
    if isinstance(x, Elementary):
        return 1
    return 1 + max(type_depth(x.tail), type_depth(x.head))


def precedes(x: TypeExpr, y: TypeExpr) -> bool:
    """Strict subterm order: transitive closure of "is the tail or head of".

    ``precedes(y, Arrow(y, z))`` is true; no type precedes an elementary
    layer; the order is irreflexive.
    """
    if isinstance(y, Arrow):
        return (
            x == y.tail
            or x == y.head
            or precedes(x, y.tail)
            or precedes(x, y.head)
        )
    return False


# --------------------------------------------------------------------------
# constructors derived from the base language
# --------------------------------------------------------------------------


def extend_by(x: TypeExpr, extra: Atom) -> TypeExpr:
    """Adjoin a bystander system to the innermost output layer.

    For an elementary layer the atom is appended to the group; for an arrow
    the extension recurses into the head, so the new atom always lands on the
    final output and is the last factor in print order.
    """
    if isinstance(x, Elementary):
        return Elementary(x.atoms + (extra,))
    return Arrow(x.tail, extend_by(x.head, extra))


def bar(x: TypeExpr) -> TypeExpr:
    """The functional (dual) type ``x -> I``."""
    return Arrow(x, Elementary((Atom(TRIVIAL_LABEL, 1),)))


def tensor(x: TypeExpr, y: TypeExpr) -> TypeExpr:
    """Parallel composition, defined through double dualization: (x -> ȳ)̄ ."""
    return bar(Arrow(x, bar(y)))


def make_comb(bases: Sequence[TypeExpr]) -> TypeExpr:
    """Left-nested hierarchy over the given teeth.

    ``make_comb([x1])`` is ``x1``; ``make_comb([x1, .., xn])`` is
    ``((..(x1 -> x2) ..) -> xn)``.  An empty list is an error.
    """
    if not bases:
        raise ValueError("make_comb needs at least one base type")
    expr: TypeExpr = bases[0]
    for tooth in bases[1:]:
        expr = Arrow(expr, tooth)
    return expr


# --------------------------------------------------------------------------
# type structures (dimension-agnostic skeletons)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Star:
    """A non-trivial elementary slot in a type structure."""

    def __str__(self) -> str:
        return "*"


@dataclass(frozen=True)
class Trivial:
    """A trivial (dimension-one) slot in a type structure."""

    def __str__(self) -> str:
        return TRIVIAL_LABEL


@dataclass(frozen=True)
class StructureArrow:
    """Arrow node of a type structure."""

    tail: "TypeStructure"
    head: "TypeStructure"

    def __str__(self) -> str:
        return print_structure(self)


TypeStructure = Union[Star, Trivial, StructureArrow]


def print_structure(s: TypeStructure) -> str:
    """Canonical rendering of a structure, mirroring :func:`print_canonical`."""
    if isinstance(s, (Star, Trivial)):
        return str(s)
    if isinstance(s, StructureArrow):
        def wrap(sub: TypeStructure) -> str:
            rendered = print_structure(sub)
            return f"({rendered})" if isinstance(sub, StructureArrow) else rendered

        return f"{wrap(s.tail)}->{wrap(s.head)}"
    raise TypeError(f"not a type structure: {s!r}")


def natural_structure(x: TypeExpr) -> TypeStructure:
    """Forget dimensions: each non-trivial atom group becomes ``*``.

    A group consisting entirely of trivial atoms stays ``I``; arrows are kept.
    Example: ``(A->I)->((C->D)->(F->I))`` maps to ``(*->I)->((*->*)->(*->I))``.
    """
    if isinstance(x, Elementary):
        if any(a.dim > 1 for a in x.atoms):
            return Star()
        return Trivial()
    return StructureArrow(natural_structure(x.tail), natural_structure(x.head))


def belongs_to(x: TypeExpr, s: TypeStructure) -> bool:
    """Does ``x`` instantiate the structure ``s``?

    Substitution check: stars accept any group with a non-trivial atom,
    trivial slots accept all-trivial groups, arrows must match arrows.
    """
    if isinstance(s, Star):
        return isinstance(x, Elementary) and any(a.dim > 1 for a in x.atoms)
    if isinstance(s, Trivial):
        return isinstance(x, Elementary) and all(a.dim == 1 for a in x.atoms)
    return (
        isinstance(x, Arrow)
        and belongs_to(x.tail, s.tail)
        and belongs_to(x.head, s.head)
    )


def k_exponents(x: TypeExpr) -> tuple[int, ...]:
    """Exponent pattern of the identity-coefficient closed form.

    Returns one bit per atom occurrence (factor order) such that
    ``prod(d_i ** -k_i) == lambda(x)`` exactly.  Equivalently: in the
    canonical rendering, k_i = (number of "->" plus "(" strictly to the
    right of atom i, plus one) mod 2.  Computed structurally: every atom of
    an elementary layer carries 1; an arrow flips the tail's exponents and
    keeps the head's.
    """
    if isinstance(x, Elementary):
        return (1,) * len(x.atoms)
    flipped = tuple(1 - k for k in k_exponents(x.tail))
    return flipped + k_exponents(x.head)
