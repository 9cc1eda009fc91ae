"""Domain types, instance validation and the dominance DAG."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import (
    EmptyInstance,
    InstanceFormatError,
    NegativeGap,
    NonPositiveGain,
    TreeSizeOverflow,
)

#: Absorbing "no tree closes the gap" value. It compares greater than any
#: finite count and survives ``1 + a + b``.
INFEASIBLE = math.inf

#: Largest representable tree size (unsigned 128-bit).
MAX_TREE_SIZE = (1 << 128) - 1


def checked_size(count, limit=MAX_TREE_SIZE):
    """Return ``count`` unchanged, raising if it exceeds ``limit``.

    ``limit=None`` disables the guard (Python ints never wrap).
    """
    if limit is not None and count != INFEASIBLE and count > limit:
        raise TreeSizeOverflow(
            f"tree size exceeds the {limit.bit_length()}-bit range ({count.bit_length()} bits)"
        )
    return count


def is_feasible(size) -> bool:
    return size != INFEASIBLE


@dataclass(frozen=True)
class Variable:
    """A branching variable with gains ``1 <= l <= r``.

    Gains passed in the wrong order are swapped.
    """

    l: int
    r: int

    def __post_init__(self):
        l, r = self.l, self.r
        if isinstance(l, bool) or isinstance(r, bool) or int(l) != l or int(r) != r:
            raise NonPositiveGain(f"gains must be integers, got ({l!r}, {r!r})")
        l, r = int(l), int(r)
        if l < 1 or r < 1:
            raise NonPositiveGain(f"gains must be >= 1, got ({l}, {r})")
        if l > r:
            l, r = r, l
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "r", r)

    def __iter__(self):
        yield self.l
        yield self.r

    def __str__(self):
        return f"({self.l},{self.r})"


def as_variable(v) -> Variable:
    if isinstance(v, Variable):
        return v
    l, r = v
    return Variable(l, r)


@dataclass(frozen=True)
class Instance:
    variables: tuple[Variable, ...]
    multiplicities: tuple[int, ...]
    gap: int

    def __post_init__(self):
        if not self.variables:
            raise EmptyInstance("an instance needs at least one variable")
        if len(self.multiplicities) != len(self.variables):
            raise ValueError("one multiplicity per variable is required")
        if any(m < 0 for m in self.multiplicities):
            raise ValueError("multiplicities must be non-negative")
        if self.gap < 0:
            raise NegativeGap(f"gap must be >= 0, got {self.gap}")

    @property
    def n(self) -> int:
        return len(self.variables)

    def with_gap(self, gap: int) -> Instance:
        return Instance(self.variables, self.multiplicities, gap)

    def without(self, index: int) -> Instance:
        keep = [i for i in range(self.n) if i != index]
        return Instance(
            tuple(self.variables[i] for i in keep),
            tuple(self.multiplicities[i] for i in keep),
            self.gap,
        )


def validate_instance(raw: Iterable[Sequence[int]], gap: int) -> Instance:
    """Build a canonical :class:`Instance` from ``(l, r, m)`` triples."""
    raw = list(raw)
    if not raw:
        raise EmptyInstance("an instance needs at least one variable")
    if gap < 0:
        raise NegativeGap(f"gap must be >= 0, got {gap}")
    variables = []
    mults = []
    for item in raw:
        if len(item) == 2:
            l, r = item
            m = 1
        else:
            l, r, m = item
        variables.append(Variable(l, r))
        mults.append(int(m))
    return Instance(tuple(variables), tuple(mults), int(gap))


def parse_instance(text: str) -> Instance:
    """Parse the text format: ``gap G`` followed by ``l r m`` lines."""
    gap = None
    raw = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if gap is None:
            if len(parts) != 2 or parts[0] != "gap":
                raise InstanceFormatError(f"line {lineno}: expected 'gap G' header")
            gap = _parse_int(parts[1], lineno)
            continue
        if len(parts) != 3:
            raise InstanceFormatError(f"line {lineno}: expected 'l r m'")
        raw.append(tuple(_parse_int(p, lineno) for p in parts))
    if gap is None:
        raise InstanceFormatError("missing 'gap G' header")
    return validate_instance(raw, gap)


def _parse_int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise InstanceFormatError(f"line {lineno}: not an integer: {token!r}") from None


def format_instance(inst: Instance) -> str:
    lines = [f"gap {inst.gap}"]
    lines += [f"{v.l} {v.r} {m}" for v, m in zip(inst.variables, inst.multiplicities)]
    return "\n".join(lines) + "\n"


def read_instance(path) -> Instance:
    with open(path) as fh:
        return parse_instance(fh.read())


def write_instance(inst: Instance, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_instance(inst))


def dominates(a, b) -> bool:
    """True iff ``a`` is componentwise >= ``b`` and strictly better somewhere."""
    al, ar = a
    bl, br = b
    return al >= bl and ar >= br and (al > bl or ar > br)


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class DominanceDag:
    """Dominance order over variable indices, stored as bitmask adjacency.

    ``full[u]`` has bit ``v`` set iff ``u`` dominates ``v``. ``reduced`` is the
    transitive reduction of ``full``; ``reduced_pred[v]`` holds the immediate
    dominators of ``v``.
    """

    n: int
    full: tuple[int, ...]
    reduced: tuple[int, ...]
    reduced_pred: tuple[int, ...] = field(repr=False)
    indegree: tuple[int, ...] = field(repr=False)

    def full_edges(self) -> set[tuple[int, int]]:
        return {(u, v) for u in range(self.n) for v in _bits(self.full[u])}

    def reduced_edges(self) -> set[tuple[int, int]]:
        return {(u, v) for u in range(self.n) for v in _bits(self.reduced[u])}

    def roots(self) -> int:
        """Bitmask of variables no other variable dominates."""
        return sum(1 << v for v in range(self.n) if self.indegree[v] == 0)

    def to_dot(self, variables=None, name: str = "dominance") -> str:
        lines = [f"digraph {name} {{", "  rankdir=TB;"]
        for v in range(self.n):
            if variables is None:
                label = f"{v}"
            else:
                l, r = variables[v]
                label = f"{v}: ({l},{r})"
            lines.append(f'  n{v} [label="{label}"];')
        for u, v in sorted(self.reduced_edges()):
            lines.append(f"  n{u} -> n{v};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def transitive_closure(adj: Sequence[int]) -> list[int]:
    """Reachability bitmasks of a DAG given as successor bitmasks."""
    n = len(adj)
    closure = list(adj)
    # Floyd-Warshall over bitmasks.
    for k in range(n):
        bit = 1 << k
        reach_k = closure[k]
        for u in range(n):
            if closure[u] & bit:
                closure[u] |= reach_k
    return closure


def build_dominance_dag(variables) -> DominanceDag:
    pairs = [tuple(v) for v in variables]
    n = len(pairs)
    full = [0] * n
    for u in range(n):
        for v in range(n):
            if dominates(pairs[u], pairs[v]):
                full[u] |= 1 << v
    reduced = []
    for u in range(n):
        implied = 0
        for w in _bits(full[u]):
            implied |= full[w]
        reduced.append(full[u] & ~implied)
    pred = [0] * n
    for u in range(n):
        for v in _bits(reduced[u]):
            pred[v] |= 1 << u
    indegree = tuple(p.bit_count() for p in pred)
    return DominanceDag(n, tuple(full), tuple(reduced), tuple(pred), indegree)
