"""
Finite S-sorted sets and S-sorted mappings

Elements are opaque identifiers: strings, tuples of elements (product
elements), ``Tagged`` pairs (coproduct elements) or frozensets (filter
members used as indices). All of them are ordered by ``canonical_key`` so
every construction below is deterministic.
"""
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, FrozenSet, Hashable, Iterable, Iterator, Mapping, Optional, Tuple

from .config import settings
from .errors import (
    CapExceeded,
    InvalidMapping,
    InvalidSortedSet,
    NotRefining,
    PartitionMismatch,
    SourceMismatch,
)
from .logging_config import get_logger

logger = get_logger(__name__)

Sort = str
Element = Hashable

# Reserved element of the final sorted set 1^S
STAR = "⋆"


@dataclass(frozen=True)
class Tagged:
    """Element of a coproduct: ``element`` coming from member ``index``"""
    element: Any
    index: Any

    def __repr__(self) -> str:
        return f"({self.element!r},{self.index!r})"


def canonical_key(x: Any) -> tuple:
    """Total order on every kind of element and index used in the package"""
    if isinstance(x, str):
        return (0, x)
    if isinstance(x, tuple):
        return (1, tuple(canonical_key(e) for e in x))
    if isinstance(x, Tagged):
        return (2, canonical_key(x.element), canonical_key(x.index))
    if isinstance(x, frozenset):
        return (3, len(x), tuple(sorted(canonical_key(e) for e in x)))
    raise InvalidSortedSet(f"Unsupported element type {type(x).__name__}: {x!r}")


def canonical_sorted(items: Iterable[Any]) -> Tuple[Any, ...]:
    return tuple(sorted(items, key=canonical_key))


def element_label(x: Any) -> str:
    """Readable rendering used in witnesses and reports"""
    if isinstance(x, str):
        return x
    if isinstance(x, tuple):
        return "(" + ",".join(element_label(e) for e in x) + ")"
    if isinstance(x, Tagged):
        return f"<{element_label(x.element)}@{element_label(x.index)}>"
    if isinstance(x, frozenset):
        return "{" + ",".join(element_label(e) for e in canonical_sorted(x)) + "}"
    return repr(x)


@dataclass(frozen=True, eq=False)
class SortedSet:
    """A = (A_s) over a finite sequence of sorts, carriers in canonical order"""
    sorts: Tuple[Sort, ...]
    carriers: Mapping[Sort, Tuple[Element, ...]] = field(default_factory=dict)

    def __post_init__(self):
        sorts = tuple(self.sorts)
        if len(set(sorts)) != len(sorts):
            raise InvalidSortedSet("Duplicate sort names", {"sorts": list(sorts)})
        unknown = [s for s in self.carriers if s not in sorts]
        if unknown:
            raise InvalidSortedSet(f"Carrier given for unknown sort(s) {unknown}", {"sorts": unknown})
        carriers = {}
        for s in sorts:
            elems = tuple(self.carriers.get(s, ()))
            if len(set(elems)) != len(elems):
                raise InvalidSortedSet(f"Duplicate elements in carrier of sort {s}", {"sort": s})
            carriers[s] = canonical_sorted(elems)
        object.__setattr__(self, "sorts", sorts)
        object.__setattr__(self, "carriers", carriers)

    @classmethod
    def final(cls, sorts: Iterable[Sort]) -> "SortedSet":
        """1^S: one element per sort"""
        sorts = tuple(sorts)
        return cls(sorts, {s: (STAR,) for s in sorts})

    @classmethod
    def initial(cls, sorts: Iterable[Sort]) -> "SortedSet":
        """(∅)_s"""
        return cls(tuple(sorts), {})

    @cached_property
    def _members(self) -> Dict[Sort, FrozenSet[Element]]:
        return {s: frozenset(c) for s, c in self.carriers.items()}

    def carrier(self, s: Sort) -> Tuple[Element, ...]:
        return self.carriers[s]

    def contains(self, s: Sort, x: Element) -> bool:
        return x in self._members.get(s, ())

    def support(self) -> FrozenSet[Sort]:
        return frozenset(s for s in self.sorts if self.carriers[s])

    def is_initial(self) -> bool:
        return not self.support()

    def size(self) -> int:
        return sum(len(c) for c in self.carriers.values())

    def is_subset_of(self, other: "SortedSet") -> bool:
        return self.sorts == other.sorts and all(
            self._members[s] <= other._members[s] for s in self.sorts
        )

    def words(self, word: Iterable[Sort]) -> Iterator[Tuple[Element, ...]]:
        """All tuples of A_w = A_{w0} x ... x A_{wn}"""
        return itertools.product(*(self.carriers[s] for s in word))

    def __eq__(self, other):
        if not isinstance(other, SortedSet):
            return NotImplemented
        return self.sorts == other.sorts and self.carriers == other.carriers

    def __hash__(self):
        return hash((self.sorts, tuple(self.carriers[s] for s in self.sorts)))

    def __repr__(self) -> str:
        body = ", ".join(f"{s}={{{','.join(element_label(e) for e in self.carriers[s])}}}" for s in self.sorts)
        return f"SortedSet({body})"


@dataclass(frozen=True, eq=False)
class SortedMapping:
    """f = (f_s): A -> B given by total per-sort tables"""
    source: SortedSet
    target: SortedSet
    tables: Mapping[Sort, Mapping[Element, Element]]

    def __post_init__(self):
        if self.source.sorts != self.target.sorts:
            raise InvalidMapping("Source and target live over different sorts")
        tables = {}
        for s in self.source.sorts:
            table = dict(self.tables.get(s, {}))
            src = self.source.carrier(s)
            if set(table) != set(src):
                missing = [x for x in src if x not in table]
                extra = [x for x in table if not self.source.contains(s, x)]
                raise InvalidMapping(
                    f"Table at sort {s} is not total on the source carrier",
                    {"sort": s, "missing": [element_label(x) for x in missing],
                     "extra": [element_label(x) for x in extra]},
                )
            for x, y in table.items():
                if not self.target.contains(s, y):
                    raise InvalidMapping(
                        f"Table at sort {s} sends {element_label(x)} outside the target carrier",
                        {"sort": s, "element": element_label(x), "image": element_label(y)},
                    )
            tables[s] = {x: table[x] for x in src}
        object.__setattr__(self, "tables", tables)

    @classmethod
    def identity(cls, A: SortedSet) -> "SortedMapping":
        return cls(A, A, {s: {x: x for x in A.carrier(s)} for s in A.sorts})

    @classmethod
    def from_function(cls, source: SortedSet, target: SortedSet,
                      fn: Callable[[Sort, Element], Element]) -> "SortedMapping":
        return cls(source, target, {s: {x: fn(s, x) for x in source.carrier(s)} for s in source.sorts})

    def __call__(self, s: Sort, x: Element) -> Element:
        return self.tables[s][x]

    def apply_word(self, word: Iterable[Sort], xs: Iterable[Element]) -> Tuple[Element, ...]:
        """f_w on a tuple of A_w"""
        return tuple(self.tables[s][x] for s, x in zip(word, xs))

    def is_injective(self) -> bool:
        return all(len(set(t.values())) == len(t) for t in self.tables.values())

    def is_surjective(self) -> bool:
        return all(set(self.tables[s].values()) == set(self.target.carrier(s)) for s in self.source.sorts)

    def image(self) -> SortedSet:
        return SortedSet(self.source.sorts, {s: set(t.values()) for s, t in self.tables.items()})

    def __eq__(self, other):
        if not isinstance(other, SortedMapping):
            return NotImplemented
        return self.source == other.source and self.target == other.target and self.tables == other.tables

    def __hash__(self):
        return hash((self.source, self.target))


def compose(g: SortedMapping, f: SortedMapping) -> SortedMapping:
    """g ∘ f"""
    if f.target != g.source:
        raise SourceMismatch("Mappings are not composable")
    return SortedMapping(f.source, g.target,
                         {s: {x: g.tables[s][y] for x, y in f.tables[s].items()} for s in f.source.sorts})


@dataclass(frozen=True, eq=False)
class SortedEquivalence:
    """Per-sort partition of a sorted set into blocks"""
    base: SortedSet
    classes: Mapping[Sort, Tuple[Tuple[Element, ...], ...]]

    def __post_init__(self):
        classes = {}
        for s in self.base.sorts:
            blocks = [canonical_sorted(b) for b in self.classes.get(s, ())]
            seen = []
            for b in blocks:
                if not b:
                    raise PartitionMismatch(f"Empty block at sort {s}", {"sort": s})
                seen.extend(b)
            if len(seen) != len(set(seen)) or set(seen) != set(self.base.carrier(s)):
                raise PartitionMismatch(
                    f"Blocks at sort {s} do not partition the carrier",
                    {"sort": s, "blocks": [[element_label(x) for x in b] for b in blocks]},
                )
            classes[s] = tuple(sorted(blocks, key=lambda b: canonical_key(b[0])))
        object.__setattr__(self, "classes", classes)

    @classmethod
    def discrete(cls, A: SortedSet) -> "SortedEquivalence":
        return cls(A, {s: tuple((x,) for x in A.carrier(s)) for s in A.sorts})

    @classmethod
    def total(cls, A: SortedSet) -> "SortedEquivalence":
        return cls(A, {s: ((A.carrier(s)),) if A.carrier(s) else () for s in A.sorts})

    @classmethod
    def from_key(cls, A: SortedSet, key: Callable[[Sort, Element], Hashable]) -> "SortedEquivalence":
        """x ~ y iff key(s, x) == key(s, y)"""
        classes = {}
        for s in A.sorts:
            groups: Dict[Hashable, list] = {}
            for x in A.carrier(s):
                groups.setdefault(key(s, x), []).append(x)
            classes[s] = tuple(tuple(g) for g in groups.values())
        return cls(A, classes)

    @cached_property
    def _rep(self) -> Dict[Sort, Dict[Element, Element]]:
        return {s: {x: b[0] for b in blocks for x in b} for s, blocks in self.classes.items()}

    def rep(self, s: Sort, x: Element) -> Element:
        """Least element of the block of x"""
        return self._rep[s][x]

    def related(self, s: Sort, x: Element, y: Element) -> bool:
        return self._rep[s][x] == self._rep[s][y]

    def refines(self, other: "SortedEquivalence") -> bool:
        """self ⊆ other"""
        return self.base == other.base and all(
            len({other.rep(s, x) for x in b}) == 1 for s in self.base.sorts for b in self.classes[s]
        )

    def __eq__(self, other):
        if not isinstance(other, SortedEquivalence):
            return NotImplemented
        return self.base == other.base and self.classes == other.classes

    def __hash__(self):
        return hash(self.base)


@dataclass(frozen=True, eq=False)
class IndexedFamily:
    """(A^i) for i in a finite index, all over the same sorts"""
    index: Tuple[Any, ...]
    members: Mapping[Any, SortedSet]
    sorts: Optional[Tuple[Sort, ...]] = None

    def __post_init__(self):
        index = canonical_sorted(self.index)
        if set(index) != set(self.members):
            raise InvalidSortedSet("Family members do not match its index")
        sorts = self.sorts
        for i in index:
            if sorts is None:
                sorts = self.members[i].sorts
            elif self.members[i].sorts != tuple(sorts):
                raise InvalidSortedSet(f"Member {element_label(i)} lives over different sorts",
                                       {"index": element_label(i)})
        if sorts is None:
            raise InvalidSortedSet("An empty family needs its sorts")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "sorts", tuple(sorts))
        object.__setattr__(self, "members", {i: self.members[i] for i in index})

    def __getitem__(self, i) -> SortedSet:
        return self.members[i]


def support(A: SortedSet) -> FrozenSet[Sort]:
    """{s | A_s ≠ ∅}"""
    return A.support()


def product(F: IndexedFamily) -> Tuple[SortedSet, Dict[Any, SortedMapping]]:
    """Cartesian product with its projections; the empty product is 1^S"""
    if not F.index:
        return SortedSet.final(F.sorts), {}
    carriers = {s: list(itertools.product(*(F[i].carrier(s) for i in F.index))) for s in F.sorts}
    P = SortedSet(F.sorts, carriers)
    logger.debug("product built", extra={"nodes": P.size()})
    projections = {
        i: SortedMapping.from_function(P, F[i], lambda s, x, pos=pos: x[pos])
        for pos, i in enumerate(F.index)
    }
    return P, projections


def support_of_product_law(F: IndexedFamily) -> bool:
    P, _ = product(F)
    expected = frozenset(F.sorts)
    for i in F.index:
        expected &= F[i].support()
    return P.support() == expected


def coproduct(F: IndexedFamily) -> Tuple[SortedSet, Dict[Any, SortedMapping]]:
    """Disjoint union of tagged pairs (a, i) with the injections"""
    C = SortedSet(F.sorts, {s: [Tagged(x, i) for i in F.index for x in F[i].carrier(s)] for s in F.sorts})
    injections = {i: SortedMapping.from_function(F[i], C, lambda s, x, i=i: Tagged(x, i)) for i in F.index}
    return C, injections


def subset_embedding(X: SortedSet, A: SortedSet) -> SortedMapping:
    return SortedMapping.from_function(X, A, lambda s, x: x)


def equalizer(f: SortedMapping, g: SortedMapping) -> Tuple[SortedSet, SortedMapping]:
    """Eq(f,g) with its canonical embedding"""
    if f.source != g.source or f.target != g.target:
        raise SourceMismatch("Equalizer needs a parallel pair of mappings")
    E = SortedSet(f.source.sorts,
                  {s: [x for x in f.source.carrier(s) if f(s, x) == g(s, x)] for s in f.source.sorts})
    return E, subset_embedding(E, f.source)


def kernel(f: SortedMapping) -> SortedEquivalence:
    return SortedEquivalence.from_key(f.source, f)


def quotient(A: SortedSet, phi: SortedEquivalence) -> Tuple[SortedSet, SortedMapping]:
    """A/Φ, represented by the least element of every block"""
    if phi.base != A:
        raise PartitionMismatch("Equivalence is not a partition of this sorted set")
    Q = SortedSet(A.sorts, {s: [b[0] for b in phi.classes[s]] for s in A.sorts})
    return Q, SortedMapping.from_function(A, Q, phi.rep)


def factor_through(f: SortedMapping, phi: SortedEquivalence) -> SortedMapping:
    """The unique p: A/Φ -> B with f = p ∘ pr"""
    if phi.base != f.source:
        raise SourceMismatch("Equivalence lives on a different sorted set")
    Q, _ = quotient(f.source, phi)
    tables = {}
    for s in f.source.sorts:
        table = {}
        for block in phi.classes[s]:
            images = {f(s, x) for x in block}
            if len(images) != 1:
                raise NotRefining(
                    f"Block at sort {s} is sent to several elements",
                    {"sort": s, "block": [element_label(x) for x in block],
                     "images": [element_label(y) for y in canonical_sorted(images)]},
                )
            table[block[0]] = images.pop()
        tables[s] = table
    return SortedMapping(Q, f.target, tables)


def hom_exists(A: SortedSet, B: SortedSet) -> bool:
    """Hom(A,B) is nonempty iff supp(A) ⊆ supp(B)"""
    if A.sorts != B.sorts:
        raise SourceMismatch("Sorted sets live over different sorts")
    return A.support() <= B.support()


def constant_support_check(F: IndexedFamily) -> bool:
    return len({F[i].support() for i in F.index}) <= 1


def mapping_count(A: SortedSet, B: SortedSet) -> int:
    return math.prod(len(B.carrier(s)) ** len(A.carrier(s)) for s in A.sorts)


def enumerate_mappings(A: SortedSet, B: SortedSet, cap: Optional[int] = None) -> Iterator[SortedMapping]:
    """Every sorted mapping A -> B, in canonical order (brute-force oracle)"""
    cap = settings.HOM_ENUM_CAP if cap is None else cap
    count = mapping_count(A, B)
    if count > cap:
        raise CapExceeded(f"{count} mappings exceed the enumeration cap {cap}", {"count": count, "cap": cap})
    per_sort = [
        [dict(zip(A.carrier(s), images)) for images in itertools.product(B.carrier(s), repeat=len(A.carrier(s)))]
        for s in A.sorts
    ]
    for choice in itertools.product(*per_sort):
        yield SortedMapping(A, B, dict(zip(A.sorts, choice)))
