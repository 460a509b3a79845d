"""
Directed preorders, filters and ultrafilters on finite grounds, co-optimal
lifts and the Uffs construction

Subsets of a ground are bitsets over the ground's canonical order.
"""
import itertools
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Any, Callable, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .config import settings
from .errors import CapExceeded, InvalidFilter, InvalidMap, InvalidPreorder, NotABasis, NotAUffsMorphism
from .logging_config import get_logger
from .sorted_core import canonical_key, canonical_sorted, element_label

logger = get_logger(__name__)

Index = Any
Chooser = Callable[[Sequence[Index]], Index]


@dataclass(frozen=True, eq=False)
class Preorder:
    """(I, ≤): nonempty, reflexive, transitive and upward directed"""
    elems: Tuple[Index, ...]
    le: FrozenSet[Tuple[Index, Index]]

    def __post_init__(self):
        elems = canonical_sorted(self.elems)
        if not elems:
            raise InvalidPreorder("A preorder needs at least one element")
        if len(set(elems)) != len(elems):
            raise InvalidPreorder("Duplicate preorder elements")
        le = frozenset(self.le)
        members = set(elems)
        for i, j in le:
            if i not in members or j not in members:
                raise InvalidPreorder(f"Pair ({element_label(i)}, {element_label(j)}) uses unknown elements",
                                      {"pair": [element_label(i), element_label(j)]})
        for i in elems:
            if (i, i) not in le:
                raise InvalidPreorder(f"Not reflexive at {element_label(i)}", {"element": element_label(i)})
        closure = _transitive_closure(elems, le)
        missing = canonical_sorted(closure - le)
        if missing:
            i, j = missing[0]
            raise InvalidPreorder(f"Not transitive: {element_label(i)} ≤ {element_label(j)} is implied but absent",
                                  {"pair": [element_label(i), element_label(j)]})
        for i, j in itertools.combinations(elems, 2):
            if not any((i, k) in le and (j, k) in le for k in elems):
                raise InvalidPreorder(f"Not directed: {element_label(i)} and {element_label(j)} have no upper bound",
                                      {"pair": [element_label(i), element_label(j)]})
        object.__setattr__(self, "elems", elems)
        object.__setattr__(self, "le", le)

    @classmethod
    def generated(cls, elems: Iterable[Index], pairs: Iterable[Tuple[Index, Index]]) -> "Preorder":
        """Reflexive-transitive closure of ``pairs``, then validated"""
        elems = canonical_sorted(set(elems))
        le = set(pairs) | {(i, i) for i in elems}
        return cls(elems, frozenset(_transitive_closure(elems, le)))

    @classmethod
    def chain(cls, elems: Sequence[Index]) -> "Preorder":
        """elems[0] ≤ elems[1] ≤ ..."""
        return cls.generated(elems, zip(elems, elems[1:]))

    @cached_property
    def position(self) -> Dict[Index, int]:
        return {i: n for n, i in enumerate(self.elems)}

    def leq(self, i: Index, j: Index) -> bool:
        return (i, j) in self.le

    def up(self, i: Index) -> FrozenSet[Index]:
        """Final section ↑i"""
        return frozenset(j for j in self.elems if (i, j) in self.le)

    def down(self, i: Index) -> FrozenSet[Index]:
        return frozenset(j for j in self.elems if (j, i) in self.le)

    def upper_bounds(self, indices: Iterable[Index]) -> Tuple[Index, ...]:
        indices = list(indices)
        return tuple(k for k in self.elems if all((i, k) in self.le for i in indices))

    @cached_property
    def tops(self) -> Tuple[Index, ...]:
        """Indices above every index"""
        return self.upper_bounds(self.elems)

    def minimal(self, indices: Iterable[Index]) -> Tuple[Index, ...]:
        indices = list(indices)
        return tuple(k for k in indices if not any((j, k) in self.le and (k, j) not in self.le for j in indices))

    def upper_bound(self, indices: Iterable[Index], chooser: Optional[Chooser] = None) -> Index:
        """A common upper bound: by default the least minimal one in canonical order"""
        candidates = self.minimal(self.upper_bounds(indices))
        if chooser is None:
            return candidates[0]
        return chooser(candidates)

    def restrict(self, subset: Iterable[Index]) -> "Preorder":
        subset = set(subset)
        return Preorder(tuple(subset), frozenset((i, j) for i, j in self.le if i in subset and j in subset))

    def covers(self) -> List[Tuple[Index, Index]]:
        """Generating pairs: i < j with nothing strictly between, plus every pair of distinct equivalent indices"""
        strict = {(i, j) for i, j in self.le if (j, i) not in self.le}
        result = []
        for i, j in canonical_sorted(p for p in self.le if p[0] != p[1]):
            if (i, j) not in strict or not any((i, k) in strict and (k, j) in strict for k in self.elems):
                result.append((i, j))
        return result

    def __eq__(self, other):
        if not isinstance(other, Preorder):
            return NotImplemented
        return self.elems == other.elems and self.le == other.le

    def __hash__(self):
        return hash((self.elems, self.le))


def _transitive_closure(elems: Sequence[Index], le) -> set:
    """Warshall"""
    closure = set(le)
    for k in elems:
        for i in elems:
            if (i, k) not in closure:
                continue
            for j in elems:
                if (k, j) in closure:
                    closure.add((i, j))
    return closure


class Ground:
    """Bitset encoding of the subsets of a finite ground"""

    def __init__(self, elems: Iterable[Index]):
        self.elems = canonical_sorted(set(elems))
        if len(self.elems) > settings.FILTER_GROUND_CAP:
            raise CapExceeded(f"Ground of size {len(self.elems)} exceeds the cap {settings.FILTER_GROUND_CAP}",
                              {"size": len(self.elems), "cap": settings.FILTER_GROUND_CAP})
        self.bit = {i: 1 << n for n, i in enumerate(self.elems)}
        self.full = (1 << len(self.elems)) - 1

    def mask(self, subset: Iterable[Index]) -> int:
        try:
            return reduce(lambda m, i: m | self.bit[i], subset, 0)
        except KeyError as e:
            raise InvalidFilter(f"{element_label(e.args[0])} is not in the ground") from None

    def subset(self, mask: int) -> FrozenSet[Index]:
        return frozenset(i for i in self.elems if mask & self.bit[i])

    def supersets(self, mask: int) -> Iterator[int]:
        free = self.full & ~mask
        sub = free
        while True:
            yield mask | sub
            if sub == 0:
                return
            sub = (sub - 1) & free

    def __eq__(self, other):
        return isinstance(other, Ground) and self.elems == other.elems

    def __hash__(self):
        return hash(self.elems)


class Filter:
    """Filter on a finite ground: explicit member set of bitsets"""

    def __init__(self, ground: Union[Ground, Iterable[Index]], members: Iterable[Union[int, Iterable[Index]]]):
        self.ground = ground if isinstance(ground, Ground) else Ground(ground)
        masks = set()
        for m in members:
            masks.add(m if isinstance(m, int) else self.ground.mask(m))
        self.masks: FrozenSet[int] = frozenset(masks)
        self._validate()

    def _validate(self) -> None:
        g = self.ground
        if g.full not in self.masks:
            raise InvalidFilter("The ground is not a member")
        if 0 in self.masks:
            raise InvalidFilter("The empty set is a member")
        for m in self.masks:
            for bit in g.bit.values():
                if not m & bit and (m | bit) not in self.masks:
                    raise InvalidFilter("Not closed under supersets",
                                        {"member": element_label(g.subset(m)),
                                         "missing": element_label(g.subset(m | bit))})
        # an upward-closed finite family is intersection-closed iff it holds its core
        core = reduce(lambda a, b: a & b, self.masks, g.full)
        if core not in self.masks:
            raise InvalidFilter("Not closed under intersections", {"core": element_label(g.subset(core))})

    @property
    def elems(self) -> Tuple[Index, ...]:
        return self.ground.elems

    @cached_property
    def core(self) -> FrozenSet[Index]:
        """Intersection of all members"""
        return self.ground.subset(reduce(lambda a, b: a & b, self.masks, self.ground.full))

    @cached_property
    def members(self) -> Tuple[FrozenSet[Index], ...]:
        return canonical_sorted(self.ground.subset(m) for m in self.masks)

    def contains(self, subset: Iterable[Index]) -> bool:
        return self.ground.mask(subset) in self.masks

    __contains__ = contains

    def includes(self, other: "Filter") -> bool:
        return self.ground == other.ground and other.masks <= self.masks

    def label(self) -> str:
        return f"principal{element_label(self.core)}"

    def __eq__(self, other):
        if not isinstance(other, Filter):
            return NotImplemented
        return self.ground == other.ground and self.masks == other.masks

    def __hash__(self):
        return hash((self.ground, self.masks))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(ground={element_label(frozenset(self.elems))}, core={element_label(self.core)})"


class Ultrafilter(Filter):
    """Maximal filter; on a finite ground it is principal at ``principal_point``"""

    def __init__(self, ground, members):
        super().__init__(ground, members)
        if len(self.core) != 1:
            raise InvalidFilter("Filter is not maximal", {"core": element_label(self.core)})
        self.principal_point = next(iter(self.core))

    @classmethod
    def principal(cls, ground: Union[Ground, Iterable[Index]], point: Index) -> "Ultrafilter":
        g = ground if isinstance(ground, Ground) else Ground(ground)
        if point not in g.bit:
            raise InvalidFilter(f"{element_label(point)} is not in the ground")
        return cls(g, g.supersets(g.bit[point]))

    def label(self) -> str:
        return f"principal {element_label(self.principal_point)}"


def principal_filter(ground, subset: Iterable[Index]) -> Filter:
    """{X | J ⊆ X}"""
    g = ground if isinstance(ground, Ground) else Ground(ground)
    mask = g.mask(subset)
    if mask == 0:
        raise InvalidFilter("A principal filter needs a nonempty generator")
    return Filter(g, g.supersets(mask))


def trivial_filter(ground) -> Filter:
    g = ground if isinstance(ground, Ground) else Ground(ground)
    return Filter(g, [g.full])


def final_sections_basis(I: Preorder) -> List[FrozenSet[Index]]:
    """{↑i | i ∈ I}"""
    return canonical_sorted({I.up(i) for i in I.elems})


def is_filter_basis(basis: Iterable[Iterable[Index]], ground) -> bool:
    g = ground if isinstance(ground, Ground) else Ground(ground)
    masks = {g.mask(b) for b in basis}
    if not masks or 0 in masks:
        return False
    return all(any(c & ~(a & b) == 0 for c in masks) for a in masks for b in masks)


def filter_from_basis(basis: Iterable[Iterable[Index]], ground) -> Filter:
    """Upward closure of a filter basis"""
    basis = list(basis)
    g = ground if isinstance(ground, Ground) else Ground(ground)
    if not is_filter_basis(basis, g):
        raise NotABasis("Not a filter basis (empty, contains ∅, or some pair has no member below it)")
    members = set()
    for b in basis:
        members.update(g.supersets(g.mask(b)))
    return Filter(g, members)


def frechet_filter(I: Preorder) -> Filter:
    """Filter of the final sections {J | ∃i ↑i ⊆ J}"""
    return filter_from_basis(final_sections_basis(I), I.elems)


def is_ultrafilter(F: Filter) -> bool:
    """J ∈ F or I∖J ∈ F for every J"""
    full = F.ground.full
    return all(m in F.masks or (full & ~m) in F.masks for m in range(full + 1))


def ultrafilters_containing(F: Filter) -> List[Ultrafilter]:
    """All ultrafilters extending F: principal at each point of its core"""
    return [Ultrafilter.principal(F.ground, p) for p in canonical_sorted(F.core)]


def _is_filter_mask_family(masks: FrozenSet[int], full: int) -> bool:
    if full not in masks or 0 in masks:
        return False
    for a in masks:
        for b in masks:
            if (a & b) not in masks:
                return False
    n = full.bit_length()
    return all((m | (1 << k)) in masks for m in masks for k in range(n))


def enumerate_filters(ground) -> List[Filter]:
    """Every filter on the ground by exhaustive search over set families"""
    g = ground if isinstance(ground, Ground) else Ground(ground)
    if len(g.elems) > 4:
        raise CapExceeded("Exhaustive filter enumeration is limited to grounds of size 4", {"size": len(g.elems)})
    proper = [m for m in range(1, g.full)]
    found = []
    for choice in itertools.product((False, True), repeat=len(proper)):
        masks = frozenset([g.full] + [m for m, keep in zip(proper, choice) if keep])
        if _is_filter_mask_family(masks, g.full):
            found.append(Filter(g, masks))
    return found


def brute_force_ultrafilters(F: Filter) -> List[FrozenSet[FrozenSet[Index]]]:
    """Maximal filters containing F, as member sets, by enumeration"""
    above = [G for G in enumerate_filters(F.ground) if G.includes(F)]
    maximal = [G for G in above if not any(H.masks > G.masks for H in above)]
    return sorted((frozenset(G.members) for G in maximal), key=canonical_key)


@dataclass(frozen=True, eq=False)
class IsotoneMap:
    """Order-preserving map between preorders"""
    source: Preorder
    target: Preorder
    table: Mapping[Index, Index]

    def __post_init__(self):
        table = dict(self.table)
        if set(table) != set(self.source.elems):
            raise InvalidMap("Map is not total on the source")
        for i, p in table.items():
            if p not in self.target.position:
                raise InvalidMap(f"{element_label(i)} is sent outside the target", {"index": element_label(i)})
        for i, j in self.source.le:
            if not self.target.leq(table[i], table[j]):
                raise InvalidMap(f"Not isotone at {element_label(i)} ≤ {element_label(j)}",
                                 {"pair": [element_label(i), element_label(j)]})
        object.__setattr__(self, "table", {i: table[i] for i in self.source.elems})

    @classmethod
    def identity(cls, I: Preorder) -> "IsotoneMap":
        return cls(I, I, {i: i for i in I.elems})

    @classmethod
    def inclusion(cls, I: Preorder, P: Preorder) -> "IsotoneMap":
        return cls(I, P, {i: i for i in I.elems})

    def __call__(self, i: Index) -> Index:
        return self.table[i]

    def image(self, subset: Iterable[Index]) -> FrozenSet[Index]:
        return frozenset(self.table[i] for i in subset)

    @property
    def injective(self) -> bool:
        return len(set(self.table.values())) == len(self.table)

    @property
    def cofinal(self) -> bool:
        """Every target index lies below some image point"""
        return all(any(self.target.leq(p, q) for q in self.table.values()) for p in self.target.elems)

    def then(self, psi: "IsotoneMap") -> "IsotoneMap":
        """psi ∘ self"""
        if psi.source != self.target:
            raise InvalidMap("Maps are not composable")
        return IsotoneMap(self.source, psi.target, {i: psi(self.table[i]) for i in self.source.elems})

    def __eq__(self, other):
        if not isinstance(other, IsotoneMap):
            return NotImplemented
        return self.source == other.source and self.target == other.target and self.table == other.table

    def __hash__(self):
        return hash((self.source, self.target))


def co_optimal_lift(phi: Union[IsotoneMap, Mapping[Index, Index]], F: Filter,
                    target_ground: Optional[Iterable[Index]] = None) -> Filter:
    """F_{φ[[F]]} = {Q | ∃J ∈ F, φ[J] ⊆ Q}; an ultrafilter lifts to an ultrafilter"""
    if isinstance(phi, IsotoneMap):
        table, target = phi.table, phi.target.elems
    else:
        table, target = dict(phi), target_ground
        if target is None:
            raise InvalidMap("A plain map needs its target ground")
    if set(table) != set(F.elems):
        raise InvalidMap("Map is not defined on the filter's ground")
    g = Ground(target)
    members = set()
    for J in F.members:
        members.update(g.supersets(g.mask(table[j] for j in J)))
    lifted = Filter(g, members)
    return Ultrafilter(g, members) if len(lifted.core) == 1 else lifted


@dataclass(frozen=True, eq=False)
class UffsObject:
    """(I, F): a directed preorder with an ultrafilter containing its final sections"""
    index: Preorder
    ultra: Ultrafilter

    def __post_init__(self):
        if self.ultra.elems != self.index.elems:
            raise InvalidFilter("Ultrafilter lives on another ground")
        if not self.ultra.includes(frechet_filter(self.index)):
            raise InvalidFilter("Ultrafilter does not contain the final sections",
                                {"principal_point": element_label(self.ultra.principal_point)})

    def __eq__(self, other):
        if not isinstance(other, UffsObject):
            return NotImplemented
        return self.index == other.index and self.ultra == other.ultra

    def __hash__(self):
        return hash((self.index, self.ultra))


def uffs(I: Preorder) -> List[UffsObject]:
    """Uffs(I): every ultrafilter on I containing the final sections"""
    return [UffsObject(I, U) for U in ultrafilters_containing(frechet_filter(I))]


def uffs_map(phi: IsotoneMap, obj: UffsObject) -> UffsObject:
    """Uffs(φ): lift of the ultrafilter along φ"""
    return UffsObject(phi.target, co_optimal_lift(phi, obj.ultra))


def uffs_morphism_defects(src: UffsObject, dst: UffsObject, phi: IsotoneMap) -> List[str]:
    defects = []
    if phi.source != src.index or phi.target != dst.index:
        return ["map does not connect the two preorders"]
    if not phi.injective:
        defects.append("not injective")
    if not phi.cofinal:
        defects.append("not cofinal")
    if co_optimal_lift(phi, src.ultra) != dst.ultra:
        defects.append("lifted ultrafilter differs from the target ultrafilter")
    return defects


def uffs_morphism_check(src: UffsObject, dst: UffsObject, phi: IsotoneMap) -> bool:
    """φ injective, isotone, cofinal and F_{φ[[F_I]]} = F_P"""
    return not uffs_morphism_defects(src, dst, phi)


@dataclass(frozen=True, eq=False)
class UffsMorphism:
    source: UffsObject
    target: UffsObject
    phi: IsotoneMap

    def __post_init__(self):
        defects = uffs_morphism_defects(self.source, self.target, self.phi)
        if defects:
            raise NotAUffsMorphism(f"Not a Uffs morphism: {', '.join(defects)}", {"defects": defects})

    @classmethod
    def identity(cls, obj: UffsObject) -> "UffsMorphism":
        return cls(obj, obj, IsotoneMap.identity(obj.index))

    def then(self, psi: "UffsMorphism") -> "UffsMorphism":
        """psi ∘ self"""
        return UffsMorphism(self.source, psi.target, self.phi.then(psi.phi))
