"""
Many-sorted signatures and finite Σ-algebras

Operation tables are extensional: ``tables[σ]`` maps every tuple of the
arity word's carriers to an element of the result carrier. An operation
whose word hits an empty carrier has the empty table.
"""
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .config import settings
from .errors import (
    ArityMismatch,
    BadTuple,
    CapExceeded,
    CarrierMismatch,
    InvalidAlgebra,
    NotAHomomorphism,
    NotClosed,
    NotCongruence,
    NotParallel,
    NotRefining,
    NotSubset,
    PartitionMismatch,
    SignatureMismatch,
)
from .logging_config import get_logger
from .metrics import metrics_collector
from .models import Defect
from .sorted_core import (
    STAR,
    Element,
    IndexedFamily,
    Sort,
    SortedEquivalence,
    SortedMapping,
    SortedSet,
    canonical_sorted,
    compose,
    element_label,
    enumerate_mappings,
    equalizer,
    factor_through,
    kernel,
    product,
    quotient,
    subset_embedding,
)
from .union_find import DisjointSet

logger = get_logger(__name__)


@dataclass(frozen=True)
class Arity:
    """Rank (w, s): argument word and result sort; the empty word is a constant"""
    word: Tuple[Sort, ...]
    result: Sort

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(self.word))

    def render(self) -> str:
        return f"{' '.join(self.word)} -> {self.result}".strip()


@dataclass(frozen=True, eq=False)
class Signature:
    sorts: Tuple[Sort, ...]
    ops: Mapping[str, Arity] = field(default_factory=dict)

    def __post_init__(self):
        sorts = tuple(self.sorts)
        for name, arity in self.ops.items():
            bad = [s for s in (*arity.word, arity.result) if s not in sorts]
            if bad:
                raise ArityMismatch(f"Operation {name} uses unknown sort(s) {bad}", {"op": name})
        object.__setattr__(self, "sorts", sorts)
        object.__setattr__(self, "ops", {k: self.ops[k] for k in sorted(self.ops)})

    def __eq__(self, other):
        if not isinstance(other, Signature):
            return NotImplemented
        return self.sorts == other.sorts and self.ops == other.ops

    def __hash__(self):
        return hash((self.sorts, tuple(self.ops.items())))


@dataclass(frozen=True, eq=False)
class Algebra:
    """(A, F): carrier plus one table per operation symbol

    Construction does not validate; use ``validate_algebra`` or
    ``checked_algebra``.
    """
    sig: Signature
    carrier: SortedSet
    tables: Mapping[str, Mapping[Tuple[Element, ...], Element]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "tables", {op: {tuple(k): v for k, v in t.items()}
                                            for op, t in self.tables.items()})

    @property
    def sorts(self) -> Tuple[Sort, ...]:
        return self.sig.sorts

    def support(self) -> FrozenSet[Sort]:
        return self.carrier.support()

    def op(self, name: str, args: Sequence[Element]) -> Element:
        return self.tables[name][tuple(args)]

    def __eq__(self, other):
        if not isinstance(other, Algebra):
            return NotImplemented
        return self.sig == other.sig and self.carrier == other.carrier and self.tables == other.tables

    def __hash__(self):
        return hash((self.sig, self.carrier))

    def __repr__(self) -> str:
        return f"Algebra({self.carrier!r}, ops={list(self.sig.ops)})"


def validate_algebra(A: Algebra) -> List[Defect]:
    """Every violated Algebra invariant as a Defect; empty when A is valid"""
    defects: List[Defect] = []
    if A.carrier.sorts != A.sig.sorts:
        return [Defect(kind="Carrier", subject="carrier",
                       detail="Carrier sorts differ from the signature sorts",
                       data={"carrier": list(A.carrier.sorts), "signature": list(A.sig.sorts)})]
    for name in A.tables:
        if name not in A.sig.ops:
            defects.append(Defect(kind="UnknownOp", subject=name, detail=f"No operation {name} in the signature"))
    for name, arity in A.sig.ops.items():
        table = A.tables.get(name)
        if table is None:
            defects.append(Defect(kind="MissingOp", subject=name, detail=f"Operation {name} has no table"))
            continue
        domain = set(A.carrier.words(arity.word))
        for args in canonical_sorted(domain - set(table)):
            defects.append(Defect(kind="Totality", subject=name,
                                  detail=f"{name}({','.join(map(element_label, args))}) is undefined",
                                  data={"args": [element_label(a) for a in args]}))
        for args in canonical_sorted(set(table) - domain):
            defects.append(Defect(kind="Domain", subject=name,
                                  detail=f"{name} is defined on a tuple outside its domain",
                                  data={"args": [element_label(a) for a in args]}))
        for args, value in table.items():
            if args in domain and not A.carrier.contains(arity.result, value):
                defects.append(Defect(kind="Codomain", subject=name,
                                      detail=f"{name}({','.join(map(element_label, args))}) = "
                                             f"{element_label(value)} is not in the carrier of {arity.result}",
                                      data={"args": [element_label(a) for a in args],
                                            "value": element_label(value)}))
    return defects


def checked_algebra(A: Algebra) -> Algebra:
    defects = validate_algebra(A)
    if defects:
        raise InvalidAlgebra(defects[0].detail, {"defects": [d.model_dump() for d in defects]})
    return A


def apply_op(A: Algebra, op: str, args: Sequence[Element]) -> Element:
    """F_σ(args)"""
    if op not in A.sig.ops:
        raise BadTuple(f"No operation {op}", {"op": op})
    word = A.sig.ops[op].word
    args = tuple(args)
    if len(args) != len(word) or not all(A.carrier.contains(s, x) for s, x in zip(word, args)):
        raise BadTuple(f"{op} is not defined on ({','.join(map(element_label, args))})",
                       {"op": op, "args": [element_label(a) for a in args]})
    return A.tables[op][args]


def final_algebra(sig: Signature) -> Algebra:
    """1: one element per sort, every operation constant at ⋆"""
    one = SortedSet.final(sig.sorts)
    return Algebra(sig, one, {op: {(STAR,) * len(ar.word): STAR} for op, ar in sig.ops.items()})


def first_violation(f: SortedMapping, A: Algebra, B: Algebra) -> Optional[Dict[str, Any]]:
    """Witness of f_s(F_σ(a)) ≠ G_σ(f_w(a)), or None"""
    if f.source != A.carrier or f.target != B.carrier:
        raise CarrierMismatch("Mapping carriers do not match the algebras")
    if A.sig != B.sig:
        raise SignatureMismatch("Algebras over different signatures")
    for op, arity in A.sig.ops.items():
        target = B.tables[op]
        for args, value in A.tables[op].items():
            left = f(arity.result, value)
            right = target[f.apply_word(arity.word, args)]
            if left != right:
                return {"op": op, "args": [element_label(a) for a in args],
                        "left": element_label(left), "right": element_label(right)}
    return None


def is_homomorphism(f: SortedMapping, A: Algebra, B: Algebra) -> bool:
    return first_violation(f, A, B) is None


@dataclass(frozen=True, eq=False)
class Homomorphism:
    """A sorted mapping between carriers that commutes with every operation"""
    source: Algebra
    target: Algebra
    map: SortedMapping

    def __post_init__(self):
        witness = first_violation(self.map, self.source, self.target)
        if witness is not None:
            raise NotAHomomorphism(f"Mapping does not commute with {witness['op']}", witness)

    @classmethod
    def identity(cls, A: Algebra) -> "Homomorphism":
        return cls(A, A, SortedMapping.identity(A.carrier))

    def __call__(self, s: Sort, x: Element) -> Element:
        return self.map(s, x)

    def is_injective(self) -> bool:
        return self.map.is_injective()

    def is_surjective(self) -> bool:
        return self.map.is_surjective()

    def __eq__(self, other):
        if not isinstance(other, Homomorphism):
            return NotImplemented
        return self.source == other.source and self.target == other.target and self.map == other.map

    def __hash__(self):
        return hash(self.map)


def compose_hom(g: Homomorphism, f: Homomorphism) -> Homomorphism:
    """g ∘ f"""
    return Homomorphism(f.source, g.target, compose(g.map, f.map))


def coordinatewise_algebra(sig: Signature, factors: Sequence[Algebra], carrier: SortedSet) -> Algebra:
    """Operations acting coordinatewise on a carrier of tuples over ``factors``"""
    tables = {}
    for op, arity in sig.ops.items():
        table = {}
        for args in carrier.words(arity.word):
            if not factors:
                table[args] = STAR
            else:
                table[args] = tuple(A.tables[op][tuple(a[pos] for a in args)] for pos, A in enumerate(factors))
        tables[op] = table
    return Algebra(sig, carrier, tables)


def product_algebra(family: Mapping[Any, Algebra], sig: Optional[Signature] = None
                    ) -> Tuple[Algebra, Dict[Any, Homomorphism]]:
    """∏ A^i with coordinatewise operations and its projections"""
    members = dict(family)
    sigs = {A.sig for A in members.values()}
    if sig is not None:
        sigs.add(sig)
    if len(sigs) != 1:
        raise SignatureMismatch("Product needs one shared signature")
    sig = sigs.pop()
    F = IndexedFamily(tuple(members), {i: A.carrier for i, A in members.items()}, sig.sorts)
    P, projections = product(F)
    apex = coordinatewise_algebra(sig, [members[i] for i in F.index], P)
    metrics_collector.record_construction("product")
    return apex, {i: Homomorphism(apex, members[i], projections[i]) for i in F.index}


def tupling(source: Algebra, homs: Mapping[Any, Homomorphism], target: Algebra) -> Homomorphism:
    """⟨h_i⟩: source -> ∏ A^i, the mediating map into a product"""
    index = canonical_sorted(homs)
    if not index:
        return Homomorphism(source, target, SortedMapping.from_function(source.carrier, target.carrier,
                                                                         lambda s, x: STAR))
    return Homomorphism(source, target, SortedMapping.from_function(
        source.carrier, target.carrier, lambda s, x: tuple(homs[i](s, x) for i in index)))


def is_subalgebra(X: SortedSet, A: Algebra) -> bool:
    """X ⊆ A closed under every operation"""
    if not X.is_subset_of(A.carrier):
        raise NotSubset("Sorted set is not contained in the carrier")
    return _closure_violation(X, A) is None


def _closure_violation(X: SortedSet, A: Algebra) -> Optional[Dict[str, Any]]:
    for op, arity in A.sig.ops.items():
        for args in X.words(arity.word):
            value = A.tables[op][args]
            if not X.contains(arity.result, value):
                return {"op": op, "args": [element_label(a) for a in args], "value": element_label(value)}
    return None


def induced_subalgebra(X: SortedSet, A: Algebra) -> Algebra:
    if not X.is_subset_of(A.carrier):
        raise NotSubset("Sorted set is not contained in the carrier")
    witness = _closure_violation(X, A)
    if witness is not None:
        raise NotClosed(f"{witness['op']} leaves the subset", witness)
    return _restrict(X, A)


def _restrict(X: SortedSet, A: Algebra) -> Algebra:
    return Algebra(A.sig, X, {op: {args: A.tables[op][args] for args in X.words(ar.word)}
                              for op, ar in A.sig.ops.items()})


def generate_subalgebra(A: Algebra, X: SortedSet) -> Algebra:
    """Sg(X): least subalgebra containing X"""
    if not X.is_subset_of(A.carrier):
        raise NotSubset("Generators are not contained in the carrier")
    current = {s: set(X.carrier(s)) for s in A.sorts}
    changed = True
    while changed:
        changed = False
        snapshot = SortedSet(A.sorts, current)
        for op, arity in A.sig.ops.items():
            for args in snapshot.words(arity.word):
                value = A.tables[op][args]
                if value not in current[arity.result]:
                    current[arity.result].add(value)
                    changed = True
    return _restrict(SortedSet(A.sorts, current), A)


def embedding(sub: Algebra, A: Algebra) -> Homomorphism:
    return Homomorphism(sub, A, subset_embedding(sub.carrier, A.carrier))


def _compatibility_violation(phi: SortedEquivalence, A: Algebra) -> Optional[Dict[str, Any]]:
    for op, arity in A.sig.ops.items():
        seen: Dict[Tuple[Element, ...], Tuple[Element, ...]] = {}
        for args, value in A.tables[op].items():
            key = tuple(phi.rep(s, x) for s, x in zip(arity.word, args))
            if key in seen:
                other_args, other_value = seen[key]
                if not phi.related(arity.result, value, other_value):
                    return {"op": op, "args": [element_label(a) for a in other_args],
                            "other_args": [element_label(a) for a in args],
                            "results": [element_label(other_value), element_label(value)]}
            else:
                seen[key] = (args, value)
    return None


def is_congruence(phi: SortedEquivalence, A: Algebra) -> bool:
    if phi.base != A.carrier:
        raise PartitionMismatch("Equivalence is not a partition of the carrier")
    return _compatibility_violation(phi, A) is None


@dataclass(frozen=True, eq=False)
class Congruence:
    """A sorted equivalence compatible with every operation of ``base``"""
    base: Algebra
    eq: SortedEquivalence

    def __post_init__(self):
        if self.eq.base != self.base.carrier:
            raise PartitionMismatch("Equivalence is not a partition of the carrier")
        witness = _compatibility_violation(self.eq, self.base)
        if witness is not None:
            raise NotCongruence(f"Related arguments of {witness['op']} give unrelated results", witness)

    @classmethod
    def discrete(cls, A: Algebra) -> "Congruence":
        return cls(A, SortedEquivalence.discrete(A.carrier))

    @classmethod
    def total(cls, A: Algebra) -> "Congruence":
        return cls(A, SortedEquivalence.total(A.carrier))

    def __eq__(self, other):
        if not isinstance(other, Congruence):
            return NotImplemented
        return self.base == other.base and self.eq == other.eq

    def __hash__(self):
        return hash(self.eq)


def generate_congruence(A: Algebra, pairs: Mapping[Sort, Iterable[Tuple[Element, Element]]]) -> Congruence:
    """Least congruence containing the given pairs (union-find closed under the operations)"""
    uf = {s: DisjointSet(A.carrier.carrier(s)) for s in A.sorts}
    for s, ps in pairs.items():
        for x, y in ps:
            uf[s].union(x, y)
    changed = True
    while changed:
        changed = False
        for op, arity in A.sig.ops.items():
            seen: Dict[Tuple[Element, ...], Element] = {}
            for args, value in A.tables[op].items():
                key = tuple(uf[s].find(x) for s, x in zip(arity.word, args))
                if key in seen:
                    changed |= uf[arity.result].union(seen[key], value)
                else:
                    seen[key] = value
    return Congruence(A, SortedEquivalence(A.carrier, {s: uf[s].blocks() for s in A.sorts}))


def quotient_algebra(A: Algebra, theta) -> Tuple[Algebra, Homomorphism]:
    """A/Θ on block representatives with the projection pr^Θ"""
    if isinstance(theta, SortedEquivalence):
        theta = Congruence(A, theta)
    if theta.base != A:
        raise NotCongruence("Congruence belongs to another algebra")
    Q, pr = quotient(A.carrier, theta.eq)
    tables = {}
    for op, arity in A.sig.ops.items():
        tables[op] = {args: theta.eq.rep(arity.result, A.tables[op][args]) for args in Q.words(arity.word)}
    QA = Algebra(A.sig, Q, tables)
    return QA, Homomorphism(A, QA, pr)


def factor_hom(f: Homomorphism, theta: Congruence) -> Homomorphism:
    """The unique p: A/Θ -> B with f = p ∘ pr^Θ"""
    if theta.base != f.source:
        raise NotRefining("Congruence lives on a different algebra")
    p = factor_through(f.map, theta.eq)
    QA, _ = quotient_algebra(f.source, theta)
    return Homomorphism(QA, f.target, p)


def kernel_congruence(f: Homomorphism) -> Congruence:
    return Congruence(f.source, kernel(f.map))


def equalizer_algebra(f: Homomorphism, g: Homomorphism) -> Tuple[Algebra, Homomorphism]:
    if f.source != g.source or f.target != g.target:
        raise NotParallel("Equalizer needs a parallel pair of homomorphisms")
    E, _ = equalizer(f.map, g.map)
    sub = induced_subalgebra(E, f.source)
    return sub, embedding(sub, f.source)


def enumerate_homomorphisms(A: Algebra, B: Algebra, cap: Optional[int] = None) -> Iterator[Homomorphism]:
    """Every homomorphism A -> B in canonical order (brute-force oracle)"""
    if A.sig != B.sig:
        raise SignatureMismatch("Algebras over different signatures")
    for f in enumerate_mappings(A.carrier, B.carrier, cap):
        if is_homomorphism(f, A, B):
            yield Homomorphism(A, B, f)


def is_globally_empty(A: Algebra) -> bool:
    """Non-initial, yet no homomorphism from the final algebra 1"""
    if A.carrier.is_initial():
        return False
    if A.support() != frozenset(A.sorts):
        return True
    one = final_algebra(A.sig)
    return next(enumerate_homomorphisms(one, A), None) is None


def _invariants(A: Algebra) -> Dict[Sort, Dict[Element, tuple]]:
    """Isomorphism-invariant fingerprint of every element"""
    hits: Dict[Sort, Dict[Element, Counter]] = {s: {x: Counter() for x in A.carrier.carrier(s)} for s in A.sorts}
    for op, arity in A.sig.ops.items():
        for args, value in A.tables[op].items():
            hits[arity.result][value][(op, "out")] += 1
            for pos, (s, x) in enumerate(zip(arity.word, args)):
                hits[s][x][(op, pos)] += 1
                if s == arity.result and x == value:
                    hits[s][x][(op, pos, "fix")] += 1
    return {s: {x: tuple(sorted(c.items(), key=repr)) for x, c in per.items()} for s, per in hits.items()}


def find_isomorphism(A: Algebra, B: Algebra, max_nodes: Optional[int] = None) -> Optional[Homomorphism]:
    """Least bijective homomorphism A -> B in canonical order, or None

    Backtracking over sortwise bijections; a table entry is checked as soon
    as its last argument or result is assigned.
    """
    if A.sig != B.sig:
        raise SignatureMismatch("Algebras over different signatures")
    max_nodes = settings.MAX_ISO_SEARCH if max_nodes is None else max_nodes
    if any(len(A.carrier.carrier(s)) != len(B.carrier.carrier(s)) for s in A.sorts):
        return None
    inv_a, inv_b = _invariants(A), _invariants(B)
    if any(sorted(inv_a[s].values()) != sorted(inv_b[s].values()) for s in A.sorts):
        return None

    variables = [(s, x) for s in A.sorts for x in A.carrier.carrier(s)]
    order = {v: n for n, v in enumerate(variables)}
    checks: List[List[Tuple[str, Tuple[Element, ...], Element]]] = [[] for _ in variables]
    for op, arity in A.sig.ops.items():
        for args, value in A.tables[op].items():
            last = max([order[(arity.result, value)]] + [order[(s, x)] for s, x in zip(arity.word, args)])
            checks[last].append((op, args, value))

    assignment: Dict[Tuple[Sort, Element], Element] = {}
    used = {s: set() for s in A.sorts}
    nodes = 0

    def consistent(n: int) -> bool:
        for op, args, value in checks[n]:
            arity = A.sig.ops[op]
            image = tuple(assignment[(s, x)] for s, x in zip(arity.word, args))
            if B.tables[op][image] != assignment[(arity.result, value)]:
                return False
        return True

    # explicit stack: product carriers can be deeper than the recursion limit
    cursor = [0] * (len(variables) + 1)
    n = 0
    while 0 <= n < len(variables):
        s, x = variables[n]
        if (s, x) in assignment:
            used[s].discard(assignment.pop((s, x)))
        candidates = B.carrier.carrier(s)
        advanced = False
        while cursor[n] < len(candidates):
            y = candidates[cursor[n]]
            cursor[n] += 1
            if y in used[s] or inv_a[s][x] != inv_b[s][y]:
                continue
            nodes += 1
            if nodes > max_nodes:
                metrics_collector.record_iso_search(nodes)
                logger.warning("isomorphism search cap reached", extra={"nodes": nodes})
                raise CapExceeded(f"Isomorphism search exceeded {max_nodes} nodes",
                                  {"nodes": nodes, "cap": max_nodes})
            assignment[(s, x)] = y
            used[s].add(y)
            if consistent(n):
                advanced = True
                break
            used[s].discard(y)
            del assignment[(s, x)]
        if advanced:
            n += 1
            cursor[n] = 0
        else:
            cursor[n] = 0
            n -= 1
    found = n == len(variables)
    metrics_collector.record_iso_search(nodes)
    logger.debug("isomorphism search finished", extra={"nodes": nodes})
    if not found:
        return None
    tables = {s: {x: assignment[(s, x)] for x in A.carrier.carrier(s)} for s in A.sorts}
    return Homomorphism(A, B, SortedMapping(A.carrier, B.carrier, tables))


def relabel(A: Algebra, prefix: str = "e") -> Tuple[Algebra, Homomorphism]:
    """Isomorphic copy with elements renamed e0, e1, ... per sort in canonical order"""
    names = {s: {x: f"{prefix}{k}" for k, x in enumerate(A.carrier.carrier(s))} for s in A.sorts}
    carrier = SortedSet(A.sorts, {s: list(names[s].values()) for s in A.sorts})
    tables = {}
    for op, arity in A.sig.ops.items():
        tables[op] = {tuple(names[s][x] for s, x in zip(arity.word, args)): names[arity.result][v]
                      for args, v in A.tables[op].items()}
    copy = Algebra(A.sig, carrier, tables)
    return copy, Homomorphism(A, copy, SortedMapping(A.carrier, carrier, names))


@dataclass(frozen=True, eq=False)
class SignatureMorphism:
    """d = (α, d): sorts and operation symbols of ``source`` into ``target``"""
    source: Signature
    target: Signature
    sort_map: Mapping[Sort, Sort]
    op_map: Mapping[str, str]

    def __post_init__(self):
        for s in self.source.sorts:
            if self.sort_map.get(s) not in self.target.sorts:
                raise ArityMismatch(f"Sort {s} is not sent to a target sort", {"sort": s})
        for op, arity in self.source.ops.items():
            image = self.op_map.get(op)
            if image not in self.target.ops:
                raise ArityMismatch(f"Operation {op} is not sent to a target operation", {"op": op})
            expected = Arity(tuple(self.sort_map[s] for s in arity.word), self.sort_map[arity.result])
            if self.target.ops[image] != expected:
                raise ArityMismatch(
                    f"{op} is sent to {image} of arity {self.target.ops[image].render()}, "
                    f"expected {expected.render()}",
                    {"op": op, "image": image},
                )

    @classmethod
    def identity(cls, sig: Signature) -> "SignatureMorphism":
        return cls(sig, sig, {s: s for s in sig.sorts}, {op: op for op in sig.ops})


def reduct(d: SignatureMorphism, B: Algebra) -> Algebra:
    """d*(B) = (B_α, G^d)"""
    if B.sig != d.target:
        raise ArityMismatch("Algebra is not over the target signature of the morphism")
    carrier = SortedSet(d.source.sorts, {s: B.carrier.carrier(d.sort_map[s]) for s in d.source.sorts})
    return Algebra(d.source, carrier, {op: dict(B.tables[d.op_map[op]]) for op in d.source.ops})


def reduct_hom(d: SignatureMorphism, f: Homomorphism) -> Homomorphism:
    """d*(f) = f_α"""
    src, tgt = reduct(d, f.source), reduct(d, f.target)
    return Homomorphism(src, tgt, SortedMapping(src.carrier, tgt.carrier,
                                                {s: f.map.tables[d.sort_map[s]] for s in d.source.sorts}))


def homomorphism_from_tables(A: Algebra, B: Algebra, tables: Mapping[Sort, Mapping[Element, Element]]) -> Homomorphism:
    return Homomorphism(A, B, SortedMapping(A.carrier, B.carrier, tables))

