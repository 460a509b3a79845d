"""
Projective and inductive systems of Σ-algebras and their limits

Transitions are stored as sorted mappings keyed by pairs (i, j) with i ≤ j:
in a projective system the pair (i, j) carries f^{j,i}: A^j -> A^i, in an
inductive system it carries f^{i,j}: A^i -> A^j. Validators report defects;
constructions assume a valid system.
"""
import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

from .checks import Verdict
from .errors import GroundMismatch, InvalidFilter, InvalidSystem, NotACocone, NotACone
from .logging_config import get_logger
from .metrics import metrics_collector
from .models import Defect
from .order_filters import Chooser, Filter, Preorder, Ultrafilter, frechet_filter, principal_filter
from .sig_alg import (
    Algebra,
    Congruence,
    Homomorphism,
    Signature,
    coordinatewise_algebra,
    checked_algebra,
    find_isomorphism,
    first_violation,
    is_globally_empty,
    product_algebra,
    quotient_algebra,
    validate_algebra,
)
from .sorted_core import (
    IndexedFamily,
    SortedEquivalence,
    SortedMapping,
    SortedSet,
    Tagged,
    canonical_sorted,
    constant_support_check,
    coproduct,
    element_label,
)
from .union_find import DisjointSet

logger = get_logger(__name__)

Index = Any


@dataclass(frozen=True, eq=False)
class _System:
    index: Preorder
    algebras: Mapping[Index, Algebra]
    transitions: Mapping[Tuple[Index, Index], SortedMapping]

    covariant = False

    def __post_init__(self):
        object.__setattr__(self, "algebras", {i: self.algebras[i] for i in self.index.elems if i in self.algebras})

    @property
    def sig(self) -> Signature:
        return self.algebras[self.index.elems[0]].sig

    def __getitem__(self, i: Index) -> Algebra:
        return self.algebras[i]

    def map(self, i: Index, j: Index) -> SortedMapping:
        """Transition attached to i ≤ j"""
        return self.transitions[(i, j)]

    def hom(self, i: Index, j: Index) -> Homomorphism:
        m = self.transitions[(i, j)]
        src, tgt = (self.algebras[i], self.algebras[j]) if self.covariant else (self.algebras[j], self.algebras[i])
        return Homomorphism(src, tgt, m)

    def family(self) -> IndexedFamily:
        return IndexedFamily(self.index.elems, {i: A.carrier for i, A in self.algebras.items()}, self.sig.sorts)

    def with_algebras(self, index: Preorder, algebras, transitions):
        return type(self)(index, algebras, transitions)

    def __eq__(self, other):
        if not isinstance(other, _System):
            return NotImplemented
        return (type(self) is type(other) and self.index == other.index
                and dict(self.algebras) == dict(other.algebras) and dict(self.transitions) == dict(other.transitions))

    def __hash__(self):
        return hash((type(self).__name__, self.index))


class ProjectiveSystem(_System):
    """((A^i), (f^{j,i})): f^{j,i}: A^j -> A^i for i ≤ j"""
    covariant = False


class InductiveSystem(_System):
    """((A^i), (f^{i,j})): f^{i,j}: A^i -> A^j for i ≤ j"""
    covariant = True


def _validate_system(D: _System) -> List[Defect]:
    defects: List[Defect] = []
    I = D.index
    missing = [i for i in I.elems if i not in D.algebras]
    if missing:
        return [Defect(kind="Index", subject=element_label(i), detail=f"No algebra at index {element_label(i)}")
                for i in missing]
    sigs = {A.sig for A in D.algebras.values()}
    if len(sigs) != 1:
        return [Defect(kind="Signature", subject="algebras", detail="Algebras over different signatures")]
    for i, A in D.algebras.items():
        for d in validate_algebra(A):
            defects.append(Defect(kind=d.kind, subject=f"{element_label(i)}.{d.subject}", detail=d.detail, data=d.data))
    if defects:
        return defects
    for pair in canonical_sorted(set(D.transitions) - set(I.le)):
        defects.append(Defect(kind="Extra", subject=_pair_label(pair), detail="Transition for a pair outside ≤"))
    for i, j in canonical_sorted(I.le):
        m = D.transitions.get((i, j))
        if m is None:
            defects.append(Defect(kind="Missing", subject=_pair_label((i, j)),
                                  detail=f"No transition for {element_label(i)} ≤ {element_label(j)}"))
            continue
        src, tgt = (D[i], D[j]) if D.covariant else (D[j], D[i])
        if m.source != src.carrier or m.target != tgt.carrier:
            defects.append(Defect(kind="Endpoints", subject=_pair_label((i, j)),
                                  detail="Transition does not connect the right carriers"))
            continue
        witness = first_violation(m, src, tgt)
        if witness is not None:
            defects.append(Defect(kind="Hom", subject=_pair_label((i, j)),
                                  detail=f"Transition is not a homomorphism (fails at {witness['op']})", data=witness))
        if i == j and m != SortedMapping.identity(D[i].carrier):
            defects.append(Defect(kind="Identity", subject=_pair_label((i, j)), detail="Transition at i ≤ i is not the identity"))
    if defects:
        return defects
    for i, j, k in itertools.product(I.elems, repeat=3):
        if not (I.leq(i, j) and I.leq(j, k)):
            continue
        corner = _triangle_violation(D, i, j, k)
        if corner is not None:
            defects.append(Defect(kind="Composition", subject=f"({element_label(i)},{element_label(j)},{element_label(k)})",
                                  detail="Transition triangle does not commute", data=corner))
    return defects


def _triangle_violation(D: _System, i, j, k) -> Optional[Dict[str, Any]]:
    ij, jk, ik = D.map(i, j), D.map(j, k), D.map(i, k)
    if D.covariant:
        # f^{j,k} ∘ f^{i,j} = f^{i,k} on A^i
        for s in D.sig.sorts:
            for x in D[i].carrier.carrier(s):
                via, direct = jk(s, ij(s, x)), ik(s, x)
                if via != direct:
                    return {"sort": s, "element": element_label(x), "composite": element_label(via), "direct": element_label(direct)}
    else:
        # f^{j,i} ∘ f^{k,j} = f^{k,i} on A^k
        for s in D.sig.sorts:
            for x in D[k].carrier.carrier(s):
                via, direct = ij(s, jk(s, x)), ik(s, x)
                if via != direct:
                    return {"sort": s, "element": element_label(x), "composite": element_label(via), "direct": element_label(direct)}
    return None


def _pair_label(pair) -> str:
    return f"{element_label(pair[0])}≤{element_label(pair[1])}"


def validate_projective_system(P: ProjectiveSystem) -> List[Defect]:
    return _validate_system(P)


def validate_inductive_system(D: InductiveSystem) -> List[Defect]:
    return _validate_system(D)


def checked_system(D: _System) -> _System:
    defects = _validate_system(D)
    if defects:
        raise InvalidSystem(defects[0].detail, {"defects": [d.model_dump() for d in defects]})
    return D


@dataclass
class LimitResult:
    """Apex with its legs; ``witness`` records how the apex was realized"""
    apex: Algebra
    legs: Dict[Index, Homomorphism]
    witness: Dict[str, Any] = field(default_factory=dict)


def projective_limit(P: ProjectiveSystem) -> LimitResult:
    """Threads of ∏ A^i compatible with every transition, with the projections"""
    index = P.index.elems
    pos = {i: n for n, i in enumerate(index)}
    carriers = {}
    for s in P.sig.sorts:
        threads = []
        for x in itertools.product(*(P[i].carrier.carrier(s) for i in index)):
            if all(P.map(i, j)(s, x[pos[j]]) == x[pos[i]] for i, j in P.index.le):
                threads.append(x)
        carriers[s] = threads
    apex = checked_algebra(coordinatewise_algebra(P.sig, [P[i] for i in index], SortedSet(P.sig.sorts, carriers)))
    legs = {i: Homomorphism(apex, P[i], SortedMapping.from_function(apex.carrier, P[i].carrier,
                                                                    lambda s, x, n=pos[i]: x[n]))
            for i in index}
    metrics_collector.record_construction("projective_limit")
    logger.debug("projective limit built", extra={"nodes": apex.carrier.size()})
    return LimitResult(apex, legs, {"kind": "threads", "index": list(index)})


def cone_violation(D: _System, apex: Algebra, legs: Mapping[Index, Homomorphism]) -> Optional[Dict[str, Any]]:
    """Witness of a non-commuting leg square, for cones (projective) and cocones (inductive)"""
    for i, j in canonical_sorted(D.index.le):
        m = D.map(i, j)
        for s in D.sig.sorts:
            if D.covariant:
                for x in D[i].carrier.carrier(s):
                    via, direct = legs[j](s, m(s, x)), legs[i](s, x)
                    if via != direct:
                        return {"pair": _pair_label((i, j)), "sort": s, "element": element_label(x),
                                "via": element_label(via), "direct": element_label(direct)}
            else:
                for x in apex.carrier.carrier(s):
                    via, direct = m(s, legs[j](s, x)), legs[i](s, x)
                    if via != direct:
                        return {"pair": _pair_label((i, j)), "sort": s, "element": element_label(x),
                                "via": element_label(via), "direct": element_label(direct)}
    return None


def mediating_into_limit(P: ProjectiveSystem, apex: Algebra, legs: Mapping[Index, Homomorphism],
                         limit: Optional[LimitResult] = None) -> Homomorphism:
    """The unique h: M -> lim← A with f^i ∘ h = g^i"""
    witness = cone_violation(P, apex, legs)
    if witness is not None:
        raise NotACone("Legs do not commute with the transitions", witness)
    limit = limit or projective_limit(P)
    index = P.index.elems
    return Homomorphism(apex, limit.apex, SortedMapping.from_function(
        apex.carrier, limit.apex.carrier, lambda s, x: tuple(legs[i](s, x) for i in index)))


def inductive_limit(D: InductiveSystem, chooser: Optional[Chooser] = None) -> LimitResult:
    """∐ A^i modulo eventual agreement; operations evaluated at an upper bound of the arguments' indices

    Eventual agreement is decided at a top index, which a finite directed
    preorder always has. Each class is represented by its least tagged pair.
    """
    I = D.index
    top = I.tops[0]
    C, _ = coproduct(D.family())
    eq = SortedEquivalence.from_key(C, lambda s, t: D.map(t.index, top)(s, t.element))
    carrier = SortedSet(D.sig.sorts, {s: [b[0] for b in eq.classes[s]] for s in D.sig.sorts})
    tables = {}
    for op, arity in D.sig.ops.items():
        table = {}
        for args in carrier.words(arity.word):
            k = I.upper_bound([a.index for a in args], chooser)
            pushed = tuple(D.map(a.index, k)(s, a.element) for s, a in zip(arity.word, args))
            table[args] = eq.rep(arity.result, Tagged(D[k].tables[op][pushed], k))
        tables[op] = table
    apex = Algebra(D.sig, carrier, tables)
    legs = {i: Homomorphism(D[i], apex, SortedMapping.from_function(D[i].carrier, carrier,
                                                                    lambda s, x, i=i: eq.rep(s, Tagged(x, i))))
            for i in I.elems}
    metrics_collector.record_construction("inductive_limit")
    logger.debug("inductive limit built", extra={"nodes": carrier.size()})
    classes = {s: {element_label(b[0]): [element_label(t) for t in b] for b in eq.classes[s]} for s in D.sig.sorts}
    return LimitResult(apex, legs, {"kind": "classes", "top": element_label(top), "classes": classes,
                                    "equivalence": eq})


def eventual_agreement(D: InductiveSystem, s, a: Tagged, b: Tagged) -> bool:
    """∃k ≥ i, j with f^{i,k}(a) = f^{j,k}(b), scanning every k"""
    return any(D.map(a.index, k)(s, a.element) == D.map(b.index, k)(s, b.element)
               for k in D.index.upper_bounds([a.index, b.index]))


def mediating_from_colimit(D: InductiveSystem, limit: LimitResult, apex: Algebra,
                           legs: Mapping[Index, Homomorphism]) -> Homomorphism:
    """The unique h: lim→ A -> M with h ∘ f^i = g^i"""
    witness = cone_violation(D, apex, legs)
    if witness is not None:
        raise NotACocone("Legs do not commute with the transitions", witness)
    return Homomorphism(limit.apex, apex, SortedMapping.from_function(
        limit.apex.carrier, apex.carrier, lambda s, t: legs[t.index](s, t.element)))


def _restrict_system(D: _System, keep: Iterable[Index]) -> _System:
    keep = set(keep)
    index = D.index.restrict(keep)
    return D.with_algebras(index, {i: D[i] for i in index.elems},
                           {(i, j): m for (i, j), m in D.transitions.items() if i in keep and j in keep})


def prune_initial(D: InductiveSystem) -> Tuple[InductiveSystem, bool]:
    """Drop the initial members; the flag is set when every member is initial and D is returned unchanged"""
    keep = [i for i in D.index.elems if not D[i].carrier.is_initial()]
    if not keep:
        return D, True
    if len(keep) == len(D.index.elems):
        return D, False
    return _restrict_system(D, keep), False


def globally_empty_members(D: _System) -> List[Index]:
    """Non-initial members with no homomorphism from the final algebra"""
    return [i for i in D.index.elems if is_globally_empty(D[i])]


def consistent_subalgebra(D: InductiveSystem) -> Algebra:
    """C: tuples of ∏ A^i that are eventually transition-consistent

    Consistency from some k on holds iff it holds from a top index on, so
    only the pairs of top indices are tested.
    """
    index = D.index.elems
    pos = {i: n for n, i in enumerate(index)}
    tops = D.index.tops
    carriers = {}
    for s in D.sig.sorts:
        carriers[s] = [x for x in itertools.product(*(D[i].carrier.carrier(s) for i in index))
                       if all(D.map(i, j)(s, x[pos[i]]) == x[pos[j]] for i in tops for j in tops)]
    return checked_algebra(coordinatewise_algebra(D.sig, [D[i] for i in index], SortedSet(D.sig.sorts, carriers)))


def eventually_consistent_quotient(D: InductiveSystem) -> Algebra:
    """C/≡ where x ≡ y iff x and y agree from some index on"""
    C = consistent_subalgebra(D)
    top_pos = [n for n, i in enumerate(D.index.elems) if i in D.index.tops]
    eq = SortedEquivalence.from_key(C.carrier, lambda s, x: tuple(x[n] for n in top_pos))
    Q, _ = quotient_algebra(C, Congruence(C, eq))
    return Q


def prop25_check(D: InductiveSystem, max_nodes: Optional[int] = None) -> Verdict:
    """C/≡ ≅ lim→ A iff the family has constant support"""
    constant = constant_support_check(D.family())
    quotient_alg = eventually_consistent_quotient(D)
    colimit = inductive_limit(D).apex
    iso = find_isomorphism(quotient_alg, colimit, max_nodes)
    consistent = constant == (iso is not None)
    return Verdict(
        "prop25", consistent,
        facts={"constant_support": constant, "isomorphic": iso is not None, "consistent": consistent},
        witness={} if consistent else {"supports": {element_label(i): sorted(D[i].support()) for i in D.index.elems}},
        algebras={"quotient": quotient_alg, "colimit": colimit},
        message=None if consistent else "constant support and isomorphism disagree",
    )


def _check_ground(family: Mapping[Index, Algebra], ground: Iterable[Index]) -> None:
    if set(family) != set(ground):
        raise GroundMismatch("Family is not indexed by the filter's ground",
                             {"family": [element_label(i) for i in canonical_sorted(family)],
                              "ground": [element_label(i) for i in canonical_sorted(ground)]})


def reduced_product_system(family: Mapping[Index, Algebra], F: Filter) -> InductiveSystem:
    """A(F): A(J) = ∏_{j∈J} A^j over (F, ⊇) with the restriction maps p^{K,J}"""
    _check_ground(family, F.elems)
    members = F.members
    index = Preorder(members, frozenset((J, K) for J in members for K in members if K <= J))
    algebras = {J: product_algebra({j: family[j] for j in J})[0] for J in members}
    transitions = {}
    for J, K in index.le:
        J_order, K_order = canonical_sorted(J), canonical_sorted(K)
        picks = [J_order.index(k) for k in K_order]
        transitions[(J, K)] = SortedMapping.from_function(
            algebras[J].carrier, algebras[K].carrier, lambda s, x, picks=tuple(picks): tuple(x[p] for p in picks))
    return InductiveSystem(index, algebras, transitions)


def reduced_product(family: Mapping[Index, Algebra], F: Filter) -> Algebra:
    """∏^F A^i: the inductive limit of A(F)"""
    return inductive_limit(reduced_product_system(family, F)).apex


def filter_congruence(family: Mapping[Index, Algebra], F: Filter) -> Congruence:
    """≡^F on ∏ A^i: a ≡ b iff Eq(a, b) = {i | a_i = b_i} ∈ F"""
    _check_ground(family, F.elems)
    P, _ = product_algebra(family)
    ground = F.ground
    index = canonical_sorted(family)
    blocks = {}
    for s in P.sorts:
        uf = DisjointSet(P.carrier.carrier(s))
        for a, b in itertools.combinations(P.carrier.carrier(s), 2):
            agree = ground.mask(i for n, i in enumerate(index) if a[n] == b[n])
            if agree in F.masks:
                uf.union(a, b)
        blocks[s] = uf.blocks()
    return Congruence(P, SortedEquivalence(P.carrier, blocks))


def _members_support(family: Mapping[Index, Algebra]) -> Dict[str, List[str]]:
    return {element_label(i): sorted(A.support()) for i, A in family.items()}


def _family_constant(family: Mapping[Index, Algebra]) -> bool:
    return len({A.support() for A in family.values()}) <= 1


def prop28_check(family: Mapping[Index, Algebra], J: Iterable[Index], max_nodes: Optional[int] = None) -> Verdict:
    """∏ A^i/≡^F ≅ ∏_{j∈J} A^j for the principal filter F generated by J"""
    J = frozenset(J)
    F = principal_filter(canonical_sorted(family), J)
    product, _ = product_algebra(family)
    quotient_alg, _ = quotient_algebra(product, filter_congruence(family, F))
    restricted, _ = product_algebra({j: family[j] for j in J})
    iso = find_isomorphism(quotient_alg, restricted, max_nodes)
    constant = _family_constant(family)
    passed = iso is not None or not constant
    return Verdict(
        "prop28", passed,
        facts={"constant_support": constant, "isomorphic": iso is not None, "generator": element_label(J)},
        witness={} if passed else {"supports": _members_support(family)},
        algebras={"quotient": quotient_alg, "restricted_product": restricted},
        message=None if passed else "constant-support family without the required isomorphism",
    )


def remark_condition(family: Mapping[Index, Algebra], F: Filter) -> bool:
    """{i | s ∈ supp(A^i)} ∈ F for every sort s"""
    sorts = next(iter(family.values())).sorts
    return all(F.contains(i for i, A in family.items() if s in A.support()) for s in sorts)


def prop29_check(family: Mapping[Index, Algebra], F: Filter, max_nodes: Optional[int] = None,
                 name: str = "prop29") -> Verdict:
    """∏^F A^i ≅ ∏ A^i/≡^F under constant support, plus the converse under the support condition"""
    reduced = reduced_product(family, F)
    product, _ = product_algebra(family)
    quotient_alg, _ = quotient_algebra(product, filter_congruence(family, F))
    iso = find_isomorphism(reduced, quotient_alg, max_nodes)
    constant = _family_constant(family)
    condition = remark_condition(family, F)
    forward = iso is not None or not constant
    converse = not (iso is not None and condition) or constant
    passed = forward and converse
    witness = {}
    if not passed:
        witness = {"supports": _members_support(family), "filter_core": element_label(F.core)}
    return Verdict(
        name, passed,
        facts={"constant_support": constant, "isomorphic": iso is not None,
               "support_condition": condition, "converse_consistent": converse},
        witness=witness,
        algebras={"reduced_product": reduced, "quotient": quotient_alg},
        message=None if passed else ("isomorphism missing under constant support" if not forward
                                     else "support condition and isomorphism without constant support"),
    )


def ultraproduct_check(family: Mapping[Index, Algebra], U: Ultrafilter, max_nodes: Optional[int] = None) -> Verdict:
    return prop29_check(family, U, max_nodes, name="ultraproduct")


def derived_support_check(family: Mapping[Index, SortedSet], F: Filter, index: Preorder) -> Verdict:
    """Constant support ⟺ supp(A^i) = supp(A(J)) for every i and every J ∈ F"""
    if not F.includes(frechet_filter(index)):
        raise InvalidFilter("Filter does not contain the final sections")
    supports = {i: (A.support() if isinstance(A, SortedSet) else A.carrier.support()) for i, A in family.items()}
    sorts = frozenset(next(iter(family.values())).sorts)
    constant = len(set(supports.values())) <= 1
    mismatch = None
    for J in F.members:
        derived = sorts.intersection(*(supports[j] for j in J))
        for i in canonical_sorted(family):
            if supports[i] != derived:
                mismatch = {"index": element_label(i), "member": element_label(J),
                            "support": sorted(supports[i]), "derived_support": sorted(derived)}
                break
        if mismatch:
            break
    passed = constant == (mismatch is None)
    return Verdict("derived_support", passed,
                   facts={"constant_support": constant, "derived_constant": mismatch is None},
                   witness=mismatch or {})
