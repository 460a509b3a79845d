"""
Retraction of a profinite Σ-algebra through an ultraproduct

For a projective system (A^i) over I and an ultrafilter F containing the
final sections, every x in A(J) = ∏_{j∈J} A^j is sent to A^i by voting:
the coordinates j ∈ J ∩ ↑i vote for f^{j,i}(x_j) and the unique candidate
whose vote set lies in F wins. These maps h^{J,i} factor through the
reduced product lim→ A(F) and assemble into h: lim→ A(F) -> lim← A, a
left inverse of p^I ∘ in.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple, Union

from .checks import Verdict, all_of
from .errors import (
    InvalidInstance,
    JNotInFilter,
    MsalgError,
    NotASystemMorphism,
    SortNotSupported,
    VoteFailure,
)
from .logging_config import LoggerMixin
from .order_filters import IsotoneMap, Ultrafilter, UffsMorphism, frechet_filter
from .sig_alg import Algebra, Homomorphism, compose_hom
from .sorted_core import SortedMapping, canonical_sorted, element_label
from .systems_limits import (
    InductiveSystem,
    LimitResult,
    ProjectiveSystem,
    inductive_limit,
    mediating_from_colimit,
    mediating_into_limit,
    projective_limit,
    reduced_product_system,
)

Index = Any


def _first_difference(f: SortedMapping, g: SortedMapping) -> Optional[Dict[str, Any]]:
    """Witness of f ≠ g pointwise, for mappings with the same source"""
    for s in f.source.sorts:
        for x in f.source.carrier(s):
            a, b = f(s, x), g(s, x)
            if a != b:
                return {"sort": s, "element": element_label(x), "left": element_label(a), "right": element_label(b)}
    return None


class RetractionInstance(LoggerMixin):
    """A projective system of finite algebras with an ultrafilter containing its final sections"""

    def __init__(self, system: ProjectiveSystem, ultra: Ultrafilter):
        if ultra.elems != system.index.elems:
            raise InvalidInstance("Ultrafilter lives on another ground")
        if not ultra.includes(frechet_filter(system.index)):
            raise InvalidInstance("Ultrafilter does not contain the final sections",
                                  {"principal_point": element_label(ultra.principal_point)})
        self.system = system
        self.ultra = ultra
        self._h_Ji: Dict[Tuple[FrozenSet[Index], Index], Homomorphism] = {}
        self._h_i: Dict[Index, Homomorphism] = {}

    @property
    def index(self):
        return self.system.index

    @property
    def ground(self) -> FrozenSet[Index]:
        return frozenset(self.index.elems)

    @cached_property
    def constant_support(self) -> bool:
        return len({A.support() for A in self.system.algebras.values()}) <= 1

    @cached_property
    def derived(self) -> InductiveSystem:
        """A(F) over (F, ⊇)"""
        return reduced_product_system(self.system.algebras, self.ultra)

    @cached_property
    def colimit(self) -> LimitResult:
        """lim→ A(F) with the legs p^J"""
        return inductive_limit(self.derived)

    @cached_property
    def limit(self) -> LimitResult:
        """lim← A with the legs f^i"""
        return projective_limit(self.system)

    def member(self, J: Iterable[Index]) -> FrozenSet[Index]:
        J = frozenset(J)
        if J not in self.ultra:
            raise JNotInFilter(f"{element_label(J)} is not in the ultrafilter", {"J": element_label(J)})
        return J


def vote_set(inst: RetractionInstance, J: Iterable[Index], i: Index, s: str, x: Tuple, y) -> FrozenSet[Index]:
    """V^{J,i,s}(x, y) = {j ∈ J ∩ ↑i | f^{j,i}_s(x_j) = y}"""
    J = inst.member(J)
    if s not in inst.system[i].support():
        raise SortNotSupported(f"Sort {s} is empty at index {element_label(i)}", {"sort": s, "index": element_label(i)})
    coords = canonical_sorted(J)
    return frozenset(j for n, j in enumerate(coords)
                     if inst.index.leq(i, j) and inst.system.map(i, j)(s, x[n]) == y)


def _tally(inst: RetractionInstance, J: FrozenSet[Index], i: Index, s: str, x: Tuple) -> Dict[Any, FrozenSet[Index]]:
    return {y: vote_set(inst, J, i, s, x, y) for y in inst.system[i].carrier.carrier(s)}


def h_Ji(inst: RetractionInstance, J: Iterable[Index], i: Index) -> Homomorphism:
    """h^{J,i}: A(J) -> A^i, x ↦ the unique y with V^{J,i,s}(x, y) ∈ F"""
    J = inst.member(J)
    key = (J, i)
    if key in inst._h_Ji:
        return inst._h_Ji[key]
    source, target = inst.derived[J], inst.system[i]
    if source.support() != target.support():
        inst.logger.warning("support hypothesis violated", extra={"subject": f"{element_label(J)}->{element_label(i)}"})
        raise VoteFailure(
            f"supp(A({element_label(J)})) differs from supp(A^{element_label(i)})",
            {"J": element_label(J), "i": element_label(i),
             "support_J": sorted(source.support()), "support_i": sorted(target.support())},
        )
    section = inst.index.up(i) & J
    tables = {}
    for s in source.sorts:
        table = {}
        for x in source.carrier.carrier(s):
            tally = _tally(inst, J, i, s, x)
            covered = frozenset().union(*tally.values()) if tally else frozenset()
            winners = [y for y, votes in tally.items() if votes in inst.ultra]
            if covered != section or len(winners) != 1:
                witness = {"J": element_label(J), "i": element_label(i), "sort": s, "x": element_label(x),
                           "tally": {element_label(y): element_label(v) for y, v in tally.items()}}
                inst.logger.warning("vote failed", extra={"subject": f"{element_label(J)}->{element_label(i)}"})
                raise VoteFailure(f"No unique winning vote for {element_label(x)}", witness)
            table[x] = winners[0]
        tables[s] = table
    h = Homomorphism(source, target, SortedMapping(source.carrier, target.carrier, tables))
    inst._h_Ji[key] = h
    return h


def h_Ji_compatibility_check(inst: RetractionInstance, J: Iterable[Index], K: Iterable[Index], i: Index) -> bool:
    """h^{J,i} ∘ p^{K,J} = h^{K,i} for K ⊇ J"""
    J, K = inst.member(J), inst.member(K)
    if not J <= K:
        raise InvalidInstance(f"{element_label(K)} does not contain {element_label(J)}")
    via = compose_hom(h_Ji(inst, J, i), inst.derived.hom(K, J))
    return _first_difference(via.map, h_Ji(inst, K, i).map) is None


def h_i(inst: RetractionInstance, i: Index) -> Homomorphism:
    """h^i: lim→ A(F) -> A^i, the map induced by the cocone (h^{J,i})_J"""
    if i not in inst._h_i:
        legs = {J: h_Ji(inst, J, i) for J in inst.ultra.members}
        inst._h_i[i] = mediating_from_colimit(inst.derived, inst.colimit, inst.system[i], legs)
    return inst._h_i[i]


def transition_coherence_check(inst: RetractionInstance, i: Index, k: Index) -> bool:
    """f^{k,i} ∘ h^k = h^i, and h^{J,i} = f^{k,i} ∘ h^{J,k} for every J ∈ F"""
    if not inst.index.leq(i, k):
        raise InvalidInstance(f"{element_label(i)} ≤ {element_label(k)} does not hold")
    f_ki = inst.system.hom(i, k)
    if _first_difference(compose_hom(f_ki, h_i(inst, k)).map, h_i(inst, i).map) is not None:
        return False
    return all(_first_difference(compose_hom(f_ki, h_Ji(inst, J, k)).map, h_Ji(inst, J, i).map) is None
               for J in inst.ultra.members)


def retraction_hom(inst: RetractionInstance) -> Homomorphism:
    """h^{(I,F),A}: lim→ A(F) -> lim← A with f^i ∘ h = h^i"""
    legs = {i: h_i(inst, i) for i in inst.index.elems}
    return mediating_into_limit(inst.system, inst.colimit.apex, legs, inst.limit)


def retraction_section(inst: RetractionInstance) -> Homomorphism:
    """p^I ∘ in: lim← A -> lim→ A(F)"""
    full = inst.derived[inst.ground]
    embed = Homomorphism(inst.limit.apex, full, SortedMapping.from_function(
        inst.limit.apex.carrier, full.carrier, lambda s, x: x))
    return compose_hom(inst.colimit.legs[inst.ground], embed)


def retraction_check(inst: RetractionInstance) -> Verdict:
    """h ∘ pr^{≡F} ∘ in = id on every thread of lim← A"""
    try:
        h = retraction_hom(inst)
        section = retraction_section(inst)
        full = inst.ground
        threads = 0
        for s in inst.limit.apex.sorts:
            for x in inst.limit.apex.carrier.carrier(s):
                threads += 1
                for n, i in enumerate(inst.index.elems):
                    if h_Ji(inst, full, i)(s, x) != x[n]:
                        return Verdict("retraction", False, {"threads": threads},
                                       {"thread": element_label(x), "sort": s, "index": element_label(i),
                                        "value": element_label(h_Ji(inst, full, i)(s, x))},
                                       message="h^{I,i} ∘ in differs from f^i")
                    votes = vote_set(inst, full, i, s, x, x[n])
                    if votes != inst.index.up(i):
                        return Verdict("retraction", False, {"threads": threads},
                                       {"thread": element_label(x), "sort": s, "index": element_label(i),
                                        "votes": element_label(votes), "final_section": element_label(inst.index.up(i))},
                                       message="vote set of a thread differs from the final section")
                back = h(s, section(s, x))
                if back != x:
                    return Verdict("retraction", False, {"threads": threads},
                                   {"thread": element_label(x), "sort": s, "image": element_label(back)},
                                   message="thread is not fixed by the retraction")
    except VoteFailure as e:
        return Verdict("retraction", False, {"constant_support": inst.constant_support},
                       {"code": e.code, **e.witness}, message=e.message)
    return Verdict("retraction", True, {"threads": threads, "constant_support": inst.constant_support,
                                        "principal_point": element_label(inst.ultra.principal_point)})


def principal_shape_check(inst: RetractionInstance) -> Verdict:
    """h^{J,i} = f^{p,i} ∘ pr^{J,p} where p is the principal point"""
    p = inst.ultra.principal_point
    try:
        for J in inst.ultra.members:
            coords = canonical_sorted(J)
            pos = coords.index(p)
            for i in inst.index.elems:
                h = h_Ji(inst, J, i)
                f_pi = inst.system.map(i, p)
                for s in h.source.sorts:
                    for x in h.source.carrier.carrier(s):
                        expected = f_pi(s, x[pos])
                        if h(s, x) != expected:
                            return Verdict("principal_shape", False, {"principal_point": element_label(p)},
                                           {"J": element_label(J), "i": element_label(i), "sort": s,
                                            "x": element_label(x), "voted": element_label(h(s, x)),
                                            "expected": element_label(expected)})
    except VoteFailure as e:
        return Verdict("principal_shape", False, {"principal_point": element_label(p)},
                       {"code": e.code, **e.witness}, message=e.message)
    return Verdict("principal_shape", True, {"principal_point": element_label(p)})


def vote_structure_check(inst: RetractionInstance) -> Verdict:
    """Vote sets partition J ∩ ↑i with exactly one in F; h^{J,i} compatible and coherent"""
    members = inst.ultra.members
    try:
        for J in members:
            for i in inst.index.elems:
                section = inst.index.up(i) & J
                source = inst.derived[J]
                for s in inst.system[i].support():
                    for x in source.carrier.carrier(s):
                        tally = _tally(inst, J, i, s, x)
                        votes = list(tally.values())
                        disjoint = sum(len(v) for v in votes) == len(frozenset().union(*votes))
                        covered = frozenset().union(*votes) == section
                        winners = sum(1 for v in votes if v in inst.ultra)
                        if not (disjoint and covered and winners == 1):
                            return Verdict("vote_structure", False, {},
                                           {"J": element_label(J), "i": element_label(i), "sort": s,
                                            "x": element_label(x),
                                            "tally": {element_label(y): element_label(v) for y, v in tally.items()}})
                h_Ji(inst, J, i)
        for J in members:
            for K in members:
                if J <= K:
                    for i in inst.index.elems:
                        if not h_Ji_compatibility_check(inst, J, K, i):
                            return Verdict("vote_structure", False, {},
                                           {"J": element_label(J), "K": element_label(K), "i": element_label(i)},
                                           message="h^{J,i} ∘ p^{K,J} differs from h^{K,i}")
        for i, k in canonical_sorted(inst.index.le):
            if not transition_coherence_check(inst, i, k):
                return Verdict("vote_structure", False, {}, {"i": element_label(i), "k": element_label(k)},
                               message="f^{k,i} ∘ h^k differs from h^i")
    except VoteFailure as e:
        return Verdict("vote_structure", False, {"constant_support": inst.constant_support},
                       {"code": e.code, **e.witness}, message=e.message)
    return Verdict("vote_structure", True, {"members": len(members)})


def system_morphism(source: ProjectiveSystem, target: ProjectiveSystem,
                    u: Mapping[Index, Union[SortedMapping, Homomorphism]]) -> Dict[Index, Homomorphism]:
    """Components of a morphism of projective systems, checked against every transition"""
    if target.index != source.index:
        raise NotASystemMorphism("Systems live over different preorders")
    homs = {}
    for i in source.index.elems:
        if i not in u:
            raise NotASystemMorphism(f"No component at {element_label(i)}", {"index": element_label(i)})
        m = u[i]
        try:
            homs[i] = Homomorphism(source[i], target[i], m.map if isinstance(m, Homomorphism) else m)
        except MsalgError as e:
            raise NotASystemMorphism(f"Component at {element_label(i)} is not a homomorphism: {e.message}",
                                     {"index": element_label(i), **e.witness}) from None
    for i, j in canonical_sorted(source.index.le):
        left = compose_hom(target.hom(i, j), homs[j])
        right = compose_hom(homs[i], source.hom(i, j))
        witness = _first_difference(left.map, right.map)
        if witness is not None:
            raise NotASystemMorphism("Components do not commute with the transitions",
                                     {"pair": f"{element_label(i)}≤{element_label(j)}", **witness})
    return homs


@dataclass
class NaturalitySuiteInput:
    """Retraction instance, a second system over the same index and a morphism u: A -> B

    With ``phi`` the cylinder equation along it is checked for both systems.
    """
    instance: RetractionInstance
    target: ProjectiveSystem
    u: Mapping[Index, SortedMapping]
    phi: Optional[UffsMorphism] = None

    def __post_init__(self):
        self.u = system_morphism(self.instance.system, self.target, self.u)
        if self.phi is not None and self.phi.target.index != self.instance.index:
            raise InvalidInstance("Reindexing map does not land in the index of the systems")

    @cached_property
    def target_instance(self) -> RetractionInstance:
        return RetractionInstance(self.target, self.instance.ultra)


def limit_map(data: NaturalitySuiteInput) -> Homomorphism:
    """lim← u: lim← A -> lim← B"""
    inst = data.instance
    legs = {i: compose_hom(data.u[i], inst.limit.legs[i]) for i in inst.index.elems}
    return mediating_into_limit(data.target, inst.limit.apex, legs, data.target_instance.limit)


def colimit_map(data: NaturalitySuiteInput) -> Homomorphism:
    """lim→ (u(J))_J: lim→ A(F) -> lim→ B(F), u(J) = ∏_{j∈J} u^j"""
    inst, other = data.instance, data.target_instance
    legs = {}
    for J in inst.ultra.members:
        coords = canonical_sorted(J)
        src, tgt = inst.derived[J], other.derived[J]
        uJ = Homomorphism(src, tgt, SortedMapping.from_function(
            src.carrier, tgt.carrier, lambda s, x, coords=coords: tuple(data.u[j](s, x[n]) for n, j in enumerate(coords))))
        legs[J] = compose_hom(other.colimit.legs[J], uJ)
    return mediating_from_colimit(inst.derived, inst.colimit, other.colimit.apex, legs)


def naturality_check(data: NaturalitySuiteInput) -> Verdict:
    """The naturality square, plus the cylinder equation for A and B when a reindexing map is given"""
    square = _naturality_square(data)
    if data.phi is None:
        return square
    return all_of("naturality", [square, cylinder_check(data.phi, data.instance.system),
                                 cylinder_check(data.phi, data.target)])


def _naturality_square(data: NaturalitySuiteInput) -> Verdict:
    """lim← u ∘ h_A = h_B ∘ lim→ u(J), and p^I ∘ in is a right inverse of h"""
    inst, other = data.instance, data.target_instance
    try:
        left = compose_hom(limit_map(data), retraction_hom(inst))
        right = compose_hom(retraction_hom(other), colimit_map(data))
    except VoteFailure as e:
        return Verdict("naturality", False, {}, {"code": e.code, **e.witness}, message=e.message)
    witness = _first_difference(left.map, right.map)
    if witness is not None:
        return Verdict("naturality", False, {}, witness, message="naturality square does not commute")
    for name, instance in (("source", inst), ("target", other)):
        round_trip = compose_hom(retraction_hom(instance), retraction_section(instance))
        witness = _first_difference(round_trip.map, SortedMapping.identity(instance.limit.apex.carrier))
        if witness is not None:
            return Verdict("naturality", False, {}, {"system": name, **witness},
                           message="p^I ∘ in is not a right inverse of h")
    return Verdict("naturality", True, {"elements": inst.colimit.apex.carrier.size()})


PhiLike = Union[UffsMorphism, IsotoneMap]


def _isotone(phi: PhiLike) -> IsotoneMap:
    return phi.phi if isinstance(phi, UffsMorphism) else phi


def reindex_system(phi: PhiLike, A: ProjectiveSystem) -> ProjectiveSystem:
    """A^φ = ((A^{φ(i)}), (f^{φ(j),φ(i)})) over the source of φ"""
    m = _isotone(phi)
    if m.target != A.index:
        raise InvalidInstance("System is not indexed by the codomain of the map")
    return ProjectiveSystem(m.source, {i: A[m(i)] for i in m.source.elems},
                            {(i, j): A.map(m(i), m(j)) for i, j in m.source.le})


def _instances(phi: UffsMorphism, A: ProjectiveSystem) -> Tuple[RetractionInstance, RetractionInstance]:
    """(A^φ with F_I, A with F_P)"""
    return (RetractionInstance(reindex_system(phi, A), phi.source.ultra),
            RetractionInstance(A, phi.target.ultra))


def p_phi(phi: PhiLike, A: ProjectiveSystem) -> Homomorphism:
    """𝔭^φ_A: lim←_P A -> lim←_I A^φ with f^{φ,i} ∘ 𝔭 = f^{φ(i)}"""
    m = _isotone(phi)
    reindexed = reindex_system(phi, A)
    limit_P = projective_limit(A)
    legs = {i: limit_P.legs[m(i)] for i in m.source.elems}
    return mediating_into_limit(reindexed, limit_P.apex, legs)


def _retag(m: IsotoneMap, J: FrozenSet[Index], src: Algebra, tgt: Algebra) -> Homomorphism:
    """∏_{j∈J} A^{φ(j)} ≅ ∏_{q∈φ[J]} A^q, reordering coordinates along the injective φ"""
    coords = canonical_sorted(J)
    back = {m(j): n for n, j in enumerate(coords)}
    picks = tuple(back[q] for q in canonical_sorted(m.image(J)))
    return Homomorphism(src, tgt, SortedMapping.from_function(
        src.carrier, tgt.carrier, lambda s, x: tuple(x[p] for p in picks)))


def q_phi(phi: UffsMorphism, A: ProjectiveSystem) -> Homomorphism:
    """𝔮^φ_A: lim→ A^φ(F_I) -> lim→ A(F_P) with 𝔮 ∘ p^J = p^{φ[J]}"""
    m = phi.phi
    src, dst = _instances(phi, A)
    legs = {}
    for J in src.ultra.members:
        image = frozenset(m.image(J))
        retag = _retag(m, J, src.derived[J], dst.derived[image])
        legs[J] = compose_hom(dst.colimit.legs[image], retag)
    return mediating_from_colimit(src.derived, src.colimit, dst.colimit.apex, legs)


def cylinder_check(phi: UffsMorphism, A: ProjectiveSystem) -> Verdict:
    """h^{(I,F_I)} at A^φ = 𝔭^φ ∘ h^{(P,F_P)} ∘ 𝔮^φ"""
    src, dst = _instances(phi, A)
    try:
        left = retraction_hom(src)
        right = compose_hom(p_phi(phi, A), compose_hom(retraction_hom(dst), q_phi(phi, A)))
    except VoteFailure as e:
        return Verdict("cylinder", False, {}, {"code": e.code, **e.witness}, message=e.message)
    witness = _first_difference(left.map, right.map)
    if witness is not None:
        return Verdict("cylinder", False, {}, witness, message="cylinder equation fails")
    return Verdict("cylinder", True, {"elements": src.colimit.apex.carrier.size()})


def composition_check(phi: UffsMorphism, psi: UffsMorphism, A: ProjectiveSystem) -> Verdict:
    """𝔭^{ψφ} = 𝔭^φ_{A^ψ} ∘ 𝔭^ψ_A, 𝔮^{ψφ} = 𝔮^ψ_A ∘ 𝔮^φ_{A^ψ} and the composite cylinder equation"""
    composite = phi.then(psi)
    A_psi = reindex_system(psi, A)
    parts: List[Verdict] = []
    try:
        p_left = p_phi(composite, A)
        p_right = compose_hom(p_phi(phi, A_psi), p_phi(psi, A))
        witness = _first_difference(p_left.map, p_right.map)
        parts.append(Verdict("p_composition", witness is None, {}, witness or {},
                             message=None if witness is None else "𝔭 composition law fails"))
        q_left = q_phi(composite, A)
        q_right = compose_hom(q_phi(psi, A), q_phi(phi, A_psi))
        witness = _first_difference(q_left.map, q_right.map)
        parts.append(Verdict("q_composition", witness is None, {}, witness or {},
                             message=None if witness is None else "𝔮 composition law fails"))
    except VoteFailure as e:
        return Verdict("composition", False, {}, {"code": e.code, **e.witness}, message=e.message)
    parts.append(cylinder_check(composite, A))
    return all_of("composition", parts)
