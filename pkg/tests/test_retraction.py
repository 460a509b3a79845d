"""
Tests for vote sets, the maps h^{J,i}, the retraction and its naturality
"""
import pytest

from msalg.errors import InvalidInstance, JNotInFilter, NotASystemMorphism, SortNotSupported, VoteFailure
from msalg.order_filters import IsotoneMap, Preorder, UffsMorphism, UffsObject, Ultrafilter, uffs
from msalg.sig_alg import Algebra, Homomorphism
from msalg.sorted_core import SortedMapping, SortedSet
from msalg.systems_limits import ProjectiveSystem
from msalg.retraction import (
    NaturalitySuiteInput,
    RetractionInstance,
    colimit_map,
    composition_check,
    cylinder_check,
    h_i,
    h_Ji,
    h_Ji_compatibility_check,
    limit_map,
    naturality_check,
    p_phi,
    principal_shape_check,
    q_phi,
    reindex_system,
    retraction_check,
    retraction_hom,
    retraction_section,
    system_morphism,
    transition_coherence_check,
    vote_set,
    vote_structure_check,
)

FULL = frozenset({"0", "1"})
TOP = frozenset({"1"})


@pytest.fixture
def inst(chain2, chain2_ultra):
    return RetractionInstance(chain2, chain2_ultra)


@pytest.fixture
def collapse(chain2, chain2_algebra, unary_sig):
    """System with one-point members and the unique morphism from CHAIN2 into it"""
    point = Algebra(unary_sig, SortedSet(("s",), {"s": ["p"]}), {"f": {("p",): "p"}})
    ident = SortedMapping.identity(point.carrier)
    target = ProjectiveSystem(chain2.index, {"0": point, "1": point}, {pair: ident for pair in chain2.index.le})
    to_point = SortedMapping(chain2_algebra.carrier, point.carrier, {"s": {"0": "p", "1": "p"}})
    return target, {"0": to_point, "1": to_point}


@pytest.mark.unit
class TestInstance:

    def test_ultrafilter_must_contain_final_sections(self, chain2):
        with pytest.raises(InvalidInstance):
            RetractionInstance(chain2, Ultrafilter.principal(chain2.index.elems, "0"))

    def test_ultrafilter_on_another_ground(self, chain2):
        with pytest.raises(InvalidInstance):
            RetractionInstance(chain2, Ultrafilter.principal(["0", "1", "2"], "1"))

    def test_member_outside_filter(self, inst):
        with pytest.raises(JNotInFilter):
            inst.member(["0"])
        assert inst.member(["1"]) == TOP


@pytest.mark.unit
class TestVotes:

    def test_vote_sets_of_a_mixed_tuple(self, inst):
        assert vote_set(inst, FULL, "0", "s", ("0", "1"), "1") == frozenset({"1"})
        assert vote_set(inst, FULL, "0", "s", ("0", "1"), "0") == frozenset({"0"})

    def test_votes_only_come_from_above(self, inst):
        # 0 is not above 1, so only the coordinate at 1 votes
        assert vote_set(inst, FULL, "1", "s", ("0", "1"), "1") == frozenset({"1"})
        assert vote_set(inst, FULL, "1", "s", ("0", "1"), "0") == frozenset()

    def test_winner_is_the_principal_coordinate(self, inst):
        assert h_Ji(inst, FULL, "0")("s", ("0", "1")) == "1"
        assert h_Ji(inst, FULL, "0")("s", ("1", "0")) == "0"
        assert h_Ji(inst, TOP, "0")("s", ("1",)) == "1"

    def test_h_Ji_is_cached(self, inst):
        assert h_Ji(inst, FULL, "1") is h_Ji(inst, FULL, "1")

    def test_vote_needs_a_member_of_the_filter(self, inst):
        with pytest.raises(JNotInFilter):
            vote_set(inst, ["0"], "0", "s", ("0",), "0")

    def test_unsupported_sort(self, support_drop):
        inst = RetractionInstance(support_drop, Ultrafilter.principal(["0", "1"], "1"))
        with pytest.raises(SortNotSupported):
            vote_set(inst, TOP, "1", "t", (), "x")

    def test_support_violation_raises(self, support_drop):
        inst = RetractionInstance(support_drop, Ultrafilter.principal(["0", "1"], "1"))
        with pytest.raises(VoteFailure) as excinfo:
            h_Ji(inst, FULL, "0")
        assert excinfo.value.witness["support_i"] == ["s", "t"]
        assert excinfo.value.witness["support_J"] == ["s"]


@pytest.mark.unit
class TestCompatibility:

    def test_restriction_compatibility(self, inst):
        assert h_Ji_compatibility_check(inst, TOP, FULL, "0")
        with pytest.raises(InvalidInstance):
            h_Ji_compatibility_check(inst, FULL, TOP, "0")

    def test_transition_coherence(self, inst):
        assert transition_coherence_check(inst, "0", "1")
        with pytest.raises(InvalidInstance):
            transition_coherence_check(inst, "1", "0")

    def test_h_i_on_colimit(self, inst):
        h = h_i(inst, "0")
        assert h.target == inst.system["0"]
        assert h.source == inst.colimit.apex


@pytest.mark.unit
class TestRetraction:

    def test_left_inverse(self, inst):
        h = retraction_hom(inst)
        section = retraction_section(inst)
        for x in inst.limit.apex.carrier.carrier("s"):
            assert h("s", section("s", x)) == x

    def test_checks_pass_on_chain2(self, inst):
        assert retraction_check(inst).passed
        assert principal_shape_check(inst).passed
        verdict = vote_structure_check(inst)
        assert verdict.passed and verdict.facts["members"] == 2

    def test_retraction_check_reports_vote_failure(self, support_drop):
        inst = RetractionInstance(support_drop, Ultrafilter.principal(["0", "1"], "1"))
        verdict = retraction_check(inst)
        assert not verdict.passed
        assert verdict.witness["code"] == "VOTE_FAILURE"
        assert verdict.facts["constant_support"] is False

    def test_non_principal_top_chain(self, chain2_algebra, unary_sig):
        # 0 ≤ 1 ≤ 2 with transitions collapsing 1 onto 0
        index = Preorder.chain(["0", "1", "2"])
        A = chain2_algebra
        ident = SortedMapping.identity(A.carrier)
        const = SortedMapping(A.carrier, A.carrier, {"s": {"0": "0", "1": "0"}})
        transitions = {pair: ident for pair in index.le}
        transitions[("0", "1")] = const
        transitions[("0", "2")] = const
        system = ProjectiveSystem(index, {i: A for i in index.elems}, transitions)
        inst = RetractionInstance(system, Ultrafilter.principal(index.elems, "2"))
        assert retraction_check(inst).passed
        assert vote_structure_check(inst).passed
        assert h_Ji(inst, frozenset({"2"}), "0")("s", ("1",)) == "0"


@pytest.mark.unit
class TestNaturality:

    def test_system_morphism(self, chain2, collapse):
        target, u = collapse
        homs = system_morphism(chain2, target, u)
        assert all(isinstance(h, Homomorphism) for h in homs.values())

    def test_missing_component(self, chain2, collapse):
        target, u = collapse
        with pytest.raises(NotASystemMorphism):
            system_morphism(chain2, target, {"0": u["0"]})

    def test_naturality_square(self, inst, collapse):
        target, u = collapse
        data = NaturalitySuiteInput(inst, target, u)
        assert limit_map(data).target == data.target_instance.limit.apex
        assert colimit_map(data).source == inst.colimit.apex
        assert naturality_check(data).passed

    def test_identity_morphism(self, inst, chain2):
        u = {i: SortedMapping.identity(chain2[i].carrier) for i in chain2.index.elems}
        assert naturality_check(NaturalitySuiteInput(inst, chain2, u)).passed

    def test_cylinder_along_a_reindexing_map(self, inst, collapse, chain2):
        target, u = collapse
        I = chain2.index
        tail = I.restrict(["1"])
        phi = UffsMorphism(uffs(tail)[0], uffs(I)[0], IsotoneMap.inclusion(tail, I))
        verdict = naturality_check(NaturalitySuiteInput(inst, target, u, phi=phi))
        assert verdict.passed
        assert verdict.facts["parts"] == 3

    def test_square_alone_without_reindexing_map(self, inst, collapse):
        target, u = collapse
        assert "parts" not in naturality_check(NaturalitySuiteInput(inst, target, u)).facts

    def test_reindexing_map_into_another_index(self, inst, collapse):
        target, u = collapse
        other = Preorder.chain(["a", "b"])
        phi = UffsMorphism.identity(UffsObject(other, Ultrafilter.principal(other.elems, "b")))
        with pytest.raises(InvalidInstance):
            NaturalitySuiteInput(inst, target, u, phi=phi)


@pytest.mark.unit
class TestReindexing:

    @pytest.fixture
    def tail_map(self, chain2):
        I = chain2.index
        tail = I.restrict(["1"])
        return UffsMorphism(uffs(tail)[0], uffs(I)[0], IsotoneMap.inclusion(tail, I))

    def test_reindexed_system(self, chain2, tail_map):
        reindexed = reindex_system(tail_map, chain2)
        assert reindexed.index.elems == ("1",)
        assert reindexed["1"] == chain2["1"]

    def test_p_and_q(self, chain2, tail_map):
        p = p_phi(tail_map, chain2)
        assert p("s", ("1", "1")) == ("1",)
        q = q_phi(tail_map, chain2)
        assert q.is_injective() and q.is_surjective()

    def test_cylinder(self, chain2, tail_map):
        assert cylinder_check(tail_map, chain2).passed

    def test_cylinder_for_identity(self, chain2):
        obj = UffsObject(chain2.index, Ultrafilter.principal(chain2.index.elems, "1"))
        assert cylinder_check(UffsMorphism.identity(obj), chain2).passed

    def test_composition(self, chain2, tail_map):
        ident = UffsMorphism.identity(tail_map.source)
        verdict = composition_check(ident, tail_map, chain2)
        assert verdict.passed
        assert verdict.facts["parts"] == 3
