"""
Tests for sorted sets and sorted mappings
"""
import itertools

import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st

from msalg.errors import CapExceeded, InvalidMapping, InvalidSortedSet, NotRefining, PartitionMismatch
from msalg.sorted_core import (
    STAR,
    IndexedFamily,
    SortedEquivalence,
    SortedMapping,
    SortedSet,
    Tagged,
    canonical_sorted,
    compose,
    constant_support_check,
    coproduct,
    element_label,
    enumerate_mappings,
    equalizer,
    factor_through,
    hom_exists,
    kernel,
    mapping_count,
    product,
    quotient,
    support_of_product_law,
)

SORTS = ("s", "t")

carriers = st.fixed_dictionaries({
    s: st.lists(st.sampled_from(["a", "b", "c"]), unique=True, max_size=3) for s in SORTS
})


@pytest.mark.unit
class TestSortedSet:

    def test_carriers_are_canonically_ordered(self):
        A = SortedSet(SORTS, {"s": ["b", "a"]})
        assert A.carrier("s") == ("a", "b")
        assert A.carrier("t") == ()

    def test_duplicate_elements_rejected(self):
        with pytest.raises(InvalidSortedSet):
            SortedSet(SORTS, {"s": ["a", "a"]})

    def test_unknown_sort_rejected(self):
        with pytest.raises(InvalidSortedSet):
            SortedSet(SORTS, {"u": ["a"]})

    def test_support_and_initial(self):
        A = SortedSet(SORTS, {"t": ["a"]})
        assert A.support() == frozenset({"t"})
        assert SortedSet.initial(SORTS).is_initial()
        assert SortedSet.final(SORTS).carrier("s") == (STAR,)

    def test_mixed_elements_sort_deterministically(self):
        items = [("a", "b"), "z", Tagged("a", "0"), frozenset({"x"})]
        assert canonical_sorted(items) == ("z", ("a", "b"), Tagged("a", "0"), frozenset({"x"}))

    def test_element_label(self):
        assert element_label(("a", ("b", "c"))) == "(a,(b,c))"
        assert element_label(frozenset({"1", "0"})) == "{0,1}"


@pytest.mark.unit
class TestSortedMapping:

    def test_partial_table_rejected(self):
        A = SortedSet(SORTS, {"s": ["a", "b"]})
        with pytest.raises(InvalidMapping):
            SortedMapping(A, A, {"s": {"a": "a"}})

    def test_image_outside_target_rejected(self):
        A = SortedSet(SORTS, {"s": ["a"]})
        B = SortedSet(SORTS, {"s": ["b"]})
        with pytest.raises(InvalidMapping):
            SortedMapping(A, B, {"s": {"a": "a"}})

    def test_compose(self):
        A = SortedSet(SORTS, {"s": ["a", "b"]})
        B = SortedSet(SORTS, {"s": ["c"]})
        f = SortedMapping(A, B, {"s": {"a": "c", "b": "c"}})
        g = SortedMapping(B, A, {"s": {"c": "b"}})
        assert compose(g, f).tables["s"] == {"a": "b", "b": "b"}
        assert not f.is_injective()
        assert f.is_surjective()

    def test_hom_exists_iff_support_inclusion(self):
        A = SortedSet(SORTS, {"s": ["a"], "t": ["b"]})
        B = SortedSet(SORTS, {"s": ["a"]})
        assert hom_exists(B, A)
        assert not hom_exists(A, B)
        assert next(enumerate_mappings(A, B), None) is None

    def test_enumeration_cap(self):
        A = SortedSet(SORTS, {"s": ["a", "b", "c"]})
        assert mapping_count(A, A) == 27
        with pytest.raises(CapExceeded):
            list(enumerate_mappings(A, A, cap=10))


@pytest.mark.unit
class TestUniversalConstructions:

    def test_empty_product_is_final(self):
        P, projections = product(IndexedFamily((), {}, SORTS))
        assert P == SortedSet.final(SORTS)
        assert projections == {}

    def test_product_and_projections(self):
        A = SortedSet(SORTS, {"s": ["a", "b"], "t": ["c"]})
        B = SortedSet(SORTS, {"s": ["d"], "t": ["e"]})
        P, pr = product(IndexedFamily(("0", "1"), {"0": A, "1": B}))
        assert P.carrier("s") == (("a", "d"), ("b", "d"))
        assert pr["1"]("t", ("c", "e")) == "e"

    def test_coproduct_tags_elements(self):
        A = SortedSet(SORTS, {"s": ["a"]})
        C, inj = coproduct(IndexedFamily(("0", "1"), {"0": A, "1": A}))
        assert C.carrier("s") == (Tagged("a", "0"), Tagged("a", "1"))
        assert inj["1"]("s", "a") == Tagged("a", "1")

    def test_equalizer(self):
        A = SortedSet(SORTS, {"s": ["a", "b"]})
        f = SortedMapping(A, A, {"s": {"a": "a", "b": "a"}})
        E, e = equalizer(f, SortedMapping.identity(A))
        assert E.carrier("s") == ("a",)
        assert e("s", "a") == "a"

    def test_quotient_and_factorization(self):
        A = SortedSet(SORTS, {"s": ["a", "b", "c"]})
        B = SortedSet(SORTS, {"s": ["x", "y"]})
        f = SortedMapping(A, B, {"s": {"a": "x", "b": "x", "c": "y"}})
        phi = kernel(f)
        Q, pr = quotient(A, phi)
        assert Q.carrier("s") == ("a", "c")
        p = factor_through(f, phi)
        assert compose(p, pr) == f

    def test_factor_through_requires_refinement(self):
        A = SortedSet(SORTS, {"s": ["a", "b"]})
        f = SortedMapping.identity(A)
        with pytest.raises(NotRefining):
            factor_through(f, SortedEquivalence.total(A))

    def test_partition_must_cover(self):
        A = SortedSet(SORTS, {"s": ["a", "b"]})
        with pytest.raises(PartitionMismatch):
            SortedEquivalence(A, {"s": (("a",),)})

    def test_constant_support(self):
        A = SortedSet(SORTS, {"s": ["a"]})
        B = SortedSet(SORTS, {"s": ["b"], "t": ["c"]})
        assert constant_support_check(IndexedFamily(("0", "1"), {"0": A, "1": A}))
        assert not constant_support_check(IndexedFamily(("0", "1"), {"0": A, "1": B}))


@given(carriers, carriers, carriers)
@hyp_settings(max_examples=50, deadline=None)
def test_support_of_product_is_intersection(a, b, c):
    family = IndexedFamily(("0", "1", "2"), {
        "0": SortedSet(SORTS, a), "1": SortedSet(SORTS, b), "2": SortedSet(SORTS, c),
    })
    assert support_of_product_law(family)


@given(carriers, carriers)
@hyp_settings(max_examples=50, deadline=None)
def test_hom_exists_matches_enumeration(a, b):
    A, B = SortedSet(SORTS, a), SortedSet(SORTS, b)
    assert hom_exists(A, B) == (next(enumerate_mappings(A, B), None) is not None)


def all_small_sets(sorts):
    """Every sorted set over ``sorts`` with carriers of at most two elements"""
    for sizes in itertools.product(range(3), repeat=len(sorts)):
        yield SortedSet(sorts, {s: ["a", "b"][:n] for s, n in zip(sorts, sizes)})


def all_equivalences(A: SortedSet):
    for pick in itertools.product(*[[0, 1] for _ in A.sorts]):
        discrete, total = SortedEquivalence.discrete(A), SortedEquivalence.total(A)
        yield SortedEquivalence(A, {s: (total if k else discrete).classes[s] for s, k in zip(A.sorts, pick)})


@pytest.mark.parametrize("sorts", [("s",), ("s", "t")])
class TestSupportLawsExhaustively:

    def test_hom_exists_iff_support_inclusion(self, sorts):
        for A, B in itertools.product(all_small_sets(sorts), repeat=2):
            brute = next(enumerate_mappings(A, B), None) is not None
            assert hom_exists(A, B) == brute == (A.support() <= B.support()), (A, B)

    def test_surjections_keep_support(self, sorts):
        for A, B in itertools.product(all_small_sets(sorts), repeat=2):
            for f in enumerate_mappings(A, B):
                if f.is_surjective():
                    assert A.support() == B.support(), (A, B)

    def test_quotients_keep_support(self, sorts):
        for A in all_small_sets(sorts):
            for phi in all_equivalences(A):
                Q, projection = quotient(A, phi)
                assert Q.support() == A.support()
                assert projection.is_surjective()

    def test_product_support_is_intersection(self, sorts):
        sets = list(all_small_sets(sorts))
        for n in (1, 2, 3):
            for members in itertools.product(sets, repeat=n):
                family = IndexedFamily(tuple(range(n)), dict(enumerate(members)))
                P, _ = product(family)
                expected = frozenset(sorts).intersection(*(A.support() for A in members))
                assert P.support() == expected
                assert support_of_product_law(family)
