"""
Tests for preorders, filters, ultrafilters and Uffs morphisms
"""
import itertools

import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st

from msalg.errors import InvalidFilter, InvalidMap, InvalidPreorder, NotABasis, NotAUffsMorphism
from msalg.order_filters import (
    Filter,
    IsotoneMap,
    Preorder,
    UffsMorphism,
    UffsObject,
    Ultrafilter,
    brute_force_ultrafilters,
    co_optimal_lift,
    enumerate_filters,
    filter_from_basis,
    frechet_filter,
    is_ultrafilter,
    principal_filter,
    ultrafilters_containing,
    uffs,
    uffs_map,
)


def diamond() -> Preorder:
    """a ≤ b, a ≤ c, b ≤ d, c ≤ d"""
    return Preorder.generated("abcd", [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")])


@pytest.mark.unit
class TestPreorder:

    def test_chain_closure(self):
        I = Preorder.chain(["0", "1", "2"])
        assert I.leq("0", "2")
        assert I.up("1") == frozenset({"1", "2"})
        assert I.tops == ("2",)
        assert I.covers() == [("0", "1"), ("1", "2")]

    def test_covers_generate_a_cycle_of_tops(self):
        I = Preorder.generated(("0", "1", "2"), [("0", "1"), ("1", "2"), ("2", "1")])
        assert I.tops == ("1", "2")
        assert I.covers() == [("0", "1"), ("0", "2"), ("1", "2"), ("2", "1")]
        assert Preorder.generated(I.elems, I.covers()) == I

    def test_not_directed(self):
        with pytest.raises(InvalidPreorder):
            Preorder.generated("abc", [("a", "b"), ("a", "c")])

    def test_not_transitive(self):
        le = {(x, x) for x in "abc"} | {("a", "b"), ("b", "c")}
        with pytest.raises(InvalidPreorder):
            Preorder(tuple("abc"), frozenset(le))

    def test_empty_rejected(self):
        with pytest.raises(InvalidPreorder):
            Preorder((), frozenset())

    def test_upper_bound_picks_least_minimal(self):
        I = diamond()
        assert I.upper_bound(["b", "c"]) == "d"
        assert I.upper_bound(["a"]) == "a"

    def test_cycle_gives_two_tops(self):
        I = Preorder.generated("ab", [("a", "b"), ("b", "a")])
        assert I.tops == ("a", "b")


@pytest.mark.unit
class TestFilters:

    def test_principal_filter_members(self):
        F = principal_filter("abc", ["a"])
        assert F.core == frozenset({"a"})
        assert len(F.members) == 4
        assert F.contains(["a", "c"])
        assert not F.contains(["b"])

    def test_empty_generator_rejected(self):
        with pytest.raises(InvalidFilter):
            principal_filter("abc", [])

    def test_not_upward_closed(self):
        with pytest.raises(InvalidFilter):
            Filter("ab", [["a"], ["a", "b"], ["b"]])

    def test_final_sections_of_diamond(self):
        F = frechet_filter(diamond())
        assert F.core == frozenset({"d"})
        assert F == principal_filter("abcd", ["d"])

    def test_not_a_basis(self):
        with pytest.raises(NotABasis):
            filter_from_basis([["a"], ["b"]], "ab")

    def test_ultrafilter_is_principal(self):
        U = Ultrafilter.principal("abc", "b")
        assert U.principal_point == "b"
        assert is_ultrafilter(U)
        assert not is_ultrafilter(principal_filter("abc", ["a", "b"]))

    def test_non_maximal_filter_is_not_an_ultrafilter(self):
        with pytest.raises(InvalidFilter):
            Ultrafilter("abc", principal_filter("abc", ["a", "b"]).masks)

    def test_ultrafilters_containing(self):
        F = principal_filter("abc", ["a", "c"])
        points = [U.principal_point for U in ultrafilters_containing(F)]
        assert points == ["a", "c"]

    def test_enumerated_filters_of_two_points(self):
        # {ab}, {a, ab}, {b, ab}
        assert len(enumerate_filters("ab")) == 3


ground_subsets = st.lists(st.sampled_from("abc"), min_size=1, unique=True)


@given(ground_subsets)
@hyp_settings(max_examples=30, deadline=None)
def test_ultrafilters_match_brute_force(core):
    F = principal_filter("abc", core)
    fast = sorted((frozenset(U.members) for U in ultrafilters_containing(F)), key=len)
    slow = brute_force_ultrafilters(F)
    assert set(fast) == set(slow)


@pytest.mark.unit
class TestIsotoneMaps:

    def test_not_isotone(self):
        I = Preorder.chain(["0", "1"])
        with pytest.raises(InvalidMap):
            IsotoneMap(I, I, {"0": "1", "1": "0"})

    def test_inclusion_of_tail_is_cofinal(self):
        I = diamond()
        tail = I.restrict(I.up("b"))
        phi = IsotoneMap.inclusion(tail, I)
        assert phi.injective and phi.cofinal

    def test_lift_of_ultrafilter(self):
        I = diamond()
        tail = I.restrict(I.up("b"))
        phi = IsotoneMap.inclusion(tail, I)
        lifted = co_optimal_lift(phi, Ultrafilter.principal(tail.elems, "d"))
        assert isinstance(lifted, Ultrafilter)
        assert lifted.principal_point == "d"

    def test_lift_of_filter_stays_a_filter(self):
        I = diamond()
        lifted = co_optimal_lift(IsotoneMap.identity(I), principal_filter(I.elems, ["b", "c"]))
        assert lifted.core == frozenset({"b", "c"})


@pytest.mark.unit
class TestUffs:

    def test_uffs_of_diamond(self):
        objs = uffs(diamond())
        assert [o.ultra.principal_point for o in objs] == ["d"]

    def test_object_requires_final_sections(self):
        I = diamond()
        with pytest.raises(InvalidFilter):
            UffsObject(I, Ultrafilter.principal(I.elems, "a"))

    def test_morphism_and_composition(self):
        I = diamond()
        tail = I.restrict(I.up("b"))
        top = tail.restrict(tail.up("d"))
        phi = UffsMorphism(uffs(top)[0], uffs(tail)[0], IsotoneMap.inclusion(top, tail))
        psi = UffsMorphism(uffs(tail)[0], uffs(I)[0], IsotoneMap.inclusion(tail, I))
        composite = phi.then(psi)
        assert composite.target == uffs(I)[0]
        assert uffs_map(composite.phi, composite.source) == composite.target

    def test_non_cofinal_map_rejected(self):
        I = Preorder.chain(["0", "1"])
        low = I.restrict(["0"])
        with pytest.raises(NotAUffsMorphism):
            UffsMorphism(uffs(low)[0], uffs(I)[0], IsotoneMap.inclusion(low, I))


def plain_maps(source: str, target: str):
    for images in itertools.product(target, repeat=len(source)):
        yield dict(zip(source, images))


@pytest.mark.parametrize("size", [1, 2, 3, pytest.param(4, marks=pytest.mark.slow)])
def test_every_filter_matches_brute_force(size):
    for F in enumerate_filters("abcd"[:size]):
        fast = {frozenset(U.members) for U in ultrafilters_containing(F)}
        assert fast == set(brute_force_ultrafilters(F)), F


@pytest.mark.parametrize("sizes", list(itertools.product((1, 2, 3), repeat=3)))
def test_lift_is_functorial(sizes):
    X, Y, Z = ("abc"[:sizes[0]], "pqr"[:sizes[1]], "xyz"[:sizes[2]])
    filters = enumerate_filters(X)
    for phi in plain_maps(X, Y):
        for psi in plain_maps(Y, Z):
            composite = {i: psi[phi[i]] for i in X}
            for F in filters:
                stepwise = co_optimal_lift(psi, co_optimal_lift(phi, F, Y), Z)
                assert co_optimal_lift(composite, F, Z) == stepwise


@pytest.mark.unit
def test_lift_along_composed_isotone_maps():
    I = diamond()
    tail = I.restrict(I.up("b"))
    top = tail.restrict(tail.up("d"))
    phi = IsotoneMap.inclusion(top, tail)
    psi = IsotoneMap.inclusion(tail, I)
    for F in enumerate_filters(top.elems):
        assert co_optimal_lift(phi.then(psi), F) == co_optimal_lift(psi, co_optimal_lift(phi, F))
