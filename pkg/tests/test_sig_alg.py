"""
Tests for signatures, algebras, homomorphisms and isomorphism search
"""
import pytest

from msalg.errors import ArityMismatch, BadTuple, CapExceeded, InvalidAlgebra, NotAHomomorphism, NotClosed, NotCongruence
from msalg.sig_alg import (
    Algebra,
    Arity,
    Congruence,
    Homomorphism,
    Signature,
    SignatureMorphism,
    apply_op,
    checked_algebra,
    enumerate_homomorphisms,
    equalizer_algebra,
    factor_hom,
    final_algebra,
    find_isomorphism,
    generate_congruence,
    generate_subalgebra,
    induced_subalgebra,
    is_globally_empty,
    kernel_congruence,
    product_algebra,
    quotient_algebra,
    reduct,
    relabel,
    validate_algebra,
)
from msalg.sorted_core import SortedEquivalence, SortedMapping, SortedSet, compose


def z3(sig: Signature, names=("0", "1", "2")) -> Algebra:
    """Cyclic group of order 3 under a unary successor"""
    carrier = SortedSet(sig.sorts, {"s": list(names)})
    succ = {(names[k],): names[(k + 1) % 3] for k in range(3)}
    return Algebra(sig, carrier, {"f": succ})


@pytest.mark.unit
class TestAlgebra:

    def test_unknown_sort_in_arity(self):
        with pytest.raises(ArityMismatch):
            Signature(("s",), {"f": Arity(("t",), "s")})

    def test_validate_reports_totality_and_codomain(self, unary_sig):
        carrier = SortedSet(("s",), {"s": ["a", "b"]})
        A = Algebra(unary_sig, carrier, {"f": {("a",): "z"}})
        kinds = {d.kind for d in validate_algebra(A)}
        assert kinds == {"Totality", "Codomain"}
        with pytest.raises(InvalidAlgebra):
            checked_algebra(A)

    def test_apply_op_outside_domain(self, chain2_algebra):
        assert apply_op(chain2_algebra, "f", ["1"]) == "1"
        with pytest.raises(BadTuple):
            apply_op(chain2_algebra, "f", ["9"])

    def test_final_algebra_is_valid(self, unary_sig):
        assert validate_algebra(final_algebra(unary_sig)) == []

    def test_empty_carrier_gives_empty_table(self):
        sig = Signature(("s", "t"), {"g": Arity(("t",), "s")})
        A = Algebra(sig, SortedSet(sig.sorts, {"s": ["a"]}), {"g": {}})
        assert validate_algebra(A) == []


@pytest.mark.unit
class TestHomomorphism:

    def test_non_commuting_map_rejected(self, unary_sig):
        A = z3(unary_sig)
        swap = SortedMapping(A.carrier, A.carrier, {"s": {"0": "0", "1": "2", "2": "1"}})
        with pytest.raises(NotAHomomorphism):
            Homomorphism(A, A, swap)

    def test_enumerate_automorphisms_of_z3(self, unary_sig):
        A = z3(unary_sig)
        homs = list(enumerate_homomorphisms(A, A))
        assert len(homs) == 3
        assert all(h.is_injective() for h in homs)

    def test_product_projections_are_homomorphisms(self, unary_sig, chain2_algebra):
        P, pr = product_algebra({"0": z3(unary_sig), "1": chain2_algebra})
        assert P.carrier.size() == 6
        assert P.op("f", [("0", "1")]) == ("1", "1")
        assert pr["0"]("s", ("2", "0")) == "2"


@pytest.mark.unit
class TestSubalgebrasAndCongruences:

    def test_generated_subalgebra_closes_under_operations(self, unary_sig):
        A = z3(unary_sig)
        sub = generate_subalgebra(A, SortedSet(("s",), {"s": ["0"]}))
        assert sub.carrier == A.carrier

    def test_induced_subalgebra_must_be_closed(self, unary_sig):
        with pytest.raises(NotClosed):
            induced_subalgebra(SortedSet(("s",), {"s": ["0"]}), z3(unary_sig))

    def test_equalizer(self, unary_sig, chain2_algebra):
        const = SortedMapping(chain2_algebra.carrier, chain2_algebra.carrier, {"s": {"0": "0", "1": "0"}})
        f = Homomorphism(chain2_algebra, chain2_algebra, const)
        E, e = equalizer_algebra(f, Homomorphism.identity(chain2_algebra))
        assert E.carrier.carrier("s") == ("0",)

    def test_generated_congruence_propagates(self, unary_sig):
        A = z3(unary_sig)
        theta = generate_congruence(A, {"s": [("0", "1")]})
        assert theta == Congruence.total(A)

    def test_incompatible_equivalence_rejected(self, unary_sig):
        A = z3(unary_sig)
        with pytest.raises(NotCongruence):
            Congruence(A, SortedEquivalence(A.carrier, {"s": (("0", "1"), ("2",))}))

    def test_quotient_and_factor(self, unary_sig, chain2_algebra):
        const = Homomorphism(chain2_algebra, final_algebra(unary_sig),
                             SortedMapping.from_function(chain2_algebra.carrier,
                                                         final_algebra(unary_sig).carrier, lambda s, x: "⋆"))
        theta = kernel_congruence(const)
        Q, pr = quotient_algebra(chain2_algebra, theta)
        assert Q.carrier.carrier("s") == ("0",)
        p = factor_hom(const, theta)
        assert compose(p.map, pr.map) == const.map


@pytest.mark.unit
class TestIsomorphism:

    def test_relabel_is_isomorphic(self, unary_sig):
        A = z3(unary_sig, ("x", "y", "z"))
        copy, iso = relabel(A)
        assert copy.carrier.carrier("s") == ("e0", "e1", "e2")
        assert iso.is_injective() and iso.is_surjective()
        assert find_isomorphism(A, copy) is not None

    def test_non_isomorphic(self, unary_sig, chain2_algebra):
        three = z3(unary_sig)
        fixed = Algebra(unary_sig, three.carrier, {"f": {(x,): x for x in ("0", "1", "2")}})
        assert find_isomorphism(three, fixed) is None
        assert find_isomorphism(three, chain2_algebra) is None

    def test_search_cap(self):
        sig = Signature(("s",), {})
        names = [f"a{k}" for k in range(6)]
        A = Algebra(sig, SortedSet(("s",), {"s": names}), {})
        B = Algebra(sig, SortedSet(("s",), {"s": [f"b{k}" for k in range(6)]}), {})
        assert find_isomorphism(A, B) is not None
        with pytest.raises(CapExceeded):
            find_isomorphism(A, B, max_nodes=2)


@pytest.mark.unit
class TestGlobalEmptiness:

    def test_missing_sort_is_globally_empty(self):
        sig = Signature(("s", "t"), {})
        A = Algebra(sig, SortedSet(sig.sorts, {"s": ["a"]}), {})
        assert is_globally_empty(A)

    def test_initial_is_not_globally_empty(self, unary_sig):
        A = Algebra(unary_sig, SortedSet.initial(("s",)), {"f": {}})
        assert not is_globally_empty(A)

    def test_no_fixed_point_is_globally_empty(self, unary_sig):
        assert is_globally_empty(z3(unary_sig))

    def test_fixed_point_is_not_globally_empty(self, chain2_algebra):
        assert not is_globally_empty(chain2_algebra)


@pytest.mark.unit
def test_reduct_along_identity(unary_sig, chain2_algebra):
    d = SignatureMorphism.identity(unary_sig)
    assert reduct(d, chain2_algebra) == chain2_algebra
