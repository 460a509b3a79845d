"""
Tests for the seeded instance generator
"""
import pytest
from hypothesis import given, settings as hyp_settings
from hypothesis import strategies as st
from pydantic import ValidationError

from msalg.generator import generate, generate_text
from msalg.models import GeneratorConfig
from msalg.order_filters import uffs
from msalg.retraction import RetractionInstance, retraction_check
from msalg.spec_dsl import parse
from msalg.systems_limits import validate_inductive_system, validate_projective_system


@pytest.mark.unit
class TestGeneratorConfig:

    def test_defaults(self):
        config = GeneratorConfig()
        assert config.seed == 0 and config.sorts == 2

    def test_contradicting_flags(self):
        with pytest.raises(ValidationError):
            GeneratorConfig(inject_support_violation=True, force_constant_support=True)

    def test_violation_needs_two_sorts(self):
        with pytest.raises(ValidationError):
            GeneratorConfig(inject_support_violation=True, sorts=1)

    def test_violation_needs_two_indices(self):
        with pytest.raises(ValidationError):
            GeneratorConfig(inject_support_violation=True, index_size=1)

    def test_bounds(self):
        with pytest.raises(ValidationError):
            GeneratorConfig(carrier_size=9)


@pytest.mark.unit
class TestGenerator:

    def test_same_seed_same_bytes(self):
        config = GeneratorConfig(seed=7)
        assert generate_text(config) == generate_text(GeneratorConfig(seed=7))

    def test_different_seeds_differ(self):
        texts = {generate_text(GeneratorConfig(seed=n)) for n in range(5)}
        assert len(texts) > 1

    def test_generated_text_parses(self):
        instance = generate(GeneratorConfig(seed=3))
        assert parse(generate_text(GeneratorConfig(seed=3))) == instance

    def test_declared_kinds(self):
        kinds = {d.kind for d in generate(GeneratorConfig(seed=1))}
        assert kinds == {"signature", "algebra", "hom", "preorder", "projsys", "indsys", "family",
                         "ultrafilter", "filter", "sysmap", "isomap"}

    def test_constant_support_flag(self):
        instance = generate(GeneratorConfig(seed=5, force_constant_support=True))
        supports = {A.support() for A in instance.get("P").value.algebras.values()}
        assert len(supports) == 1

    def test_surjective_flag(self):
        P = generate(GeneratorConfig(seed=5, force_surjective_transitions=True)).get("P").value
        assert all(m.is_surjective() for m in P.transitions.values())

    def test_support_violation_flag(self):
        instance = generate(GeneratorConfig(seed=2, inject_support_violation=True))
        P = instance.get("P").value
        assert len({A.support() for A in P.algebras.values()}) > 1
        verdict = retraction_check(RetractionInstance(P, instance.get("U").value))
        assert not verdict.passed
        assert verdict.witness["code"] == "VOTE_FAILURE"


configs = st.builds(
    GeneratorConfig,
    seed=st.integers(min_value=0, max_value=2**32),
    sorts=st.integers(min_value=1, max_value=2),
    carrier_size=st.integers(min_value=1, max_value=2),
    ops=st.integers(min_value=0, max_value=2),
    index_size=st.integers(min_value=1, max_value=3),
    max_arity=st.integers(min_value=0, max_value=2),
    force_constant_support=st.booleans(),
)


@given(configs)
@hyp_settings(max_examples=25, deadline=None)
def test_generated_systems_are_valid(config):
    instance = generate(config)
    assert validate_projective_system(instance.get("P").value) == []
    assert validate_projective_system(instance.get("P2").value) == []
    assert validate_inductive_system(instance.get("D").value) == []


@given(st.integers(min_value=0, max_value=2**32))
@hyp_settings(max_examples=15, deadline=None)
def test_constant_support_retracts(seed):
    instance = generate(GeneratorConfig(seed=seed, force_constant_support=True, index_size=2, carrier_size=2))
    P = instance.get("P").value
    assert retraction_check(RetractionInstance(P, instance.get("U").value)).passed


def declared_ultrafilters(instance):
    return [(d.name, d.refs["points"][0]) for d in instance.of_kind("ultrafilter")]


@pytest.mark.unit
class TestTops:

    def test_tops_form_one_cycle(self):
        sizes = []
        for seed in range(20):
            instance = generate(GeneratorConfig(seed=seed, index_size=4, max_tops=3))
            index = instance.get("I").value
            tops = index.tops
            assert all(index.leq(a, b) for a in tops for b in tops)
            assert tops == tuple(index.elems[len(index.elems) - len(tops):])
            names = ["U"] + [f"U{n}" for n in range(2, len(tops) + 1)]
            assert declared_ultrafilters(instance) == list(zip(names, tops))
            sizes.append(len(tops))
        assert max(sizes) > 1
        assert max(sizes) <= 3

    def test_single_top_when_capped(self):
        for seed in range(5):
            index = generate(GeneratorConfig(seed=seed, max_tops=1)).get("I").value
            assert index.tops == (index.elems[-1],)

    def test_uffs_has_one_object_per_top(self):
        counts = set()
        for seed in range(10):
            index = generate(GeneratorConfig(seed=seed, index_size=3, max_tops=3)).get("I").value
            objects = uffs(index)
            assert len(objects) == len(index.tops)
            counts.add(len(objects))
        assert max(counts) > 1

    def test_violation_keeps_first_index_below_the_tops(self):
        for seed in range(10):
            index = generate(GeneratorConfig(seed=seed, index_size=2, max_tops=2,
                                             inject_support_violation=True)).get("I").value
            assert index.elems[0] not in index.tops

    def test_retraction_at_every_top(self):
        checked = 0
        for seed in range(10):
            instance = generate(GeneratorConfig(seed=seed, index_size=3, max_tops=3, carrier_size=2,
                                                force_constant_support=True))
            P = instance.get("P").value
            for name, _ in declared_ultrafilters(instance):
                assert retraction_check(RetractionInstance(P, instance.get(name).value)).passed
                checked += 1
        assert checked > 10

    def test_violation_fails_at_every_top(self):
        for seed in range(5):
            instance = generate(GeneratorConfig(seed=seed, index_size=3, max_tops=2,
                                                inject_support_violation=True))
            P = instance.get("P").value
            for name, _ in declared_ultrafilters(instance):
                verdict = retraction_check(RetractionInstance(P, instance.get(name).value))
                assert verdict.witness["code"] == "VOTE_FAILURE"
