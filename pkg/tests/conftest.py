"""
Shared fixtures: small hand-checked instances
"""
import pytest

from msalg.order_filters import Preorder, Ultrafilter
from msalg.sig_alg import Algebra, Arity, Signature
from msalg.sorted_core import SortedMapping, SortedSet
from msalg.systems_limits import InductiveSystem, ProjectiveSystem

# chain 0 ≤ 1, one sort, unary f acting as the identity, carriers {0, 1}
CHAIN2_TEXT = """\
sorts s;

signature S {
  op f : s -> s;
}

algebra A0 over S {
  carrier s = { 0 1 };
  op f(0) = 0;
  op f(1) = 1;
}

algebra A1 over S {
  carrier s = { 0 1 };
  op f(0) = 0;
  op f(1) = 1;
}

hom id10 : A1 -> A0 {
  s: 0 -> 0, 1 -> 1;
}

preorder I {
  elems 0 1;
  le 0 1;
}

projsys P over I {
  at 0 = A0;
  at 1 = A1;
  map 1 -> 0 = id10;
}

indsys D over I {
  at 0 = A0;
  at 1 = A1;
  map 0 -> 1 = id10;
}

ultrafilter U on I = principal 1;

filter Ffs on I = finalsections;

filter Fp on I = principal { 1 };

family F on I {
  at 0 = A0;
  at 1 = A1;
}

isomap iota : I -> I {
  at 0 = 0;
  at 1 = 1;
}
"""


def unary_identity_algebra(sig: Signature, elems) -> Algebra:
    carrier = SortedSet(sig.sorts, {"s": list(elems)})
    return Algebra(sig, carrier, {"f": {(x,): x for x in elems}})


@pytest.fixture
def unary_sig():
    return Signature(("s",), {"f": Arity(("s",), "s")})


@pytest.fixture
def chain2_index():
    return Preorder.chain(["0", "1"])


@pytest.fixture
def chain2_algebra(unary_sig):
    return unary_identity_algebra(unary_sig, ["0", "1"])


@pytest.fixture
def chain2(chain2_index, chain2_algebra):
    """Projective system with identity transitions"""
    ident = SortedMapping.identity(chain2_algebra.carrier)
    return ProjectiveSystem(chain2_index, {"0": chain2_algebra, "1": chain2_algebra},
                            {pair: ident for pair in chain2_index.le})


@pytest.fixture
def chain2_inductive(chain2_index, chain2_algebra):
    ident = SortedMapping.identity(chain2_algebra.carrier)
    return InductiveSystem(chain2_index, {"0": chain2_algebra, "1": chain2_algebra},
                           {pair: ident for pair in chain2_index.le})


@pytest.fixture
def chain2_ultra(chain2_index):
    return Ultrafilter.principal(chain2_index.elems, "1")


@pytest.fixture
def support_drop():
    """Chain 0 ≤ 1 over sorts s, t where the sort t is empty at the top only"""
    sig = Signature(("s", "t"), {})
    index = Preorder.chain(["0", "1"])
    low = Algebra(sig, SortedSet(sig.sorts, {"s": ["a"], "t": ["x"]}), {})
    high = Algebra(sig, SortedSet(sig.sorts, {"s": ["a"]}), {})
    transitions = {
        ("0", "0"): SortedMapping.identity(low.carrier),
        ("1", "1"): SortedMapping.identity(high.carrier),
        ("0", "1"): SortedMapping(high.carrier, low.carrier, {"s": {"a": "a"}, "t": {}}),
    }
    return ProjectiveSystem(index, {"0": low, "1": high}, transitions)


@pytest.fixture
def chain2_text():
    return CHAIN2_TEXT


@pytest.fixture
def chain2_file(tmp_path):
    path = tmp_path / "chain2.msa"
    path.write_text(CHAIN2_TEXT, encoding="utf-8")
    return path
