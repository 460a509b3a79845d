"""
Seeded random instance generator

Every member algebra is a subquotient X/Θ of one random base algebra B. For
a projective system larger indices get smaller subalgebras and finer
congruences, so [x] ↦ [x] is a homomorphism A^j -> A^i for i ≤ j and the
transitions compose by construction; an inductive system uses the dual
choice. Same seed and configuration give the same instance.
"""
import random
from typing import Dict, List, Optional, Tuple

from .logging_config import LoggerMixin
from .metrics import metrics_collector
from .models import GeneratorConfig
from .order_filters import IsotoneMap, Preorder, Ultrafilter, frechet_filter, principal_filter
from .sig_alg import Algebra, Arity, Homomorphism, Signature, generate_congruence, generate_subalgebra, quotient_algebra
from .sorted_core import SortedMapping, SortedSet, canonical_sorted
from .spec_dsl import Declaration, InstanceFile, serialize
from .systems_limits import InductiveSystem, ProjectiveSystem

Seeds = Dict[str, Dict[str, List[str]]]
Pairs = Dict[str, Dict[str, List[Tuple[str, str]]]]


class InstanceGenerator(LoggerMixin):
    """Builds one instance file from a ``GeneratorConfig``"""

    def __init__(self, config: GeneratorConfig):
        self.config = config
        self.rng = random.Random(config.seed)
        self.sorts = tuple(f"s{n}" for n in range(config.sorts))
        # sort left empty at some members when a support violation is injected
        self.violation_sort: Optional[str] = self.sorts[-1] if config.inject_support_violation else None
        self.declarations: List[Declaration] = []

    def _declare(self, kind: str, name: str, value, refs=None) -> None:
        self.declarations.append(Declaration(kind, name, value, refs or {}))

    def signature(self) -> Signature:
        ops = {}
        for n in range(self.config.ops):
            word = tuple(self.rng.choice(self.sorts) for _ in range(self.rng.randint(0, self.config.max_arity)))
            result = self.rng.choice(self.sorts)
            if result == self.violation_sort and result not in word:
                result = self.rng.choice(self.sorts[:-1])
            ops[f"o{n}"] = Arity(word, result)
        return Signature(self.sorts, ops)

    def base_algebra(self, sig: Signature) -> Algebra:
        carrier = SortedSet(sig.sorts, {s: [f"e{k}" for k in range(self.rng.randint(1, self.config.carrier_size))]
                                        for s in sig.sorts})
        tables = {}
        for op, arity in sig.ops.items():
            results = carrier.carrier(arity.result)
            tables[op] = {args: self.rng.choice(results) for args in carrier.words(arity.word)}
        return Algebra(sig, carrier, tables)

    def preorder(self) -> Preorder:
        """The last few indices form one cycle above everything else

        With a support violation the first index stays below the tops.
        """
        elems = [f"i{n}" for n in range(self.config.index_size)]
        most = min(self.config.max_tops, len(elems) - (1 if self.violation_sort else 0))
        tops = elems[len(elems) - self.rng.randint(1, most):]
        rest = elems[:len(elems) - len(tops)]
        pairs = [(i, tops[0]) for i in rest]
        pairs += list(zip(tops, tops[1:] + tops[:1]))
        for a in range(len(rest)):
            for b in range(a + 1, len(rest)):
                if self.rng.random() < 0.4:
                    pairs.append((rest[a], rest[b]))
        return Preorder.generated(elems, pairs)

    def _seeds(self, B: Algebra, index: Preorder, violation_at: Optional[str]) -> Seeds:
        """Generators contributed by each index; the violation sort only at ``violation_at``"""
        seeds: Seeds = {}
        for k in index.elems:
            seeds[k] = {}
            for s in self.sorts:
                pool = B.carrier.carrier(s)
                if s == self.violation_sort:
                    seeds[k][s] = [pool[0]] if k == violation_at else []
                    continue
                low = 1 if (self.config.force_constant_support or self.violation_sort) else 0
                seeds[k][s] = self.rng.sample(pool, self.rng.randint(low, min(2, len(pool))))
        return seeds

    def _pairs(self, B: Algebra, index: Preorder) -> Pairs:
        return {k: self._extra_pairs(B) for k in index.elems}

    def _extra_pairs(self, B: Algebra) -> Dict[str, List[Tuple[str, str]]]:
        pairs = {}
        for s in self.sorts:
            pool = B.carrier.carrier(s)
            pairs[s] = [tuple(self.rng.sample(pool, 2))] if len(pool) > 1 and self.rng.random() < 0.5 else []
        return pairs

    def _members(self, B: Algebra, index: Preorder, seeds: Seeds, pairs: Pairs, downward: bool,
                 extra: Optional[Dict[str, List[Tuple[str, str]]]] = None):
        """X_i generated by the seeds of ↑i (↓i when ``downward``), Θ_i by the pairs of the same indices"""
        members = {}
        for i in index.elems:
            scope = index.down(i) if downward else index.up(i)
            if self.config.force_surjective_transitions:
                X = B
            else:
                gens = {s: sorted({x for k in scope for x in seeds[k][s]}) for s in self.sorts}
                X = generate_subalgebra(B, SortedSet(self.sorts, gens))
            related = {s: [(x, y) for k in scope for x, y in pairs[k][s]
                           if X.carrier.contains(s, x) and X.carrier.contains(s, y)] for s in self.sorts}
            for s, ps in (extra or {}).items():
                related[s] += [(x, y) for x, y in ps if X.carrier.contains(s, x) and X.carrier.contains(s, y)]
            theta = generate_congruence(X, related)
            A, pr = quotient_algebra(X, theta)
            members[i] = (A, pr)
        return members

    def _quotient_map(self, source: Algebra, target: Algebra, pr: Homomorphism) -> Homomorphism:
        return Homomorphism(source, target, SortedMapping.from_function(source.carrier, target.carrier, pr))

    def _projective(self, name: str, prefix: str, index: Preorder, members) -> ProjectiveSystem:
        for i in index.elems:
            self._declare("algebra", f"{prefix}_{i}", members[i][0], {"sig": "S"})
        maps = []
        for i, j in index.covers():
            h = self._quotient_map(members[j][0], members[i][0], members[i][1])
            hname = f"{prefix.lower()}_{j}_{i}"
            self._declare("hom", hname, h, {"source": f"{prefix}_{j}", "target": f"{prefix}_{i}"})
            maps.append((j, i, hname))
        transitions = {(i, j): SortedMapping.from_function(members[j][0].carrier, members[i][0].carrier,
                                                           members[i][1])
                       for i, j in index.le}
        system = ProjectiveSystem(index, {i: members[i][0] for i in index.elems}, transitions)
        self._declare("projsys", name, system,
                      {"over": "I", "at": {i: f"{prefix}_{i}" for i in index.elems}, "maps": maps})
        return system

    def _inductive(self, name: str, prefix: str, index: Preorder, members) -> InductiveSystem:
        for i in index.elems:
            self._declare("algebra", f"{prefix}_{i}", members[i][0], {"sig": "S"})
        maps = []
        for i, j in index.covers():
            h = self._quotient_map(members[i][0], members[j][0], members[j][1])
            hname = f"{prefix.lower()}_{i}_{j}"
            self._declare("hom", hname, h, {"source": f"{prefix}_{i}", "target": f"{prefix}_{j}"})
            maps.append((i, j, hname))
        transitions = {(i, j): SortedMapping.from_function(members[i][0].carrier, members[j][0].carrier,
                                                           members[j][1])
                       for i, j in index.le}
        system = InductiveSystem(index, {i: members[i][0] for i in index.elems}, transitions)
        self._declare("indsys", name, system,
                      {"over": "I", "at": {i: f"{prefix}_{i}" for i in index.elems}, "maps": maps})
        return system

    def _preorder(self, name: str, index: Preorder) -> None:
        self._declare("preorder", name, index, {"le": index.covers()})

    def generate(self) -> InstanceFile:
        sig = self.signature()
        self._declare("signature", "S", sig)
        B = self.base_algebra(sig)
        self._declare("algebra", "B", B, {"sig": "S"})

        index = self.preorder()
        top = index.tops[0]
        self._preorder("I", index)
        k = self.rng.choice(index.elems)
        tail = index.restrict(index.up(k))
        k2 = self.rng.choice(tail.elems)
        tail2 = tail.restrict(tail.up(k2))
        self._preorder("T", tail)
        self._preorder("T2", tail2)

        # the violation sort appears below the top only, so the top member lacks it
        proj_seeds = self._seeds(B, index, index.elems[0] if self.violation_sort else None)
        pairs = self._pairs(B, index)
        members = self._members(B, index, proj_seeds, pairs, downward=False)
        self._projective("P", "A", index, members)

        extra = self._extra_pairs(B)
        coarser = self._members(B, index, proj_seeds, pairs, downward=False, extra=extra)
        self._projective("P2", "C", index, coarser)
        components = {}
        for i in index.elems:
            components[i] = self._quotient_map(members[i][0], coarser[i][0], coarser[i][1])
            self._declare("hom", f"u_{i}", components[i], {"source": f"A_{i}", "target": f"C_{i}"})
        self._declare("sysmap", "u", components,
                      {"source": "P", "target": "P2", "at": {i: f"u_{i}" for i in index.elems}})

        ind_seeds = self._seeds(B, index, top if self.violation_sort else None)
        ind_members = self._members(B, index, ind_seeds, self._pairs(B, index), downward=True)
        self._inductive("D", "G", index, ind_members)

        self._declare("family", "F", {i: members[i][0] for i in index.elems},
                      {"on": "I", "at": {i: f"A_{i}" for i in index.elems}})
        for n, t in enumerate(index.tops, start=1):
            self._declare("ultrafilter", "U" if n == 1 else f"U{n}", Ultrafilter.principal(index.elems, t),
                          {"on": "I", "points": [t]})
        J = list(canonical_sorted(self.rng.sample(index.elems, self.rng.randint(1, len(index.elems)))))
        self._declare("filter", "Fp", principal_filter(index.elems, J),
                      {"on": "I", "form": "principal", "points": J})
        self._declare("filter", "Ffs", frechet_filter(index), {"on": "I", "form": "finalsections"})
        self._declare("isomap", "iota", IsotoneMap.inclusion(tail, index), {"source": "T", "target": "I"})
        self._declare("isomap", "iota2", IsotoneMap.inclusion(tail2, tail), {"source": "T2", "target": "T"})

        metrics_collector.record_construction("generated_instance")
        self.logger.debug("instance generated", extra={"nodes": len(self.declarations)})
        return InstanceFile(self.sorts, tuple(self.declarations))


def generate(config: GeneratorConfig) -> InstanceFile:
    return InstanceGenerator(config).generate()


def generate_text(config: GeneratorConfig) -> str:
    """Canonical text of the generated instance; byte-identical for equal configs"""
    return serialize(generate(config))
