# https://en.wikipedia.org/wiki/Disjoint-set_data_structure

import collections
from typing import Dict, Generic, Hashable, List, Tuple, TypeVar

from .sorted_core import canonical_key

T = TypeVar("T", bound=Hashable)


class DisjointSet(Generic[T]):
    def __init__(self, elements=()):
        self.parent: Dict[T, T] = {}
        self.rank: Dict[T, int] = {}
        for e in elements:
            self.make_set(e)

    def make_set(self, e: T):
        if e in self.parent:
            return
        self.parent[e] = e
        self.rank[e] = 0

    # find with path compression
    def find(self, e: T) -> T:
        self.make_set(e)
        root = e
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[e] != root:
            self.parent[e], e = root, self.parent[e]
        return root

    # union by rank; returns True when two classes merged
    def union(self, x: T, y: T) -> bool:
        x_root = self.find(x)
        y_root = self.find(y)
        if x_root == y_root:
            return False
        if self.rank[x_root] < self.rank[y_root]:
            x_root, y_root = y_root, x_root
        self.parent[y_root] = x_root
        if self.rank[x_root] == self.rank[y_root]:
            self.rank[x_root] += 1
        return True

    def blocks(self) -> List[Tuple[T, ...]]:
        """Classes as tuples in canonical order"""
        groups = collections.defaultdict(list)
        for e in self.parent:
            groups[self.find(e)].append(e)
        return sorted(
            (tuple(sorted(g, key=canonical_key)) for g in groups.values()),
            key=lambda b: canonical_key(b[0]),
        )
