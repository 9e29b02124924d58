"""Small shared helpers: deterministic ordering, union-find, verdicts."""

from dataclasses import dataclass


def canon_key(x):
    """Total order key over the element ids used in this package.

    Ids are strings for user data and nested tuples for constructed data
    (limit tuples, quotient representatives, matching families).  Mixed
    types sort by a type rank so every carrier has one deterministic order.
    """
    if isinstance(x, str):
        return (0, x)
    if isinstance(x, bool):
        return (1, x)
    if isinstance(x, int):
        return (2, x)
    if isinstance(x, tuple):
        return (3, tuple(canon_key(y) for y in x))
    if isinstance(x, frozenset):
        return (4, tuple(sorted(canon_key(y) for y in x)))
    return (5, repr(x))


def canon_sorted(items):
    return sorted(items, key=canon_key)


class UnionFind:
    """Union-find over arbitrary hashable keys, path-halving, size union."""

    def __init__(self):
        self.parent = {}
        self.size = {}

    def add(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1

    def find(self, x):
        self.add(x)
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def classes(self):
        """Map root -> sorted members, deterministic."""
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        for members in out.values():
            members.sort(key=canon_key)
        return out


@dataclass(frozen=True)
class Verdict:
    """Boolean outcome plus a witness explaining a failure."""

    ok: bool
    witness: object = None
    detail: str = ""

    def __bool__(self):
        return self.ok
