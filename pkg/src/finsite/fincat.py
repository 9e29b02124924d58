"""Finite categories, given by a full composition table or by generators
and relations.

Composition is written compose(g, f) = "f then g", defined exactly when
target(f) == source(g).  Dotted words in files follow the same convention:
the word g.f means f first, then g.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

from .errors import BudgetExceededError, ValidationError

DEFAULT_CLOSURE_BUDGET = 10_000


@dataclass(frozen=True)
class Morphism:
    id: str
    source: str
    target: str


@dataclass(frozen=True)
class Word:
    """A composable word of generator ids, listed in order of application."""

    source: str
    gens: tuple[str, ...]

    def __len__(self):
        return len(self.gens)


@dataclass
class CategoryDescription:
    """Raw input for validate_category.

    Either a presentation (generating morphisms plus relations, identities
    implicit) or a full table (identity map plus composition table over the
    complete morphism list).
    """

    name: str
    objects: list[str]
    morphisms: list[tuple[str, str, str]]  # (id, source, target)
    relations: list[tuple[Word, Word]] = field(default_factory=list)
    identity: dict[str, str] | None = None
    table: dict[tuple[str, str], str] | None = None


class FinCat:
    """A validated finite category.

    Immutable after construction; all orderings are input order, with
    synthesized composite names sorted below shorter words.
    """

    def __init__(self, name, objects, morphisms, identity, table, _checked=False):
        self.name = name
        self.objects = tuple(objects)
        self.morphisms = tuple(morphisms)
        self._identity = dict(identity)
        self._table = dict(table)
        self._src = {m.id: m.source for m in self.morphisms}
        self._tgt = {m.id: m.target for m in self.morphisms}
        self._ids = set(self._identity.values())
        if not _checked:
            self._check()

    # -- basic accessors ---------------------------------------------------

    def source(self, m):
        return self._src[m]

    def target(self, m):
        return self._tgt[m]

    def identity(self, c):
        return self._identity[c]

    def is_identity(self, m):
        return m in self._ids

    def has_object(self, c):
        return c in self._identity

    def morphism_ids(self):
        return tuple(m.id for m in self.morphisms)

    def compose(self, g, f):
        """f then g; raises KeyError on non-composable pairs."""
        return self._table[(g, f)]

    def composable_pairs(self):
        for g in self.morphisms:
            for f in self.morphisms:
                if f.target == g.source:
                    yield g.id, f.id

    def hom_set(self, a, b):
        if a not in self._identity or b not in self._identity:
            raise ValidationError(f"unknown object in hom_set: {a!r}, {b!r}")
        return [m.id for m in self.morphisms if m.source == a and m.target == b]

    def arrows_into(self, c):
        return [m.id for m in self.morphisms if m.target == c]

    def arrows_from(self, c):
        return [m.id for m in self.morphisms if m.source == c]

    def compose_word(self, word: Word):
        """Evaluate a generator word to the morphism it denotes."""
        if not word.gens:
            return self.identity(word.source)
        m = word.gens[0]
        for g in word.gens[1:]:
            m = self.compose(g, m)
        return m

    # -- structure ---------------------------------------------------------

    @cached_property
    def generators(self):
        """A generating set of non-identity morphisms, greedy-minimized.

        Removal is attempted in reverse input order so synthesized
        composites are dropped before user-declared generators.
        """
        gens = [m.id for m in self.morphisms if not self.is_identity(m.id)]
        for m in list(reversed(gens)):
            rest = [g for g in gens if g != m]
            if m in self._generated_set(rest):
                gens = rest
        return tuple(gens)

    def _generated_set(self, gens):
        seen = set(gens) | self._ids
        frontier = list(seen)
        while frontier:
            new = []
            for f in frontier:
                for g in gens:
                    if self._tgt[f] == self._src[g]:
                        m = self._table[(g, f)]
                        if m not in seen:
                            seen.add(m)
                            new.append(m)
                for g in list(seen):
                    if self._tgt[g] == self._src[f]:
                        m = self._table[(f, g)]
                        if m not in seen:
                            seen.add(m)
                            new.append(m)
            frontier = new
        return seen

    @cached_property
    def decomposition(self):
        """For each non-identity, non-generator morphism m, a pair
        (last, rest) with m = compose(last, rest) and last a generator."""
        gens = self.generators
        decomp = {}
        reached = set(self._ids) | set(gens)
        frontier = [self.identity(c) for c in self.objects] + list(gens)
        while frontier:
            new = []
            for f in frontier:
                for g in gens:
                    if self._tgt[f] == self._src[g]:
                        m = self._table[(g, f)]
                        if m not in reached:
                            reached.add(m)
                            decomp[m] = (g, f)
                            new.append(m)
            frontier = new
        missing = set(self._src) - reached
        if missing:
            raise ValidationError(
                f"internal: generators fail to reach {sorted(missing)}")
        return decomp

    # -- validation --------------------------------------------------------

    def _check(self):
        seen = set()
        for c in self.objects:
            if c in seen:
                raise ValidationError(f"duplicate object id {c!r}")
            seen.add(c)
        seen = set()
        for m in self.morphisms:
            if m.id in seen:
                raise ValidationError(f"duplicate morphism id {m.id!r}")
            seen.add(m.id)
            if m.source not in self._identity or m.target not in self._identity:
                raise ValidationError(
                    f"morphism {m.id!r} has unknown endpoint "
                    f"{m.source!r} -> {m.target!r}")
        for c in self.objects:
            i = self._identity.get(c)
            if i is None or i not in self._src:
                raise ValidationError(f"missing identity for object {c!r}")
            if self._src[i] != c or self._tgt[i] != c:
                raise ValidationError(f"identity of {c!r} has wrong endpoints")
        if set(self._identity) != set(self.objects):
            raise ValidationError("identity map does not match object list")

        pairs = set()
        for g, f in self.composable_pairs():
            pairs.add((g, f))
            m = self._table.get((g, f))
            if m is None:
                raise ValidationError(f"composite undefined for ({g}, {f})")
            if m not in self._src:
                raise ValidationError(
                    f"composite of ({g}, {f}) is {m!r}, not a listed morphism")
            if self._src[m] != self._src[f] or self._tgt[m] != self._tgt[g]:
                raise ValidationError(
                    f"composite of ({g}, {f}) has wrong endpoints")
        extra = set(self._table) - pairs
        if extra:
            raise ValidationError(
                f"composition defined on non-composable pair {sorted(extra)[0]}")

        for m in self.morphisms:
            if self._table[(m.id, self._identity[m.source])] != m.id:
                raise ValidationError(
                    f"right identity law fails at {m.id!r}",
                    witness=(m.id, self._identity[m.source]))
            if self._table[(self._identity[m.target], m.id)] != m.id:
                raise ValidationError(
                    f"left identity law fails at {m.id!r}",
                    witness=(self._identity[m.target], m.id))

        for h in self.morphisms:
            for g in self.morphisms:
                if g.target != h.source:
                    continue
                gh = self._table[(h.id, g.id)]
                for f in self.morphisms:
                    if f.target != g.source:
                        continue
                    lhs = self._table[(gh, f.id)]
                    rhs = self._table[(h.id, self._table[(g.id, f.id)])]
                    if lhs != rhs:
                        raise ValidationError(
                            f"associativity fails on ({h.id}, {g.id}, {f.id}): "
                            f"{lhs!r} != {rhs!r}",
                            witness=(h.id, g.id, f.id))

    # -- identity-respecting equality ---------------------------------------

    def __eq__(self, other):
        if not isinstance(other, FinCat):
            return NotImplemented
        return (self.objects == other.objects
                and self.morphisms == other.morphisms
                and self._identity == other._identity
                and self._table == other._table)

    def __hash__(self):
        return object.__hash__(self)

    def __repr__(self):
        return (f"FinCat({self.name!r}, {len(self.objects)} objects, "
                f"{len(self.morphisms)} morphisms)")


def validate_category(desc: CategoryDescription,
                      budget: int = DEFAULT_CLOSURE_BUDGET) -> FinCat:
    """Build and validate a FinCat from a description.

    With a full table the laws are checked directly.  With a presentation
    the morphism list is the closure of the generators under composition
    modulo the relations; closure must terminate within `budget` morphisms.
    """
    if desc.table is not None:
        if desc.identity is None:
            raise ValidationError("full-table description needs identities")
        morphisms = [Morphism(i, s, t) for (i, s, t) in desc.morphisms]
        return FinCat(desc.name, desc.objects, morphisms,
                      desc.identity, desc.table)
    return _close_presentation(desc, budget)


def _close_presentation(desc: CategoryDescription, budget: int) -> FinCat:
    objects = list(desc.objects)
    gen_src = {}
    gen_tgt = {}
    gen_order = []
    for (i, s, t) in desc.morphisms:
        if i in gen_src:
            raise ValidationError(f"duplicate generator id {i!r}")
        if s not in objects or t not in objects:
            raise ValidationError(f"generator {i!r} has unknown endpoint")
        gen_src[i], gen_tgt[i] = s, t
        gen_order.append(i)

    def word_target(w: Word):
        if not w.gens:
            return w.source
        return gen_tgt[w.gens[-1]]

    for (u, v) in desc.relations:
        for w in (u, v):
            cur = w.source
            for g in w.gens:
                if g not in gen_src:
                    raise ValidationError(f"relation uses unknown morphism {g!r}")
                if gen_src[g] != cur:
                    raise ValidationError(
                        f"relation word not composable at {g!r}")
                cur = gen_tgt[g]
        if u.source != v.source or word_target(u) != word_target(v):
            raise ValidationError(
                "relation sides have different endpoints")

    # Element enumeration: nodes are congruence classes of composable words,
    # edges append one generator.  Relations are traced from every node and
    # their endpoints merged; merging propagates through the edge maps.
    target_of = []
    edges = []
    uf = UnionFindInt()

    def new_node(tobj):
        if len(target_of) >= budget * 2:
            raise BudgetExceededError(
                f"closure budget exceeded ({budget} morphisms)")
        idx = len(target_of)
        target_of.append(tobj)
        edges.append({})
        uf.add()
        return idx

    id_node = {}
    for c in objects:
        id_node[c] = new_node(c)

    pending = []

    def step(x, g):
        x = uf.find(x)
        nxt = edges[x].get(g)
        if nxt is not None:
            return uf.find(nxt)
        n = new_node(gen_tgt[g])
        edges[x][g] = n
        return n

    def merge(a, b):
        pending.append((a, b))
        while pending:
            p, q = pending.pop()
            p, q = uf.find(p), uf.find(q)
            if p == q:
                continue
            r = uf.union(p, q)
            o = q if r == p else p
            if target_of[r] != target_of[o]:
                raise ValidationError("relation equates words with "
                                      "different targets")
            for g, n in edges[o].items():
                if g in edges[r] and uf.find(edges[r][g]) != uf.find(n):
                    pending.append((edges[r][g], n))
                elif g not in edges[r]:
                    edges[r][g] = n
            edges[o] = {}

    def trace(x, w: Word):
        for g in w.gens:
            x = step(x, g)
        return x

    stable = False
    while not stable:
        stable = True
        for x in range(len(target_of)):
            if uf.find(x) != x:
                continue
            for g in gen_order:
                if gen_src[g] == target_of[x] and g not in edges[x]:
                    step(x, g)
                    stable = False
        before = len(target_of)
        for x in range(len(target_of)):
            if uf.find(x) != x:
                continue
            for (u, v) in desc.relations:
                if u.source != target_of[x]:
                    continue
                a, b = trace(x, u), trace(x, v)
                if uf.find(a) != uf.find(b):
                    merge(a, b)
                    stable = False
        if len(target_of) != before:
            stable = False
        live = sum(1 for x in range(len(target_of)) if uf.find(x) == x)
        if live > budget:
            raise BudgetExceededError(
                f"closure budget exceeded ({budget} morphisms)")

    # Canonical words by breadth-first search in (length, input order).
    canon = {}
    order = []
    for c in objects:
        r = uf.find(id_node[c])
        if r not in canon:
            canon[r] = Word(c, ())
            order.append(r)
    frontier = list(order)
    while frontier:
        new = []
        for x in frontier:
            w = canon[x]
            for g in gen_order:
                if gen_src[g] != target_of[x]:
                    continue
                y = uf.find(edges[uf.find(x)][g])
                if y not in canon:
                    canon[y] = Word(w.source, w.gens + (g,))
                    order.append(y)
                    new.append(y)
        frontier = new

    def word_name(w: Word):
        if not w.gens:
            return f"id_{w.source}"
        return ".".join(reversed(w.gens))

    names = {x: word_name(canon[x]) for x in order}
    if len(set(names.values())) != len(names):
        raise ValidationError("synthesized morphism names collide")

    morphisms = [Morphism(names[x], canon[x].source, target_of[x])
                 for x in order]
    identity = {c: names[uf.find(id_node[c])] for c in objects}
    table = {}
    for x in order:
        for y in order:
            if target_of[y] != canon[x].source:
                continue
            z = y
            for g in canon[x].gens:
                z = uf.find(edges[uf.find(z)][g])
            table[(names[x], names[y])] = names[z]
    return FinCat(desc.name, objects, morphisms, identity, table)


class UnionFindInt:
    """Integer-indexed union-find for the closure enumeration."""

    def __init__(self):
        self.parent = []

    def add(self):
        self.parent.append(len(self.parent))

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return ra


def opposite(cat: FinCat) -> FinCat:
    """Formal dual: endpoints swapped, composition transposed."""
    name = cat.name[:-3] if cat.name.endswith("_op") else cat.name + "_op"
    morphisms = [Morphism(m.id, m.target, m.source) for m in cat.morphisms]
    table = {(f, g): m for (g, f), m in cat._table.items()}
    return FinCat(name, cat.objects, morphisms, cat._identity, table,
                  _checked=True)
