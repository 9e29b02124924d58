"""Finite-set-valued presheaves on a FinCat and the exact constructions on
them: limits, colimits, images, exponentials, hom enumeration, subobjects,
and the sieve-valued subobject classifier.

Conventions.  For f: c -> d the restriction F(f) maps carrier(d) to
carrier(c), written x·f.  A natural transformation a: F -> G satisfies
a_d(x·f) = a_c(x)·f for every f: d -> c.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from .errors import BudgetExceededError, ValidationError
from .fincat import FinCat
from .sieves import Sieve, maximal_sieve, pullback_sieve
from .util import UnionFind, Verdict, canon_key, canon_sorted

DEFAULT_ENUM_BUDGET = 10 ** 6


class Presheaf:
    """A contravariant finite-set-valued functor, validated on construction."""

    def __init__(self, base: FinCat, carrier, action, name=None, _checked=False):
        self.base = base
        self.name = name
        self._carrier = {c: tuple(xs) for c, xs in carrier.items()}
        self._action = {m: dict(fn) for m, fn in action.items()}
        for c in base.objects:
            self._carrier.setdefault(c, ())
            i = base.identity(c)
            self._action.setdefault(i, {x: x for x in self._carrier[c]})
        if not _checked:
            w = functoriality_witness(base, self._carrier, self._action)
            if w is not None:
                raise ValidationError(f"not functorial: {w[0]}", witness=w[1])

    def carrier(self, c):
        return self._carrier[c]

    def restrict(self, x, f):
        """x·f for x in carrier(target(f))."""
        return self._action[f][x]

    def action(self, f):
        return self._action[f]

    def elements(self):
        for c in self.base.objects:
            for x in self._carrier[c]:
                yield c, x

    def size(self):
        return sum(len(self._carrier[c]) for c in self.base.objects)

    def is_empty(self):
        return self.size() == 0

    @cached_property
    def key(self):
        return (tuple((c, self._carrier[c]) for c in self.base.objects),
                tuple((m.id, tuple(sorted(self._action[m.id].items(),
                                          key=lambda kv: canon_key(kv[0]))))
                      for m in self.base.morphisms))

    def __eq__(self, other):
        if not isinstance(other, Presheaf):
            return NotImplemented
        return self.base is other.base and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        sizes = ", ".join(f"{c}:{len(self._carrier[c])}"
                          for c in self.base.objects)
        return f"Presheaf({self.name or '?'}; {sizes})"


def functoriality_witness(base, carrier, action):
    """None if (carrier, action) is a presheaf, else (message, witness)."""
    objset = set(base.objects)
    if set(carrier) - objset:
        return ("carrier on unknown object", tuple(set(carrier) - objset))
    for c in base.objects:
        xs = carrier.get(c, ())
        if len(set(xs)) != len(xs):
            return (f"duplicate elements at {c!r}", c)
    for m in base.morphisms:
        fn = action.get(m.id)
        if fn is None:
            return (f"no action for {m.id!r}", m.id)
        dom, cod = carrier.get(m.target, ()), carrier.get(m.source, ())
        if set(fn) != set(dom):
            return (f"action of {m.id!r} has wrong domain", m.id)
        for x, y in fn.items():
            if y not in cod:
                return (f"action of {m.id!r} leaves the carrier", (m.id, x))
    for c in base.objects:
        i = base.identity(c)
        for x in carrier.get(c, ()):
            if action[i][x] != x:
                return (f"identity action moves {x!r}", (i, x))
    for g, f in base.composable_pairs():
        gf = base.compose(g, f)
        ag, af, agf = action[g], action[f], action[gf]
        for x in carrier.get(base.target(g), ()):
            if agf[x] != af[ag[x]]:
                return (f"x·({g}∘{f}) != (x·{g})·{f} at x={x!r}", (g, f, x))
    return None


def validate_presheaf(base, carrier, action, name=None) -> Presheaf:
    return Presheaf(base, carrier, action, name=name)


def presheaf_from_generators(base: FinCat, carrier, action, name=None) -> Presheaf:
    """Build a presheaf from actions given on (at least) the generators;
    actions of composites not listed are filled in along a decomposition
    and the whole table is then validated."""
    action = {m: dict(fn) for m, fn in action.items()}
    for c in base.objects:
        action.setdefault(base.identity(c),
                          {x: x for x in carrier.get(c, ())})
    for m, (last, rest) in base.decomposition.items():
        if m in action:
            continue
        if last not in action or rest not in action:
            raise ValidationError(f"no action for {m!r} and no way to "
                                  "derive it from the given ones")
        action[m] = {x: action[rest][action[last][x]]
                     for x in carrier.get(base.target(m), ())}
    return Presheaf(base, carrier, action, name=name)


class NatTrans:
    """A natural transformation between presheaves on one base."""

    def __init__(self, source: Presheaf, target: Presheaf, components,
                 name=None, _checked=False):
        if source.base is not target.base:
            raise ValidationError("mixed bases in natural transformation")
        self.source = source
        self.target = target
        self.name = name
        self.components = {c: dict(components.get(c, {}))
                           for c in source.base.objects}
        if not _checked:
            w = self._naturality_witness()
            if w is not None:
                raise ValidationError(f"not natural: {w[0]}", witness=w[1])

    def _naturality_witness(self):
        base = self.source.base
        for c in base.objects:
            comp = self.components[c]
            if set(comp) != set(self.source.carrier(c)):
                return (f"component at {c!r} has wrong domain", c)
            for x, y in comp.items():
                if y not in self.target.carrier(c):
                    return (f"component at {c!r} leaves the carrier", (c, x))
        for m in base.morphisms:
            d, c = m.source, m.target
            for x in self.source.carrier(c):
                lhs = self.components[d][self.source.restrict(x, m.id)]
                rhs = self.target.restrict(self.components[c][x], m.id)
                if lhs != rhs:
                    return (f"square for {m.id!r} fails at {x!r}", (m.id, x))
        return None

    def __call__(self, c, x):
        return self.components[c][x]

    def then(self, other: "NatTrans") -> "NatTrans":
        """self followed by other."""
        if other.source is not self.target and other.source != self.target:
            raise ValidationError("non-composable natural transformations")
        comps = {c: {x: other.components[c][y]
                     for x, y in self.components[c].items()}
                 for c in self.source.base.objects}
        return NatTrans(self.source, other.target, comps, _checked=True)

    def key(self):
        return (self.source.key, self.target.key,
                tuple((c, tuple(sorted(self.components[c].items(),
                                       key=lambda kv: canon_key(kv[0]))))
                      for c in self.source.base.objects))

    def __eq__(self, other):
        if not isinstance(other, NatTrans):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"NatTrans({self.name or '?'}: {self.source!r} -> {self.target!r})"


def validate_nat(source, target, components, name=None) -> NatTrans:
    return NatTrans(source, target, components, name=name)


def identity_nat(F: Presheaf) -> NatTrans:
    return NatTrans(F, F, {c: {x: x for x in F.carrier(c)}
                           for c in F.base.objects}, _checked=True)


# ---------------------------------------------------------------------------
# Subpresheaves


@dataclass
class Subpresheaf:
    """A restriction-closed pointwise subset of an ambient presheaf."""

    ambient: Presheaf
    part: dict

    def __post_init__(self):
        base = self.ambient.base
        self.part = {c: frozenset(self.part.get(c, ())) for c in base.objects}
        for c in base.objects:
            extra = self.part[c] - set(self.ambient.carrier(c))
            if extra:
                raise ValidationError(
                    f"subpresheaf contains foreign element at {c!r}",
                    witness=(c, canon_sorted(extra)[0]))
        for m in base.morphisms:
            for x in self.part[m.target]:
                if self.ambient.restrict(x, m.id) not in self.part[m.source]:
                    raise ValidationError(
                        f"not closed under restriction along {m.id!r}",
                        witness=(m.id, x))

    def contains(self, c, x):
        return x in self.part[c]

    def size(self):
        return sum(len(v) for v in self.part.values())

    def to_presheaf(self, name=None) -> Presheaf:
        base = self.ambient.base
        carrier = {c: tuple(x for x in self.ambient.carrier(c)
                            if x in self.part[c]) for c in base.objects}
        action = {m.id: {x: self.ambient.restrict(x, m.id)
                         for x in carrier[m.target]}
                  for m in base.morphisms}
        return Presheaf(base, carrier, action, name=name, _checked=True)

    def inclusion(self) -> NatTrans:
        inner = self.to_presheaf()
        comps = {c: {x: x for x in inner.carrier(c)}
                 for c in inner.base.objects}
        return NatTrans(inner, self.ambient, comps, _checked=True)

    def encode(self):
        return tuple((c, tuple(canon_sorted(self.part[c])))
                     for c in self.ambient.base.objects)

    def __eq__(self, other):
        return (isinstance(other, Subpresheaf)
                and self.ambient == other.ambient
                and self.part == other.part)

    def __le__(self, other):
        return all(self.part[c] <= other.part[c] for c in self.part)

    def union(self, other):
        return Subpresheaf(self.ambient, {c: self.part[c] | other.part[c]
                                          for c in self.part})

    def intersection(self, other):
        return Subpresheaf(self.ambient, {c: self.part[c] & other.part[c]
                                          for c in self.part})


def full_subpresheaf(F: Presheaf) -> Subpresheaf:
    return Subpresheaf(F, {c: set(F.carrier(c)) for c in F.base.objects})


def empty_subpresheaf(F: Presheaf) -> Subpresheaf:
    return Subpresheaf(F, {})


def image_subpresheaf(alpha: NatTrans) -> Subpresheaf:
    part = {c: set(alpha.components[c].values())
            for c in alpha.source.base.objects}
    return Subpresheaf(alpha.target, part)


def preimage_subpresheaf(alpha: NatTrans, sub: Subpresheaf) -> Subpresheaf:
    """Pullback of a subobject of alpha's target along alpha."""
    part = {c: {x for x in alpha.source.carrier(c)
                if alpha.components[c][x] in sub.part[c]}
            for c in alpha.source.base.objects}
    return Subpresheaf(alpha.source, part)


def restriction_closure(F: Presheaf, seeds) -> Subpresheaf:
    """Least restriction-closed family containing the seed elements."""
    part = {c: set() for c in F.base.objects}
    for c, x in seeds:
        for f in F.base.arrows_into(c):
            part[F.base.source(f)].add(F.restrict(x, f))
    return Subpresheaf(F, part)


def enumerate_subobjects(F: Presheaf, budget=DEFAULT_ENUM_BUDGET):
    """Every restriction-closed pointwise subset, each exactly once."""
    principals = []
    seen_p = set()
    for c, x in F.elements():
        p = restriction_closure(F, [(c, x)])
        if p.encode() not in seen_p:
            seen_p.add(p.encode())
            principals.append(p)
    seen = {empty_subpresheaf(F).encode(): empty_subpresheaf(F)}
    frontier = list(seen.values())
    while frontier:
        new = []
        for s in frontier:
            for p in principals:
                u = s.union(p)
                e = u.encode()
                if e not in seen:
                    if len(seen) >= budget:
                        raise BudgetExceededError(
                            f"subobject enumeration exceeded {budget}")
                    seen[e] = u
                    new.append(u)
        frontier = new
    subs = list(seen.values())
    subs.sort(key=lambda s: (s.size(), s.encode()))
    return subs


# ---------------------------------------------------------------------------
# Representables

def yoneda(cat: FinCat, c) -> Presheaf:
    """The representable presheaf d |-> hom(d, c), acting by precomposition."""
    if not cat.has_object(c):
        raise ValidationError(f"unknown object {c!r}")
    carrier = {d: tuple(cat.hom_set(d, c)) for d in cat.objects}
    action = {m.id: {h: cat.compose(h, m.id) for h in carrier[m.target]}
              for m in cat.morphisms}
    return Presheaf(cat, carrier, action, name=f"y_{c}", _checked=True)


def yoneda_map(cat: FinCat, f, yc_src: Presheaf, yc_tgt: Presheaf) -> NatTrans:
    """y_f : y_(source f) -> y_(target f) by postcomposition."""
    comps = {d: {h: cat.compose(f, h) for h in yc_src.carrier(d)}
             for d in cat.objects}
    return NatTrans(yc_src, yc_tgt, comps, _checked=True)


def sieve_subpresheaf(cat: FinCat, sieve: Sieve, yc: Presheaf) -> Subpresheaf:
    """A sieve on c seen as a subobject of the representable y_c."""
    part = {d: {f for f in yc.carrier(d) if f in sieve.members}
            for d in cat.objects}
    return Subpresheaf(yc, part)


# ---------------------------------------------------------------------------
# Finite limits and colimits


@dataclass
class Diagram:
    """A finite diagram of presheaves over one base."""

    nodes: dict  # name -> Presheaf
    edges: list  # (edge name, source node, target node, NatTrans)

    def __post_init__(self):
        bases = {id(F.base) for F in self.nodes.values()}
        for (_, a, b, t) in self.edges:
            if a not in self.nodes or b not in self.nodes:
                raise ValidationError("diagram edge on unknown node")
            if t.source != self.nodes[a] or t.target != self.nodes[b]:
                raise ValidationError("diagram edge does not match its nodes")
            bases.add(id(t.source.base))
        if len(bases) > 1:
            raise ValidationError("mixed bases in diagram")

    def base(self):
        return next(iter(self.nodes.values())).base


@dataclass
class LimitResult:
    presheaf: Presheaf
    legs: dict  # node name -> projection NatTrans


@dataclass
class ColimitResult:
    presheaf: Presheaf
    legs: dict  # node name -> injection NatTrans
    class_of: dict  # object -> {(node index, element) -> representative}


def finite_limit(diagram: Diagram, base: FinCat = None) -> LimitResult:
    """Pointwise limit; elements are compatible tuples in node order."""
    if not diagram.nodes:
        if base is None:
            raise ValidationError("empty diagram needs an explicit base")
        P = terminal(base)
        return LimitResult(P, {})
    base = diagram.base()
    names = list(diagram.nodes)
    funcs = [diagram.nodes[n] for n in names]
    carrier = {}
    for c in base.objects:
        elems = []
        for tup in itertools.product(*(F.carrier(c) for F in funcs)):
            ok = True
            for (_, a, b, t) in diagram.edges:
                if t.components[c][tup[names.index(a)]] != tup[names.index(b)]:
                    ok = False
                    break
            if ok:
                elems.append(tup)
        carrier[c] = tuple(elems)
    action = {}
    for m in base.morphisms:
        action[m.id] = {tup: tuple(F.restrict(x, m.id)
                                   for F, x in zip(funcs, tup))
                        for tup in carrier[m.target]}
    P = Presheaf(base, carrier, action, _checked=True)
    legs = {}
    for i, n in enumerate(names):
        comps = {c: {tup: tup[i] for tup in carrier[c]} for c in base.objects}
        legs[n] = NatTrans(P, funcs[i], comps, _checked=True)
    return LimitResult(P, legs)


def finite_colimit(diagram: Diagram, base: FinCat = None) -> ColimitResult:
    """Pointwise colimit: disjoint union modulo the edge-generated
    equivalence; representatives are the least members of their class."""
    if not diagram.nodes:
        if base is None:
            raise ValidationError("empty diagram needs an explicit base")
        return ColimitResult(initial(base), {}, {})
    base = diagram.base()
    names = list(diagram.nodes)
    funcs = [diagram.nodes[n] for n in names]
    class_of = {}
    carrier = {}
    for c in base.objects:
        uf = UnionFind()
        for i, F in enumerate(funcs):
            for x in F.carrier(c):
                uf.add((i, x))
        for (_, a, b, t) in diagram.edges:
            ia, ib = names.index(a), names.index(b)
            for x in funcs[ia].carrier(c):
                uf.union((ia, x), (ib, t.components[c][x]))
        classes = uf.classes()
        rep = {}
        for members in classes.values():
            r = members[0]
            for mbr in members:
                rep[mbr] = r
        class_of[c] = rep
        carrier[c] = tuple(canon_sorted(set(rep.values())))
    action = {}
    for m in base.morphisms:
        d, c = m.source, m.target
        fn = {}
        for r in carrier[c]:
            i, x = r
            fn[r] = class_of[d][(i, funcs[i].restrict(x, m.id))]
        action[m.id] = fn
    P = Presheaf(base, carrier, action, _checked=True)
    legs = {}
    for i, n in enumerate(names):
        comps = {c: {x: class_of[c][(i, x)] for x in funcs[i].carrier(c)}
                 for c in base.objects}
        legs[n] = NatTrans(funcs[i], P, comps, _checked=True)
    return ColimitResult(P, legs, class_of)


def terminal(base: FinCat) -> Presheaf:
    carrier = {c: ((),) for c in base.objects}
    action = {m.id: {(): ()} for m in base.morphisms}
    return Presheaf(base, carrier, action, name="1", _checked=True)


def initial(base: FinCat) -> Presheaf:
    return Presheaf(base, {c: () for c in base.objects},
                    {m.id: {} for m in base.morphisms}, name="0",
                    _checked=True)


def bang(F: Presheaf, one: Presheaf = None) -> NatTrans:
    """The unique map F -> 1."""
    one = one if one is not None else terminal(F.base)
    comps = {c: {x: one.carrier(c)[0] for x in F.carrier(c)}
             for c in F.base.objects}
    return NatTrans(F, one, comps, _checked=True)


def product(F: Presheaf, G: Presheaf):
    """Binary product with pair elements; returns (P, p1, p2)."""
    if F.base is not G.base:
        raise ValidationError("mixed bases")
    base = F.base
    carrier = {c: tuple((x, y) for x in F.carrier(c) for y in G.carrier(c))
               for c in base.objects}
    action = {m.id: {(x, y): (F.restrict(x, m.id), G.restrict(y, m.id))
                     for (x, y) in carrier[m.target]}
              for m in base.morphisms}
    P = Presheaf(base, carrier, action, _checked=True)
    p1 = NatTrans(P, F, {c: {xy: xy[0] for xy in carrier[c]}
                         for c in base.objects}, _checked=True)
    p2 = NatTrans(P, G, {c: {xy: xy[1] for xy in carrier[c]}
                         for c in base.objects}, _checked=True)
    return P, p1, p2


def pair_map(f: NatTrans, g: NatTrans, P: Presheaf) -> NatTrans:
    """<f, g> into a product presheaf with pair elements."""
    comps = {c: {x: (f.components[c][x], g.components[c][x])
                 for x in f.source.carrier(c)}
             for c in f.source.base.objects}
    return NatTrans(f.source, P, comps, _checked=True)


def pullback(f: NatTrans, g: NatTrans):
    """Pullback of the cospan f: X -> Z <- Y :g; returns (P, p1, p2)."""
    if f.target != g.target:
        raise ValidationError("pullback legs have different targets")
    X, Y = f.source, g.source
    base = X.base
    carrier = {c: tuple((x, y) for x in X.carrier(c) for y in Y.carrier(c)
                        if f.components[c][x] == g.components[c][y])
               for c in base.objects}
    action = {m.id: {(x, y): (X.restrict(x, m.id), Y.restrict(y, m.id))
                     for (x, y) in carrier[m.target]}
              for m in base.morphisms}
    P = Presheaf(base, carrier, action, _checked=True)
    p1 = NatTrans(P, X, {c: {xy: xy[0] for xy in carrier[c]}
                         for c in base.objects}, _checked=True)
    p2 = NatTrans(P, Y, {c: {xy: xy[1] for xy in carrier[c]}
                         for c in base.objects}, _checked=True)
    return P, p1, p2


def equalizer(f: NatTrans, g: NatTrans):
    """Equalizer as a subpresheaf of the common source; returns (E, incl)."""
    if f.source != g.source or f.target != g.target:
        raise ValidationError("equalizer needs a parallel pair")
    X = f.source
    part = {c: {x for x in X.carrier(c)
                if f.components[c][x] == g.components[c][x]}
            for c in X.base.objects}
    sub = Subpresheaf(X, part)
    incl = sub.inclusion()
    return incl.source, incl


def coproduct(F: Presheaf, G: Presheaf):
    d = Diagram({"l": F, "r": G}, [])
    res = finite_colimit(d)
    return res.presheaf, res.legs["l"], res.legs["r"]


def coequalizer(f: NatTrans, g: NatTrans):
    """Coequalizer of a parallel pair; returns (Q, q: Y -> Q)."""
    if f.source != g.source or f.target != g.target:
        raise ValidationError("coequalizer needs a parallel pair")
    Y = f.target
    base = Y.base
    class_of = {}
    carrier = {}
    for c in base.objects:
        uf = UnionFind()
        for y in Y.carrier(c):
            uf.add(y)
        for x in f.source.carrier(c):
            uf.union(f.components[c][x], g.components[c][x])
        rep = {}
        for members in uf.classes().values():
            for mbr in members:
                rep[mbr] = members[0]
        class_of[c] = rep
        carrier[c] = tuple(canon_sorted(set(rep.values())))
    action = {m.id: {r: class_of[m.source][Y.restrict(r, m.id)]
                     for r in carrier[m.target]}
              for m in base.morphisms}
    Q = Presheaf(base, carrier, action, _checked=True)
    q = NatTrans(Y, Q, {c: {y: class_of[c][y] for y in Y.carrier(c)}
                        for c in base.objects}, _checked=True)
    return Q, q


def pushout(f: NatTrans, g: NatTrans):
    """Pushout of the span X <- Z -> Y; returns (Q, i1, i2)."""
    if f.source != g.source:
        raise ValidationError("pushout legs have different sources")
    d = Diagram({"x": f.target, "y": g.target, "z": f.source},
                [("f", "z", "x", f), ("g", "z", "y", g)])
    res = finite_colimit(d)
    return res.presheaf, res.legs["x"], res.legs["y"]


def cokernel_pair(m: NatTrans):
    """Pushout of m along itself; returns (Q, i1, i2)."""
    return pushout(m, m)


# ---------------------------------------------------------------------------
# Pointwise mono / epi / iso and images


def is_mono(alpha: NatTrans) -> Verdict:
    for c in alpha.source.base.objects:
        seen = {}
        for x in alpha.source.carrier(c):
            y = alpha.components[c][x]
            if y in seen:
                return Verdict(False, (c, seen[y], x),
                               f"{seen[y]!r} and {x!r} collide at {c!r}")
            seen[y] = x
    return Verdict(True)


def is_epi(alpha: NatTrans) -> Verdict:
    for c in alpha.source.base.objects:
        hit = set(alpha.components[c].values())
        for y in alpha.target.carrier(c):
            if y not in hit:
                return Verdict(False, (c, y), f"{y!r} not hit at {c!r}")
    return Verdict(True)


def is_iso(alpha: NatTrans) -> Verdict:
    m = is_mono(alpha)
    if not m:
        return m
    return is_epi(alpha)


def inverse(alpha: NatTrans) -> NatTrans:
    if not is_iso(alpha):
        raise ValidationError("cannot invert a non-iso")
    comps = {c: {y: x for x, y in alpha.components[c].items()}
             for c in alpha.source.base.objects}
    return NatTrans(alpha.target, alpha.source, comps, _checked=True)


def image_factorization(alpha: NatTrans):
    """alpha = m ∘ e with e pointwise surjective and m pointwise injective;
    the middle presheaf keeps the target's element ids."""
    sub = image_subpresheaf(alpha)
    I = sub.to_presheaf()
    e = NatTrans(alpha.source, I, alpha.components, _checked=True)
    m = sub.inclusion()
    return e, m


# ---------------------------------------------------------------------------
# Hom enumeration and exponentials


def hom_presheaf_set(F: Presheaf, G: Presheaf,
                     budget=DEFAULT_ENUM_BUDGET) -> list:
    """All natural transformations F -> G, in lexicographic assignment
    order.  Backtracking over elements with incremental naturality checks."""
    if F.base is not G.base:
        raise ValidationError("mixed bases")
    base = F.base
    slots = [(c, x) for c in base.objects for x in F.carrier(c)]
    index = {s: i for i, s in enumerate(slots)}
    # For slot i, checks are (j, m, side): side "post" means value at i must
    # equal G(m)(value at j); "pre" means value at j must equal G(m)(value i).
    checks = [[] for _ in slots]
    for m in base.morphisms:
        if base.is_identity(m.id):
            continue
        d, c = m.source, m.target
        for x in F.carrier(c):
            i, j = index[(c, x)], index[(d, F.restrict(x, m.id))]
            if i == j:
                checks[i].append((i, m.id, "fix"))
            elif i < j:
                checks[j].append((i, m.id, "post"))
            else:
                checks[i].append((j, m.id, "pre"))
    out = []
    assign = [None] * len(slots)
    explored = 0

    def extend(i):
        nonlocal explored
        if i == len(slots):
            comps = {c: {} for c in base.objects}
            for (c, x), v in zip(slots, assign):
                comps[c][x] = v
            out.append(NatTrans(F, G, comps, _checked=True))
            return
        c = slots[i][0]
        for v in G.carrier(c):
            explored += 1
            if explored > budget:
                raise BudgetExceededError(
                    f"hom enumeration exceeded budget {budget}")
            ok = True
            for (j, mid, side) in checks[i]:
                act = G.action(mid)
                if side == "fix":
                    ok = act[v] == v
                elif side == "post":
                    ok = v == act[assign[j]]
                else:
                    ok = assign[j] == act[v]
                if not ok:
                    break
            if ok:
                assign[i] = v
                extend(i + 1)
        assign[i] = None

    extend(0)
    return out


def exponential(F: Presheaf, G: Presheaf, budget=DEFAULT_ENUM_BUDGET):
    """Internal hom [F, G] with carrier(c) = Nat(y_c × F, G); returns the
    presheaf together with the evaluation map [F,G] × F -> G."""
    if F.base is not G.base:
        raise ValidationError("mixed bases")
    base = F.base
    ys = {c: yoneda(base, c) for c in base.objects}
    prods = {c: product(ys[c], F) for c in base.objects}
    transes = {c: hom_presheaf_set(prods[c][0], G, budget=budget)
               for c in base.objects}

    def enc(t: NatTrans):
        items = []
        for d in base.objects:
            for hx, v in t.components[d].items():
                items.append(((d,) + hx, v))
        return tuple(sorted(items, key=lambda kv: canon_key(kv[0])))

    tables = {c: {enc(t): t for t in transes[c]} for c in base.objects}
    carrier = {c: tuple(sorted(tables[c], key=canon_key))
               for c in base.objects}
    action = {}
    for m in base.morphisms:
        cp, c = m.source, m.target  # m: cp -> c restricts [F,G](c) -> [F,G](cp)
        fn = {}
        for e in carrier[c]:
            t = tables[c][e]
            comps = {d: {(h, x): t.components[d][(base.compose(m.id, h), x)]
                         for (h, x) in prods[cp][0].carrier(d)}
                     for d in base.objects}
            moved = NatTrans(prods[cp][0], G, comps, _checked=True)
            fn[e] = enc(moved)
        action[m.id] = fn
    E = Presheaf(base, carrier, action,
                 name=f"[{F.name or '?'},{G.name or '?'}]")
    EF, _, _ = product(E, F)
    ev_comps = {c: {(e, x): tables[c][e].components[c][(base.identity(c), x)]
                    for (e, x) in EF.carrier(c)}
                for c in base.objects}
    ev = NatTrans(EF, G, ev_comps)
    return E, ev


# ---------------------------------------------------------------------------
# Subobject classifier


def subobject_classifier(cat: FinCat):
    """The sieve classifier: Omega(c) = sieves on c, t = true: 1 -> Omega."""
    from .sieves import enumerate_sieves
    sieves = {c: enumerate_sieves(cat, c) for c in cat.objects}
    carrier = {c: tuple(s.encode() for s in sieves[c]) for c in cat.objects}
    by_enc = {c: {s.encode(): s for s in sieves[c]} for c in cat.objects}
    action = {}
    for m in cat.morphisms:
        action[m.id] = {e: pullback_sieve(cat, by_enc[m.target][e],
                                          m.id).encode()
                        for e in carrier[m.target]}
    Omega = Presheaf(cat, carrier, action, name="Omega", _checked=True)
    one = terminal(cat)
    t = NatTrans(one, Omega,
                 {c: {(): maximal_sieve(cat, c).encode()}
                  for c in cat.objects}, _checked=True)
    return Omega, t


def classify(m: NatTrans, Omega: Presheaf = None, t: NatTrans = None):
    """The unique map chi with chi-pullback of true equal to the mono m."""
    if not is_mono(m):
        raise ValidationError("classify expects a monomorphism")
    B = m.target
    cat = B.base
    if Omega is None:
        Omega, t = subobject_classifier(cat)
    sub = image_subpresheaf(m)
    comps = {}
    for c in cat.objects:
        comps[c] = {}
        for b in B.carrier(c):
            members = tuple(sorted(
                f for f in cat.arrows_into(c)
                if B.restrict(b, f) in sub.part[cat.source(f)]))
            comps[c][b] = members
    return NatTrans(B, Omega, comps, _checked=True)


# ---------------------------------------------------------------------------
# Isomorphism testing


def _element_colors(F: Presheaf):
    base = F.base
    color = {(c, x): (c,) for c, x in F.elements()}
    for _ in range(F.size() + 1):
        new = {}
        for c, x in F.elements():
            prof = tuple(sorted(
                (m.id, color[(m.source, F.restrict(x, m.id))])
                for m in base.morphisms if m.target == c))
            new[(c, x)] = (color[(c, x)], prof)
        if len(set(new.values())) == len(set(color.values())):
            ren = {}
            for k in sorted(set(new.values()), key=canon_key):
                ren[k] = len(ren)
            return {k: ren[v] for k, v in new.items()}
        color = new
    ren = {}
    for k in sorted(set(color.values()), key=canon_key):
        ren[k] = len(ren)
    return {k: ren[v] for k, v in color.items()}


def find_isomorphism(F: Presheaf, G: Presheaf):
    """An invertible natural transformation F -> G, or None."""
    if F.base is not G.base:
        return None
    base = F.base
    if any(len(F.carrier(c)) != len(G.carrier(c)) for c in base.objects):
        return None
    cf, cg = _element_colors(F), _element_colors(G)
    if sorted(cf.values()) != sorted(cg.values()):
        return None
    slots = [(c, x) for c in base.objects for x in F.carrier(c)]
    cand = {s: [y for y in G.carrier(s[0]) if cg[(s[0], y)] == cf[s]]
            for s in slots}
    index = {s: i for i, s in enumerate(slots)}
    assign = [None] * len(slots)
    used = {c: set() for c in base.objects}

    def consistent(i, v):
        c, x = slots[i]
        for m in base.morphisms:
            if m.target == c:
                j = index[(m.source, F.restrict(x, m.id))]
                if assign[j] is not None and assign[j] != G.restrict(v, m.id):
                    return False
            if m.source == c:
                for z in F.carrier(m.target):
                    if F.restrict(z, m.id) == x:
                        j = index[(m.target, z)]
                        if assign[j] is not None \
                                and G.restrict(assign[j], m.id) != v:
                            return False
        return True

    def extend(i):
        if i == len(slots):
            return True
        c, _ = slots[i]
        for v in cand[slots[i]]:
            if v in used[c] or not consistent(i, v):
                continue
            assign[i] = v
            used[c].add(v)
            if extend(i + 1):
                return True
            used[c].remove(v)
            assign[i] = None
        return False

    if not extend(0):
        return None
    comps = {c: {} for c in base.objects}
    for (c, x), v in zip(slots, assign):
        comps[c][x] = v
    return NatTrans(F, G, comps)


def isomorphic(F: Presheaf, G: Presheaf) -> bool:
    return find_isomorphism(F, G) is not None


# ---------------------------------------------------------------------------
# Exhaustive presheaf enumeration (probe families)


def enumerate_presheaves(cat: FinCat, bounds, up_to_iso=True,
                         budget=DEFAULT_ENUM_BUDGET):
    """All presheaves with |carrier(c)| <= bounds[c], deduplicated up to
    isomorphism when requested.  Deterministic order."""
    if isinstance(bounds, int):
        bounds = {c: bounds for c in cat.objects}
    letters = "abcdefghijklmnop"
    gens = cat.generators
    decomp = cat.decomposition
    out = []
    seen = set()
    size_ranges = [range(bounds[c] + 1) for c in cat.objects]
    count = 0
    for sizes in itertools.product(*size_ranges):
        carrier = {c: tuple(f"{letters[i]}{k}" for k in range(n))
                   for i, (c, n) in enumerate(zip(cat.objects, sizes))}
        for F in _fill_actions(cat, carrier, gens, decomp):
            count += 1
            if count > budget:
                raise BudgetExceededError(
                    f"presheaf enumeration exceeded budget {budget}")
            if up_to_iso:
                sig = _canonical_signature(F)
                if sig in seen:
                    continue
                seen.add(sig)
            out.append(F)
    return out


def _fill_actions(cat, carrier, gens, decomp):
    gen_list = list(gens)
    partial = {}

    def leaf():
        action = {}
        for c in cat.objects:
            action[cat.identity(c)] = {x: x for x in carrier[c]}
        for g in gen_list:
            action[g] = partial[g]
        for m, (last, rest) in decomp.items():
            action[m] = {x: action[rest][action[last][x]]
                         for x in carrier[cat.target(m)]}
        if functoriality_witness(cat, carrier, action) is None:
            yield Presheaf(cat, carrier, action, _checked=True)

    def compatible(g):
        # partial law checks: composites of assigned generators that are
        # identities or assigned generators themselves
        assigned = set(partial)
        for a in assigned:
            for b in assigned:
                if cat.target(b) != cat.source(a):
                    continue
                m = cat.compose(a, b)
                fm = None
                if cat.is_identity(m):
                    fm = {x: x for x in carrier[cat.target(m)]}
                elif m in assigned:
                    fm = partial[m]
                if fm is None:
                    continue
                for x in carrier[cat.target(a)]:
                    if partial[b][partial[a][x]] != fm[x]:
                        return False
        return True

    def extend(i):
        if i == len(gen_list):
            yield from leaf()
            return
        g = gen_list[i]
        dom = carrier[cat.target(g)]
        cod = carrier[cat.source(g)]
        if dom and not cod:
            return
        for values in itertools.product(cod, repeat=len(dom)):
            partial[g] = dict(zip(dom, values))
            if compatible(g):
                yield from extend(i + 1)
        partial.pop(g, None)

    yield from extend(0)


def _canonical_signature(F: Presheaf):
    base = F.base
    sizes = tuple(len(F.carrier(c)) for c in base.objects)
    pos = {c: {x: i for i, x in enumerate(F.carrier(c))}
           for c in base.objects}
    perm_sets = [list(itertools.permutations(range(len(F.carrier(c)))))
                 for c in base.objects]
    best = None
    for perms in itertools.product(*perm_sets):
        relab = dict(zip(base.objects, perms))
        rows = []
        for m in base.morphisms:
            d, c = m.source, m.target
            pc, pd = relab[c], relab[d]
            inv_c = [0] * len(pc)
            for i, v in enumerate(pc):
                inv_c[v] = i
            row = tuple(pd[pos[d][F.restrict(F.carrier(c)[inv_c[j]], m.id)]]
                        for j in range(len(pc)))
            rows.append(row)
        sig = (sizes, tuple(rows))
        if best is None or sig < best:
            best = sig
    return best
