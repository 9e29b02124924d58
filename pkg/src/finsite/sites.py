"""Grothendieck topologies on finite sites and the reflections they induce:
sheafification, separated reflection, and the two-topology biseparated
reflection.

On a finite site every topology has, at each object, a minimal covering
sieve (the intersection of all covers, itself a cover).  The covering
tests all reduce to it: a sieve covers iff it contains the minimal cover,
matching-family classes in the plus construction are represented by their
restriction to the minimal cover, and local equality is equality on it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import TopologyAxiomError, ValidationError
from .fincat import FinCat
from .presheaf import (NatTrans, Presheaf, Subpresheaf, identity_nat,
                       image_subpresheaf, is_mono)
from .sieves import (Sieve, empty_sieve, enumerate_sieves, is_sieve,
                     maximal_sieve, principal_sieve, pullback_sieve,
                     sieve_close)
from .util import Verdict, canon_key, canon_sorted

__all__ = [
    "Sieve", "GTopology", "BiSite", "empty_sieve", "maximal_sieve",
    "principal_sieve", "sieve_close", "enumerate_sieves", "pullback_sieve",
    "validate_topology", "trivial_topology", "generate_topology", "closure",
    "is_dense", "matching_families", "is_sheaf", "is_separated", "plus",
    "plus_map", "sheafify", "sheafify_map", "separated_reflection",
    "separated_map", "biseparated_reflect", "biseparated_map",
    "is_biseparated", "fixpoint_biseparated_reflect",
]


class GTopology:
    """A Grothendieck topology: for each object, its set of covering sieves.

    Construction validates the three axioms unless _checked is set; the
    failure carries the violating (object, sieve, morphism-or-sieve).
    """

    def __init__(self, base: FinCat, covers, name=None, _checked=False):
        self.base = base
        self.name = name
        self.covers = {c: tuple(sorted(
            covers.get(c, ()), key=lambda s: (len(s.members), s.encode())))
            for c in base.objects}
        self.cover_sets = {c: frozenset(s.members for s in self.covers[c])
                           for c in base.objects}
        if not _checked:
            self._check()
        self.min_cover = {}
        for c in base.objects:
            members = maximal_sieve(base, c).members
            for s in self.covers[c]:
                members = members & s.members
            self.min_cover[c] = Sieve(c, members)

    def _check(self):
        base = self.base
        for c in base.objects:
            for s in self.covers[c]:
                if s.base_obj != c or not is_sieve(base, c, s.members):
                    raise TopologyAxiomError(
                        f"cover assignment at {c!r} contains a non-sieve",
                        witness=("sieve", c, s))
            if maximal_sieve(base, c).members not in self.cover_sets[c]:
                raise TopologyAxiomError(
                    f"maximality fails: maximal sieve on {c!r} not a cover",
                    witness=("T1", c))
        for c in base.objects:
            for s in self.covers[c]:
                for h in base.arrows_into(c):
                    pb = pullback_sieve(base, s, h)
                    if pb.members not in self.cover_sets[base.source(h)]:
                        raise TopologyAxiomError(
                            f"stability fails at {c!r}: pullback of "
                            f"{s.encode()} along {h!r} is not a cover",
                            witness=("T2", c, s, h))
        for c in base.objects:
            all_sieves = enumerate_sieves(base, c)
            for s in self.covers[c]:
                for r in all_sieves:
                    if r.members in self.cover_sets[c]:
                        continue
                    if all(pullback_sieve(base, r, f).members
                           in self.cover_sets[base.source(f)]
                           for f in s.members):
                        raise TopologyAxiomError(
                            f"transitivity fails at {c!r}: {r.encode()} is "
                            f"locally a cover over {s.encode()} but not a "
                            "cover", witness=("T3", c, s, r))

    def is_cover(self, c, members) -> bool:
        if isinstance(members, Sieve):
            members = members.members
        return self.min_cover[c].members <= members

    def is_trivial(self) -> bool:
        return all(len(self.covers[c]) == 1 for c in self.base.objects)

    def encode(self):
        return tuple((c, tuple(s.encode() for s in self.covers[c]))
                     for c in self.base.objects)

    def __eq__(self, other):
        if not isinstance(other, GTopology):
            return NotImplemented
        return self.base is other.base and self.cover_sets == other.cover_sets

    def __hash__(self):
        return hash(self.encode())

    def __repr__(self):
        sizes = ", ".join(f"{c}:{len(self.covers[c])}"
                          for c in self.base.objects)
        return f"GTopology({self.name or '?'}; covers {sizes})"


def validate_topology(base: FinCat, covers, name=None) -> GTopology:
    """Check the three topology axioms exhaustively; witness on failure."""
    return GTopology(base, covers, name=name)


def trivial_topology(base: FinCat) -> GTopology:
    return GTopology(base, {c: (maximal_sieve(base, c),)
                            for c in base.objects},
                     name="trivial", _checked=True)


def generate_topology(base: FinCat, coverage, name=None) -> GTopology:
    """The least topology whose covers include the given sieves, computed
    by saturating under the three axioms to a fixpoint."""
    for c, sieves in coverage.items():
        for s in sieves:
            if s.base_obj != c or not is_sieve(base, c, s.members):
                raise ValidationError(
                    f"coverage at {c!r} contains a non-sieve")
    covers = {c: {maximal_sieve(base, c).members} for c in base.objects}
    for c, sieves in coverage.items():
        for s in sieves:
            covers[c].add(s.members)
    all_sieves = {c: enumerate_sieves(base, c) for c in base.objects}
    changed = True
    while changed:
        changed = False
        for c in base.objects:
            for members in list(covers[c]):
                s = Sieve(c, members)
                for h in base.arrows_into(c):
                    pb = pullback_sieve(base, s, h)
                    if pb.members not in covers[base.source(h)]:
                        covers[base.source(h)].add(pb.members)
                        changed = True
        for c in base.objects:
            for r in all_sieves[c]:
                if r.members in covers[c]:
                    continue
                for members in list(covers[c]):
                    if all(pullback_sieve(base, r, f).members
                           in covers[base.source(f)]
                           for f in members):
                        covers[c].add(r.members)
                        changed = True
                        break
    return GTopology(base, {c: tuple(Sieve(c, m) for m in covers[c])
                            for c in base.objects}, name=name, _checked=True)


@dataclass
class BiSite:
    """A base category with two topologies j ⊆ k."""

    base: FinCat
    j: GTopology
    k: GTopology
    name: str = None

    def __post_init__(self):
        if self.j.base is not self.base or self.k.base is not self.base:
            raise ValidationError("bisite topologies live on another base")
        for c in self.base.objects:
            bad = self.j.cover_sets[c] - self.k.cover_sets[c]
            if bad:
                raise ValidationError(
                    f"bisite rejected: a first-topology cover on {c!r} is "
                    "not a cover in the second topology",
                    witness=(c, canon_sorted(bad)[0]))


# ---------------------------------------------------------------------------
# Closure operator, density, sheaf conditions


def closure(sub: Subpresheaf, J: GTopology) -> Subpresheaf:
    """Smallest J-closed subobject containing sub: an element lies in the
    closure iff all its restrictions along the minimal cover lie in sub."""
    F = sub.ambient
    base = F.base
    part = {}
    for c in base.objects:
        mc = J.min_cover[c].members
        part[c] = {x for x in F.carrier(c)
                   if all(F.restrict(x, f) in sub.part[base.source(f)]
                          for f in mc)}
    return Subpresheaf(F, part)


def is_dense(sub: Subpresheaf, J: GTopology) -> Verdict:
    cl = closure(sub, J)
    for c in sub.ambient.base.objects:
        missing = set(sub.ambient.carrier(c)) - cl.part[c]
        if missing:
            x = canon_sorted(missing)[0]
            return Verdict(False, (c, x),
                           f"{x!r} at {c!r} is not in the closure")
    return Verdict(True)


def matching_families(S: Sieve, F: Presheaf) -> list:
    """All families (x_f) over the sieve with x_{f∘g} = x_f·g, as dicts
    keyed by sieve member, in deterministic order."""
    base = F.base
    members = sorted(S.members)
    index = {f: i for i, f in enumerate(members)}
    # constraints: for f in S and g into source(f), x at compose(f, g)
    # equals x_f restricted along g
    derived = [[] for _ in members]
    for f in members:
        for g in base.arrows_into(base.source(f)):
            fg = base.compose(f, g)
            i, j = index[f], index[fg]
            derived[max(i, j)].append((i, j, g))
    out = []
    assign = [None] * len(members)

    def extend(i):
        if i == len(members):
            out.append(dict(zip(members, assign)))
            return
        for v in F.carrier(base.source(members[i])):
            assign[i] = v
            ok = True
            for (a, b, g) in derived[i]:
                if assign[a] is None or assign[b] is None:
                    continue
                if F.restrict(assign[a], g) != assign[b]:
                    ok = False
                    break
            if ok:
                extend(i + 1)
        assign[i] = None

    extend(0)
    return out


def family_of(F: Presheaf, x, S: Sieve) -> dict:
    return {f: F.restrict(x, f) for f in S.members}


def amalgamations(F: Presheaf, c, S: Sieve, fam: dict) -> list:
    return [x for x in F.carrier(c)
            if all(F.restrict(x, f) == fam[f] for f in S.members)]


@dataclass(frozen=True)
class GluingWitness:
    """A cover and family with the wrong number of amalgamations."""

    obj: str
    sieve: Sieve
    family: tuple
    found: tuple

    def describe(self):
        kind = "no amalgamation" if not self.found else "two amalgamations"
        return (f"{kind} at {self.obj!r} over {sorted(self.sieve.members)}: "
                f"family {self.family}, found {self.found}")


def is_separated(F: Presheaf, J: GTopology) -> Verdict:
    """At most one amalgamation for every matching family over a cover:
    equivalently no two elements agree on the minimal cover."""
    base = F.base
    for c in base.objects:
        mc = J.min_cover[c]
        if mc.members == maximal_sieve(base, c).members:
            continue
        seen = {}
        for x in F.carrier(c):
            sig = tuple(F.restrict(x, f) for f in sorted(mc.members))
            if sig in seen:
                fam = family_of(F, x, mc)
                w = GluingWitness(c, mc,
                                  tuple(sorted(fam.items())),
                                  (seen[sig], x))
                return Verdict(False, w, w.describe())
            seen[sig] = x
    return Verdict(True)


def is_sheaf(F: Presheaf, J: GTopology) -> Verdict:
    """Exactly one amalgamation for every matching family over a cover.
    Checked over the minimal covers, which decide all covers."""
    sep = is_separated(F, J)
    if not sep:
        return sep
    base = F.base
    for c in base.objects:
        mc = J.min_cover[c]
        if mc.members == maximal_sieve(base, c).members:
            continue
        for fam in matching_families(mc, F):
            found = amalgamations(F, c, mc, fam)
            if len(found) != 1:
                w = GluingWitness(c, mc, tuple(sorted(fam.items())),
                                  tuple(found))
                return Verdict(False, w, w.describe())
    return Verdict(True)


# ---------------------------------------------------------------------------
# Plus construction and sheafification


def _encode_family(fam: dict):
    return tuple(sorted(fam.items()))


@dataclass
class PlusResult:
    presheaf: Presheaf
    unit: NatTrans
    families: dict  # (object, element id) -> family dict


def plus(F: Presheaf, J: GTopology) -> PlusResult:
    """One application of the plus construction.  Elements at c are the
    matching families over the minimal cover of c — each equivalence class
    of (cover, family) pairs has exactly one member over the minimal cover,
    and that member is the class's least encoding."""
    base = F.base
    fams = {}
    carrier = {}
    for c in base.objects:
        mc = J.min_cover[c]
        elems = []
        for fam in matching_families(mc, F):
            e = _encode_family(fam)
            fams[(c, e)] = fam
            elems.append(e)
        carrier[c] = tuple(sorted(elems, key=canon_key))
    action = {}
    for m in base.morphisms:
        d, c = m.source, m.target
        fn = {}
        for e in carrier[c]:
            fam = fams[(c, e)]
            moved = {g: fam[base.compose(m.id, g)]
                     for g in J.min_cover[d].members}
            fn[e] = _encode_family(moved)
        action[m.id] = fn
    P = Presheaf(base, carrier, action,
                 name=f"({F.name})+" if F.name else None, _checked=True)
    unit = NatTrans(F, P, {
        c: {x: _encode_family(family_of(F, x, J.min_cover[c]))
            for x in F.carrier(c)}
        for c in base.objects}, _checked=True)
    return PlusResult(P, unit, fams)


def plus_map(alpha: NatTrans, pF: PlusResult, pG: PlusResult) -> NatTrans:
    """The map F+ -> G+ induced by alpha: F -> G."""
    base = alpha.source.base
    comps = {}
    for c in base.objects:
        comps[c] = {}
        for e in pF.presheaf.carrier(c):
            fam = pF.families[(c, e)]
            moved = {f: alpha.components[base.source(f)][x]
                     for f, x in fam.items()}
            comps[c][e] = _encode_family(moved)
    return NatTrans(pF.presheaf, pG.presheaf, comps, _checked=True)


@dataclass
class SheafifyResult:
    presheaf: Presheaf
    unit: NatTrans
    first: PlusResult
    second: PlusResult


def sheafify(F: Presheaf, J: GTopology) -> SheafifyResult:
    """Plus applied twice; the result is a J-sheaf and the unit composes
    the two plus units."""
    p1 = plus(F, J)
    p2 = plus(p1.presheaf, J)
    return SheafifyResult(p2.presheaf, p1.unit.then(p2.unit), p1, p2)


def sheafify_map(alpha: NatTrans, sF: SheafifyResult,
                 sG: SheafifyResult) -> NatTrans:
    return plus_map(plus_map(alpha, sF.first, sG.first),
                    sF.second, sG.second)


# ---------------------------------------------------------------------------
# Separated reflection


@dataclass
class SeparatedResult:
    presheaf: Presheaf
    unit: NatTrans
    class_of: dict  # (object, element) -> representative


def separated_reflection(F: Presheaf, J: GTopology) -> SeparatedResult:
    """Quotient by local equality: x ~ y at c iff they agree on a cover,
    equivalently on the minimal cover.  Representatives are the least
    class members."""
    base = F.base
    class_of = {}
    carrier = {}
    for c in base.objects:
        mc = sorted(J.min_cover[c].members)
        buckets = {}
        for x in F.carrier(c):
            sig = tuple(F.restrict(x, f) for f in mc)
            buckets.setdefault(sig, []).append(x)
        for members in buckets.values():
            rep = min(members, key=canon_key)
            for x in members:
                class_of[(c, x)] = rep
        carrier[c] = tuple(x for x in F.carrier(c)
                           if class_of[(c, x)] == x)
    action = {m.id: {r: class_of[(m.source, F.restrict(r, m.id))]
                     for r in carrier[m.target]}
              for m in base.morphisms}
    P = Presheaf(base, carrier, action,
                 name=f"sep({F.name})" if F.name else None, _checked=True)
    unit = NatTrans(F, P, {c: {x: class_of[(c, x)] for x in F.carrier(c)}
                           for c in base.objects}, _checked=True)
    return SeparatedResult(P, unit, class_of)


def separated_map(alpha: NatTrans, sF: SeparatedResult,
                  sG: SeparatedResult) -> NatTrans:
    base = alpha.source.base
    comps = {c: {r: sG.class_of[(c, alpha.components[c][r])]
                 for r in sF.presheaf.carrier(c)}
             for c in base.objects}
    return NatTrans(sF.presheaf, sG.presheaf, comps, _checked=True)


# ---------------------------------------------------------------------------
# Biseparated reflection


def is_biseparated(X: Presheaf, bs: BiSite) -> Verdict:
    sh = is_sheaf(X, bs.j)
    if not sh:
        return Verdict(False, ("sheaf", sh.witness), sh.detail)
    sep = is_separated(X, bs.k)
    if not sep:
        return Verdict(False, ("separated", sep.witness), sep.detail)
    return Verdict(True)


@dataclass
class BiseparatedResult:
    presheaf: Presheaf
    unit: NatTrans
    ambient: SheafifyResult  # sheafification of X at the second topology
    sub: Subpresheaf  # the reflection as a subobject of the ambient sheaf


def biseparated_reflect(X: Presheaf, bs: BiSite) -> BiseparatedResult:
    """Reflection into the presheaves that are sheaves for the first
    topology and separated for the second: sheafify at k, take the image
    of the unit, close it up for j inside the sheafification.  Sheaf and
    separatedness of the result are re-verified before returning."""
    ak = sheafify(X, bs.k)
    img = image_subpresheaf(ak.unit)
    sub = closure(img, bs.j)
    L = sub.to_presheaf(name=f"L({X.name})" if X.name else None)
    unit = NatTrans(X, L, ak.unit.components, _checked=True)
    ok = is_sheaf(L, bs.j)
    if not ok:
        raise ValidationError(
            f"internal: reflection is not a sheaf ({ok.detail})",
            witness=ok.witness)
    ok = is_separated(L, bs.k)
    if not ok:
        raise ValidationError(
            f"internal: reflection is not separated ({ok.detail})",
            witness=ok.witness)
    return BiseparatedResult(L, unit, ak, sub)


def biseparated_map(alpha: NatTrans, rX: BiseparatedResult,
                    rY: BiseparatedResult) -> NatTrans:
    """The reflection of a morphism, computed functorially through the
    plus construction and restricted to the reflections."""
    base = alpha.source.base
    big = sheafify_map(alpha, rX.ambient, rY.ambient)
    comps = {}
    for c in base.objects:
        comps[c] = {}
        for x in rX.presheaf.carrier(c):
            y = big.components[c][x]
            if y not in rY.sub.part[c]:
                raise ValidationError(
                    "internal: reflected morphism leaves the reflection")
            comps[c][x] = y
    return NatTrans(rX.presheaf, rY.presheaf, comps, _checked=True)


def fixpoint_biseparated_reflect(X: Presheaf, bs: BiSite, max_iter=16):
    """Independent oracle for the biseparated reflection: alternate
    j-sheafification and k-local-equality quotient until the result is
    both; every step is orthogonal to biseparated objects."""
    cur, unit = X, identity_nat(X)
    for _ in range(max_iter):
        if is_biseparated(cur, bs):
            return cur, unit
        sh = sheafify(cur, bs.j)
        cur, unit = sh.presheaf, unit.then(sh.unit)
        sp = separated_reflection(cur, bs.k)
        cur, unit = sp.presheaf, unit.then(sp.unit)
    raise ValidationError(
        f"fixpoint reflection did not stabilize in {max_iter} rounds")
