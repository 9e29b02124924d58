"""Reflection oracles and decidable checkers for their limit-preservation
behaviour: mono/product/Frobenius preservation, semi-left-exactness, stable
units, quasi-left-exactness; recovery of the two topologies a qualifying
reflection hides; the weak subobject classifier of a bisite reflection.

All universally quantified conditions are decided over finite probe sets.
A failing check always carries a witness with the comparison map attached;
witness.replay(oracle) re-runs just that instance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import RecoveryError, ValidationError
from .fincat import FinCat
from .presheaf import (NatTrans, Presheaf, Subpresheaf, _canonical_signature,
                       bang, cokernel_pair, classify, enumerate_presheaves,
                       equalizer, hom_presheaf_set, identity_nat,
                       image_factorization, image_subpresheaf, inverse,
                       is_epi, is_iso, is_mono, isomorphic, pair_map, product,
                       pullback, sieve_subpresheaf, subobject_classifier,
                       terminal, yoneda)
from .sieves import enumerate_sieves, maximal_sieve, pullback_sieve
from .sites import (BiSite, GTopology, BiseparatedResult, biseparated_map,
                    biseparated_reflect, closure, generate_topology,
                    is_biseparated, is_separated, is_sheaf, validate_topology)
from .util import Verdict, canon_key

DEFAULT_PROBE_BOUND = 3
CONDITIONS = ("monos", "products", "frobenius", "semi-left-exact",
              "stable-units", "quasi-lex")
CONDITION_ALIASES = {
    "slE": "semi-left-exact", "sle": "semi-left-exact",
    "su": "stable-units", "ql": "quasi-lex", "mono": "monos",
    "product": "products",
}


def normalize_condition(name: str) -> str:
    name = CONDITION_ALIASES.get(name, name)
    if name not in CONDITIONS:
        raise ValidationError(f"unknown condition {name!r}")
    return name


# ---------------------------------------------------------------------------
# Oracles


class ReflectionOracle:
    """Uniform interface to a reflection onto a replete full subcategory of
    the presheaves on a finite base.

    is_local decides membership up to isomorphism, reflect_obj returns the
    reflected object with its unit, reflect_mor the reflected morphism.
    Implementations must be pure; results are memoized by value.
    """

    def __init__(self, base: FinCat, name=None):
        self.base = base
        self.name = name or type(self).__name__
        self._obj_cache = {}
        self._mor_cache = {}

    def is_local(self, X: Presheaf) -> bool:
        raise NotImplementedError

    def reflect_obj(self, X: Presheaf):
        got = self._obj_cache.get(X.key)
        if got is None:
            got = self._reflect_obj(X)
            self._obj_cache[X.key] = got
        return got

    def reflect_mor(self, alpha: NatTrans) -> NatTrans:
        k = alpha.key()
        got = self._mor_cache.get(k)
        if got is None:
            got = self._reflect_mor(alpha)
            self._mor_cache[k] = got
        return got

    def unit(self, X: Presheaf) -> NatTrans:
        return self.reflect_obj(X)[1]

    def _reflect_obj(self, X):
        raise NotImplementedError

    def _reflect_mor(self, alpha):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class IdentityReflection(ReflectionOracle):
    """The reflection onto everything."""

    def is_local(self, X):
        return True

    def _reflect_obj(self, X):
        return X, identity_nat(X)

    def _reflect_mor(self, alpha):
        return alpha


class BisiteReflection(ReflectionOracle):
    """The reflection induced by a bisite: onto the presheaves that are
    sheaves for the first topology and separated for the second."""

    def __init__(self, bisite: BiSite, name=None):
        super().__init__(bisite.base, name or (bisite.name or "bisite"))
        self.bisite = bisite
        self._full_cache = {}

    def is_local(self, X):
        return bool(is_biseparated(X, self.bisite))

    def _full(self, X) -> BiseparatedResult:
        got = self._full_cache.get(X.key)
        if got is None:
            got = biseparated_reflect(X, self.bisite)
            self._full_cache[X.key] = got
        return got

    def _reflect_obj(self, X):
        r = self._full(X)
        return r.presheaf, r.unit

    def _reflect_mor(self, alpha):
        return biseparated_map(alpha, self._full(alpha.source),
                               self._full(alpha.target))


class TableReflection(ReflectionOracle):
    """A reflection given by explicit rules: a membership predicate (or a
    list of local shapes, matched up to isomorphism), an object rule, and a
    morphism rule.  Used for the hand-coded gallery reflections."""

    def __init__(self, base, reflect_obj_fn, reflect_mor_fn=None,
                 is_local_fn=None, local_shapes=None, name=None):
        super().__init__(base, name)
        self._reflect_obj_fn = reflect_obj_fn
        self._reflect_mor_fn = reflect_mor_fn
        self._is_local_fn = is_local_fn
        self._local_shapes = list(local_shapes or ())

    def is_local(self, X):
        if self._is_local_fn is not None:
            return bool(self._is_local_fn(X))
        return any(isomorphic(X, S) for S in self._local_shapes)

    def _reflect_obj(self, X):
        return self._reflect_obj_fn(X)

    def _reflect_mor(self, alpha):
        rx, ry = self.reflect_obj(alpha.source), self.reflect_obj(alpha.target)
        if self._reflect_mor_fn is not None:
            return self._reflect_mor_fn(alpha, rx, ry)
        # fall back to the unique extension along the units
        for h in hom_presheaf_set(rx[0], ry[0]):
            if rx[1].then(h) == alpha.then(ry[1]):
                return h
        raise ValidationError("no extension of the morphism to the "
                              "reflections; the table rules are inconsistent")


# ---------------------------------------------------------------------------
# Probe sets


@dataclass
class ProbeSet:
    """Finite families the checkers quantify over.  Tagged sublists record
    which family each checker consumes; `exhaustive` says which families
    enumerate everything up to iso within the stated carrier bounds."""

    base: FinCat
    objects: list
    local_objects: list
    morphisms: list
    monos: list
    product_pairs: list
    frobenius_pairs: list
    sle_cospans: list       # (u: A -> LX, X, unit: X -> LX)
    pullback_cospans: list  # (v: X -> B, u: Y -> B), B local
    equalizer_pairs: list   # (f, g, origin mono or None)
    provenance: str
    exhaustive: dict

    def describe(self):
        return (f"{len(self.objects)} objects, {len(self.monos)} monos, "
                f"{len(self.product_pairs)} product pairs, "
                f"{len(self.sle_cospans)} unit cospans, "
                f"{len(self.pullback_cospans)} pullback cospans, "
                f"{len(self.equalizer_pairs)} parallel pairs "
                f"({self.provenance})")


_HOM_CACHE = {}


def all_homs(F: Presheaf, G: Presheaf):
    key = (id(F.base), F.key, G.key)
    got = _HOM_CACHE.get(key)
    if got is None:
        got = hom_presheaf_set(F, G)
        _HOM_CACHE[key] = got
    return got


def _dedupe_iso(presheaves):
    out, seen = [], set()
    for F in presheaves:
        sig = _canonical_signature(F)
        if sig not in seen:
            seen.add(sig)
            out.append(F)
    return out


def build_probe_set(oracle: ReflectionOracle, bound=DEFAULT_PROBE_BOUND,
                    mono_bound=None, extra_objects=(), provenance=None,
                    equalizer_bound=None) -> ProbeSet:
    """Exhaustively enumerated probes at the given per-object carrier
    bounds, up to isomorphism, with optional hand-picked extra objects.

    `mono_bound` widens (only) the family the mono checker quantifies
    over; `equalizer_bound` narrows the parallel-pair family when the hom
    sets grow too fast.  Deterministic throughout.
    """
    base = oracle.base
    objects = enumerate_presheaves(base, bound)
    extras = [X for X in extra_objects
              if _canonical_signature(X) not in
              {_canonical_signature(F) for F in objects}]
    objects = objects + extras

    if mono_bound is not None:
        mono_objects = enumerate_presheaves(base, mono_bound) + [
            X for X in extras
            if _canonical_signature(X) not in
            {_canonical_signature(F)
             for F in enumerate_presheaves(base, mono_bound)}]
    else:
        mono_objects = objects

    morphisms = []
    for F in objects:
        for G in objects:
            morphisms.extend(all_homs(F, G))

    monos = []
    for F in mono_objects:
        for G in mono_objects:
            for h in all_homs(F, G):
                if is_mono(h):
                    monos.append(h)

    locals_raw = [X for X in objects if oracle.is_local(X)]
    locals_raw += [oracle.reflect_obj(X)[0] for X in objects]
    local_objects = _dedupe_iso(locals_raw)

    product_pairs = [(objects[i], objects[j])
                     for i in range(len(objects))
                     for j in range(i, len(objects))]
    frobenius_pairs = [(X, A) for X in objects for A in local_objects]

    sle_cospans = []
    for X in objects:
        LX, unit = oracle.reflect_obj(X)
        for A in local_objects:
            for u in all_homs(A, LX):
                sle_cospans.append((u, X, unit))

    pullback_cospans = []
    for B in local_objects:
        for X in objects:
            for v in all_homs(X, B):
                for Y in objects:
                    for u in all_homs(Y, B):
                        pullback_cospans.append((v, u))

    # Diagrams derived from tagged monos come first: when mono preservation
    # fails, the first quasi-lex failure is then the transportable one.
    equalizer_pairs = []
    for m in monos:
        _, i1, i2 = cokernel_pair(m)
        equalizer_pairs.append((i1, i2, m))
    eq_objects = (objects if equalizer_bound is None
                  else enumerate_presheaves(base, equalizer_bound))
    for Y in eq_objects:
        for Z in eq_objects:
            homs = all_homs(Y, Z)
            for i in range(len(homs)):
                for j in range(i + 1, len(homs)):
                    equalizer_pairs.append((homs[i], homs[j], None))

    note = provenance or f"exhaustive up to iso at bound {bound}"
    if extras:
        note += f", plus {len(extras)} hand-picked objects"
    if mono_bound is not None:
        note += f"; mono family at bound {mono_bound}"
    # Hand-picked extras only enlarge families that already contain the
    # full enumeration at the stated bound, so exhaustiveness stands.
    return ProbeSet(
        base=base, objects=objects, local_objects=local_objects,
        morphisms=morphisms, monos=monos, product_pairs=product_pairs,
        frobenius_pairs=frobenius_pairs, sle_cospans=sle_cospans,
        pullback_cospans=pullback_cospans, equalizer_pairs=equalizer_pairs,
        provenance=note,
        exhaustive={cond: True for cond in CONDITIONS})


# ---------------------------------------------------------------------------
# Reports and witnesses


@dataclass
class CheckReport:
    condition: str
    ok: bool
    witness: object
    exhaustive: bool
    instances: int
    note: str = ""

    @property
    def verdict(self):
        return "pass" if self.ok else "fail"

    def to_json(self):
        out = {"name": self.condition, "verdict": self.verdict,
               "exhaustive": self.exhaustive, "instances": self.instances}
        if self.witness is not None:
            out["witness"] = self.witness.describe()
        if self.note:
            out["note"] = self.note
        return out

    def __str__(self):
        tail = f" [{self.witness.describe()}]" if self.witness else ""
        return (f"{self.condition}: {self.verdict} "
                f"({self.instances} instances"
                f"{', exhaustive' if self.exhaustive else ''}){tail}")


def _sizes(F: Presheaf):
    return tuple(len(F.carrier(c)) for c in F.base.objects)


@dataclass
class MonoWitness:
    mono: NatTrans
    reflected: NatTrans
    collision: tuple

    def describe(self):
        c, x1, x2 = self.collision
        return (f"mono {_sizes(self.mono.source)} -> "
                f"{_sizes(self.mono.target)} reflects to a non-mono: "
                f"{x1!r} and {x2!r} collide at {c!r}")

    def replay(self, oracle) -> bool:
        return bool(is_mono(oracle.reflect_mor(self.mono)))


@dataclass
class ComparisonWitness:
    """A canonical comparison map that failed to be invertible (or, for
    quasi-lex instances, failed mono-or-epi in the subcategory)."""

    kind: str
    data: tuple
    comparison: NatTrans
    detail: str
    origin_mono: NatTrans = None

    def describe(self):
        src = _sizes(self.comparison.source)
        tgt = _sizes(self.comparison.target)
        return f"{self.kind} comparison {src} -> {tgt}: {self.detail}"

    def replay(self, oracle) -> bool:
        if self.kind == "products":
            X, Y = self.data
            return bool(is_iso(product_comparison(oracle, X, Y)))
        if self.kind == "frobenius":
            X, A = self.data
            return bool(is_iso(frobenius_comparison(oracle, X, A)))
        if self.kind == "semi-left-exact":
            u, X, unit = self.data
            return bool(is_iso(sle_reflected_projection(oracle, u, X, unit)))
        if self.kind == "stable-units":
            v, u = self.data
            return bool(is_iso(pullback_comparison(oracle, v, u)))
        if self.kind == "quasi-lex-product":
            X, Y = self.data
            cmp_ = product_comparison(oracle, X, Y)
            return bool(is_mono(cmp_)) and epi_in_subcategory(oracle, cmp_)
        if self.kind == "quasi-lex-equalizer":
            f, g = self.data
            cmp_ = equalizer_comparison(oracle, f, g)
            return bool(is_mono(cmp_)) and epi_in_subcategory(oracle, cmp_)
        raise ValidationError(f"unknown witness kind {self.kind!r}")


@dataclass
class MembershipWitness:
    obj: Presheaf
    local: bool
    sheaf: Verdict
    separated: Verdict

    def describe(self):
        return (f"object {_sizes(self.obj)}: is_local={self.local} but "
                f"sheaf={bool(self.sheaf)}, separated={bool(self.separated)}")


# ---------------------------------------------------------------------------
# Comparison maps


def epi_in_subcategory(oracle: ReflectionOracle, m: NatTrans) -> bool:
    """Epi test in the subcategory via the reflected cokernel pair: the
    cokernel pair of m there is the reflection of the presheaf pushout, so
    m is epi iff the two injections agree after the unit."""
    _, i1, i2 = cokernel_pair(m)
    _, unit = oracle.reflect_obj(i1.target)
    return i1.then(unit) == i2.then(unit)


def product_comparison(oracle, X, Y) -> NatTrans:
    """L(X × Y) -> LX × LY."""
    P, p1, p2 = product(X, Y)
    Lp1, Lp2 = oracle.reflect_mor(p1), oracle.reflect_mor(p2)
    Q, _, _ = product(Lp1.target, Lp2.target)
    return pair_map(Lp1, Lp2, Q)


def frobenius_comparison(oracle, X, A) -> NatTrans:
    """L(X × A) -> LX × A for local A, collapsing the unit of A."""
    P, p1, p2 = product(X, A)
    Lp1, Lp2 = oracle.reflect_mor(p1), oracle.reflect_mor(p2)
    _, unitA = oracle.reflect_obj(A)
    if not is_iso(unitA):
        raise ValidationError("frobenius probe object is not local")
    Q, _, _ = product(Lp1.target, A)
    return pair_map(Lp1, Lp2.then(inverse(unitA)), Q)


def sle_reflected_projection(oracle, u, X, unit) -> NatTrans:
    """For the pullback of u: A -> LX along the unit of X, the reflection
    of the projection onto A; inverting it is preservation of the square."""
    expected = oracle.reflect_obj(X)[1]
    if unit != expected:
        raise ValidationError("cospan right leg is not a unit of this "
                              "reflection")
    _, qa, _ = pullback(u, unit)
    return oracle.reflect_mor(qa)


def pullback_comparison(oracle, v, u) -> NatTrans:
    """L(X ×_B Y) -> LX ×_B LY over a local base B."""
    B = v.target
    _, unitB = oracle.reflect_obj(B)
    if not is_iso(unitB):
        raise ValidationError("base of cospan not local")
    inv_unit = inverse(unitB)
    P, p1, p2 = pullback(v, u)
    Lp1, Lp2 = oracle.reflect_mor(p1), oracle.reflect_mor(p2)
    lv = oracle.reflect_mor(v).then(inv_unit)
    lu = oracle.reflect_mor(u).then(inv_unit)
    Q, _, _ = pullback(lv, lu)
    return pair_map(Lp1, Lp2, Q)


def equalizer_comparison(oracle, f, g) -> NatTrans:
    """L(eq(f, g)) -> eq(Lf, Lg), the latter computed in presheaves since
    the subcategory is closed under finite limits."""
    E, e = equalizer(f, g)
    Lf, Lg = oracle.reflect_mor(f), oracle.reflect_mor(g)
    E2, _ = equalizer(Lf, Lg)
    Le = oracle.reflect_mor(e)
    comps = {c: dict(Le.components[c]) for c in E.base.objects}
    return NatTrans(Le.source, E2, comps)


# ---------------------------------------------------------------------------
# The six checkers


def check_preserves_monos(oracle, probes: ProbeSet) -> CheckReport:
    ex = probes.exhaustive.get("monos", False)
    for m in probes.monos:
        Lm = oracle.reflect_mor(m)
        v = is_mono(Lm)
        if not v:
            w = MonoWitness(m, Lm, v.witness)
            return CheckReport("monos", False, w, ex, len(probes.monos),
                               w.describe())
    return CheckReport("monos", True, None, ex, len(probes.monos))


def check_preserves_products(oracle, probes: ProbeSet) -> CheckReport:
    ex = probes.exhaustive.get("products", False)
    for (X, Y) in probes.product_pairs:
        cmp_ = product_comparison(oracle, X, Y)
        v = is_iso(cmp_)
        if not v:
            w = ComparisonWitness("products", (X, Y), cmp_, v.detail)
            return CheckReport("products", False, w, ex,
                               len(probes.product_pairs), w.describe())
    return CheckReport("products", True, None, ex, len(probes.product_pairs))


def check_frobenius(oracle, probes: ProbeSet) -> CheckReport:
    ex = probes.exhaustive.get("frobenius", False)
    for (X, A) in probes.frobenius_pairs:
        cmp_ = frobenius_comparison(oracle, X, A)
        v = is_iso(cmp_)
        if not v:
            w = ComparisonWitness("frobenius", (X, A), cmp_, v.detail)
            return CheckReport("frobenius", False, w, ex,
                               len(probes.frobenius_pairs), w.describe())
    return CheckReport("frobenius", True, None, ex,
                       len(probes.frobenius_pairs))


def check_semi_left_exact(oracle, probes: ProbeSet) -> CheckReport:
    ex = probes.exhaustive.get("semi-left-exact", False)
    for (u, X, unit) in probes.sle_cospans:
        Lq = sle_reflected_projection(oracle, u, X, unit)
        v = is_iso(Lq)
        if not v:
            w = ComparisonWitness("semi-left-exact", (u, X, unit), Lq,
                                  v.detail)
            return CheckReport("semi-left-exact", False, w, ex,
                               len(probes.sle_cospans), w.describe())
    return CheckReport("semi-left-exact", True, None, ex,
                       len(probes.sle_cospans))


def check_stable_units(oracle, probes: ProbeSet) -> CheckReport:
    ex = probes.exhaustive.get("stable-units", False)
    for (v, u) in probes.pullback_cospans:
        cmp_ = pullback_comparison(oracle, v, u)
        vd = is_iso(cmp_)
        if not vd:
            w = ComparisonWitness("stable-units", (v, u), cmp_, vd.detail)
            return CheckReport("stable-units", False, w, ex,
                               len(probes.pullback_cospans), w.describe())
    return CheckReport("stable-units", True, None, ex,
                       len(probes.pullback_cospans))


def check_quasi_lex(oracle, probes: ProbeSet) -> CheckReport:
    """Comparison maps for finite limits must be mono and epi in the
    subcategory; products and equalizers suffice."""
    ex = probes.exhaustive.get("quasi-lex", False)
    n = len(probes.product_pairs) + len(probes.equalizer_pairs)
    for (X, Y) in probes.product_pairs:
        cmp_ = product_comparison(oracle, X, Y)
        mono_ok = bool(is_mono(cmp_))
        epi_ok = epi_in_subcategory(oracle, cmp_)
        if not (mono_ok and epi_ok):
            w = ComparisonWitness(
                "quasi-lex-product", (X, Y), cmp_,
                f"mono={mono_ok}, epi-in-subcategory={epi_ok}")
            return CheckReport("quasi-lex", False, w, ex, n, w.describe())
    for (f, g, origin) in probes.equalizer_pairs:
        cmp_ = equalizer_comparison(oracle, f, g)
        mono_ok = bool(is_mono(cmp_))
        epi_ok = epi_in_subcategory(oracle, cmp_)
        if not (mono_ok and epi_ok):
            w = ComparisonWitness(
                "quasi-lex-equalizer", (f, g), cmp_,
                f"mono={mono_ok}, epi-in-subcategory={epi_ok}",
                origin_mono=origin)
            return CheckReport("quasi-lex", False, w, ex, n, w.describe())
    return CheckReport("quasi-lex", True, None, ex, n)


CHECKERS = {
    "monos": check_preserves_monos,
    "products": check_preserves_products,
    "frobenius": check_frobenius,
    "semi-left-exact": check_semi_left_exact,
    "stable-units": check_stable_units,
    "quasi-lex": check_quasi_lex,
}


def run_checks(oracle, probes, conditions=CONDITIONS):
    return {cond: CHECKERS[normalize_condition(cond)](oracle, probes)
            for cond in conditions}


def transport_quasi_lex_failure(oracle, report: CheckReport):
    """From a quasi-lex failure with a non-mono equalizer comparison,
    produce a mono whose reflection fails to be mono.

    For a diagram derived from a mono's cokernel pair that is the original
    mono; otherwise it is the equalizer inclusion itself."""
    w = report.witness
    if report.ok or not isinstance(w, ComparisonWitness):
        raise ValidationError("nothing to transport")
    if w.kind == "quasi-lex-equalizer" and not is_mono(w.comparison):
        if w.origin_mono is not None:
            return w.origin_mono
        f, g = w.data
        _, e = equalizer(f, g)
        return e
    raise ValidationError(
        "quasi-lex failure is not of the mono-transportable shape")


# ---------------------------------------------------------------------------
# Orthogonality / separatedness of objects against morphisms


def is_orthogonal(X: Presheaf, alpha: NatTrans) -> Verdict:
    """Every map from alpha's source to X factors uniquely through alpha."""
    pre = {}
    for h in all_homs(alpha.target, X):
        pre.setdefault(alpha.then(h).key(), []).append(h)
    for a in all_homs(alpha.source, X):
        hits = pre.get(a.key(), [])
        if len(hits) != 1:
            return Verdict(False, (a, tuple(hits)),
                           f"map has {len(hits)} factorizations")
    return Verdict(True)


def is_separated_wrt(X: Presheaf, alpha: NatTrans) -> Verdict:
    """Every map from alpha's source to X factors in at most one way."""
    pre = {}
    for h in all_homs(alpha.target, X):
        pre.setdefault(alpha.then(h).key(), []).append(h)
    for key, hits in pre.items():
        if len(hits) > 1:
            return Verdict(False, (hits[0], hits[1]),
                           "two maps agree after precomposition")
    return Verdict(True)


def certify_reflection(X, LX, unit, probes) -> Verdict:
    """The orthogonality oracle: against every local probe object A,
    precomposition with the unit must biject hom(LX, A) with hom(X, A)."""
    for A in probes.local_objects:
        seen = {}
        for h in all_homs(LX, A):
            k = unit.then(h).key()
            if k in seen:
                return Verdict(False, (A, seen[k], h),
                               "two extensions agree on the unit")
            seen[k] = h
        for a in all_homs(X, A):
            if a.key() not in seen:
                return Verdict(False, (A, a), "map does not extend")
    return Verdict(True)


# ---------------------------------------------------------------------------
# The factorization through reflections with monomorphic units


@dataclass
class RFactorization:
    middle: Presheaf          # image of the unit
    epi_part: NatTrans        # X ->> middle
    mono_part: NatTrans       # middle >-> LX
    middle_unit_mono: Verdict  # the middle object's own unit is monic


def r_factorization(oracle, X: Presheaf) -> RFactorization:
    """Factor the unit as a pointwise surjection onto its image followed
    by an inclusion; the image lands in the subobject-closure of the
    subcategory, certified by its unit being monic."""
    LX, unit = oracle.reflect_obj(X)
    e, m = image_factorization(unit)
    middle = e.target
    return RFactorization(middle, e, m, is_mono(oracle.unit(middle)))


# ---------------------------------------------------------------------------
# Topology recovery


def recover_k(oracle: ReflectionOracle) -> GTopology:
    """Covers are the sieves whose representable inclusion reflects to a
    mono that is epi in the subcategory.  The candidate assignment is then
    validated; a RecoveryError carries the axiom witness when it is not a
    topology."""
    base = oracle.base
    ys = {c: yoneda(base, c) for c in base.objects}
    covers = {}
    for c in base.objects:
        keep = []
        for s in enumerate_sieves(base, c):
            incl = sieve_subpresheaf(base, s, ys[c]).inclusion()
            li = oracle.reflect_mor(incl)
            if is_mono(li) and epi_in_subcategory(oracle, li):
                keep.append(s)
        covers[c] = tuple(keep)
    try:
        return validate_topology(base, covers, name="recovered_k")
    except ValidationError as exc:
        raise RecoveryError(
            f"recovered covers are not a topology: {exc}",
            candidate=covers, witness=exc.witness) from exc


def recover_j(oracle: ReflectionOracle) -> GTopology:
    """Covers generated by the sieves all of whose pullbacks have their
    representable inclusion inverted by the reflection."""
    base = oracle.base
    ys = {c: yoneda(base, c) for c in base.objects}
    coverage = {}
    for c in base.objects:
        keep = []
        for s in enumerate_sieves(base, c):
            ok = True
            for h in base.arrows_into(c):
                d = base.source(h)
                pb = pullback_sieve(base, s, h)
                incl = sieve_subpresheaf(base, pb, ys[d]).inclusion()
                if not is_iso(oracle.reflect_mor(incl)):
                    ok = False
                    break
            if ok:
                keep.append(s)
        coverage[c] = keep
    return generate_topology(base, coverage, name="recovered_j")


def check_e_equals_biseparated(oracle, j: GTopology, k: GTopology,
                               probes: ProbeSet) -> CheckReport:
    """Membership in the subcategory must coincide with being a j-sheaf
    and k-separated, over every probe object."""
    n = 0
    for X in probes.objects:
        n += 1
        local = oracle.is_local(X)
        sh, sep = is_sheaf(X, j), is_separated(X, k)
        if local != (bool(sh) and bool(sep)):
            w = MembershipWitness(X, local, sh, sep)
            return CheckReport("membership", False, w, True, n,
                               w.describe())
    return CheckReport("membership", True, None, True, n)


# ---------------------------------------------------------------------------
# Weak subobject classifier


@dataclass
class WeakClassifierResult:
    omega: Presheaf          # the presheaf classifier
    true_map: NatTrans       # 1 -> omega
    omega_prime: Presheaf    # the equalizer carved inside omega
    true_prime: NatTrans     # 1 -> omega_prime
    chi: NatTrans            # L(omega) -> omega classifying the unit image
    obligations: dict        # named Verdicts checked on construction


def weak_classifier(bs: BiSite, oracle: BisiteReflection = None
                    ) -> WeakClassifierResult:
    """The classifier for strong subobjects in the biseparated subcategory:
    equalize the classifier's reflection-comparison endomap with the
    identity and factor true through it."""
    base = bs.base
    if oracle is None:
        oracle = BisiteReflection(bs)
    omega, t = subobject_classifier(base)
    one = t.source
    l_omega, unit_omega = oracle.reflect_obj(omega)
    lt = oracle.reflect_mor(NatTrans(one, omega, t.components))
    if not is_mono(lt):
        raise ValidationError("reflected true map is not monic")
    chi = classify(lt, omega, t)

    chi_ell = unit_omega.then(chi)
    prime, incl = equalizer(chi_ell, identity_nat(omega))
    tp_comps = {c: dict(t.components[c]) for c in base.objects}
    for c in base.objects:
        if t.components[c][()] not in set(prime.carrier(c)):
            raise ValidationError("true does not factor through the "
                                  "equalizer")
    t_prime = NatTrans(one, prime, tp_comps)

    obligations = {}
    obligations["local"] = is_biseparated(prime, bs)
    l_prime, unit_prime = oracle.reflect_obj(prime)
    li = oracle.reflect_mor(incl)
    chi_prime_raw = li.then(chi)
    comps = {}
    ok = True
    for c in base.objects:
        comps[c] = {}
        for x in l_prime.carrier(c):
            y = chi_prime_raw.components[c][x]
            if y not in set(prime.carrier(c)):
                ok = False
                break
            comps[c][x] = y
    if ok:
        chi_prime = NatTrans(l_prime, prime, comps)
        obligations["retraction"] = Verdict(
            unit_prime.then(chi_prime) == identity_nat(prime))
    else:
        obligations["retraction"] = Verdict(
            False, None, "comparison does not restrict to the equalizer")
    return WeakClassifierResult(omega, t, prime, t_prime, chi, obligations)


def is_k_closed(m: NatTrans, k: GTopology) -> bool:
    """Primary strongness criterion in the separated world: the subobject
    is its own k-closure in the ambient object."""
    sub = image_subpresheaf(m)
    return closure(sub, k) == sub


def has_unique_diagonal_lift(m: NatTrans, e: NatTrans) -> Verdict:
    """Whether every commuting square from the epi e to the mono m has a
    unique diagonal filler; probe-level strongness cross-check."""
    tops = all_homs(e.source, m.source)
    bottoms = all_homs(e.target, m.target)
    lifts = all_homs(e.target, m.source)
    for top in tops:
        for bottom in bottoms:
            if not top.then(m) == e.then(bottom):
                continue
            found = [d for d in lifts
                     if e.then(d) == top and d.then(m) == bottom]
            if len(found) != 1:
                return Verdict(False, (top, bottom, tuple(found)),
                               f"square has {len(found)} fillers")
    return Verdict(True)


def check_classifies(result: WeakClassifierResult, bs: BiSite,
                     probes: ProbeSet, oracle=None) -> CheckReport:
    """For every k-closed mono between biseparated probe objects there is
    exactly one map into the weak classifier whose pullback of true-prime
    is that mono."""
    if oracle is None:
        oracle = BisiteReflection(bs)
    prime, t_prime = result.omega_prime, result.true_prime
    instances = 0
    for m in probes.monos:
        if not (oracle.is_local(m.source) and oracle.is_local(m.target)):
            continue
        if not is_k_closed(m, bs.k):
            continue
        instances += 1
        n = count_classifying_maps(m, prime, t_prime)
        if n != 1:
            w = ClassifierWitness(m, prime, t_prime, n)
            return CheckReport("classifies", False, w, True, instances,
                               w.describe())
    return CheckReport("classifies", True, None, True, instances)


@dataclass
class ClassifierWitness:
    mono: NatTrans
    omega_prime: Presheaf
    true_prime: NatTrans
    found: int

    def describe(self):
        return (f"{self.found} classifying maps for the strong mono "
                f"{_sizes(self.mono.source)} >-> {_sizes(self.mono.target)}")

    def replay(self, oracle=None) -> bool:
        return count_classifying_maps(self.mono, self.omega_prime,
                                      self.true_prime) == 1


def count_classifying_maps(m: NatTrans, omega_prime: Presheaf,
                           t_prime: NatTrans) -> int:
    B = m.target
    base = B.base
    sub = image_subpresheaf(m)
    true_at = {c: t_prime.components[c][()] for c in base.objects}
    count = 0
    for f in all_homs(B, omega_prime):
        hit = all(
            (f.components[c][b] == true_at[c]) == (b in sub.part[c])
            for c in base.objects for b in B.carrier(c))
        if hit:
            count += 1
    return count
