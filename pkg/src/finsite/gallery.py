"""Built-in sites, reflections, probe sets, and expected verdict matrices.

Five cases: a pair-of-sets reflection that drops products, the
connected-components reflection that drops monos, the preorder reflection
that drops semi-left-exactness, the idempotent-splitting reflection (a
localization), and the simple-graph bisite as the positive control.
Expected matrices live in data/gallery_expected.json so tests and docs
share one source.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .errors import RecoveryError, ValidationError, WorkbenchError
from .fincat import CategoryDescription, FinCat, Word, validate_category
from .presheaf import NatTrans, Presheaf, presheaf_from_generators
from .sieves import sieve_close
from .sites import (BiSite, GTopology, generate_topology, is_separated,
                    is_sheaf, trivial_topology)
from .reflector import (BisiteReflection, CheckReport, IdentityReflection,
                        ProbeSet, ReflectionOracle, TableReflection,
                        build_probe_set, check_e_equals_biseparated,
                        recover_j, recover_k, run_checks, CONDITIONS)
from .util import UnionFind, canon_sorted

CASE_NAMES = ("two", "pi0", "preord", "idempotent-mset", "simple-graphs")


# ---------------------------------------------------------------------------
# Sites


_SITE_CACHE = {}


def rgph_site() -> FinCat:
    """Two objects 0, 1; endpoints d0, d1: 0 -> 1 and s: 1 -> 0 with
    s.d0 = s.d1 = id(0).  Presheaves are reflexive graphs."""
    if "rgph" not in _SITE_CACHE:
        _SITE_CACHE["rgph"] = validate_category(CategoryDescription(
            name="rgph", objects=["0", "1"],
            morphisms=[("d0", "0", "1"), ("d1", "0", "1"), ("s", "1", "0")],
            relations=[(Word("0", ("d0", "s")), Word("0", ())),
                       (Word("0", ("d1", "s")), Word("0", ()))]))
    return _SITE_CACHE["rgph"]


def idem_monoid_site() -> FinCat:
    """One object with an idempotent endomorphism e; presheaves are sets
    with an idempotent (right) action."""
    if "idem" not in _SITE_CACHE:
        _SITE_CACHE["idem"] = validate_category(CategoryDescription(
            name="idem", objects=["*"], morphisms=[("e", "*", "*")],
            relations=[(Word("*", ("e", "e")), Word("*", ("e",)))]))
    return _SITE_CACHE["idem"]


def pair_site() -> FinCat:
    """The discrete two-object category; presheaves are pairs of sets."""
    if "pair" not in _SITE_CACHE:
        _SITE_CACHE["pair"] = validate_category(CategoryDescription(
            name="pair", objects=["a", "b"], morphisms=[], relations=[]))
    return _SITE_CACHE["pair"]


def k_simple() -> GTopology:
    """On the reflexive-graph site: the endpoint sieve on 1 covers.
    Separated objects are the graphs without parallel edges."""
    if "k_simple" not in _SITE_CACHE:
        site = rgph_site()
        d = sieve_close(site, "1", ["d0", "d1"])
        _SITE_CACHE["k_simple"] = generate_topology(
            site, {"1": [d]}, name="k_simple")
    return _SITE_CACHE["k_simple"]


def k_split() -> GTopology:
    """On the idempotent monoid site: {e} covers.  Sheaves and separated
    objects both come out as the trivial-action sets."""
    if "k_split" not in _SITE_CACHE:
        site = idem_monoid_site()
        _SITE_CACHE["k_split"] = generate_topology(
            site, {"*": [sieve_close(site, "*", ["e"])]}, name="k_split")
    return _SITE_CACHE["k_split"]


def gallery_bisites():
    """Every bisite shipped with the gallery."""
    rg, mo = rgph_site(), idem_monoid_site()
    return [
        BiSite(rg, trivial_topology(rg), k_simple(), name="simple-graphs"),
        BiSite(rg, trivial_topology(rg), trivial_topology(rg),
               name="rgph-trivial"),
        BiSite(mo, trivial_topology(mo), k_split(), name="mset-split"),
        BiSite(mo, k_split(), k_split(), name="mset-both"),
    ]


def gallery_topologies():
    rg, mo, pr = rgph_site(), idem_monoid_site(), pair_site()
    return [trivial_topology(rg), k_simple(), trivial_topology(mo),
            k_split(), trivial_topology(pr)]


# ---------------------------------------------------------------------------
# Graph and M-set helpers


def reflexive_graph(vertices, arrows, name=None) -> Presheaf:
    """A reflexive graph as a presheaf on rgph_site(): one loop l<v> per
    vertex plus the named arrows {edge id: (src vertex, tgt vertex)}."""
    site = rgph_site()
    vertices = tuple(vertices)
    loops = {f"l{v}": (v, v) for v in vertices}
    alledges = dict(loops)
    for e, (u, v) in arrows.items():
        if e in alledges:
            raise ValidationError(f"edge id {e!r} collides with a loop")
        alledges[e] = (u, v)
    carrier = {"0": vertices, "1": tuple(alledges)}
    action = {
        "d0": {e: uv[0] for e, uv in alledges.items()},
        "d1": {e: uv[1] for e, uv in alledges.items()},
        "s": {v: f"l{v}" for v in vertices},
    }
    return presheaf_from_generators(site, carrier, action, name=name)


def mset(elements, e_action, name=None) -> Presheaf:
    """A right action of the idempotent monoid on a finite set."""
    site = idem_monoid_site()
    return presheaf_from_generators(
        site, {"*": tuple(elements)}, {"e": dict(e_action)}, name=name)


def graph_parts(G: Presheaf):
    """(vertices, edges, source map, target map) of a reflexive graph."""
    return (G.carrier("0"), G.carrier("1"),
            {e: G.restrict(e, "d0") for e in G.carrier("1")},
            {e: G.restrict(e, "d1") for e in G.carrier("1")})


# ---------------------------------------------------------------------------
# Hand-coded (table) reflections


def two_oracle() -> TableReflection:
    """Pair-of-sets reflection: both-empty goes to the empty pair, anything
    else to the pair of points."""
    site = pair_site()
    empty = Presheaf(site, {"a": (), "b": ()}, {}, name="00", _checked=True)
    point = Presheaf(site, {"a": ("pt",), "b": ("pt",)}, {}, name="11",
                     _checked=True)

    def reflect_obj(X):
        LX = empty if X.is_empty() else point
        comps = {c: {x: "pt" for x in X.carrier(c)} for c in site.objects}
        return LX, NatTrans(X, LX, comps, _checked=True)

    def reflect_mor(alpha, rx, ry):
        LX, LY = rx[0], ry[0]
        comps = {c: {x: "pt" for x in LX.carrier(c)} for c in site.objects}
        return NatTrans(LX, LY, comps, _checked=True)

    def is_local(X):
        sizes = tuple(len(X.carrier(c)) for c in site.objects)
        return sizes in ((0, 0), (1, 1))

    return TableReflection(site, reflect_obj, reflect_mor,
                           is_local_fn=is_local, name="two")


def _vertex_components(G: Presheaf):
    """Union-find of vertices under the edge relation."""
    _, edges, src, tgt = graph_parts(G)
    uf = UnionFind()
    for v in G.carrier("0"):
        uf.add(v)
    for e in edges:
        uf.union(src[e], tgt[e])
    rep = {}
    for members in uf.classes().values():
        r = members[0]
        for v in members:
            rep[v] = r
    return rep


def pi0_oracle() -> TableReflection:
    """Connected-components reflection of reflexive graphs onto the
    discrete ones."""
    site = rgph_site()

    def reflect_obj(G):
        rep = _vertex_components(G)
        reps = tuple(canon_sorted(set(rep.values())))
        LX = Presheaf(site, {"0": reps, "1": reps},
                      {"d0": {r: r for r in reps},
                       "d1": {r: r for r in reps},
                       "s": {r: r for r in reps},
                       "d0.s": {r: r for r in reps},
                       "d1.s": {r: r for r in reps}},
                      name=f"pi0({G.name})" if G.name else None,
                      _checked=True)
        comps = {"0": {v: rep[v] for v in G.carrier("0")},
                 "1": {e: rep[G.restrict(e, "d0")] for e in G.carrier("1")}}
        return LX, NatTrans(G, LX, comps, _checked=True)

    def reflect_mor(alpha, rx, ry):
        LX, unitX = rx
        LY, unitY = ry
        comps = {}
        back = {rep: v for v, rep in unitX.components["0"].items()}
        for c in site.objects:
            comps[c] = {r: unitY.components["0"][alpha.components["0"][back[r]]]
                        for r in LX.carrier(c)}
        return NatTrans(LX, LY, comps, _checked=True)

    def is_local(G):
        return len(G.carrier("1")) == len(G.carrier("0"))

    return TableReflection(site, reflect_obj, reflect_mor,
                           is_local_fn=is_local, name="pi0")


def _reachable_pairs(G: Presheaf):
    vertices, edges, src, tgt = graph_parts(G)
    adj = {v: set() for v in vertices}
    for e in edges:
        adj[src[e]].add(tgt[e])
    reach = {}
    for v in vertices:
        seen = {v}
        stack = [v]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        reach[v] = seen
    return [(u, v) for u in vertices for v in vertices if v in reach[u]]


def preord_oracle() -> TableReflection:
    """Reachability reflection of reflexive graphs onto preorders (graphs
    with at most one edge per ordered pair, closed under composition)."""
    site = rgph_site()

    def reflect_obj(G):
        pairs = tuple(sorted(_reachable_pairs(G)))
        verts = G.carrier("0")
        LX = presheaf_from_generators(
            site, {"0": verts, "1": pairs},
            {"d0": {p: p[0] for p in pairs},
             "d1": {p: p[1] for p in pairs},
             "s": {v: (v, v) for v in verts}},
            name=f"preord({G.name})" if G.name else None)
        comps = {"0": {v: v for v in verts},
                 "1": {e: (G.restrict(e, "d0"), G.restrict(e, "d1"))
                       for e in G.carrier("1")}}
        return LX, NatTrans(G, LX, comps, _checked=True)

    def reflect_mor(alpha, rx, ry):
        LX, LY = rx[0], ry[0]
        vmap = alpha.components["0"]
        comps = {"0": dict(vmap),
                 "1": {p: (vmap[p[0]], vmap[p[1]]) for p in LX.carrier("1")}}
        return NatTrans(LX, LY, comps, _checked=True)

    def is_local(G):
        vertices, edges, src, tgt = graph_parts(G)
        seen = set()
        for e in edges:
            pair = (src[e], tgt[e])
            if pair in seen:
                return False
            seen.add(pair)
        for e in edges:
            for f in edges:
                if tgt[e] == src[f] and (src[e], tgt[f]) not in seen:
                    return False
        return True

    return TableReflection(site, reflect_obj, reflect_mor,
                           is_local_fn=is_local, name="preord")


def mset_oracle() -> TableReflection:
    """Idempotent-splitting reflection of M-sets onto trivial actions:
    the carrier becomes the e-fixed points and the unit is x -> x·e."""
    site = idem_monoid_site()

    def reflect_obj(X):
        fixed = tuple(x for x in X.carrier("*")
                      if X.restrict(x, "e") == x)
        LX = Presheaf(site, {"*": fixed}, {"e": {x: x for x in fixed}},
                      name=f"split({X.name})" if X.name else None,
                      _checked=True)
        comps = {"*": {x: X.restrict(x, "e") for x in X.carrier("*")}}
        return LX, NatTrans(X, LX, comps, _checked=True)

    def reflect_mor(alpha, rx, ry):
        LX = rx[0]
        comps = {"*": {x: alpha.components["*"][x] for x in LX.carrier("*")}}
        return NatTrans(LX, ry[0], comps, _checked=True)

    def is_local(X):
        return all(X.restrict(x, "e") == x for x in X.carrier("*"))

    return TableReflection(site, reflect_obj, reflect_mor,
                           is_local_fn=is_local, name="idempotent-mset")


def simple_graphs_oracle() -> BisiteReflection:
    return BisiteReflection(gallery_bisites()[0], name="simple-graphs")


def identity_oracle(site: FinCat = None) -> IdentityReflection:
    return IdentityReflection(site or rgph_site(), name="identity")


TABLE_ORACLES = {
    "two": two_oracle,
    "pi0": pi0_oracle,
    "preord": preord_oracle,
    "idempotent-mset": mset_oracle,
    "identity": identity_oracle,
}


# ---------------------------------------------------------------------------
# Hand-picked witnesses


def chain_graph() -> Presheaf:
    """x -> w -> z with no composite edge: the semi-left-exactness witness
    for the preorder reflection."""
    return reflexive_graph(("x", "w", "z"),
                           {"a": ("x", "w"), "b": ("w", "z")}, name="chain")


def edge_preorder() -> Presheaf:
    """The preorder with two elements and one strict relation."""
    return reflexive_graph(("x", "z"), {"m": ("x", "z")}, name="edge")


def complete_graph(n) -> Presheaf:
    """One directed edge for every ordered vertex pair (loops included)."""
    verts = tuple(f"v{i}" for i in range(n))
    arrows = {f"e{u}{v}": (u, v) for u in verts for v in verts if u != v}
    return reflexive_graph(verts, arrows, name=f"K{n}")


def discrete_graph(n) -> Presheaf:
    return reflexive_graph(tuple(f"v{i}" for i in range(n)), {},
                           name=f"D{n}")


# ---------------------------------------------------------------------------
# Cases


@dataclass
class GalleryCase:
    name: str
    oracle_kind: str            # "table" or "bisite"
    make_oracle: object
    bound: object
    mono_bound: object = None
    extras: object = None       # callable producing hand-picked probes
    recover: str = "skip"       # skip | full | expect-k-failure
    membership_fail: bool = False
    notes: str = ""

    def oracle(self) -> ReflectionOracle:
        return self.make_oracle()

    def probes(self) -> ProbeSet:
        extras = self.extras() if self.extras else ()
        return build_probe_set(self.oracle(), bound=self.bound,
                               mono_bound=self.mono_bound,
                               extra_objects=extras)


_CASES = {
    "two": GalleryCase(
        name="two", oracle_kind="table", make_oracle=two_oracle, bound=2,
        notes="bound 2 per acceptance; products fail on ((0,1),(1,0))"),
    "pi0": GalleryCase(
        name="pi0", oracle_kind="table", make_oracle=pi0_oracle, bound=3,
        mono_bound={"0": 3, "1": 4}, recover="expect-k-failure",
        notes="mono family widened to edge bound 4 so the complete-graph "
              "witness is in-family"),
    "preord": GalleryCase(
        name="preord", oracle_kind="table", make_oracle=preord_oracle,
        bound=3, extras=lambda: (chain_graph(),), recover="full",
        membership_fail=True,
        notes="chain graph appended so the unit-pullback witness is "
              "in-family"),
    "idempotent-mset": GalleryCase(
        name="idempotent-mset", oracle_kind="table", make_oracle=mset_oracle,
        bound=3, recover="full",
        notes="membership additionally checked on all labeled actions with "
              "up to 4 elements"),
    "simple-graphs": GalleryCase(
        name="simple-graphs", oracle_kind="bisite",
        make_oracle=simple_graphs_oracle, bound=3, recover="full",
        notes="positive control; recovery must return the trivial and "
              "parallel-edge topologies exactly"),
}


def expected_matrices():
    data = resources.files("finsite.data").joinpath(
        "gallery_expected.json").read_text()
    return json.loads(data)


def build_case(name: str):
    """(oracle, probe set, expected matrix) for a gallery case."""
    if name not in _CASES:
        raise ValidationError(
            f"unknown gallery case {name!r}; choose from {CASE_NAMES}")
    case = _CASES[name]
    expected = expected_matrices()[name]
    return case.oracle(), case.probes(), expected


@dataclass
class CaseResult:
    name: str
    reports: dict               # condition -> CheckReport
    expected: dict              # condition -> "pass"/"fail"
    matrix_ok: bool
    mismatches: list
    recovered_j: GTopology = None
    recovered_k: GTopology = None
    recovery_error: str = None
    membership: CheckReport = None
    notes: list = field(default_factory=list)

    @property
    def ok(self):
        return self.matrix_ok and not self.notes_failures()

    def notes_failures(self):
        return [n for n in self.notes if n.startswith("FAIL")]

    def lines(self):
        out = [f"case {self.name}:"]
        for cond in CONDITIONS:
            r = self.reports[cond]
            mark = "==" if r.verdict == self.expected[cond] else "!="
            out.append(f"  {r} {mark} expected {self.expected[cond]}")
        if self.recovery_error:
            out.append(f"  recover_k: {self.recovery_error}")
        if self.recovered_j is not None:
            out.append(f"  recovered j: {self.recovered_j.encode()}")
        if self.recovered_k is not None:
            out.append(f"  recovered k: {self.recovered_k.encode()}")
        if self.membership is not None:
            out.append(f"  membership: {self.membership}")
        out.extend(f"  {n}" for n in self.notes)
        out.append(f"  => {'OK' if self.ok else 'MISMATCH'}")
        return out


def run_case(name: str) -> CaseResult:
    """Run the six checkers (plus recovery and membership where scheduled)
    and compare against the expected matrix."""
    case = _CASES.get(name)
    if case is None:
        raise ValidationError(
            f"unknown gallery case {name!r}; choose from {CASE_NAMES}")
    data = expected_matrices()[name]
    oracle, probes = case.oracle(), case.probes()
    reports = run_checks(oracle, probes)
    expected = {cond: data["matrix"][cond]["verdict"] for cond in CONDITIONS}
    mismatches = [cond for cond in CONDITIONS
                  if reports[cond].verdict != expected[cond]]
    result = CaseResult(name=name, reports=reports, expected=expected,
                        matrix_ok=not mismatches, mismatches=mismatches)

    if case.recover == "expect-k-failure":
        try:
            recover_k(oracle)
            result.notes.append("FAIL: covering recovery unexpectedly "
                                "produced a topology")
        except RecoveryError as exc:
            result.recovery_error = str(exc)
            result.notes.append(
                f"ok: covering recovery failed as expected "
                f"({exc.witness and exc.witness[0]})")
    elif case.recover == "full":
        result.recovered_j = recover_j(oracle)
        try:
            result.recovered_k = recover_k(oracle)
        except RecoveryError as exc:
            result.recovery_error = str(exc)
            result.notes.append("FAIL: covering recovery failed "
                                f"unexpectedly: {exc}")
        if result.recovered_k is not None:
            membership = check_e_equals_biseparated(
                oracle, result.recovered_j, result.recovered_k, probes)
            result.membership = membership
            if membership.ok == case.membership_fail:
                result.notes.append(
                    "FAIL: membership comparison came out "
                    f"{membership.verdict}, expected "
                    f"{'fail' if case.membership_fail else 'pass'}")
            expected_rec = data.get("recovered", {})
            for label, topo in (("j", result.recovered_j),
                                ("k", result.recovered_k)):
                want = expected_rec.get(label)
                if want is not None and _topology_encoding(topo) != want:
                    result.notes.append(
                        f"FAIL: recovered {label} is {_topology_encoding(topo)}, "
                        f"expected {want}")
    return result


def _topology_encoding(t: GTopology):
    return {c: [list(s.encode()) for s in t.covers[c]]
            for c in t.base.objects}


def all_msets_upto(n: int):
    """Every labeled idempotent action on at most n elements."""
    import itertools
    out = []
    for size in range(n + 1):
        elems = tuple(f"x{i}" for i in range(size))
        for values in itertools.product(elems, repeat=size):
            fn = dict(zip(elems, values))
            if all(fn[fn[x]] == fn[x] for x in elems):
                out.append(mset(elems, fn, name=f"M{size}"))
    return out
