"""Line-oriented file formats for sites, presheaves, natural
transformations, topologies, and bisites.

Grammar (one directive per line; blank lines and lines starting with '#'
are skipped; tokens are bare words or double-quoted strings):

  category file:   category <name>            (optional header)
                   object <id>
                   mor <id> : <src> -> <dst>
                   rel <word> = <word>        word: '.'-separated ids,
                                              g.f meaning f then g, or
                                              id(<object>)
  presheaf file:   presheaf <name> over <category>
                   at <object>: {x, y, ...}
                   act <morphism>: x -> y, ...   (carrier(target) to
                                                  carrier(source); actions
                                                  of composites may be
                                                  omitted when derivable)
  nat file:        nat <name> : <presheaf> -> <presheaf> over <category>
                   component <object>: x -> y, ...
  topology file:   topology <name> over <category>
                   cover <object>: {m1, m2, ...}  (generators, auto-closed;
                                                   maximal sieves implicit)
  bisite file:     bisite <name> over <category>
                   j <topology-file-or-'trivial'>
                   k <topology-file-or-'trivial'>
"""

from __future__ import annotations

import re
from pathlib import Path

from .errors import ParseError, ValidationError
from .fincat import CategoryDescription, FinCat, Word, validate_category
from .presheaf import NatTrans, Presheaf, presheaf_from_generators
from .sieves import Sieve, maximal_sieve, sieve_close
from .sites import BiSite, GTopology, generate_topology, trivial_topology
from .util import canon_key

_BARE = re.compile(r"[A-Za-z0-9_.*'+-]+$")


def _label(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, tuple):
        return "(" + ",".join(_label(y) for y in x) + ")"
    if isinstance(x, frozenset):
        return "{" + ",".join(sorted(_label(y) for y in x)) + "}"
    return repr(x)


def element_labels(F: Presheaf) -> dict:
    """Deterministic printable labels for every element, unique per object."""
    out = {}
    for c in F.base.objects:
        labs = {x: _label(x) for x in F.carrier(c)}
        if len(set(labs.values())) != len(labs):
            labs = {x: f"e{i}" for i, x in enumerate(F.carrier(c))}
        out[c] = labs
    return out


def _quote(tok: str) -> str:
    if _BARE.match(tok):
        return tok
    return '"' + tok.replace("\\", "\\\\").replace('"', '\\"') + '"'


class _Lines:
    def __init__(self, text: str, path=None):
        self.path = path
        self.items = []
        for i, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            self.items.append((i, line))

    def error(self, line_no, msg):
        raise ParseError(msg, path=self.path, line=line_no)


def _split_tokens(body: str, lines: _Lines, line_no: int) -> list:
    """Split on commas at top level, honouring double quotes."""
    toks, cur, depth, quoted = [], [], 0, False
    i = 0
    while i < len(body):
        ch = body[i]
        if quoted:
            if ch == "\\" and i + 1 < len(body):
                cur.append(body[i + 1])
                i += 2
                continue
            if ch == '"':
                quoted = False
            else:
                cur.append(ch)
        elif ch == '"':
            quoted = True
        elif ch == "," and depth == 0:
            toks.append("".join(cur).strip())
            cur = []
        else:
            if ch in "({":
                depth += 1
            elif ch in ")}":
                depth -= 1
            cur.append(ch)
        i += 1
    if quoted:
        lines.error(line_no, "unterminated quote")
    last = "".join(cur).strip()
    if last:
        toks.append(last)
    return [t for t in toks if t]


def _parse_mapping(body: str, lines: _Lines, line_no: int) -> dict:
    out = {}
    for part in _split_tokens(body, lines, line_no):
        if "->" not in part:
            lines.error(line_no, f"expected 'x -> y' in {part!r}")
        left, right = part.split("->", 1)
        out[left.strip()] = right.strip()
    return out


# ---------------------------------------------------------------------------
# Categories


def parse_category(text: str, path=None, name=None) -> FinCat:
    lines = _Lines(text, path)
    objects, morphisms, relations = [], [], []
    for (no, line) in lines.items:
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "category":
            name = rest or name
        elif head == "object":
            if not rest:
                lines.error(no, "object needs an id")
            objects.append(rest)
        elif head == "mor":
            m = re.match(r"(\S+)\s*:\s*(\S+)\s*->\s*(\S+)$", rest)
            if not m:
                lines.error(no, "expected 'mor <id> : <src> -> <dst>'")
            mid, src, dst = m.groups()
            if "." in mid:
                lines.error(no, "morphism ids may not contain '.'")
            if src not in objects or dst not in objects:
                lines.error(no, f"unknown object in {line!r}")
            morphisms.append((mid, src, dst))
        elif head == "rel":
            if "=" not in rest:
                lines.error(no, "expected 'rel <word> = <word>'")
            lhs, rhs = (w.strip() for w in rest.split("=", 1))
            try:
                relations.append((_parse_word(lhs, objects, morphisms),
                                  _parse_word(rhs, objects, morphisms)))
            except ValidationError as exc:
                lines.error(no, str(exc))
        else:
            lines.error(no, f"unknown directive {head!r} in category file")
    desc = CategoryDescription(
        name=name or "cat", objects=objects, morphisms=morphisms,
        relations=relations)
    return validate_category(desc)


def _parse_word(text: str, objects, morphisms) -> Word:
    m = re.match(r"id\((\S+)\)$", text)
    if m:
        obj = m.group(1)
        if obj not in objects:
            raise ValidationError(f"unknown object {obj!r} in identity word")
        return Word(obj, ())
    gens = tuple(reversed(text.split(".")))  # g.f means f then g
    by_id = {mid: (src, dst) for (mid, src, dst) in morphisms}
    for g in gens:
        if g not in by_id:
            raise ValidationError(f"unknown morphism {g!r} in word")
    return Word(by_id[gens[0]][0], gens)


def load_category(path) -> FinCat:
    p = Path(path)
    return parse_category(p.read_text(), path=str(p), name=p.stem)


# ---------------------------------------------------------------------------
# Presheaves and natural transformations


def parse_presheaf(text: str, cat: FinCat, path=None) -> Presheaf:
    lines = _Lines(text, path)
    name = None
    carrier = {}
    action = {}
    for (no, line) in lines.items:
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "presheaf":
            m = re.match(r"(\S+)\s+over\s+(\S+)$", rest)
            if not m:
                lines.error(no, "expected 'presheaf <name> over <category>'")
            name, over = m.groups()
            if over != cat.name:
                lines.error(no, f"presheaf is over {over!r}, "
                                f"not {cat.name!r}")
        elif head == "at":
            m = re.match(r"(\S+)\s*:\s*\{(.*)\}$", rest)
            if not m:
                lines.error(no, "expected 'at <object>: {elements}'")
            obj, body = m.groups()
            if not cat.has_object(obj):
                lines.error(no, f"unknown object {obj!r}")
            carrier[obj] = tuple(_split_tokens(body, lines, no))
        elif head == "act":
            m = re.match(r"(\S+)\s*:\s*(.*)$", rest)
            if not m:
                lines.error(no, "expected 'act <morphism>: x -> y, ...'")
            mid, body = m.groups()
            if mid not in set(cat.morphism_ids()):
                lines.error(no, f"unknown morphism {mid!r}")
            action[mid] = _parse_mapping(body, lines, no)
        else:
            lines.error(no, f"unknown directive {head!r} in presheaf file")
    return presheaf_from_generators(cat, carrier, action, name=name)


def load_presheaf(path, cat: FinCat) -> Presheaf:
    p = Path(path)
    return parse_presheaf(p.read_text(), cat, path=str(p))


def write_presheaf(F: Presheaf, name=None) -> str:
    labels = element_labels(F)
    out = [f"presheaf {name or F.name or 'F'} over {F.base.name}"]
    for c in F.base.objects:
        elems = ", ".join(_quote(labels[c][x]) for x in F.carrier(c))
        out.append(f"at {c}: {{{elems}}}")
    for m in F.base.morphisms:
        if F.base.is_identity(m.id):
            continue
        pairs = ", ".join(
            f"{_quote(labels[m.target][x])} -> {_quote(labels[m.source][y])}"
            for x, y in F.action(m.id).items())
        out.append(f"act {m.id}: {pairs}")
    return "\n".join(out) + "\n"


def parse_nat(text: str, registry: dict, cat: FinCat, path=None) -> NatTrans:
    lines = _Lines(text, path)
    name, src, tgt = None, None, None
    comps = {}
    for (no, line) in lines.items:
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "nat":
            m = re.match(r"(\S+)\s*:\s*(\S+)\s*->\s*(\S+)\s+over\s+(\S+)$",
                         rest)
            if not m:
                lines.error(no, "expected 'nat <name> : <F> -> <G> over "
                                "<category>'")
            name, fsrc, ftgt, over = m.groups()
            if over != cat.name:
                lines.error(no, f"nat is over {over!r}, not {cat.name!r}")
            if fsrc not in registry or ftgt not in registry:
                lines.error(no, f"unknown presheaf in {line!r}; load both "
                                "presheaf files first")
            src, tgt = registry[fsrc], registry[ftgt]
        elif head == "component":
            m = re.match(r"(\S+)\s*:\s*(.*)$", rest)
            if not m:
                lines.error(no, "expected 'component <object>: x -> y, ...'")
            obj, body = m.groups()
            if not cat.has_object(obj):
                lines.error(no, f"unknown object {obj!r}")
            comps[obj] = _parse_mapping(body, lines, no)
        else:
            lines.error(no, f"unknown directive {head!r} in nat file")
    if src is None:
        raise ParseError("missing 'nat' header", path=path)
    return NatTrans(src, tgt, comps, name=name)


def write_nat(alpha: NatTrans, name=None, source_name=None,
              target_name=None) -> str:
    src_labels = element_labels(alpha.source)
    tgt_labels = element_labels(alpha.target)
    sname = source_name or alpha.source.name or "F"
    tname = target_name or alpha.target.name or "G"
    out = [f"nat {name or alpha.name or 'u'} : {sname} -> {tname} "
           f"over {alpha.source.base.name}"]
    for c in alpha.source.base.objects:
        pairs = ", ".join(
            f"{_quote(src_labels[c][x])} -> {_quote(tgt_labels[c][y])}"
            for x, y in alpha.components[c].items())
        out.append(f"component {c}: {pairs}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Topologies and bisites


def parse_topology(text: str, cat: FinCat, path=None,
                   saturate=False) -> GTopology:
    lines = _Lines(text, path)
    name = None
    covers = {c: [] for c in cat.objects}
    for (no, line) in lines.items:
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "topology":
            m = re.match(r"(\S+)\s+over\s+(\S+)$", rest)
            if not m:
                lines.error(no, "expected 'topology <name> over <category>'")
            name, over = m.groups()
            if over != cat.name:
                lines.error(no, f"topology is over {over!r}, "
                                f"not {cat.name!r}")
        elif head == "cover":
            m = re.match(r"(\S+)\s*:\s*\{(.*)\}$", rest)
            if not m:
                lines.error(no, "expected 'cover <object>: {morphisms}'")
            obj, body = m.groups()
            if not cat.has_object(obj):
                lines.error(no, f"unknown object {obj!r}")
            gens = _split_tokens(body, lines, no)
            known = set(cat.morphism_ids())
            for g in gens:
                if g not in known:
                    lines.error(no, f"unknown morphism {g!r}")
            covers[obj].append(sieve_close(cat, obj, gens))
        else:
            lines.error(no, f"unknown directive {head!r} in topology file")
    if saturate:
        return generate_topology(cat, covers, name=name)
    full = {c: list(covers[c]) for c in cat.objects}
    for c in cat.objects:
        mx = maximal_sieve(cat, c)
        if all(s.members != mx.members for s in full[c]):
            full[c].append(mx)
    return GTopology(cat, {c: tuple(full[c]) for c in cat.objects},
                     name=name)


def load_topology(path, cat: FinCat, saturate=False) -> GTopology:
    p = Path(path)
    t = parse_topology(p.read_text(), cat, path=str(p), saturate=saturate)
    if t.name is None:
        t.name = p.stem
    return t


def write_topology(t: GTopology, name=None) -> str:
    out = [f"topology {name or t.name or 'topology'} over {t.base.name}"]
    for c in t.base.objects:
        for s in t.covers[c]:
            members = ", ".join(sorted(s.members))
            out.append(f"cover {c}: {{{members}}}")
    return "\n".join(out) + "\n"


def parse_bisite(text: str, cat: FinCat, path=None) -> BiSite:
    lines = _Lines(text, path)
    name, j, k = None, None, None
    basedir = Path(path).parent if path else Path(".")

    def load_side(spec, no):
        if spec == "trivial":
            return trivial_topology(cat)
        p = Path(spec)
        if not p.is_absolute():
            p = basedir / p
        if not p.exists():
            lines.error(no, f"topology file {spec!r} not found")
        return load_topology(p, cat)

    for (no, line) in lines.items:
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if head == "bisite":
            m = re.match(r"(\S+)\s+over\s+(\S+)$", rest)
            if not m:
                lines.error(no, "expected 'bisite <name> over <category>'")
            name, over = m.groups()
            if over != cat.name:
                lines.error(no, f"bisite is over {over!r}, not {cat.name!r}")
        elif head == "j":
            j = load_side(rest, no)
        elif head == "k":
            k = load_side(rest, no)
        else:
            lines.error(no, f"unknown directive {head!r} in bisite file")
    if j is None or k is None:
        raise ParseError("bisite file needs both 'j' and 'k' lines",
                         path=path)
    return BiSite(cat, j, k, name=name)


def load_bisite(path, cat: FinCat) -> BiSite:
    p = Path(path)
    return parse_bisite(p.read_text(), cat, path=str(p))


def sniff_kind(text: str) -> str:
    """First directive decides the file kind."""
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head = line.split(" ", 1)[0]
        if head in ("category", "object", "mor", "rel"):
            return "category"
        if head == "presheaf":
            return "presheaf"
        if head == "nat":
            return "nat"
        if head == "topology":
            return "topology"
        if head == "bisite":
            return "bisite"
        raise ParseError(f"cannot determine file kind from {head!r}")
    raise ParseError("empty input file")
