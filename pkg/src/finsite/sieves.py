"""Sieves on a finite category: closure, enumeration, pullback."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .fincat import FinCat


@dataclass(frozen=True)
class Sieve:
    """A set of morphisms into base_obj closed under precomposition."""

    base_obj: str
    members: frozenset[str]

    def encode(self):
        return tuple(sorted(self.members))

    def __le__(self, other):
        return self.base_obj == other.base_obj and self.members <= other.members

    def __len__(self):
        return len(self.members)


def maximal_sieve(cat: FinCat, c) -> Sieve:
    return Sieve(c, frozenset(cat.arrows_into(c)))


def empty_sieve(c) -> Sieve:
    return Sieve(c, frozenset())


def is_sieve(cat: FinCat, c, members) -> bool:
    for f in members:
        if cat.target(f) != c:
            return False
        for g in cat.arrows_into(cat.source(f)):
            if cat.compose(f, g) not in members:
                return False
    return True


def sieve_close(cat: FinCat, c, generators) -> Sieve:
    """The least sieve on c containing the given morphisms into c."""
    members = set()
    for f in generators:
        if cat.target(f) != c:
            raise ValidationError(
                f"sieve generator {f!r} does not land in {c!r}")
        members.add(f)
        for g in cat.arrows_into(cat.source(f)):
            members.add(cat.compose(f, g))
    return Sieve(c, frozenset(members))


def principal_sieve(cat: FinCat, f) -> Sieve:
    return sieve_close(cat, cat.target(f), [f])


def enumerate_sieves(cat: FinCat, c) -> list[Sieve]:
    """All sieves on c, ordered by (size, members).

    Every sieve is a union of principal sieves, so the enumeration closes
    the empty sieve under single-generator unions; this is output-sensitive
    rather than a sweep over all subsets.
    """
    principals = [principal_sieve(cat, f).members for f in cat.arrows_into(c)]
    seen = {frozenset()}
    frontier = [frozenset()]
    while frontier:
        new = []
        for s in frontier:
            for p in principals:
                u = s | p
                if u not in seen:
                    seen.add(u)
                    new.append(u)
        frontier = new
    sieves = [Sieve(c, s) for s in seen]
    sieves.sort(key=lambda s: (len(s.members), s.encode()))
    return sieves


def pullback_sieve(cat: FinCat, sieve: Sieve, h) -> Sieve:
    """h^*(S) = {g into source(h) : h∘g in S}; always a sieve."""
    if cat.target(h) != sieve.base_obj:
        raise ValidationError(
            f"cannot pull back a sieve on {sieve.base_obj!r} along {h!r}")
    d = cat.source(h)
    members = frozenset(g for g in cat.arrows_into(d)
                        if cat.compose(h, g) in sieve.members)
    return Sieve(d, members)
