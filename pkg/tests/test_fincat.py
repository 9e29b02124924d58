"""Category validation, presentation closure, duals, and hom-sets."""

import pytest

from finsite.errors import BudgetExceededError, ValidationError
from finsite.fincat import (CategoryDescription, Morphism, Word, opposite,
                            validate_category)

RGPH_MORPHISMS = {"id_0", "id_1", "d0", "d1", "s", "d0.s", "d1.s"}


def test_rgph_closure_has_seven_morphisms(rgph):
    assert set(rgph.morphism_ids()) == RGPH_MORPHISMS
    assert rgph.identity("0") == "id_0"
    assert rgph.source("d0.s") == "1" and rgph.target("d0.s") == "1"


def test_rgph_degenerate_edges_absorb(rgph):
    # (loop after loop) collapses to the left loop
    for i in "01":
        for j in "01":
            assert rgph.compose(f"d{i}.s", f"d{j}.s") == f"d{i}.s"
    # the defining relations themselves
    assert rgph.compose("s", "d0") == "id_0"
    assert rgph.compose("s", "d1") == "id_0"


def test_idempotent_monoid(monoid):
    assert set(monoid.morphism_ids()) == {"id_*", "e"}
    assert monoid.compose("e", "e") == "e"


def test_full_table_roundtrip():
    desc = CategoryDescription(
        name="m", objects=["*"],
        morphisms=[("1", "*", "*"), ("e", "*", "*")],
        identity={"*": "1"},
        table={("1", "1"): "1", ("1", "e"): "e",
               ("e", "1"): "e", ("e", "e"): "e"})
    cat = validate_category(desc)
    assert cat.compose("e", "e") == "e"


def test_associativity_failure_carries_witness():
    # three non-identity endos with a deliberately broken table
    table = {}
    ids = ["1", "a", "b"]
    for g in ids:
        for f in ids:
            if "1" in (g, f):
                table[(g, f)] = f if g == "1" else g
            else:
                table[(g, f)] = "a"
    table[("a", "a")] = "b"
    table[("b", "a")] = "a"
    table[("a", "b")] = "a"
    table[("b", "b")] = "a"
    desc = CategoryDescription(
        name="bad", objects=["*"],
        morphisms=[(i, "*", "*") for i in ids],
        identity={"*": "1"}, table=table)
    with pytest.raises(ValidationError) as exc:
        validate_category(desc)
    assert "associativity" in str(exc.value)
    assert exc.value.witness is not None


def test_missing_identity_rejected():
    desc = CategoryDescription(
        name="bad", objects=["*"], morphisms=[("e", "*", "*")],
        identity={}, table={("e", "e"): "e"})
    with pytest.raises(ValidationError, match="identity"):
        validate_category(desc)


def test_composite_outside_morphism_list_rejected():
    desc = CategoryDescription(
        name="bad", objects=["*"],
        morphisms=[("1", "*", "*"), ("e", "*", "*")],
        identity={"*": "1"},
        table={("1", "1"): "1", ("1", "e"): "e",
               ("e", "1"): "e", ("e", "e"): "ghost"})
    with pytest.raises(ValidationError, match="not a listed morphism"):
        validate_category(desc)


def test_closure_budget_exceeded():
    # free monoid on one generator is infinite
    desc = CategoryDescription(
        name="free", objects=["*"], morphisms=[("x", "*", "*")])
    with pytest.raises(BudgetExceededError):
        validate_category(desc, budget=50)


def test_relation_with_unknown_morphism_rejected(rgph):
    desc = CategoryDescription(
        name="bad", objects=["0"], morphisms=[("f", "0", "0")],
        relations=[(Word("0", ("f", "ghost")), Word("0", ()))])
    with pytest.raises(ValidationError, match="unknown morphism"):
        validate_category(desc)


def test_opposite_discrete_is_itself(pair):
    assert opposite(pair) == pair


def test_opposite_is_involution(rgph, monoid):
    assert opposite(opposite(rgph)) == rgph
    assert opposite(monoid) == monoid


def test_opposite_swaps_hom_sets(rgph):
    op = opposite(rgph)
    assert op.hom_set("1", "0") == rgph.hom_set("0", "1")
    assert op.compose("d0", "s") == rgph.compose("s", "d0")


def test_hom_sets(rgph, pair):
    assert rgph.hom_set("0", "1") == ["d0", "d1"]
    assert rgph.hom_set("1", "1") == ["id_1", "d0.s", "d1.s"]
    for c in rgph.objects:
        assert rgph.identity(c) in rgph.hom_set(c, c)
    assert pair.hom_set("a", "b") == []


def test_hom_sets_partition_morphisms(rgph, monoid):
    for cat in (rgph, monoid):
        seen = []
        for a in cat.objects:
            for b in cat.objects:
                seen.extend(cat.hom_set(a, b))
        assert sorted(seen) == sorted(cat.morphism_ids())


def test_hom_set_unknown_object(rgph):
    with pytest.raises(ValidationError, match="unknown object"):
        rgph.hom_set("0", "7")


def test_generators_generate(rgph, monoid):
    for cat in (rgph, monoid):
        gens = cat.generators
        assert cat._generated_set(list(gens)) == set(cat.morphism_ids())
        for m, (last, rest) in cat.decomposition.items():
            assert cat.compose(last, rest) == m


def test_laws_hold_exhaustively(rgph):
    for m in rgph.morphisms:
        assert rgph.compose(m.id, rgph.identity(m.source)) == m.id
        assert rgph.compose(rgph.identity(m.target), m.id) == m.id
    for h in rgph.morphisms:
        for g in rgph.morphisms:
            if g.target != h.source:
                continue
            for f in rgph.morphisms:
                if f.target != g.source:
                    continue
                assert rgph.compose(rgph.compose(h.id, g.id), f.id) == \
                    rgph.compose(h.id, rgph.compose(g.id, f.id))
