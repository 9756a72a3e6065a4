import pytest
from hypothesis import given, strategies as st

from oclk.diagnostics import TypeCheckError
from oclk.types import (
    BOOLEAN, INTEGER, OCLANY, REAL, STRING, AmbiguityError, ClassType, CollType, NoCommonSupertype,
    UnknownClass, conforms_to, least_common_supertype, parse_type,
)
from oclk.typecheck import typecheck_expression

from helpers import model_of

TYPING = model_of("typing")
FLIGHT = ClassType("Flight")


def test_class_conforms_to_oclany():
    assert conforms_to(FLIGHT, OCLANY, TYPING)


def test_collections_are_not_oclany():
    assert not conforms_to(CollType("Set", FLIGHT), OCLANY, TYPING)
    assert not conforms_to(OCLANY, CollType("Set", OCLANY), TYPING)
    assert conforms_to(CollType("Set", FLIGHT), CollType("Set", OCLANY), TYPING)


def test_collection_kinds():
    assert conforms_to(CollType("Bag", INTEGER), CollType("Collection", REAL), TYPING)
    assert not conforms_to(CollType("Bag", INTEGER), CollType("Set", INTEGER), TYPING)


def test_integer_real():
    assert conforms_to(INTEGER, REAL, TYPING)
    assert not conforms_to(REAL, INTEGER, TYPING)
    assert least_common_supertype(INTEGER, REAL, TYPING) == REAL


def test_unrelated_basics_meet_at_oclany():
    assert least_common_supertype(STRING, BOOLEAN, TYPING) == OCLANY
    assert least_common_supertype(FLIGHT, INTEGER, TYPING) == OCLANY


def test_collection_and_scalar_have_no_common_supertype():
    with pytest.raises(NoCommonSupertype):
        least_common_supertype(CollType("Set", FLIGHT), FLIGHT, TYPING)


def test_set_and_bag_meet_at_collection():
    got = least_common_supertype(CollType("Set", INTEGER), CollType("Bag", REAL), TYPING)
    assert got == CollType("Collection", REAL)


def test_multiple_inheritance_is_ambiguous():
    with pytest.raises(AmbiguityError) as info:
        least_common_supertype(ClassType("Car"), ClassType("Boat"), TYPING)
    assert [str(c) for c in info.value.candidates] == ["Floating", "Vehicle"]


def test_unknown_class():
    with pytest.raises(UnknownClass):
        conforms_to(ClassType("Zeppelin"), OCLANY, TYPING)


def test_parse_type_roundtrip():
    for text in ("Integer", "Set(Flight)", "Sequence(Bag(Real))", "OclAny"):
        assert str(parse_type(text)) == text


def test_if_expression_types_as_real():
    typed = typecheck_expression("if count = 0 then 100 else x endif", TYPING, "Garage")
    assert typed.type == REAL


def test_if_expression_ambiguity_reported():
    with pytest.raises(TypeCheckError) as info:
        typecheck_expression("if useCar then car else boat endif", TYPING, "Garage")
    assert "candidates: Floating, Vehicle" in str(info.value.diagnostics[0])


def test_basic_type_extent_is_rejected():
    with pytest.raises(TypeCheckError) as info:
        typecheck_expression("Integer.allInstances->size", TYPING)
    assert "allInstances" in info.value.diagnostics[0].message


def test_class_extent_is_fine():
    assert str(typecheck_expression("Flight.allInstances", TYPING).type) == "Set(Flight)"


NAMES = ["Vehicle", "Floating", "Car", "Boat", "Flight", "Airport"]
scalars = st.sampled_from([INTEGER, REAL, STRING, BOOLEAN, OCLANY] + [ClassType(n) for n in NAMES])
types = st.recursive(scalars, lambda inner: st.builds(
    CollType, st.sampled_from(["Set", "Bag", "Sequence", "Collection"]), inner), max_leaves=3)


@given(types)
def test_conformance_is_reflexive(t):
    assert conforms_to(t, t, TYPING)


@given(types, types, types)
def test_conformance_is_transitive(a, b, c):
    if conforms_to(a, b, TYPING) and conforms_to(b, c, TYPING):
        assert conforms_to(a, c, TYPING)


@given(types, types)
def test_lcs_is_an_upper_bound(a, b):
    try:
        s = least_common_supertype(a, b, TYPING)
    except (AmbiguityError, NoCommonSupertype):
        return
    assert conforms_to(a, s, TYPING) and conforms_to(b, s, TYPING)
    assert least_common_supertype(b, a, TYPING) == s
