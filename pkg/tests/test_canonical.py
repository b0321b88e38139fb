import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from suitgraph import canonical_dumps
from suitgraph.canonical import format_float


def test_sorted_keys_compact():
    assert canonical_dumps({"b": 1, "a": 2}) == '{"a":2,"b":1}'


def test_key_order_independence():
    assert canonical_dumps({"a": 1, "b": 2}) == canonical_dumps({"b": 2, "a": 1})


def test_scalars():
    assert canonical_dumps(None) == "null"
    assert canonical_dumps(True) == "true"
    assert canonical_dumps(False) == "false"
    assert canonical_dumps(7) == "7"
    assert canonical_dumps("x\"y") == '"x\\"y"'
    assert canonical_dumps([1, [2, 3]]) == "[1,[2,3]]"


def test_float_17_significant_digits():
    # 0.6 is not representable; the emitted digits round-trip to the same bits
    assert format_float(0.6) == "0.59999999999999998"
    assert format_float(1.0) == "1"
    assert format_float(0.5) == "0.5"


@pytest.mark.parametrize("value", [0.1, 1 / 3, 1e-300, 1e300, 123456789.123456, 2**-52])
def test_float_round_trip_exact(value):
    assert json.loads(format_float(value)) == value


def test_nonfinite_rejected():
    for bad in (math.inf, -math.inf, math.nan):
        with pytest.raises(ValueError):
            canonical_dumps(bad)


def test_bad_types_rejected():
    with pytest.raises(TypeError):
        canonical_dumps({1: "non-string key"})
    with pytest.raises(TypeError):
        canonical_dumps(object())


def test_nested_document_parses():
    doc = {"z": [1.5, {"k": None}], "a": {"b": True}}
    assert json.loads(canonical_dumps(doc)) == doc


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip_property(value):
    assert json.loads(format_float(value)) == value


@given(
    st.dictionaries(
        st.text(min_size=1, max_size=8),
        st.one_of(
            st.integers(min_value=-10**9, max_value=10**9),
            st.floats(allow_nan=False, allow_infinity=False),
            st.booleans(),
            st.none(),
            st.text(max_size=12),
        ),
        max_size=8,
    )
)
def test_document_round_trip_property(doc):
    assert json.loads(canonical_dumps(doc)) == doc
