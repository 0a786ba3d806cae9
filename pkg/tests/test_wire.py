import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from secagg_sim import wire
from secagg_sim.field import GF
from secagg_sim.shamir import ShareParams, share_array

scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(-(2**80), 2**80),
    st.binary(max_size=64),
    st.text(max_size=20),
)
payloads = st.recursive(
    scalars,
    lambda inner: st.one_of(
        st.lists(inner, max_size=5),
        st.lists(inner, max_size=5).map(tuple),
        st.dictionaries(st.integers(0, 1000), inner, max_size=5),
    ),
    max_leaves=20,
)


@given(payloads)
def test_round_trip(obj):
    assert wire.decode(wire.encode(obj)) == obj


@given(st.lists(st.integers(0, GF.q - 1), max_size=100))
def test_vector_size_and_round_trip(values):
    v = GF.vector(values)
    enc = wire.encode(v)
    assert len(enc) == wire.VECTOR_HEADER + 4 * len(values)
    assert np.array_equal(wire.decode(enc), v)


def test_none_is_empty():
    assert wire.encode(None) == b""
    assert wire.decode(b"") is None


def test_share_array_round_trip():
    shares = share_array(GF.vector([1, 2, 3, 4, 5]), ShareParams(n=5, t=2, pack_k=2), np.random.default_rng(0))
    for s in shares:
        assert wire.decode(wire.encode(s)) == s
    nested = {1: (shares[0], shares[1])}
    back = wire.decode(wire.encode(nested))
    assert back[1][0] == shares[0] and back[1][1] == shares[1]


def test_numpy_scalars_encode_as_ints():
    assert wire.decode(wire.encode(np.int64(7))) == 7
    assert wire.decode(wire.encode(np.uint32(7))) == 7


def test_errors():
    with pytest.raises(TypeError):
        wire.encode(object())
    with pytest.raises(TypeError):
        wire.encode(np.zeros((2, 2), dtype=np.uint64))
    with pytest.raises(ValueError):
        wire.decode(wire.encode(5) + b"\x00")
    with pytest.raises(ValueError):
        wire.decode(b"\xff")
