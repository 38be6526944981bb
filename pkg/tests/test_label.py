import pytest
from hypothesis import given
from hypothesis import strategies as st

from hierlabel.label import (
    DuplicateHop,
    Label,
    LabelError,
    LabelOverflow,
    MalformedField,
    append_hop,
    decode_mac,
    encode_mac,
    format_mac,
    hop_count,
    is_prefix,
    parse_mac,
)

L = Label.of


def test_append_hop():
    assert append_hop(L(1), 2) == L(1, 2)
    assert append_hop(L(1, 2, 4), 3) == L(1, 2, 4, 3)


def test_append_hop_leaves_input_alone():
    base = L(1, 2)
    append_hop(base, 3)
    assert base == L(1, 2)


def test_append_duplicate_raises():
    with pytest.raises(DuplicateHop):
        append_hop(L(1), 1)


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (L(1), L(1, 2, 7), True),
        (L(1, 2), L(1, 2), True),
        (L(1, 2), L(1, 3, 2), False),
        (L(1, 2, 3), L(1, 2), False),
    ],
)
def test_is_prefix(a, b, expected):
    assert is_prefix(a, b) is expected


@pytest.mark.parametrize("label, hops", [(L(1), 0), (L(1, 2, 3), 2), (L(1, 2, 4, 3), 3)])
def test_hop_count(label, hops):
    assert hop_count(label) == hops


def test_encode_mac():
    assert format_mac(encode_mac(L(1, 2, 3))) == "01:02:03:00:00:00"
    assert format_mac(encode_mac(L(1))) == "01:00:00:00:00:00"
    assert format_mac(encode_mac(L(200, 255))) == "c8:ff:00:00:00:00"
    with pytest.raises(LabelOverflow):
        encode_mac(L(1, 2, 3, 4, 5, 6, 7))


def test_decode_mac():
    assert decode_mac(parse_mac("01:02:00:00:00:00")) == L(1, 2)
    assert decode_mac(parse_mac("01:00:00:00:00:00")) == L(1)
    with pytest.raises(MalformedField):
        decode_mac(parse_mac("01:00:02:00:00:00"))


@pytest.mark.parametrize(
    "raw", [bytes(6), bytes([1, 2, 3]), bytes([1, 1, 0, 0, 0, 0]), bytes(7)]
)
def test_decode_rejects_bad_fields(raw):
    with pytest.raises(MalformedField):
        decode_mac(raw)


def test_label_invariants():
    with pytest.raises(LabelError):
        Label(())
    with pytest.raises(DuplicateHop):
        L(1, 2, 1)
    with pytest.raises(LabelError):
        L(0)



def test_wide_ids_are_labels_but_not_mac_fields():
    wide = L(1, 300)
    assert str(wide) == "1.300"
    with pytest.raises(LabelOverflow):
        encode_mac(wide)


def test_dotted_text():
    assert str(L(1, 2, 4, 3)) == "1.2.4.3"
    assert Label.parse("1.2.4.3") == L(1, 2, 4, 3)
    with pytest.raises(LabelError):
        Label.parse("1..2")


node_ids = st.integers(min_value=1, max_value=255)
labels = st.lists(node_ids, min_size=1, max_size=8, unique=True).map(lambda h: Label(tuple(h)))
encodable = st.lists(node_ids, min_size=1, max_size=6, unique=True).map(lambda h: Label(tuple(h)))


@given(encodable)
def test_mac_roundtrip(label):
    field = encode_mac(label)
    assert len(field) == 6
    assert decode_mac(field) == label


@given(st.lists(node_ids, min_size=7, max_size=20, unique=True))
def test_deep_labels_overflow(hops):
    with pytest.raises(LabelOverflow):
        encode_mac(Label(tuple(hops)))


@given(labels)
def test_prefix_reflexive(a):
    assert is_prefix(a, a)


@given(labels, labels, labels)
def test_prefix_transitive_and_antisymmetric(a, b, c):
    if is_prefix(a, b) and is_prefix(b, c):
        assert is_prefix(a, c)
    if is_prefix(a, b) and is_prefix(b, a):
        assert a == b


@given(labels, node_ids)
def test_append_succeeds_iff_new(label, x):
    if x in label:
        with pytest.raises(DuplicateHop):
            append_hop(label, x)
    else:
        longer = append_hop(label, x)
        assert hop_count(longer) == hop_count(label) + 1
        assert is_prefix(label, longer)


@given(st.lists(node_ids, min_size=1, max_size=12))
def test_construction_never_admits_duplicates(hops):
    if len(set(hops)) == len(hops):
        assert Label(tuple(hops)).hops == tuple(hops)
    else:
        with pytest.raises(DuplicateHop):
            Label(tuple(hops))
