import pytest
from hypothesis import given, settings

from bandsec.terms import Atom, AtomKind, Hash, Pair, PubKey, SymEnc
from bandsec.wire import ParseError, decode, encode, parse, show

from test_terms import term_strategy


def test_show_examples():
    t = Pair(Atom("T1", AtomKind.TIMESTAMP), Pair(Atom("u1", AtomKind.IDENTITY), Hash(Atom("pw", AtomKind.PASSWORD))))
    from bandsec.terms import aenc

    wire = aenc(t, PubKey("W"))
    assert show(wire) == "{timestamp(T1), identity(u1), hash(password(pw))}pk(W)"


def test_parse_examples():
    assert parse("pk(W)") == PubKey("W")
    assert parse("(a, b, c)") == Pair(Atom("a"), Pair(Atom("b"), Atom("c")))
    assert parse("{x}k") == SymEnc(Atom("x"), Atom("k"))
    assert parse("g^x").exponent == "x"
    assert parse("g^{y,x}") == parse("g^{x,y}")


def test_parse_rejects_garbage():
    with pytest.raises(ParseError):
        parse("{x}")
    with pytest.raises(ParseError):
        parse("pk(W) extra")
    with pytest.raises(ParseError):
        parse("")


def test_symenc_with_pubkey_key_round_trips():
    # Pathological but constructible: symmetric ciphertext keyed by a PubKey.
    t = SymEnc(Atom("x"), PubKey("W"))
    assert show(t) == "senc(x, pk(W))"
    assert parse(show(t)) == t


def test_encode_prefix_free_error():
    data = encode(Pair(Atom("a"), Atom("b")))
    from bandsec.terms import StructuralError

    with pytest.raises(StructuralError):
        decode(data + b"\x01")


@settings(max_examples=500, deadline=None)
@given(term_strategy())
def test_encode_decode_round_trip(t):
    assert decode(encode(t)) == t


@settings(max_examples=500, deadline=None)
@given(term_strategy())
def test_show_parse_round_trip(t):
    assert parse(show(t)) == t


@settings(max_examples=200, deadline=None)
@given(term_strategy(), term_strategy())
def test_encoding_injective(a, b):
    assert (encode(a) == encode(b)) == (a == b)
