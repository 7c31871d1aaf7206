"""Canonical byte encoding and round-trippable text syntax for terms.

Byte layout (big-endian u32 length prefixes, one tag byte per
constructor; term equality equals byte equality):

    0x01 Atom      kind_byte  len(name) name
    0x02 Pair      enc(left) enc(right)
    0x03 Hash      enc(body)
    0x04 SymEnc    enc(body) enc(key)
    0x05 AsymEnc   enc(body) enc(pubkey)
    0x06 Sig       enc(body) enc(signkey)
    0x07 PubKey    len(owner) owner
    0x08 PrivKey   len(owner) owner
    0x09 DhPub     len(exp) exp
    0x0a DhShared  len(e1) e1  len(e2) e2      (canonically sorted)
    0x0b KdfKey    u32 count, then enc(input) each

Text syntax, as used in traces, reports and protocol files:

    constant atom            connectionAck
    kinded atom              nonce(n1)  timestamp(42)  identity(P)
                             password(pw)  payload(PhoneData)  number(517203)
    pair (right nested)      (a, b, c)
    hash                     hash(t)
    symmetric encryption     {t}k          or senc(t, k)
    asymmetric encryption    {t}pk(W)      or aenc(t, pk(W))
    signature                sig(t, sk(W))
    key pair                 pk(W)  sk(W)
    DH public / shared       g^x    g^{x,y}
    key derivation           kdf(a, b, c)

A brace form whose key is a PubKey parses as asymmetric encryption;
every other brace form is symmetric.  The printer falls back to the
senc(...) spelling for the pathological case of a symmetric ciphertext
keyed by a PubKey, so show/parse round-trips for every term.
"""

from __future__ import annotations

import re
import struct

from .terms import (
    AsymEnc,
    Atom,
    AtomKind,
    DhPub,
    DhShared,
    Hash,
    KdfKey,
    Pair,
    PrivKey,
    PubKey,
    Sig,
    StructuralError,
    SymEnc,
    Term,
)

_TAGS = {
    Atom: 0x01,
    Pair: 0x02,
    Hash: 0x03,
    SymEnc: 0x04,
    AsymEnc: 0x05,
    Sig: 0x06,
    PubKey: 0x07,
    PrivKey: 0x08,
    DhPub: 0x09,
    DhShared: 0x0A,
    KdfKey: 0x0B,
}

_KIND_BYTES = {kind: i for i, kind in enumerate(AtomKind)}
_BYTE_KINDS = {i: kind for kind, i in _KIND_BYTES.items()}


def _lp(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


def encode(t: Term) -> bytes:
    tag = bytes([_TAGS[type(t)]])
    if isinstance(t, Atom):
        return tag + bytes([_KIND_BYTES[t.kind]]) + _lp(t.name.encode())
    if isinstance(t, Pair):
        return tag + encode(t.left) + encode(t.right)
    if isinstance(t, Hash):
        return tag + encode(t.body)
    if isinstance(t, SymEnc):
        return tag + encode(t.body) + encode(t.key)
    if isinstance(t, AsymEnc):
        return tag + encode(t.body) + encode(t.pubkey)
    if isinstance(t, Sig):
        return tag + encode(t.body) + encode(t.signkey)
    if isinstance(t, (PubKey, PrivKey)):
        return tag + _lp(t.owner.encode())
    if isinstance(t, DhPub):
        return tag + _lp(t.exponent.encode())
    if isinstance(t, DhShared):
        a, b = t.exponents
        return tag + _lp(a.encode()) + _lp(b.encode())
    if isinstance(t, KdfKey):
        return tag + struct.pack(">I", len(t.inputs)) + b"".join(encode(i) for i in t.inputs)
    raise StructuralError(f"unencodable term: {t!r}")


def decode(data: bytes) -> Term:
    term, rest = _decode(data)
    if rest:
        raise StructuralError(f"{len(rest)} trailing bytes after term")
    return term


def _read_str(data: bytes) -> tuple[str, bytes]:
    if len(data) < 4:
        raise StructuralError("truncated length prefix")
    (n,) = struct.unpack(">I", data[:4])
    if len(data) < 4 + n:
        raise StructuralError("truncated string")
    return data[4 : 4 + n].decode(), data[4 + n :]


def _decode(data: bytes) -> tuple[Term, bytes]:
    if not data:
        raise StructuralError("empty input")
    tag, rest = data[0], data[1:]
    if tag == 0x01:
        if not rest:
            raise StructuralError("truncated atom")
        kind = _BYTE_KINDS.get(rest[0])
        if kind is None:
            raise StructuralError(f"unknown atom kind byte {rest[0]}")
        name, rest = _read_str(rest[1:])
        return Atom(name, kind), rest
    if tag == 0x02:
        left, rest = _decode(rest)
        right, rest = _decode(rest)
        return Pair(left, right), rest
    if tag == 0x03:
        body, rest = _decode(rest)
        return Hash(body), rest
    if tag == 0x04:
        body, rest = _decode(rest)
        key, rest = _decode(rest)
        return SymEnc(body, key), rest
    if tag == 0x05:
        body, rest = _decode(rest)
        key, rest = _decode(rest)
        return AsymEnc(body, key), rest
    if tag == 0x06:
        body, rest = _decode(rest)
        key, rest = _decode(rest)
        return Sig(body, key), rest
    if tag == 0x07:
        owner, rest = _read_str(rest)
        return PubKey(owner), rest
    if tag == 0x08:
        owner, rest = _read_str(rest)
        return PrivKey(owner), rest
    if tag == 0x09:
        exp, rest = _read_str(rest)
        return DhPub(exp), rest
    if tag == 0x0A:
        a, rest = _read_str(rest)
        b, rest = _read_str(rest)
        return DhShared((a, b)), rest
    if tag == 0x0B:
        if len(rest) < 4:
            raise StructuralError("truncated kdf count")
        (n,) = struct.unpack(">I", rest[:4])
        rest = rest[4:]
        inputs = []
        for _ in range(n):
            item, rest = _decode(rest)
            inputs.append(item)
        return KdfKey(tuple(inputs)), rest
    raise StructuralError(f"unknown tag byte {tag:#x}")


# ---------------------------------------------------------------------------
# Pretty printer
# ---------------------------------------------------------------------------


def show(t: Term) -> str:
    if isinstance(t, Atom):
        if t.kind is AtomKind.CONSTANT:
            return t.name
        return f"{t.kind.value}({t.name})"
    if isinstance(t, Pair):
        parts = []
        cur: Term = t
        while isinstance(cur, Pair):
            parts.append(show(cur.left))
            cur = cur.right
        parts.append(show(cur))
        return "(" + ", ".join(parts) + ")"
    if isinstance(t, Hash):
        return f"hash({show(t.body)})"
    if isinstance(t, SymEnc):
        if isinstance(t.key, PubKey):
            return f"senc({show(t.body)}, {show(t.key)})"
        return "{" + _show_braced(t.body) + "}" + _show_key(t.key)
    if isinstance(t, AsymEnc):
        return "{" + _show_braced(t.body) + "}" + show(t.pubkey)
    if isinstance(t, Sig):
        return f"sig({show(t.body)}, sk({t.signkey.owner}))"
    if isinstance(t, PubKey):
        return f"pk({t.owner})"
    if isinstance(t, PrivKey):
        return f"sk({t.owner})"
    if isinstance(t, DhPub):
        return f"g^{t.exponent}"
    if isinstance(t, DhShared):
        a, b = t.exponents
        return "g^{" + a + "," + b + "}"
    if isinstance(t, KdfKey):
        return "kdf(" + ", ".join(show(i) for i in t.inputs) + ")"
    raise StructuralError(f"unprintable term: {t!r}")


def _show_braced(body: Term) -> str:
    # Inside {...} a top-level pair sheds its outer parentheses.
    s = show(body)
    if isinstance(body, Pair):
        return s[1:-1]
    return s


def _show_key(key: Term) -> str:
    # Keys after } must re-parse as a single primary expression.
    if isinstance(key, (Atom, Hash, KdfKey, PubKey, PrivKey, DhPub, DhShared, Sig)):
        return show(key)
    return "(" + show(key) + ")"


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(g\^|[A-Za-z_][A-Za-z0-9_.#@\-]*|[(){},^]|\S)")

_KIND_NAMES = {kind.value: kind for kind in AtomKind}


class ParseError(ValueError):
    pass


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                break
            tok = m.group(1)
            self.tokens.append(tok)
            pos = m.end()
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.next()
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}")

    def parse_term(self) -> Term:
        tok = self.peek()
        if tok == "(":
            return self.parse_tuple()
        if tok == "{":
            return self.parse_enc()
        return self.parse_primary()

    def parse_tuple(self) -> Term:
        self.expect("(")
        items = [self.parse_term()]
        while self.peek() == ",":
            self.next()
            items.append(self.parse_term())
        self.expect(")")
        term = items[-1]
        for item in reversed(items[:-1]):
            term = Pair(item, term)
        return term

    def parse_enc(self) -> Term:
        self.expect("{")
        items = [self.parse_term()]
        while self.peek() == ",":
            self.next()
            items.append(self.parse_term())
        self.expect("}")
        body = items[-1]
        for item in reversed(items[:-1]):
            body = Pair(item, body)
        key = self.parse_term()
        if isinstance(key, PubKey):
            return AsymEnc(body, key)
        return SymEnc(body, key)

    def parse_primary(self) -> Term:
        tok = self.next()
        if tok == "g^":
            return self.parse_dh()
        if not re.match(r"[A-Za-z_]", tok):
            raise ParseError(f"unexpected token {tok!r}")
        if self.peek() != "(":
            return Atom(tok)
        self.next()
        args = [] if self.peek() == ")" else [self.parse_term()]
        while self.peek() == ",":
            self.next()
            args.append(self.parse_term())
        self.expect(")")
        return self.apply_head(tok, args)

    def parse_dh(self) -> Term:
        if self.peek() == "{":
            self.next()
            a = self.next()
            self.expect(",")
            b = self.next()
            self.expect("}")
            return DhShared((a, b))
        return DhPub(self.next())

    def apply_head(self, head: str, args: list[Term]) -> Term:
        if head in _KIND_NAMES:
            if len(args) != 1 or not isinstance(args[0], Atom):
                raise ParseError(f"{head}(...) takes a single name")
            return Atom(args[0].name, _KIND_NAMES[head])
        if head == "hash" and len(args) == 1:
            return Hash(args[0])
        if head == "pk" and len(args) == 1 and isinstance(args[0], Atom):
            return PubKey(args[0].name)
        if head == "sk" and len(args) == 1 and isinstance(args[0], Atom):
            return PrivKey(args[0].name)
        if head == "senc" and len(args) == 2:
            return SymEnc(args[0], args[1])
        if head == "aenc" and len(args) == 2:
            return AsymEnc(args[0], args[1])
        if head == "sig" and len(args) == 2:
            if not isinstance(args[1], PrivKey):
                raise ParseError("sig(...) needs sk(owner) as its second argument")
            return Sig(args[0], args[1])
        if head == "kdf" and args:
            return KdfKey(tuple(args))
        raise ParseError(f"unknown constructor {head}({len(args)} args)")


def parse(text: str) -> Term:
    p = _Parser(text)
    term = p.parse_term()
    if p.peek() is not None:
        raise ParseError(f"trailing input at token {p.peek()!r}")
    return term
