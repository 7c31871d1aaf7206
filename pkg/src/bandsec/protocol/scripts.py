"""Declarative role scripts and their textual protocol-description format.

A suite is a set of roles, each an ordered list of send/recv events
whose messages are term patterns.  Fresh values are generated per
session, `var` values are bound by the first matching receive, shared
constants are secrets pre-shared among the roles (for example a key
agreed out of band), and public constants are known to everyone
including the network adversary.  Script-level typenames drive typed
pattern matching in the bounded checker, mirroring how the protocol
transcriptions declare one usertype per field.

Textual format (one directive per line, '#' comments):

    suite phone-server
    shared PW: Password
    public greeting: Data

    role P
    fresh T1: Timestamp
    var ServerData: WebServerData
    send 1 P -> W: {T1, ID, hash(PW)}pk(W)
    recv 3 W -> P: {T3, W, ServerData}kir

    role W
    ...

Claims live in a separate file:

    claims phone-server
    claim p1 P secret PW

Message terms use the wire syntax; bare names resolve against the
declarations, role names resolve to identity atoms, and `g^x` forms
resolve against Exponent declarations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..terms import (
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
    SymEnc,
    Term,
)
from .. import wire

TYPE_KINDS = {
    "Timestamp": AtomKind.TIMESTAMP,
    "Key": AtomKind.NONCE,
    "Nonce": AtomKind.NONCE,
    "Password": AtomKind.PASSWORD,
    "Identification": AtomKind.IDENTITY,
    "Agent": AtomKind.IDENTITY,
    "Number": AtomKind.NUMBER,
    "Data": AtomKind.PAYLOAD,
    "SmartPhoneData": AtomKind.PAYLOAD,
    "WebServerData": AtomKind.PAYLOAD,
    "SmartBandData": AtomKind.PAYLOAD,
    "ConnectionRequest": AtomKind.PAYLOAD,
    "ConnectionResponse": AtomKind.PAYLOAD,
}

EXPONENT_TYPE = "Exponent"


class ScriptError(ValueError):
    """Malformed protocol description."""


@dataclass(frozen=True)
class Var(Term):
    """Pattern variable; binds a single atom of its declared type."""

    name: str
    kind: AtomKind
    typename: str


@dataclass(frozen=True)
class Decl:
    name: str
    flavor: str  # "fresh" | "var" | "shared" | "public"
    typename: str

    @property
    def kind(self) -> AtomKind:
        if self.typename == EXPONENT_TYPE:
            raise ScriptError(f"{self.name}: exponents have no atom kind")
        try:
            return TYPE_KINDS[self.typename]
        except KeyError:
            raise ScriptError(f"unknown type {self.typename!r}") from None


@dataclass(frozen=True)
class Event:
    action: str  # "send" | "recv"
    index: int
    sender: str
    receiver: str
    pattern: Term


@dataclass(frozen=True)
class RoleScript:
    role: str
    decls: tuple[Decl, ...]
    events: tuple[Event, ...]

    def decl(self, name: str) -> Decl | None:
        for d in self.decls:
            if d.name == name:
                return d
        return None


@dataclass(frozen=True)
class Claim:
    label: str
    role: str
    secret: Term


@dataclass(frozen=True)
class ProtocolSuite:
    name: str
    roles: dict[str, RoleScript]
    shared: tuple[Decl, ...]
    public: tuple[Decl, ...]

    def static_typemap(self) -> dict[str, str]:
        """Typenames for the atoms that exist before any session starts."""
        tm = {d.name: d.typename for d in self.shared + self.public}
        for role in self.roles:
            tm[role] = "Agent"
        return tm


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _parse_decl_line(line: str, flavor: str) -> Decl:
    rest = line.split(None, 1)[1]
    if ":" not in rest:
        raise ScriptError(f"declaration needs a type: {line!r}")
    name, typename = (part.strip() for part in rest.split(":", 1))
    if typename != EXPONENT_TYPE and typename not in TYPE_KINDS:
        raise ScriptError(f"unknown type {typename!r} in {line!r}")
    return Decl(name, flavor, typename)


def parse_suite(text: str) -> ProtocolSuite:
    name = None
    shared: list[Decl] = []
    public: list[Decl] = []
    role_blocks: dict[str, dict] = {}
    current: dict | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            head = line.split()[0]
            if head == "suite":
                name = line.split(None, 1)[1].strip()
            elif head in ("shared", "public"):
                (shared if head == "shared" else public).append(_parse_decl_line(line, head))
            elif head == "role":
                role = line.split(None, 1)[1].strip()
                current = role_blocks.setdefault(role, {"decls": [], "raw_events": []})
            elif head in ("fresh", "var"):
                if current is None:
                    raise ScriptError("declaration outside a role block")
                current["decls"].append(_parse_decl_line(line, head))
            elif head in ("send", "recv"):
                if current is None:
                    raise ScriptError("event outside a role block")
                current["raw_events"].append((head, line))
            else:
                raise ScriptError(f"unknown directive {head!r}")
        except ScriptError as exc:
            raise ScriptError(f"line {lineno}: {exc}") from None
        except (IndexError, ValueError):
            raise ScriptError(f"line {lineno}: malformed directive {line!r}") from None

    if name is None:
        raise ScriptError("missing 'suite <name>' header")
    if not role_blocks:
        raise ScriptError("no role blocks")

    role_names = list(role_blocks)
    roles: dict[str, RoleScript] = {}
    for role, block in role_blocks.items():
        env = _build_env(role_names, shared, public, block["decls"])
        events = []
        for action, line in block["raw_events"]:
            events.append(_parse_event(action, line, env))
        roles[role] = RoleScript(role, tuple(block["decls"]), tuple(events))
        _check_send_vars(roles[role])
    return ProtocolSuite(name, roles, tuple(shared), tuple(public))


def _build_env(
    role_names: list[str], shared: list[Decl], public: list[Decl], decls: list[Decl]
) -> dict[str, Term | str]:
    env: dict[str, Term | str] = {}
    for r in role_names:
        env[r] = Atom(r, AtomKind.IDENTITY)
    for d in shared + public:
        env[d.name] = Atom(d.name, d.kind)
    for d in decls:
        if d.typename == EXPONENT_TYPE:
            env[d.name] = d.name if d.flavor == "fresh" else "?" + d.name
        elif d.flavor == "var":
            env[d.name] = Var(d.name, d.kind, d.typename)
        else:
            env[d.name] = Atom(d.name, d.kind)
    return env


def _parse_event(action: str, line: str, env: dict) -> Event:
    # send 1 P -> W: <term>
    header, _, term_text = line.partition(":")
    if not term_text.strip():
        raise ScriptError(f"missing message term in {line!r}")
    parts = header.split()
    if len(parts) != 5 or parts[3] != "->":
        raise ScriptError(f"malformed event header {header!r}")
    index = int(parts[1])
    raw = wire.parse(term_text.strip())
    return Event(action, index, parts[2], parts[4], _resolve(raw, env))


def _resolve(t: Term, env: dict) -> Term:
    if isinstance(t, Atom):
        if t.kind is AtomKind.CONSTANT:
            if t.name not in env:
                raise ScriptError(f"undeclared name {t.name!r}")
            resolved = env[t.name]
            if isinstance(resolved, str):
                raise ScriptError(f"exponent {t.name!r} used outside g^ position")
            return resolved
        return t
    if isinstance(t, Pair):
        return Pair(_resolve(t.left, env), _resolve(t.right, env))
    if isinstance(t, Hash):
        return Hash(_resolve(t.body, env))
    if isinstance(t, SymEnc):
        return SymEnc(_resolve(t.body, env), _resolve(t.key, env))
    if isinstance(t, AsymEnc):
        return AsymEnc(_resolve(t.body, env), t.pubkey)
    if isinstance(t, Sig):
        return Sig(_resolve(t.body, env), t.signkey)
    if isinstance(t, KdfKey):
        return KdfKey(tuple(_resolve(i, env) for i in t.inputs))
    if isinstance(t, DhPub):
        return DhPub(_resolve_exponent(t.exponent, env))
    if isinstance(t, DhShared):
        a, b = t.exponents
        return DhShared((_resolve_exponent(a, env), _resolve_exponent(b, env)))
    return t


def _resolve_exponent(name: str, env: dict) -> str:
    if name not in env:
        raise ScriptError(f"undeclared exponent {name!r}")
    resolved = env[name]
    if not isinstance(resolved, str):
        raise ScriptError(f"{name!r} is not an Exponent")
    return resolved


def _check_send_vars(script: RoleScript) -> None:
    """Every variable in a send must be bound by an earlier recv."""
    bound: set[str] = set()
    for ev in script.events:
        names = _var_names(ev.pattern)
        if ev.action == "recv":
            bound |= names
        elif names - bound:
            missing = ", ".join(sorted(names - bound))
            raise ScriptError(f"role {script.role} send {ev.index} uses unbound {missing}")


def _var_names(t: Term) -> set[str]:
    out: set[str] = set()
    if isinstance(t, Var):
        out.add(t.name)
    if isinstance(t, DhPub) and t.exponent.startswith("?"):
        out.add(t.exponent)
    if isinstance(t, DhShared):
        out |= {e for e in t.exponents if e.startswith("?")}
    for child in _term_children(t):
        out |= _var_names(child)
    return out


def _term_children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, Pair):
        return (t.left, t.right)
    if isinstance(t, Hash):
        return (t.body,)
    if isinstance(t, SymEnc):
        return (t.body, t.key)
    if isinstance(t, AsymEnc):
        return (t.body, t.pubkey)
    if isinstance(t, Sig):
        return (t.body, t.signkey)
    if isinstance(t, KdfKey):
        return t.inputs
    return ()


def parse_claims(text: str, suite: ProtocolSuite) -> list[Claim]:
    claims: list[Claim] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.split()[0]
        if head == "claims":
            continue
        if head != "claim":
            raise ScriptError(f"line {lineno}: unknown directive {head!r}")
        parts = line.split()
        if len(parts) != 5 or parts[3] != "secret":
            raise ScriptError(f"line {lineno}: expected 'claim <label> <role> secret <term>'")
        _, label, role, _, term_text = parts
        if role not in suite.roles:
            raise ScriptError(f"line {lineno}: unknown role {role!r}")
        env = _build_env(
            list(suite.roles),
            list(suite.shared),
            list(suite.public),
            list(suite.roles[role].decls),
        )
        secret = _resolve(wire.parse(term_text), env)
        claims.append(Claim(label, role, secret))
    return claims


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def _show_pattern(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, Pair):
        parts = []
        cur: Term = t
        while isinstance(cur, Pair):
            parts.append(_show_pattern(cur.left))
            cur = cur.right
        parts.append(_show_pattern(cur))
        return "(" + ", ".join(parts) + ")"
    if isinstance(t, Hash):
        return f"hash({_show_pattern(t.body)})"
    if isinstance(t, SymEnc):
        body = _show_pattern(t.body)
        if isinstance(t.body, Pair):
            body = body[1:-1]
        key = _show_pattern(t.key)
        if not isinstance(t.key, (Atom, Var, PubKey, KdfKey, Hash, DhPub, DhShared)):
            key = "(" + key + ")"
        return "{" + body + "}" + key
    if isinstance(t, AsymEnc):
        body = _show_pattern(t.body)
        if isinstance(t.body, Pair):
            body = body[1:-1]
        return "{" + body + "}" + f"pk({t.pubkey.owner})"
    if isinstance(t, Sig):
        return f"sig({_show_pattern(t.body)}, sk({t.signkey.owner}))"
    if isinstance(t, KdfKey):
        return "kdf(" + ", ".join(_show_pattern(i) for i in t.inputs) + ")"
    if isinstance(t, DhPub):
        return f"g^{t.exponent.lstrip('?')}"
    if isinstance(t, DhShared):
        a, b = (e.lstrip("?") for e in t.exponents)
        return "g^{" + a + "," + b + "}"
    return wire.show(t)


def export_suite(suite: ProtocolSuite) -> str:
    lines = [f"suite {suite.name}"]
    for d in suite.shared:
        lines.append(f"shared {d.name}: {d.typename}")
    for d in suite.public:
        lines.append(f"public {d.name}: {d.typename}")
    for role, script in suite.roles.items():
        lines.append("")
        lines.append(f"role {role}")
        for d in script.decls:
            lines.append(f"{d.flavor} {d.name}: {d.typename}")
        for ev in script.events:
            lines.append(
                f"{ev.action} {ev.index} {ev.sender} -> {ev.receiver}: {_show_pattern(ev.pattern)}"
            )
    return "\n".join(lines) + "\n"


def export_claims(suite_name: str, claims: Iterable[Claim]) -> str:
    lines = [f"claims {suite_name}"]
    for c in claims:
        lines.append(f"claim {c.label} {c.role} secret {_show_pattern(c.secret)}")
    return "\n".join(lines) + "\n"
