"""Numeric-comparison pairing ceremony between phone and band.

The phone asks to pair over the radio, the band answers and shows a
short decimal number on its screen, the user copies that number into
the phone, and both ends derive the same symmetric key from the number,
both identities, and both handshake nonces.  The number itself never
touches the radio, so a passive observer of the two radio messages
cannot derive the key.  A mistyped number produces a key that fails at
the next decryption rather than an immediate error.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

from ..terms import AtomKind, StructuralError
from .base import Principal
from .variants import ConfigurationError

PAIRING_NUMBER_DIGITS = 6


class CeremonyPhase(str, Enum):
    IDLE = "idle"
    REQUESTED = "requested"
    NUMBER_DISPLAYED = "number-displayed"
    AWAITING_USER_ENTRY = "awaiting-user-entry"
    KEY_ESTABLISHED = "key-established"


class CeremonyError(Exception):
    """A ceremony step ran out of order."""


@dataclass
class PhoneCeremony:
    phone: Principal
    phase: CeremonyPhase = CeremonyPhase.IDLE
    nonce: Any = None
    band_id: Any = None
    band_nonce: Any = None
    key: Any = None


@dataclass
class BandCeremony:
    band: Principal
    rng: Any  # random.Random; pairing number source
    phase: CeremonyPhase = CeremonyPhase.IDLE
    nonce: Any = None
    phone_id: Any = None
    phone_nonce: Any = None
    displayed_number: str | None = None
    key: Any = None


def ceremony_request(ceremony: PhoneCeremony) -> Any:
    """P1: phone asks to pair; radio message carries its id and a nonce."""
    if ceremony.phase is not CeremonyPhase.IDLE:
        raise CeremonyError(f"request in phase {ceremony.phase}")
    b = ceremony.phone.backend
    ceremony.nonce = b.atom(ceremony.phone.fresh_name("pn"), AtomKind.NONCE)
    ceremony.phase = CeremonyPhase.REQUESTED
    return b.pair(ceremony.phone.identity_value(), ceremony.nonce)


def ceremony_display(ceremony: BandCeremony, request: Any) -> tuple[Any, str]:
    """B1: band answers with its own id and nonce and shows the number."""
    if ceremony.phase is not CeremonyPhase.IDLE:
        raise CeremonyError(f"display in phase {ceremony.phase}")
    b = ceremony.band.backend
    try:
        ceremony.phone_id, ceremony.phone_nonce = b.unpair(request)
    except StructuralError as exc:
        raise CeremonyError("malformed pairing request") from exc
    ceremony.nonce = b.atom(ceremony.band.fresh_name("bn"), AtomKind.NONCE)
    ceremony.displayed_number = "".join(
        str(ceremony.rng.randrange(10)) for _ in range(PAIRING_NUMBER_DIGITS)
    )
    ceremony.phase = CeremonyPhase.NUMBER_DISPLAYED
    return b.pair(ceremony.band.identity_value(), ceremony.nonce), ceremony.displayed_number


def ceremony_receive_response(ceremony: PhoneCeremony, response: Any) -> None:
    """P2: phone records the band half and switches to the entry screen."""
    if ceremony.phase is not CeremonyPhase.REQUESTED:
        raise CeremonyError(f"response in phase {ceremony.phase}")
    b = ceremony.phone.backend
    try:
        ceremony.band_id, ceremony.band_nonce = b.unpair(response)
    except StructuralError as exc:
        raise CeremonyError("malformed pairing response") from exc
    ceremony.phase = CeremonyPhase.AWAITING_USER_ENTRY


def _derive(backend: Any, number: str, band_id: Any, phone_id: Any, band_nonce: Any, phone_nonce: Any) -> Any:
    number_v = backend.atom(number, AtomKind.NUMBER)
    return backend.kdf([number_v, band_id, phone_id, band_nonce, phone_nonce])


def ceremony_confirm_band(ceremony: BandCeremony) -> Any:
    """U1 + B2: the user presses the band button; the band derives its key."""
    if ceremony.phase is not CeremonyPhase.NUMBER_DISPLAYED:
        raise CeremonyError(f"confirm in phase {ceremony.phase}")
    b = ceremony.band.backend
    ceremony.key = _derive(
        b,
        ceremony.displayed_number,
        ceremony.band.identity_value(),
        ceremony.phone_id,
        ceremony.nonce,
        ceremony.phone_nonce,
    )
    ceremony.phase = CeremonyPhase.KEY_ESTABLISHED
    return ceremony.key


def ceremony_enter_phone(ceremony: PhoneCeremony, number: str) -> Any:
    """U2 + P3: the user types the number; the phone derives its key.

    A wrong number yields a structurally different key; the mismatch
    surfaces at the next protocol step, not here.
    """
    if ceremony.phase is not CeremonyPhase.AWAITING_USER_ENTRY:
        raise CeremonyError(f"entry in phase {ceremony.phase}")
    b = ceremony.phone.backend
    ceremony.key = _derive(
        b,
        number,
        ceremony.band_id,
        ceremony.phone.identity_value(),
        ceremony.band_nonce,
        ceremony.nonce,
    )
    ceremony.phase = CeremonyPhase.KEY_ESTABLISHED
    return ceremony.key


def run_ceremony(
    phone: Principal, band: Principal, rng: Any, entered_number: str | None = None
) -> tuple[Any, Any, list[Any]]:
    """Honest ceremony; returns both keys and the two radio messages.

    Passing entered_number simulates the user mistyping.
    """
    pc = PhoneCeremony(phone)
    bc = BandCeremony(band, rng)
    req = ceremony_request(pc)
    resp, number = ceremony_display(bc, req)
    ceremony_receive_response(pc, resp)
    band_key = ceremony_confirm_band(bc)
    phone_key = ceremony_enter_phone(pc, entered_number if entered_number is not None else number)
    return phone_key, band_key, [req, resp]
