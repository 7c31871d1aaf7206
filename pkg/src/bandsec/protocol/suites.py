"""Bundled protocol suites and their secrecy claims."""

from __future__ import annotations

from importlib import resources

from .scripts import Claim, ProtocolSuite, parse_claims, parse_suite
from .variants import ConfigurationError

SUITE_FILES = {
    "phone-server": "phone_server",
    "phone-band": "phone_band",
    "baseline-legacy-connect": "baseline_legacy_connect",
    "baseline-plaintext": "baseline_plaintext",
}

# Suites whose claims are expected to hold; a Falsified claim in one of
# these is a security regression, not a demonstration.
SECURED_SUITES = ("phone-server", "phone-band")


def _read(subdir: str, filename: str) -> str:
    return (resources.files("bandsec") / "data" / subdir / filename).read_text()


def suite_names() -> list[str]:
    return list(SUITE_FILES)


def load_suite(name: str) -> ProtocolSuite:
    if name not in SUITE_FILES:
        raise ConfigurationError(
            f"unknown suite {name!r}; expected one of {', '.join(SUITE_FILES)}"
        )
    return parse_suite(_read("protocols", SUITE_FILES[name] + ".proto"))


def load_claims(name: str) -> list[Claim]:
    if name not in SUITE_FILES:
        raise ConfigurationError(
            f"unknown suite {name!r}; expected one of {', '.join(SUITE_FILES)}"
        )
    return parse_claims(_read("claims", SUITE_FILES[name] + ".claims"), load_suite(name))
