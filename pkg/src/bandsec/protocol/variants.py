"""Protocol variant registry.

`secured` is the full design: encrypted, timestamped, replay-cached,
with an authenticated band connection.  The three baselines each strip
exactly one defense so the simulator and verifier can demonstrate the
attack that defense blocks:

    baseline-plaintext       phone/server link unencrypted, no timestamps
    baseline-no-timestamp    encryption kept, timestamps and replay cache off
    baseline-legacy-connect  band accepts a connection from any device
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class VariantConfig:
    name: str
    server_plaintext: bool = False
    no_timestamps: bool = False
    legacy_band_connect: bool = False

    @property
    def server_encrypted(self) -> bool:
        return not self.server_plaintext

    def timestamps_on(self, link: str) -> bool:
        if self.no_timestamps:
            return False
        if link == "server" and self.server_plaintext:
            return False
        return True


SECURED = VariantConfig("secured")
BASELINE_PLAINTEXT = VariantConfig("baseline-plaintext", server_plaintext=True)
BASELINE_NO_TIMESTAMP = VariantConfig("baseline-no-timestamp", no_timestamps=True)
BASELINE_LEGACY_CONNECT = VariantConfig("baseline-legacy-connect", legacy_band_connect=True)

VARIANTS = {
    v.name: v
    for v in (SECURED, BASELINE_PLAINTEXT, BASELINE_NO_TIMESTAMP, BASELINE_LEGACY_CONNECT)
}


def get_variant(name: str) -> VariantConfig:
    try:
        return VARIANTS[name]
    except KeyError:
        raise ConfigurationError(f"unknown protocol variant {name!r}") from None


class ConfigurationError(Exception):
    """A run was configured with missing or inconsistent inputs."""
