from .base import (
    DEFAULT_FRESHNESS_WINDOW,
    DISCONNECT_MARKER,
    Principal,
    RejectReason,
    Rejected,
    Role,
    SessionState,
    data_recv,
    data_send,
    plaintext_data,
)
from .variants import (
    BASELINE_LEGACY_CONNECT,
    BASELINE_NO_TIMESTAMP,
    BASELINE_PLAINTEXT,
    SECURED,
    VARIANTS,
    ConfigurationError,
    VariantConfig,
    get_variant,
)

__all__ = [
    "DEFAULT_FRESHNESS_WINDOW",
    "DISCONNECT_MARKER",
    "Principal",
    "RejectReason",
    "Rejected",
    "Role",
    "SessionState",
    "data_recv",
    "data_send",
    "plaintext_data",
    "BASELINE_LEGACY_CONNECT",
    "BASELINE_NO_TIMESTAMP",
    "BASELINE_PLAINTEXT",
    "SECURED",
    "VARIANTS",
    "ConfigurationError",
    "VariantConfig",
    "get_variant",
]
