"""Python access to the qmod kernel: sessions over the line protocol,
script execution and qualification artifacts."""

from ._core import (
    QmodError,
    Session,
    catalogue,
    gen_error_catalogue,
    run_script,
    sha256_hex,
)

__all__ = [
    "QmodError",
    "Session",
    "catalogue",
    "gen_error_catalogue",
    "run_script",
    "sha256_hex",
]
