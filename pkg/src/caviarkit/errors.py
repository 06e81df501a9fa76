"""Error type shared by all toolkit modules.

Every failure carries a machine-readable ``code``. The CLI maps codes onto
process exit statuses through :data:`EXIT_CODES`.
"""

from __future__ import annotations

# code -> process exit status, grouped by error class
EXIT_CODES = {
    # configuration / usage
    "config_error": 2,
    # dataset and file formats
    "empty_dataset": 3,
    "manifest_missing": 3,
    "version_mismatch": 3,
    "parse_error": 3,
    "io_error": 3,
    # channel synthesis
    "no_valid_channel": 4,
    "missing_delay": 4,
    "missing_anchor": 4,
    "degenerate_geometry": 4,
    "invalid_input": 4,
    # metrics, labels and estimation
    "cardinality_error": 5,
    "empty_model": 5,
    "ill_conditioned": 5,
    "undefined_nmse": 5,
}


class CaviarError(Exception):
    """Toolkit failure identified by a stable ``code`` string."""

    def __init__(self, code: str, message: str = "", **context):
        self.code = code
        self.context = context
        detail = f"{code}: {message}" if message else code
        if context:
            detail += " (" + ", ".join(f"{k}={v}" for k, v in context.items()) + ")"
        super().__init__(detail)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES.get(self.code, 1)
