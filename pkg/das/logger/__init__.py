from das.logger.logger import (
    configure_logging,
    log_debug,
    log_error,
    log_info,
    log_warn,
)

__all__ = [
    "configure_logging",
    "log_debug",
    "log_error",
    "log_info",
    "log_warn",
]
