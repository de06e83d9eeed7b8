import os

from .errors import ConfigError

THREADS_ENV = "RATCHET_LEVY_THREADS"


def default_workers() -> int:
    """Worker cap from the environment, else the CPU count."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1
