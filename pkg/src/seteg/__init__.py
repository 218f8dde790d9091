"""Optimal single-error-type entanglement generation over lossy optical channels."""

__version__ = "0.1.0"

from .errors import SetegError  # noqa: F401
