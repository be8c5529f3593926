"""Exact multisection counting on conic bundles over P1 over odd finite fields."""

__version__ = "0.1.0"
