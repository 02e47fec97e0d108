"""Pluggable registry mapping component kind names to classes.

Built-in protocol kinds register themselves on first use; experiment code can
register additional kinds (the replaceable-module slot) with register().
"""

from __future__ import annotations

from .kernel import Component, SimError

_KINDS: dict[str, type] = {}
_builtins_loaded = False


def register(kind: str, cls: type | None = None):
    """Register a component class under a kind name; usable as a decorator."""

    def _put(c):
        if not issubclass(c, Component):
            raise SimError(f"kind {kind!r} must be a Component subclass")
        _KINDS[kind] = c
        return c

    if cls is not None:
        return _put(cls)
    return _put


_BUILTIN_MODULES = ("netbase", "gbn", "csma", "tokenring", "bridge",
                    "ipfrag", "tcp", "gcra", "pnni")


def _load_builtins() -> None:
    global _builtins_loaded
    if _builtins_loaded:
        return
    _builtins_loaded = True
    import importlib
    for name in _BUILTIN_MODULES:
        try:
            importlib.import_module(f".{name}", __package__)
        except ModuleNotFoundError as exc:
            if exc.name != f"{__package__}.{name}":
                raise


def get(kind: str) -> type:
    _load_builtins()
    try:
        return _KINDS[kind]
    except KeyError:
        raise SimError(f"unknown component kind {kind!r}") from None


def known(kind: str) -> bool:
    _load_builtins()
    return kind in _KINDS


def kinds() -> list[str]:
    _load_builtins()
    return sorted(_KINDS)
