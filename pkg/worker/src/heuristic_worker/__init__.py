"""Sandbox worker executing heuristic source over line-delimited JSON."""

from .server import PROTOCOL_VERSION, serve

__all__ = ["PROTOCOL_VERSION", "serve"]
