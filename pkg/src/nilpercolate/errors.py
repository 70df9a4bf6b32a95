"""Shared error types."""


class ResourceCap(RuntimeError):
    """An enumeration or sampling job exceeded its configured resource cap."""
