"""Shared exception base for all liststand engine modules."""


class ListstandError(Exception):
    """Base class for engine errors; the HTTP layer maps these to 4xx."""
