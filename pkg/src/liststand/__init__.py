"""liststand: a mailing-list warehouse and social-network analysis engine.

Ingests email corpora, resolves senders to entities, reconstructs reply
trees, stores sourced temporal facts, and answers schema-guided tree
queries and sociological aggregates.
"""

__version__ = "0.1.0"
