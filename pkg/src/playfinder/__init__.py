"""playfinder: a natural-language search engine for a football play database.

A user prompt is classified, decomposed into entities/actions/conditions,
routed to the right statistical schema, compiled into a structured search
request, and executed against an in-memory play index. Redacted query
templates are cached for reuse and conversational context carries across
follow-up turns.
"""

__version__ = "0.1.0"
