"""Decision engine for query-by-example and definability over relational and
graph databases."""

__version__ = "0.1.0"
