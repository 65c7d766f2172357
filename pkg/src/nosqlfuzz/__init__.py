"""Search-based test generation guided by NoSQL query-filter distances."""

__version__ = "0.1.0"
