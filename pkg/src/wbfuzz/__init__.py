"""White-box search-based fuzzing of embedded REST services."""

__version__ = "0.1.0"
