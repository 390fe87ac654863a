"""Natural-language-to-visualization engine with a deterministic benchmark harness."""

__version__ = "0.1.0"
