"""Sandboxed plotting-script worker: one request per process, wire JSON on stdio."""

__version__ = "0.1.0"
