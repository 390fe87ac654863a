"""Benchmark corpora, per-case evaluation, and report aggregation."""

from .cases import (
    BenchCase,
    FilterResult,
    extract_bench_vectors,
    extract_table_ref,
    load_and_filter_nvbench,
    load_nlv_corpus,
    load_nvbench_with_audit,
)
from .report import EvaluationReport, Outcome
from .runner import EvalConfig, run_nlv_cascade, run_nvbench_case, run_nvbench_suite

__all__ = [
    "BenchCase",
    "EvalConfig",
    "EvaluationReport",
    "FilterResult",
    "Outcome",
    "extract_bench_vectors",
    "extract_table_ref",
    "load_and_filter_nvbench",
    "load_nlv_corpus",
    "load_nvbench_with_audit",
    "run_nlv_cascade",
    "run_nvbench_case",
    "run_nvbench_suite",
]
