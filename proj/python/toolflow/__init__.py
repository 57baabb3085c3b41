"""Tool-calling dialogue synthesis pipeline (python bindings)."""

from ._toolflow import (
    AttemptCapError,
    ConfigError,
    ToolflowError,
    __version__,
    build_graph,
    coherence,
    corpus_stats,
    cosine,
    distinct_n,
    filter_jsonl,
    mock_embed,
    ngram_overlap,
    normalize_catalog,
    pearson,
    run_pipeline,
    run_pipeline_file,
    sample_subset,
    shannon_entropy,
    similarity_overlap,
    synthesize_corpus,
    tokenize,
    validate_catalog,
)

__all__ = [
    "AttemptCapError",
    "ConfigError",
    "ToolflowError",
    "__version__",
    "build_graph",
    "coherence",
    "corpus_stats",
    "cosine",
    "distinct_n",
    "filter_jsonl",
    "mock_embed",
    "ngram_overlap",
    "normalize_catalog",
    "pearson",
    "run_pipeline",
    "run_pipeline_file",
    "sample_subset",
    "shannon_entropy",
    "similarity_overlap",
    "synthesize_corpus",
    "tokenize",
    "validate_catalog",
]
