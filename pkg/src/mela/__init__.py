"""Prompt-evolution engine for LLM-generated optimization heuristics."""

from .core import (
    AblationFlags,
    BackendConfig,
    ConfigError,
    ErrorRecord,
    HeuristicError,
    HeuristicIndividual,
    RunConfig,
    SeedStream,
    Status,
    ValidatedConfig,
    derive_stream,
    validate_config,
)

__version__ = "0.1.0"

__all__ = [
    "AblationFlags",
    "BackendConfig",
    "ConfigError",
    "ErrorRecord",
    "HeuristicError",
    "HeuristicIndividual",
    "RunConfig",
    "SeedStream",
    "Status",
    "ValidatedConfig",
    "derive_stream",
    "validate_config",
    "__version__",
]
