"""Python bindings for the qpool C++ core."""

from ._qpool import (
    Ansatz,
    ConfigError,
    DataError,
    NumericError,
    ansatz_keys,
    effective_dimension,
    extract_patches,
    load_dataset,
    train,
)

__all__ = [
    "Ansatz",
    "ConfigError",
    "DataError",
    "NumericError",
    "ansatz_keys",
    "effective_dimension",
    "extract_patches",
    "load_dataset",
    "train",
]
