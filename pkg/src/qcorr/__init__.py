"""Few-qubit toolkit for entropy, quantum mutual information and optimised classical mutual information."""

__version__ = "0.1.0"
