"""Wire-protocol adapter around a multilingual autoregressive EL model.

Runs as a separate process speaking generator protocol v1 on stdin/stdout,
so the ML runtime stays completely out of the pipeline core. The model sees
each mention delimited by marker tokens inside its context and emits ranked
"<entity name> >> <language>" strings, which the adapter turns into
(language, title, score) candidates.
"""

from .core import AdapterConfig, format_input, normalize_scores, parse_prediction, respond
from .serve import serve

__all__ = [
    "AdapterConfig",
    "format_input",
    "normalize_scores",
    "parse_prediction",
    "respond",
    "serve",
]
