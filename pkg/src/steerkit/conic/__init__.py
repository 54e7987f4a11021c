"""Dense conic (LP + SDP) solver."""

from .problem import ConicProblem, ConicSolution, Settings, embed_complex, extract_complex
from .sdpa import to_sdpa, write_sdpa
from .solver import RowReduction, reduce_rows, solve

__all__ = [
    "ConicProblem",
    "ConicSolution",
    "Settings",
    "RowReduction",
    "embed_complex",
    "extract_complex",
    "reduce_rows",
    "solve",
    "to_sdpa",
    "write_sdpa",
]
