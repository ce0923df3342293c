"""Layer-wise relevance propagation over small ConvNets.

The heavy lifting lives in the C++ extension; this package re-exports it.
"""

from relmap._core import (
    Network,
    explain,
    forward,
    load_model,
    make_toy_base_model,
    occlude,
    redistribute_linear,
    redistribute_maxpool,
    render,
    rescale_score,
    save_model,
    unrescale_score,
    __version__,
)

__all__ = [
    "Network",
    "explain",
    "forward",
    "load_model",
    "make_toy_base_model",
    "occlude",
    "redistribute_linear",
    "redistribute_maxpool",
    "render",
    "rescale_score",
    "save_model",
    "unrescale_score",
    "__version__",
]
