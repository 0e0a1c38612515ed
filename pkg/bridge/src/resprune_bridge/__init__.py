"""In-memory binding of the resprune selector for inference pipelines.

The host hands over the arrays it already has (projector output, encoded
prompt) and gets back the selection, nothing else: the call owns private
copies of its inputs for the duration, keeps no state between calls, and is
safe to invoke from multiple threads at once.  The heavy steps run inside
numpy's BLAS-backed kernels, which drop the interpreter lock while they
work.

Results match the ``resprune`` CLI on equivalent file inputs bit for bit;
only fields from the public result schema are exposed, never basis data.
"""

import numpy as np

from resprune import PruneConfig, TextMatrix, TokenMatrix, greedy_select

__version__ = "0.1.0"

__all__ = ["bridge_select", "__version__"]


def _ingest(array, name):
    """Validate a host buffer as a 2-D matrix of 32- or 64-bit reals."""
    arr = np.asarray(array)
    if arr.dtype.kind != "f" or arr.dtype.itemsize not in (4, 8):
        raise TypeError(f"{name} must be float32 or float64, got dtype {arr.dtype}")
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got {arr.ndim}-D")
    return arr


def bridge_select(visual, text=None, **options):
    """Select token rows from an in-memory embedding matrix.

    ``visual`` is the (T, d) stack to prune and ``text`` an optional (L, d)
    stack steering the selection.  Remaining keyword options are the flat
    config keys (``budget`` is required; ``alpha``, ``epsilon``,
    ``relevance``, ``seed_strategy``, ``span_tol``, ``exhaust_fallback``
    are optional, unknown keys are rejected).

    Returns ``(indices, recon_error, energies)``: the selection order, the
    squared reconstruction error, and each pick's residual energy at pick
    time.  All three are plain Python values, ready for JSON.
    """
    tokens = TokenMatrix(_ingest(visual, "visual tokens"))
    prompt = None
    if text is not None:
        prompt = TextMatrix(_ingest(text, "text tokens"))
    config = PruneConfig.from_mapping(options)
    result = greedy_select(tokens, text=prompt, config=config)
    return result.indices, result.recon_error, result.raw_energy
