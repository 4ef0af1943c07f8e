"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is imported.  Setting ``FAIRCLASS_PURE_PYTHON=1`` forces the
fallback (useful for benchmarking and for checking backend agreement).
"""

import os

from . import _kernels_py

if os.environ.get("FAIRCLASS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = "compiled" if _impl is not _kernels_py else "python"

lambda_max_path = _impl.lambda_max_path
nested_error_counts = _impl.nested_error_counts
compensated_cumsum = _impl.compensated_cumsum

__all__ = ["BACKEND", "lambda_max_path", "nested_error_counts", "compensated_cumsum"]
