"""Backend selection for the numerical kernels.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
pure-Python ``_kernels_py`` module is imported. Both expose the same
functions with identical results. ``BACKEND`` names the active one.

Setting ``MRPR_PURE_PYTHON=1`` in the environment forces the Python backend.
"""

import os

try:
    if os.environ.get("MRPR_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernels requested")
    from mrpr._ckernels import (  # noqa: F401
        BACKEND,
        erlang_b,
        kalman_sweep,
        mm1_fifo,
        trap_resolvent,
        trap_trials,
    )
except ImportError:  # extension not built or disabled
    from mrpr._kernels_py import (  # noqa: F401
        BACKEND,
        erlang_b,
        kalman_sweep,
        mm1_fifo,
        trap_resolvent,
        trap_trials,
    )

__all__ = ["BACKEND", "erlang_b", "kalman_sweep", "mm1_fifo", "trap_resolvent", "trap_trials"]
