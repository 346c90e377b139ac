"""Worker-thread cap via the FUSIONREC_THREADS environment variable."""

from __future__ import annotations

import os

_LIMITER = None


def apply_thread_cap() -> int | None:
    """Cap BLAS worker threads to FUSIONREC_THREADS; returns the cap if set."""
    raw = os.environ.get("FUSIONREC_THREADS")
    if not raw:
        return None
    try:
        n = max(1, int(raw))
    except ValueError:
        return None
    global _LIMITER
    try:
        import threadpoolctl
        _LIMITER = threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        # best effort for processes that have not imported numpy yet
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(n))
    return n
