"""Optional numba support.

Hot per-step kernels are decorated with ``njit``; when numba is not
installed everything degrades to plain Python with identical semantics.
"""

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def decorator(func):
            return func

        return decorator
