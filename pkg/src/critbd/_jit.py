"""numba shim: jit the hot Monte Carlo kernels when numba is available.

The kernels only use np.random.Generator methods that numba implements
bit-compatibly with numpy, so jitted and fallback runs produce identical
streams.
"""

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap
