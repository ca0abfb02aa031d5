"""Backend switch for the hot kernels.

Every kernel in this package exists twice: a numba ``@njit`` loop and a
pure-numpy equivalent.  The numba path is used when numba imports and the
environment variable ``HPZPAIR_NO_NUMBA`` is unset (or ``0``).  Tests and
the benchmark flip the backend at runtime with :func:`set_backend`.
"""
import os

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    _HAVE_NUMBA = False


def _env_disabled() -> bool:
    return os.environ.get("HPZPAIR_NO_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


_use_numba = _HAVE_NUMBA and not _env_disabled()


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator."""
    if _HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]):
        return args[0]
    return lambda f: f


def use_numba() -> bool:
    return _use_numba


def backend() -> str:
    return "numba" if _use_numba else "numpy"


def set_backend(name: str) -> None:
    """Select ``"numba"`` or ``"numpy"`` for subsequent kernel calls."""
    global _use_numba
    if name == "numba":
        if not _HAVE_NUMBA:
            raise RuntimeError("numba is not importable")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")
