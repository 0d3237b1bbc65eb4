"""Select the compiled kernels when available, else the pure-Python twin."""
from . import _pycore

try:
    from . import _core as _compiled
except ImportError:  # extension not built
    _compiled = None

_active = _compiled if _compiled is not None else _pycore


def available() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]


def current() -> str:
    return "cython" if _active is _compiled and _compiled is not None else "python"


def use(name: str) -> None:
    """Switch kernels: ``"cython"`` or ``"python"``."""
    global _active
    if name == "python":
        _active = _pycore
    elif name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; reinstall with Cython available")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")


def saem_chain(*args):
    return _active.saem_chain(*args)


def mh_trace(*args):
    return _active.mh_trace(*args)
