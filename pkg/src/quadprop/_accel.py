"""Select the compiled core when it is importable, else the numpy fallback.

Set ``QUADPROP_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _core_py

BACKEND = "python"
hermite_functions = _core_py.hermite_functions
cn_evolve = _core_py.cn_evolve

if os.environ.get("QUADPROP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core
    except ImportError:  # extension not built
        pass
    else:
        hermite_functions = _core.hermite_functions
        cn_evolve = _core.cn_evolve
        BACKEND = "cython"
