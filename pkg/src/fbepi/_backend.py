"""Select the compiled kernels when available, else the numpy fallback.

Set ``FBEPI_BACKEND=python`` to force the fallback.
"""

import os

from . import _pycore

BACKEND = "python"
core = _pycore

if os.environ.get("FBEPI_BACKEND", "").lower() != "python":
    try:
        from . import _core as core  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        core = _pycore

euler_fields = core.euler_fields
boundary_flux = core.boundary_flux
