"""Kernel backend selection.

The compiled extension (rgs._kernels, Cython) is preferred; the numpy
twin (rgs._kernels_py) is used when the extension is missing or when
RGS_PURE_PY=1 is set.  benchmarks/bench_kernels.py compares the two.
"""

import os

if os.environ.get("RGS_PURE_PY", "") == "1":
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

laplacian_apply = _impl.laplacian_apply
rotation_apply = _impl.rotation_apply
gradient_apply = _impl.gradient_apply
cg_shifted_laplacian = _impl.cg_shifted_laplacian
shoot_radial = _impl.shoot_radial
