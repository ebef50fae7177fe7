"""Inner-loop kernels for the threshold-filtered similarity sums.

Two interchangeable backends live here: ``_native`` (a compiled Cython
extension) and ``pure`` (numpy).  The native backend is preferred when the
extension built; set JOBCORPUS_KERNELS=pure or =native to force one.

Backend interface (H is a C-contiguous float64 matrix of pairwise token
similarities):

    pair_sum(H, wa, wb, p) -> float
    segment_scores(H, wa, wcat, offsets, p) -> float64[ncat]
    pair_count(H, p) -> int
"""

from __future__ import annotations

import os

from ..errors import ConfigError
from . import pure

try:
    from . import _native as native
except ImportError:  # extension not built; numpy fallback covers everything
    native = None


def available_backends() -> list[str]:
    names = ["pure"]
    if native is not None:
        names.append("native")
    return names


def get_backend(name: str | None = None):
    """Resolve a backend module by name; None picks the default."""
    if name is None:
        name = os.environ.get("JOBCORPUS_KERNELS")
    if name is None:
        return native if native is not None else pure
    if name == "pure":
        return pure
    if name == "native":
        if native is None:
            raise ConfigError("native kernels requested but the extension is not built")
        return native
    raise ConfigError(f"unknown kernel backend {name!r}")


def backend_name(module) -> str:
    return "native" if module is native and native is not None else "pure"
