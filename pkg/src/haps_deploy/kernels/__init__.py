"""Ray-occlusion kernel selection.

The compiled Cython kernel is preferred; a pure-Python/numpy fallback with
identical semantics is used when the extension is unavailable. Set
HAPS_DEPLOY_KERNEL=python to force the fallback (e.g. for benchmarking).
"""

import os

_forced = os.environ.get("HAPS_DEPLOY_KERNEL", "").strip().lower()

if _forced == "python":
    from .ray_py import occluded_batch

    KERNEL_IMPL = "python"
elif _forced == "compiled":
    from ._ray_cy import occluded_batch  # noqa: F401

    KERNEL_IMPL = "compiled"
else:
    try:
        from ._ray_cy import occluded_batch  # noqa: F401

        KERNEL_IMPL = "compiled"
    except ImportError:
        from .ray_py import occluded_batch  # noqa: F401

        KERNEL_IMPL = "python"
