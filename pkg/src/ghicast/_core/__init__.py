"""Numerical core: compiled tree-growth kernel with pure-numpy fallback.

The compiled extension is preferred when importable; set
GHICAST_PURE_PYTHON=1 to force the numpy implementation. Both produce
bit-identical trees (tested), so the choice only affects speed.
"""

import os

from . import treebuild_np

if os.environ.get("GHICAST_PURE_PYTHON"):
    _impl = treebuild_np
else:
    try:
        from . import _treebuild_cy as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = treebuild_np

IMPL_NAME = _impl.IMPL_NAME
grow_tree = _impl.grow_tree
