"""Backend selection for the edit-distance kernels.

Imports the compiled module when it built successfully, otherwise the pure
Python twin.  Set RNNVERIFY_PURE=1 to force the pure backend (used by the
benchmark and by tests that compare the two).
"""

from __future__ import annotations

import os

from . import _editdist_py

if os.environ.get("RNNVERIFY_PURE") == "1":
    _impl = _editdist_py
    HAVE_NATIVE = False
else:
    try:
        from . import _editdist as _impl  # type: ignore[attr-defined]

        HAVE_NATIVE = True
    except ImportError:
        _impl = _editdist_py
        HAVE_NATIVE = False

levenshtein = _impl.levenshtein
levenshtein_bounded = _impl.levenshtein_bounded
min_distance_bounded = _impl.min_distance_bounded


def backend_name() -> str:
    return "compiled" if HAVE_NATIVE else "pure-python"
