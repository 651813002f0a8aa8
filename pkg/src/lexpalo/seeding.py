"""Deterministic seed derivation.

All stochastic operations in the package draw their seeds through
:func:`derive_seed`, which maps a master seed plus string labels to a stable
64-bit integer via SHA-256. This keeps every shuffle and window draw
reproducible across platforms, Python versions, and process boundaries:

* stratified splits use ``derive_seed(seed, "stratum", palo)`` per palo;
* repeated-training harnesses use ``derive_seed(seed, "run", i)`` for run i.
"""

from __future__ import annotations

import hashlib


def derive_seed(*parts: int | str) -> int:
    """Map a tuple of labels/integers to a stable unsigned 64-bit seed."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
