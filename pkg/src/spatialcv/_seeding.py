"""Stable seed derivation.

Every random stream in the package is keyed by a tuple of plain values
(ints, strings) so that any single fit or partition can be re-run in
isolation. Python's ``hash`` is salted per process, so blake2b is used.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(*parts) -> int:
    """Map ``parts`` to a 63-bit seed, identical across processes and runs."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little") & (_MASK64 >> 1)


def rng_for(*parts) -> np.random.Generator:
    """A fresh generator owned by the caller, keyed by ``parts``."""
    return np.random.Generator(np.random.Philox(derive_seed(*parts)))
