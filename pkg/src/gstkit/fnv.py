"""FNV-1a 64-bit hashing and integer-exact uniform draws.

Every "random" decision in this package (dropout masking, synthetic corpus
sampling) is a pure function of hashed identifiers, so two runs -- or two
independent implementations -- agree bit for bit. All derived draws use
integer arithmetic only; no floats enter the contract.
"""

from __future__ import annotations

FNV64_OFFSET_BASIS = 14695981039346656037
FNV64_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1

# Field separator between hashed components; cannot occur in identifiers.
SEP = b"\x1f"

TWO_64 = 1 << 64
MICRO = 1_000_000


def fnv1a64(data: bytes) -> int:
    """Hash a byte string with 64-bit FNV-1a."""
    h = FNV64_OFFSET_BASIS
    for b in data:
        h ^= b
        h = (h * FNV64_PRIME) & _MASK64
    return h


def hash_fields(*fields: str) -> int:
    """Hash UTF-8 fields joined by the 0x1F separator."""
    return fnv1a64(SEP.join(f.encode("utf-8") for f in fields))


def below_micro(h: int, p_micro: int) -> bool:
    """True iff h/2^64 < p_micro/10^6, compared exactly in integers."""
    return h * MICRO < p_micro * TWO_64

def uniform_int(h: int, lo: int, hi: int) -> int:
    """Map h to an integer uniform over [lo, hi) (floor of h/2^64 scaled)."""
    return lo + (h * (hi - lo)) // TWO_64
