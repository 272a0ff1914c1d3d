"""Prefix-free enumerative coding of binary outcome records.

A measurement record is a binary tape: 1 marks a profitable outcome, 0 an
unprofitable one.  Its compressed form is a two-part code:

    payload = [ k in ceil(lg(N+1)) bits ][ rank in ceil(lg C(N,k)) bits ]

where ``rank`` is the tape's position among all weight-k strings of length
N in lexicographic order with bit 1 sorting before bit 0.  The tape length
N travels out of band (the owner of a memory tape knows how many cycles it
has run), so for fixed N the code is prefix-free and bijective.

The codeword length ceil(lg(N+1)) + ceil(lg C(N,k)) is a certified upper
bound on the algorithmic information content of the tape, and it achieves
the binary-entropy rate N h(k/N) up to O(lg N) slack: that is all the
delayed-erasure accounting downstream needs.

Ranking is exact big-integer arithmetic (gmpy2 when available, pure Python
otherwise); no floating point touches the encode/decode path.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import CorruptCodewordError, ValidationError
from .infotheory import binary_entropy

try:
    from gmpy2 import bincoef as _bincoef, divexact as _divexact, mpz as _mpz, xmpz as _xmpz

    _HAVE_GMPY2 = True
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _HAVE_GMPY2 = False

    def _bincoef(n, k):
        return math.comb(n, k) if 0 <= k <= n else 0

    def _divexact(a, b):
        return a // b

    _mpz = int
    _xmpz = int


def binomial(n: int, k: int) -> int:
    """Exact C(n, k), 0 outside the triangle."""
    if k < 0 or k > n or n < 0:
        return 0
    return int(_bincoef(n, k))


def ceil_log2(m: int) -> int:
    """ceil(lg m) for a positive integer, exactly."""
    if m < 1:
        raise ValidationError(f"ceil_log2 needs a positive integer, got {m}")
    return (m - 1).bit_length()


@dataclass(frozen=True)
class RecordTape:
    """Immutable binary outcome record.

    ``bits`` holds one 0/1 value per byte; ``n`` and ``k`` (length and
    number of ones) are derived, never stored inconsistently.
    """

    bits: bytes

    def __post_init__(self):
        if any(b > 1 for b in self.bits):
            raise ValidationError("tape bits must be 0 or 1")

    @property
    def n(self) -> int:
        return len(self.bits)

    @cached_property
    def k(self) -> int:
        return sum(self.bits)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "RecordTape":
        return cls(bytes(int(b) for b in bits))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "RecordTape":
        return cls(np.asarray(arr, dtype=np.uint8).tobytes())

    @classmethod
    def random(cls, n: int, p: float, rng: np.random.Generator) -> "RecordTape":
        return cls.from_array(rng.random(n) < p)

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)


@dataclass(frozen=True)
class Codeword:
    """Two-part enumerative codeword: 0/1 payload plus out-of-band length."""

    payload: bytes
    declared_n: int

    def __post_init__(self):
        if any(b > 1 for b in self.payload):
            raise ValidationError("payload bits must be 0 or 1")
        if self.declared_n < 0:
            raise ValidationError("declared length must be non-negative")

    def __len__(self) -> int:
        return len(self.payload)


def tape_rank(tape: RecordTape) -> int:
    """Lexicographic rank (1 before 0) among weight-k strings of length n."""
    n_total, k = tape.n, tape.k
    if k == 0 or k == n_total:
        return 0
    rank = _xmpz(0)
    c = _bincoef(n_total - 1, k - 1)  # strings with a 1 at the current slot
    k_rem = k
    n = n_total - 1  # positions after the current one
    for b in tape.bits:
        if b:
            k_rem -= 1
            if k_rem == 0:
                break
            c = _divexact(c * k_rem, n)
        else:
            rank += c
            c = _divexact(c * (n - k_rem + 1), n)
        n -= 1
    return int(rank)


def tape_from_rank(n_total: int, k: int, rank: int) -> RecordTape:
    """Inverse of tape_rank: the weight-k string of length n at ``rank``."""
    if not 0 <= k <= n_total:
        raise CorruptCodewordError(f"weight {k} impossible for length {n_total}")
    if not 0 <= rank < max(binomial(n_total, k), 1):
        raise CorruptCodewordError(
            f"rank {rank} outside [0, C({n_total},{k}))")
    out = bytearray(n_total)
    if k == 0:
        return RecordTape(bytes(out))
    r = _xmpz(rank)
    c = _bincoef(n_total - 1, k - 1)
    k_rem = k
    n = n_total - 1
    for t in range(n_total):
        if r < c:
            out[t] = 1
            k_rem -= 1
            if k_rem == 0:
                break
            c = _divexact(c * k_rem, n)
        else:
            r -= c
            c = _divexact(c * (n - k_rem + 1), n)
        n -= 1
    return RecordTape(bytes(out))


def codeword_length(n: int, k: int) -> int:
    """Exact payload length in bits: ceil(lg(n+1)) + ceil(lg C(n,k))."""
    if not 0 <= k <= n:
        raise ValidationError(f"weight {k} impossible for length {n}")
    count_field = n.bit_length()  # == ceil(lg(n+1))
    c = binomial(n, k)
    return count_field + (ceil_log2(c) if c > 1 else 0)


def _int_to_bits(value: int, width: int) -> bytes:
    if width == 0:
        return b""
    return bytes((value >> (width - 1 - i)) & 1 for i in range(width))


def _bits_to_int(bits: Sequence[int]) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | b
    return value


def enumerative_encode(tape: RecordTape) -> Codeword:
    """Compress a tape into its count-then-rank codeword."""
    n, k = tape.n, tape.k
    count_field = _int_to_bits(k, n.bit_length())
    c = binomial(n, k)
    rank_width = ceil_log2(c) if c > 1 else 0
    rank = tape_rank(tape)
    if rank_width <= 64:
        rank_field = _int_to_bits(rank, rank_width)
    else:
        rank_field = format(rank, f"0{rank_width}b").encode().translate(
            bytes.maketrans(b"01", b"\x00\x01"))
    return Codeword(payload=count_field + rank_field, declared_n=n)


def enumerative_decode(code: Codeword) -> RecordTape:
    """Exact inverse of enumerative_encode for a matching declared length."""
    n = code.declared_n
    count_width = n.bit_length()
    if len(code.payload) < count_width:
        raise CorruptCodewordError("payload shorter than its count field")
    k = _bits_to_int(code.payload[:count_width])
    if k > n:
        raise CorruptCodewordError(f"count field {k} exceeds length {n}")
    expected = codeword_length(n, k)
    if len(code.payload) != expected:
        raise CorruptCodewordError(
            f"payload is {len(code.payload)} bits, expected {expected}")
    rank_bits = code.payload[count_width:]
    if len(rank_bits) <= 64:
        rank = _bits_to_int(rank_bits)
    else:
        rank = int(bytes(rank_bits).translate(
            bytes.maketrans(b"\x00\x01", b"01")), 2)
    return tape_from_rank(n, k, rank)


def k_estimate(tape: RecordTape) -> int:
    """Computable upper bound, in bits, on the tape's information content.

    Equals the enumerative codeword's payload length
    ceil(lg(N+1)) + ceil(lg C(N,k)): monotone in C(N,k) at fixed N and
    within lg(N+1)+2 bits of the entropy rate N h(k/N).
    """
    return codeword_length(tape.n, tape.k)


def asymptotic_k(n: int, p: float) -> float:
    """Entropy-rate record size N h(p) in bits for outcome density p."""
    if not 0.0 < p < 1.0:
        raise ValidationError(f"outcome density must lie strictly in (0,1), got {p}")
    if n < 0:
        raise ValidationError("length must be non-negative")
    return n * binary_entropy(p)


def coding_bound_check(delta_h: float, mean_code_length: float) -> bool:
    """One-sided noiseless-coding check: records cannot beat the entropy.

    True iff delta_h <= mean_code_length.  (The matching upper bound
    delta_h + 1 holds for Shannon-optimal per-outcome codes and is asserted
    separately where it applies.)
    """
    if delta_h < 0:
        raise ValidationError("entropy decrease must be non-negative")
    return delta_h <= mean_code_length


_HEADER = struct.Struct("<Q")  # declared_n as unsigned 64-bit little-endian


def pack_codeword(code: Codeword) -> bytes:
    """Serialize: u64-LE declared length, then payload bits packed
    big-endian (MSB first), final partial byte zero-padded."""
    header = _HEADER.pack(code.declared_n)
    nbits = len(code.payload)
    packed = bytearray((nbits + 7) // 8)
    for i, b in enumerate(code.payload):
        if b:
            packed[i >> 3] |= 0x80 >> (i & 7)
    return header + bytes(packed)


def unpack_codeword(data: bytes) -> Codeword:
    """Inverse of pack_codeword, validating length and padding."""
    if len(data) < _HEADER.size:
        raise CorruptCodewordError("missing length header")
    (n,) = _HEADER.unpack_from(data)
    body = data[_HEADER.size:]
    count_width = int(n).bit_length()
    have_bits = 8 * len(body)
    if have_bits < count_width:
        raise CorruptCodewordError("payload shorter than its count field")
    first = bytes(
        (body[i >> 3] >> (7 - (i & 7))) & 1 for i in range(count_width))
    k = _bits_to_int(first)
    if k > n:
        raise CorruptCodewordError(f"count field {k} exceeds length {n}")
    nbits = codeword_length(int(n), k)
    if len(body) != (nbits + 7) // 8:
        raise CorruptCodewordError(
            f"container is {len(body)} bytes, expected {(nbits + 7) // 8}")
    payload = bytes(
        (body[i >> 3] >> (7 - (i & 7))) & 1 for i in range(nbits))
    for i in range(nbits, have_bits):
        if (body[i >> 3] >> (7 - (i & 7))) & 1:
            raise CorruptCodewordError("nonzero padding bits")
    return Codeword(payload=payload, declared_n=int(n))
