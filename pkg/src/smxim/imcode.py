"""Index-modulation bit mapping: lookup tables, constellations, group encode/decode.

A group of ``u`` subcarriers carries a p-bit message: the first ``p_i`` bits
select which ``v`` subcarriers are active (lookup table), the remaining
``p_q = v log2(Q)`` bits are mapped onto the active positions by a Q-ary
constellation. Decoding is a minimum-distance search over all alpha*Q^v
candidate groups.
"""

import io
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .validation import as_bits, as_complex_vector

# Active-index rows for the u=4, v=2 reference table, keyed by the integer
# value of the two index bits.
_TABLE_4_2 = ((1, 2), (2, 3), (3, 4), (1, 4))


@dataclass(frozen=True)
class ImConfig:
    """Group dimensioning: u subcarriers, v active, Q-ary constellation."""

    u: int
    v: int
    q: int

    def __post_init__(self):
        if not 1 <= self.v <= self.u:
            raise ValueError(f"need 1 <= v <= u, got v={self.v}, u={self.u}")
        if self.q not in (2, 4):
            raise ValueError(f"q must be 2 (BPSK) or 4 (4-QAM), got {self.q}")
        if self.p_i < 1:
            raise ValueError(f"C({self.u},{self.v}) admits no index bits")

    @property
    def p_i(self):
        return int(math.floor(math.log2(math.comb(self.u, self.v))))

    @property
    def p_q(self):
        return self.v * int(math.log2(self.q))

    @property
    def p(self):
        return self.p_i + self.p_q

    @property
    def alpha(self):
        return 2 ** self.p_i

    @property
    def n_candidates(self):
        return self.alpha * self.q ** self.v


def lookup_table(u, v):
    """Active-index rows, one per index-bit pattern, each strictly increasing (1-based).

    (4, 2) uses the standard four-row table; other shapes take the first
    2^floor(log2(C(u,v))) index combinations in lexicographic order.
    """
    if (u, v) == (4, 2):
        return [list(row) for row in _TABLE_4_2]
    alpha = 2 ** int(math.floor(math.log2(math.comb(u, v))))
    rows = []
    for combo in combinations(range(1, u + 1), v):
        rows.append(list(combo))
        if len(rows) == alpha:
            break
    return rows


def lookup_table_csv(u, v):
    """Render the lookup table as CSV with columns bits,indices."""
    rows = lookup_table(u, v)
    p_i = int(math.log2(len(rows)))
    out = io.StringIO()
    out.write("bits,indices\n")
    for idx, row in enumerate(rows):
        bits = format(idx, f"0{p_i}b")
        out.write(f"{bits},{' '.join(str(i) for i in row)}\n")
    return out.getvalue()


def constellation(q):
    """Unit-average-energy constellation points in bit-label order.

    BPSK: bit 0 -> +1, bit 1 -> -1. 4-QAM: Gray labeling, first bit picks the
    real sign, second the imaginary sign, 0 -> +, scaled to unit energy.
    """
    if q == 2:
        return np.array([1.0 + 0j, -1.0 + 0j])
    if q == 4:
        pts = []
        for b1 in (0, 1):
            for b2 in (0, 1):
                re = 1.0 if b1 == 0 else -1.0
                im = 1.0 if b2 == 0 else -1.0
                pts.append((re + 1j * im) / np.sqrt(2.0))
        return np.array(pts)
    raise ValueError(f"unsupported constellation order {q}")


def _bits_to_int(bits):
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def _int_to_bits(value, width):
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.int64)


def qam_map(bits, q):
    """Map log2(Q) bits to one constellation point."""
    bits = as_bits(bits, "bits", int(math.log2(q)))
    return constellation(q)[_bits_to_int(bits)]


def qam_demap(point, q):
    """Nearest-point inverse of :func:`qam_map`."""
    pts = constellation(q)
    idx = int(np.argmin(np.abs(pts - complex(point)) ** 2))
    return _int_to_bits(idx, int(math.log2(q)))


class ImCodec:
    """Encoder/decoder for one IM group plus symbol assembly helpers.

    Candidate groups are enumerated in p-bit message order (index bits most
    significant), which pins the tie-break of the minimum-distance decision.
    """

    def __init__(self, cfg: ImConfig):
        self.cfg = cfg
        self.table = lookup_table(cfg.u, cfg.v)
        self.points = constellation(cfg.q)
        self._bits_per_symbol = int(math.log2(cfg.q))
        self._candidates = None

    def encode(self, bits):
        """p-bit message -> u-length complex group with v active entries."""
        cfg = self.cfg
        bits = as_bits(bits, "bits", cfg.p)
        row = self.table[_bits_to_int(bits[: cfg.p_i])]
        group = np.zeros(cfg.u, dtype=np.complex128)
        for slot, index in enumerate(row):
            chunk = bits[cfg.p_i + slot * self._bits_per_symbol:
                         cfg.p_i + (slot + 1) * self._bits_per_symbol]
            group[index - 1] = self.points[_bits_to_int(chunk)]
        return group

    def candidates(self):
        """All 2^p candidate groups as a (2^p, u) matrix, row index = message value."""
        if self._candidates is None:
            cfg = self.cfg
            cands = np.empty((2 ** cfg.p, cfg.u), dtype=np.complex128)
            for msg in range(2 ** cfg.p):
                cands[msg] = self.encode(_int_to_bits(msg, cfg.p))
            self._candidates = cands
        return self._candidates

    def decode_mindist(self, phi):
        """Minimum-distance decision over all candidate groups; ties keep the lowest message."""
        phi = as_complex_vector(phi, "phi")
        if phi.size != self.cfg.u:
            raise ValueError(f"expected length {self.cfg.u}, got {phi.size}")
        d2 = np.sum(np.abs(phi[None, :] - self.candidates()) ** 2, axis=1)
        return _int_to_bits(int(np.argmin(d2)), self.cfg.p)

    def decode_mindist_many(self, phi_rows):
        """Vectorized decode of an (L, u) stack of groups -> (L, p) bits."""
        phi_rows = np.asarray(phi_rows, dtype=np.complex128)
        d2 = np.sum(
            np.abs(phi_rows[:, None, :] - self.candidates()[None, :, :]) ** 2, axis=2
        )
        msgs = np.argmin(d2, axis=1)
        width = self.cfg.p
        return np.array([_int_to_bits(int(m), width) for m in msgs])

    def assemble(self, groups):
        """Concatenate L groups into one length-N symbol vector."""
        groups = [as_complex_vector(g, "group") for g in groups]
        for g in groups:
            if g.size != self.cfg.u:
                raise ValueError(f"every group must have length {self.cfg.u}")
        return np.concatenate(groups) if groups else np.zeros(0, dtype=np.complex128)

    def split(self, symbol):
        """Inverse of :func:`assemble`: slice a length-N vector into (L, u) groups."""
        symbol = as_complex_vector(symbol, "symbol")
        if symbol.size % self.cfg.u != 0:
            raise ValueError(
                f"symbol length {symbol.size} is not a multiple of u={self.cfg.u}"
            )
        return symbol.reshape(-1, self.cfg.u)

    def encode_symbol(self, bits, n):
        """Encode L*p bits into a length-n symbol (groups laid out contiguously)."""
        cfg = self.cfg
        if n % cfg.u != 0:
            raise ValueError(f"n={n} is not a multiple of u={cfg.u}")
        n_groups = n // cfg.u
        bits = as_bits(bits, "bits", n_groups * cfg.p)
        groups = [
            self.encode(bits[l * cfg.p:(l + 1) * cfg.p]) for l in range(n_groups)
        ]
        return self.assemble(groups)


@lru_cache(maxsize=None)
def cached_codec(u, v, q):
    """Shared codec instances; candidate tables are immutable once built."""
    return ImCodec(ImConfig(u=u, v=v, q=q))
