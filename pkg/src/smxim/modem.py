"""GFDM/OFDM modulator matrix, raised-cosine prototype filter, and cyclic prefix ops.

The transmitter matrix is built densely: column (k, m) carries the prototype
filter circularly shifted by m subsymbols and modulated onto subcarrier k.
OFDM is the M=1 special case, where the matrix reduces to a normalized
inverse DFT.
"""

from dataclasses import dataclass, field

import numpy as np

from .validation import as_complex_vector


@dataclass(frozen=True)
class WaveformConfig:
    """Multicarrier dimensioning: K subcarriers per subsymbol, M subsymbols."""

    k: int
    m: int
    rolloff: float = 0.5
    n_cp: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError(f"rolloff must be in [0, 1], got {self.rolloff}")
        if not 0 <= self.n_cp <= self.n:
            raise ValueError(f"n_cp must be in [0, {self.n}], got {self.n_cp}")

    @property
    def n(self):
        return self.k * self.m


@dataclass(frozen=True)
class PrototypeFilter:
    """Real prototype filter taps of length N with unit L2 norm."""

    taps: np.ndarray = field(repr=False)

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        object.__setattr__(self, "taps", taps)
        if taps.ndim != 1:
            raise ValueError("prototype taps must be 1-D")
        if abs(np.linalg.norm(taps) - 1.0) > 1e-12:
            raise ValueError("prototype taps must have unit L2 norm")


def _rc_window(x, width, ramp):
    """Raised-cosine amplitude window: flat inner span, cosine ramps at the edges.

    Half amplitude lands exactly at +-width/2, so the transitions are
    symmetric about the subsymbol edges.
    """
    y = np.zeros_like(x)
    ax = np.abs(x)
    if ramp == 0.0:
        # Sharp edges; half-open span keeps exactly `width` samples on an
        # integer grid.
        return np.where((x >= -width / 2) & (x < width / 2), 1.0, 0.0)
    flat = ax <= (width - ramp) / 2
    edge = (~flat) & (ax < (width + ramp) / 2)
    y[flat] = 1.0
    y[edge] = 0.5 * (1.0 + np.cos(np.pi * (ax[edge] - (width - ramp) / 2) / ramp))
    return y


def build_prototype_rc(cfg: WaveformConfig) -> PrototypeFilter:
    """Raised-cosine prototype of length N = K*M, L2-normalized.

    The pulse is a circular raised-cosine window one subsymbol (K samples)
    wide with cosine ramps of width rolloff*K, wrapped modulo N. Because the
    ramps are amplitude-complementary, the wrapped window is exactly constant
    when M = 1, recovering the rectangular OFDM pulse; rolloff = 0 gives a
    sharp rectangular window over one subsymbol span.
    """
    n = cfg.n
    k = float(cfg.k)
    ramp = cfg.rolloff * k
    # Signed circular offset from the center of the first subsymbol slot.
    d = (np.arange(n) - k / 2) % n
    d = np.where(d >= n / 2, d - n, d)
    g = _rc_window(d, k, ramp) + _rc_window(d - n, k, ramp) + _rc_window(d + n, k, ramp)
    return PrototypeFilter(g / np.linalg.norm(g))


def build_gfdm_matrix(g: PrototypeFilter, cfg: WaveformConfig) -> np.ndarray:
    """Dense N-by-N transmitter matrix.

    Column m*K + k (data position (k, m)) has samples
    ``g[(n - m K) mod N] * exp(j 2 pi k n / K)``; the column ordering matches
    the subcarrier-major layout of the data vector.
    """
    n = cfg.n
    taps = g.taps
    if taps.size != n:
        raise ValueError(f"prototype length {taps.size} != K*M = {n}")
    samples = np.arange(n)
    a = np.empty((n, n), dtype=np.complex128)
    for m in range(cfg.m):
        shifted = taps[(samples - m * cfg.k) % n]
        for k in range(cfg.k):
            a[:, m * cfg.k + k] = shifted * np.exp(2j * np.pi * k * samples / cfg.k)
    return a


def cp_add(x, n_cp):
    """Prepend the last ``n_cp`` samples of ``x`` as a cyclic prefix."""
    x = as_complex_vector(x, "x")
    if not 0 <= n_cp <= x.size:
        raise ValueError(f"n_cp must be in [0, {x.size}], got {n_cp}")
    if n_cp == 0:
        return x.copy()
    return np.concatenate([x[-n_cp:], x])


def cp_remove(x_ext, n_cp):
    """Drop the first ``n_cp`` samples; inverse of :func:`cp_add`."""
    x_ext = as_complex_vector(x_ext, "x")
    # The prefix is a copy of the block tail, so it can never exceed the
    # remaining block length.
    if n_cp < 0 or x_ext.size - n_cp < n_cp:
        raise ValueError(
            f"length {x_ext.size} is inconsistent with a cyclic prefix of {n_cp} samples"
        )
    return x_ext[n_cp:].copy()
