"""Frequency-selective MIMO channel: tap generation, block channel, AWGN.

Each antenna pair gets an independent tapped delay line drawn from a power
delay profile normalized to unit total power; the channel is constant over
one multicarrier symbol and independent across symbols (block fading). SNR
is defined as 10*log10(1 / noise variance) per complex sample.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import circulant_from_taps
from .validation import check_rng

# 3GPP Extended Pedestrian A profile: excess delays (ns) and relative powers (dB).
EPA_DELAYS_NS = (0.0, 30.0, 70.0, 90.0, 110.0, 190.0, 410.0)
EPA_POWERS_DB = (0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8)


@dataclass(frozen=True)
class ChannelRealization:
    """Per-antenna-pair taps, shape (R, T, N_Ch), plus the profile they were drawn from."""

    taps: np.ndarray = field(repr=False)
    pdp: np.ndarray = field(repr=False)

    @property
    def n_rx(self):
        return self.taps.shape[0]

    @property
    def n_tx(self):
        return self.taps.shape[1]

    @property
    def n_ch(self):
        return self.taps.shape[2]


@dataclass(frozen=True)
class NoiseSpec:
    """Noise variance per complex sample."""

    variance: float

    def __post_init__(self):
        if self.variance <= 0:
            raise ValueError(f"noise variance must be positive, got {self.variance}")

    @property
    def snr_db(self):
        return 10.0 * np.log10(1.0 / self.variance)

    @classmethod
    def from_snr_db(cls, snr_db):
        return cls(variance=10.0 ** (-snr_db / 10.0))


def uniform_pdp(n_ch):
    """Flat profile, 1/N_Ch per tap."""
    if n_ch < 1:
        raise ValueError(f"n_ch must be >= 1, got {n_ch}")
    return np.full(n_ch, 1.0 / n_ch)


def epa_pdp(n_ch):
    """EPA profile binned onto ``n_ch`` sample-spaced taps, normalized to unit power.

    The delay grid is scaled so the longest EPA echo lands on the last tap;
    each path's linear power is accumulated into its nearest bin.
    """
    if n_ch < 1:
        raise ValueError(f"n_ch must be >= 1, got {n_ch}")
    powers = 10.0 ** (np.array(EPA_POWERS_DB) / 10.0)
    pdp = np.zeros(n_ch)
    if n_ch == 1:
        pdp[0] = powers.sum()
    else:
        step = max(EPA_DELAYS_NS) / (n_ch - 1)
        for delay, power in zip(EPA_DELAYS_NS, powers):
            pdp[int(np.rint(delay / step))] += power
    return pdp / pdp.sum()


def pdp_by_name(name, n_ch):
    """Profile lookup for the config file ("uniform" or "epa")."""
    if name == "uniform":
        return uniform_pdp(n_ch)
    if name == "epa":
        return epa_pdp(n_ch)
    raise ValueError(f"unknown power delay profile {name!r} (expected uniform or epa)")


def draw_channel(n_rx, n_tx, n_ch, pdp, rng):
    """Draw iid complex Gaussian taps: tap i of each pair has variance pdp[i]."""
    check_rng(rng)
    pdp = np.asarray(pdp, dtype=np.float64)
    if pdp.shape != (n_ch,):
        raise ValueError(f"pdp must have length {n_ch}, got shape {pdp.shape}")
    if np.any(pdp < 0):
        raise ValueError("pdp weights must be nonnegative")
    shape = (n_rx, n_tx, n_ch)
    scale = np.sqrt(pdp / 2.0)
    taps = scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return ChannelRealization(taps=taps, pdp=pdp.copy())


def build_block_channel(ch: ChannelRealization, a_mat, n):
    """Effective receive matrix: block (r, t) is circulant(h_rt) @ A, stacked R by T."""
    a_mat = np.asarray(a_mat, dtype=np.complex128)
    if a_mat.shape != (n, n):
        raise ValueError(f"modulation matrix must be {n}x{n}, got {a_mat.shape}")
    r, t = ch.n_rx, ch.n_tx
    h_eff = np.empty((r * n, t * n), dtype=np.complex128)
    for i in range(r):
        for j in range(t):
            h_eff[i * n:(i + 1) * n, j * n:(j + 1) * n] = (
                circulant_from_taps(ch.taps[i, j], n) @ a_mat
            )
    return h_eff


def transmit(d, h_eff, noise: NoiseSpec | None, rng):
    """y = H_eff d + n, with n ~ CN(0, variance * I); noise=None disables the noise."""
    d = np.asarray(d, dtype=np.complex128)
    y = h_eff @ d
    if noise is None:
        return y
    check_rng(rng)
    sigma = np.sqrt(noise.variance / 2.0)
    return y + sigma * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))
