"""Receivers: ZF equalization, per-group decisions, and the exhaustive joint-ML oracle.

Frame bit layout is pinned project-wide as antenna-major, group-minor: the
transmit frame is ``[bits of antenna 1 (group 1..L), bits of antenna 2, ...]``
and every detector returns bits in the same order.
"""

import numpy as np

from .imcode import ImCodec, _int_to_bits
from .linalg import hermitian_ls_solve
from .validation import as_bits, as_complex_matrix, as_complex_vector

# Refuse joint-ML searches beyond this many hypotheses; the oracle is meant
# for tiny configurations only.
ML_CANDIDATE_GUARD = 2 ** 24
_ML_CHUNK = 4096


def zf_coarse(h_eff, y, n, n_tx):
    """Least-squares equalize the stacked receive vector; returns (T, N) per-antenna estimates."""
    x = hermitian_ls_solve(h_eff, y)
    if x.size != n_tx * n:
        raise ValueError(f"expected {n_tx * n} stacked samples, got {x.size}")
    return x.reshape(n_tx, n)


def split_subblocks(psi, l, u):
    """Group l (1-based) of the coarse output as a (T, u) matrix: row t is psi_t[(l-1)u : lu]."""
    psi = as_complex_matrix(psi, "psi")
    n_groups = psi.shape[1] // u
    if not 1 <= l <= n_groups:
        raise ValueError(f"group index {l} out of range 1..{n_groups}")
    return psi[:, (l - 1) * u:l * u]


def classical_zf_detect(psi, codec: ImCodec):
    """Independent per-antenna, per-group minimum-distance decisions on the ZF output."""
    psi = as_complex_matrix(psi, "psi")
    u = codec.cfg.u
    if psi.shape[1] % u != 0:
        raise ValueError(f"coarse output length {psi.shape[1]} not a multiple of u={u}")
    per_antenna = [codec.decode_mindist_many(row.reshape(-1, u)).ravel() for row in psi]
    return np.concatenate(per_antenna)


def combine_bits(group_bits, n_tx):
    """Recompose per-group bit blocks into the transmitted frame layout.

    ``group_bits`` is (L, p*T) with group l holding the antennas' messages
    back to back; the output interleaves them antenna-major, group-minor.
    """
    group_bits = np.asarray(group_bits)
    if group_bits.ndim != 2 or group_bits.shape[1] % n_tx != 0:
        raise ValueError(f"group bits must be (L, p*T), got {group_bits.shape}")
    p = group_bits.shape[1] // n_tx
    # (L, T, p) -> (T, L, p) -> flat
    return group_bits.reshape(-1, n_tx, p).transpose(1, 0, 2).ravel()


def split_frame_bits(frame_bits, n_groups, n_tx):
    """Inverse of :func:`combine_bits`: frame bits -> (L, p*T) per-group targets."""
    frame_bits = as_bits(frame_bits, "frame bits")
    if frame_bits.size % (n_groups * n_tx) != 0:
        raise ValueError(
            f"frame length {frame_bits.size} not divisible by L*T = {n_groups * n_tx}"
        )
    p = frame_bits.size // (n_groups * n_tx)
    return frame_bits.reshape(n_tx, n_groups, p).transpose(1, 0, 2).reshape(n_groups, -1)


def ml_candidate_count(codec: ImCodec, n, n_tx):
    """Number of joint hypotheses: (alpha Q^v)^(T N / u)."""
    return codec.cfg.n_candidates ** (n_tx * (n // codec.cfg.u))


def joint_ml_detect(y, h_eff, codec: ImCodec, n, n_tx, guard=ML_CANDIDATE_GUARD):
    """Exhaustive maximum-likelihood frame decision.

    Minimizes ``||y - H_eff d||^2`` over every valid transmit hypothesis;
    ties keep the lowest candidate enumeration index (candidates enumerate in
    frame-bit order, antenna-major group-minor, index bits most significant).
    """
    y = as_complex_vector(y, "y")
    h_eff = as_complex_matrix(h_eff, "H_eff")
    cfg = codec.cfg
    n_groups = n // cfg.u
    n_blocks = n_tx * n_groups
    total = ml_candidate_count(codec, n, n_tx)
    if total > guard:
        raise ValueError(
            f"joint ML search needs {total} candidates, above the guard of {guard}"
        )

    cands = codec.candidates()  # (2^p, u)
    base = cands.shape[0]
    weights = base ** np.arange(n_blocks - 1, -1, -1, dtype=np.int64)

    best_val = np.inf
    best_idx = -1
    for start in range(0, total, _ML_CHUNK):
        idx = np.arange(start, min(start + _ML_CHUNK, total), dtype=np.int64)
        digits = (idx[:, None] // weights[None, :]) % base  # (C, blocks)
        d = cands[digits].reshape(idx.size, n_blocks * cfg.u)  # (C, NT)
        resid = y[:, None] - h_eff @ d.T
        d2 = np.sum(np.abs(resid) ** 2, axis=0)
        k = int(np.argmin(d2))
        if d2[k] < best_val:
            best_val = float(d2[k])
            best_idx = start + k

    digits = (best_idx // weights) % base
    bits = [_int_to_bits(int(m), cfg.p) for m in digits]
    return np.concatenate(bits)
