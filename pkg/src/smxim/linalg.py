"""Dense complex linear algebra used by the modem, channel, and detectors.

Everything here is a pure function of its inputs; returned arrays are new
allocations and safe to share across workers.
"""

import numpy as np
import scipy.linalg

from .validation import as_complex_matrix, as_complex_vector

# Relative pivot threshold below which the normal matrix is declared
# rank deficient (scale-aware, deterministic).
RANK_PIVOT_RTOL = 1e-12


class RankDeficientChannelError(np.linalg.LinAlgError):
    """Raised when the normal matrix of a least-squares solve is (numerically) singular."""


def circulant_from_taps(h, n):
    """Build the n-by-n circular convolution matrix of the impulse response ``h``.

    Entry (i, j) is ``h[(i - j) mod n]`` for lags shorter than ``len(h)`` and
    zero otherwise, so ``circulant_from_taps(h, n) @ a`` equals the circular
    convolution of ``a`` with ``h``.
    """
    h = as_complex_vector(h, "h")
    n_ch = h.size
    if not 1 <= n_ch <= n:
        raise ValueError(f"need 1 <= len(h) <= n, got len(h)={n_ch}, n={n}")
    h_ext = np.zeros(n, dtype=np.complex128)
    h_ext[:n_ch] = h
    i = np.arange(n)
    return h_ext[(i[:, None] - i[None, :]) % n]


def hermitian_transpose(a):
    """Conjugate transpose."""
    return np.conj(np.asarray(a)).T


def hermitian_ls_solve(h_mat, y):
    """Least-squares solve ``x = (H^H H)^{-1} H^H y`` via Cholesky on the normal equations.

    Parameters
    ----------
    h_mat : (q, r) complex array with q >= r
    y : (q,) complex array

    Returns
    -------
    (r,) complex array

    Raises
    ------
    RankDeficientChannelError
        If a Cholesky pivot of ``H^H H`` falls below ``RANK_PIVOT_RTOL`` times
        the largest diagonal magnitude (rank-deficient channel), instead of
        returning silent garbage.
    """
    h_mat = as_complex_matrix(h_mat, "H")
    y = as_complex_vector(y, "y")
    q, r = h_mat.shape
    if q < r:
        raise ValueError(f"H must be tall or square, got {q}x{r}")
    if y.size != q:
        raise ValueError(f"y must have length {q}, got {y.size}")

    gram = h_mat.conj().T @ h_mat
    rhs = h_mat.conj().T @ y
    scale = float(np.max(np.abs(np.diag(gram).real))) if r else 0.0
    try:
        lower = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientChannelError("rank-deficient channel") from exc
    # The squared Cholesky diagonal is exactly the pivot sequence of H^H H.
    pivots = np.diag(lower).real ** 2
    if np.min(pivots) < RANK_PIVOT_RTOL * scale:
        raise RankDeficientChannelError("rank-deficient channel")
    z = scipy.linalg.solve_triangular(lower, rhs, lower=True)
    return scipy.linalg.solve_triangular(lower.conj().T, z, lower=False)
