"""Complex-multiplication budgets for the ML, ZF, and two-stage receivers.

All row formulas are evaluated in exact integer/rational arithmetic (the ML
decision count reaches ~1e76 at realistic sizes, far beyond float range).
The neural stages count real multiplications divided by three, since one
complex multiplication costs at least three real ones; where the published
per-operation expression and the totals column disagree, both variants are
reported, labeled "as-operation" and "as-CMs-column".
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .linalg import hermitian_ls_solve

# Published reference totals for the four documented configurations; our
# exact evaluation of the same row formulas does not reproduce them (see
# complexity_text), so they are printed alongside as targets, never asserted.
REFERENCE_TOTALS = {
    ("bpsk", 2, 2): {"ml": 3.29067e76, "zf": 4.53561e8, "deep": 4.53282e8},
    ("4qam", 2, 2): {"ml": 3.08764e134, "zf": 4.53840e8, "deep": 4.53328e8},
    ("bpsk", 4, 4): {"ml": 1.83301e178, "zf": 2.31930e11, "deep": 2.31929e11},
    ("4qam", 4, 4): {"ml": 1.08149e294, "zf": 2.31931e11, "deep": 2.31929e11},
}

REFERENCE_NOTE = (
    "note: reference totals are quoted as published; evaluating the row"
    " formulas exactly at the same parameters yields the values above,"
    " which do not reproduce the quoted totals. Both are shown."
)


def _exact(value):
    """Collapse integral Fractions to int."""
    frac = Fraction(value)
    return int(frac) if frac.denominator == 1 else frac


@dataclass(frozen=True)
class ComplexityReport:
    """Per-receiver CM budgets, exact, with the inputs they were computed from."""

    inputs: dict
    rows: dict        # receiver -> {process -> exact CMs}
    totals: dict      # receiver -> exact CMs ("deep" totals keyed per variant)

    def approx(self, receiver):
        return float(self.totals[receiver])


def complexity_report(n, n_tx, n_rx, n_ch, alpha, q, v, u, p,
                      kernel_count=0, hidden_size=0, tanh_cost=0, sigmoid_cost=0):
    """Evaluate every receiver's CM budget exactly.

    tanh_cost / sigmoid_cost are the real-multiplication prices charged per
    activation evaluation (0 by default: pure multiply counting of the
    linear algebra).
    """
    for name, val in (("n", n), ("n_tx", n_tx), ("n_rx", n_rx), ("n_ch", n_ch),
                      ("alpha", alpha), ("q", q), ("v", v), ("u", u), ("p", p)):
        if int(val) != val or val <= 0:
            raise ValueError(f"{name} must be a positive integer, got {val}")
    if n % u != 0:
        raise ValueError(f"n={n} must be divisible by u={u}")
    n, t, r = int(n), int(n_tx), int(n_rx)
    f, tau = int(kernel_count), int(hidden_size)
    lam, delta = int(tanh_cost), int(sigmoid_cost)
    n_groups = n // u
    cand = alpha * q ** v

    forming = n_ch * n ** 2 * r * t
    jdd = 2 * n ** 3 * t ** 2 * r + n ** 3 * t ** 3 + n ** 2 * r * t
    ml_decision = cand ** (t * n_groups) * (
        _exact(Fraction(n ** 2 * t * r * v, u)) + n * t
    )
    zf_decision = n * cand * t

    cnn_as_cms = _exact(Fraction((2 * f * t + f * lam) * n, 3))
    cnn_as_op = _exact(Fraction((2 * f * t + t * lam) * n, 3))
    fcnn_as_cms = _exact(Fraction((u * t * tau + tau * lam + tau * p * t + p * delta * t) * n_groups, 3))
    fcnn_as_op = _exact(Fraction((u * f * tau + tau * lam + tau * p * t + p * t * delta) * n_groups, 3))

    rows = {
        "ml": {"forming": forming, "decision": ml_decision},
        "zf": {"forming": forming, "jdd": jdd, "decision": zf_decision},
        "deep": {
            "forming": forming,
            "jdd": jdd,
            "cnn (as-CMs-column)": cnn_as_cms,
            "cnn (as-operation)": cnn_as_op,
            "fcnn (as-CMs-column)": fcnn_as_cms,
            "fcnn (as-operation)": fcnn_as_op,
        },
    }
    totals = {
        "ml": _exact(forming + ml_decision),
        "zf": forming + jdd + zf_decision,
        "deep (as-CMs-column)": _exact(forming + jdd + cnn_as_cms + fcnn_as_cms),
        "deep (as-operation)": _exact(forming + jdd + cnn_as_op + fcnn_as_op),
    }
    inputs = {"n": n, "t": t, "r": r, "n_ch": n_ch, "alpha": alpha, "q": q,
              "v": v, "u": u, "p": p, "f": f, "tau": tau,
              "lambda": lam, "delta": delta}
    return ComplexityReport(inputs=inputs, rows=rows, totals=totals)


def _fmt_exact(value):
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return str(value)


def complexity_text(report: ComplexityReport):
    """Aligned text table of every row and total, plus the reference targets."""
    lines = []
    inputs = report.inputs
    lines.append("complex multiplication budget")
    lines.append("inputs: " + " ".join(f"{k}={v}" for k, v in inputs.items()))
    lines.append("")
    header = f"{'receiver':<10} {'process':<22} {'CMs (exact)':>28} {'approx':>12}"
    lines.append(header)
    lines.append("-" * len(header))
    for receiver, rows in report.rows.items():
        for process, value in rows.items():
            approx = f"{float(value):.5e}"
            lines.append(f"{receiver:<10} {process:<22} {_fmt_exact(value):>28} {approx:>12}")
    lines.append("-" * len(header))
    for receiver, value in report.totals.items():
        approx = f"{float(value):.5e}"
        lines.append(f"{receiver:<10} {'TOTAL':<22} {_fmt_exact(value):>28} {approx:>12}")
    mod = "bpsk" if inputs["q"] == 2 else "4qam"
    key = (mod, inputs["t"], inputs["r"])
    if key in REFERENCE_TOTALS:
        lines.append("")
        lines.append(f"reference totals for {mod} ({inputs['t']},{inputs['r']}):")
        for receiver, value in REFERENCE_TOTALS[key].items():
            lines.append(f"  {receiver:<6} {value:.5e}")
        lines.append(REFERENCE_NOTE)
    return "\n".join(lines) + "\n"


class _CountingOps:
    """Complex arithmetic helper that tallies every multiplication/division."""

    def __init__(self):
        self.multiplies = 0

    def mul(self, a, b):
        self.multiplies += 1
        return a * b

    def div(self, a, b):
        self.multiplies += 1
        return a / b


def instrumented_jdd(h_eff, y):
    """Joint ZF detection with an explicit multiply counter.

    Performs Gram matrix, Gauss-Jordan inversion, pseudo-inverse assembly,
    and the final matrix-vector product with plain scalar loops so the
    complex-multiplication counts per stage are exact:

    * Gram (H^H H):        (NT)^2 * NR
    * inversion:           (NT)^3  (in-place Gauss-Jordan, divisions counted)
    * G^{-1} H^H:          (NT)^2 * NR
    * apply to y:          NT * NR

    Returns (solution, stage counts dict). Totals match the audited budget
    2 N^3 T^2 R + N^3 T^3 + N^2 R T for square per-antenna blocks.
    """
    h = np.asarray(h_eff, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    n_rows, n_cols = h.shape
    counts = {}

    ops = _CountingOps()
    gram = np.zeros((n_cols, n_cols), dtype=np.complex128)
    for i in range(n_cols):
        for j in range(n_cols):
            acc = 0j
            for k in range(n_rows):
                acc += ops.mul(np.conj(h[k, i]), h[k, j])
            gram[i, j] = acc
    counts["gram"] = ops.multiplies

    ops = _CountingOps()
    inv = gram.copy()
    for k in range(n_cols):
        pivot = inv[k, k]
        inv[k, k] = ops.div(1.0, pivot)
        for j in range(n_cols):
            if j != k:
                inv[k, j] = ops.mul(inv[k, j], inv[k, k])
        for i in range(n_cols):
            if i == k:
                continue
            factor = inv[i, k]
            for j in range(n_cols):
                if j != k:
                    inv[i, j] -= ops.mul(factor, inv[k, j])
            inv[i, k] = -ops.mul(factor, inv[k, k])
    counts["invert"] = ops.multiplies

    ops = _CountingOps()
    pseudo = np.zeros((n_cols, n_rows), dtype=np.complex128)
    for i in range(n_cols):
        for j in range(n_rows):
            acc = 0j
            for k in range(n_cols):
                acc += ops.mul(inv[i, k], np.conj(h[j, k]))
            pseudo[i, j] = acc
    counts["pseudo"] = ops.multiplies

    ops = _CountingOps()
    x = np.zeros(n_cols, dtype=np.complex128)
    for i in range(n_cols):
        acc = 0j
        for k in range(n_rows):
            acc += ops.mul(pseudo[i, k], y[k])
        x[i] = acc
    counts["apply"] = ops.multiplies
    counts["total"] = sum(counts.values())
    return x, counts


def zf_jdd_formula(n, n_tx, n_rx):
    """The audited JDD budget: 2 N^3 T^2 R + N^3 T^3 + N^2 R T."""
    return 2 * n ** 3 * n_tx ** 2 * n_rx + n ** 3 * n_tx ** 3 + n ** 2 * n_rx * n_tx


def instrumented_matches_solver(h_eff, y, rtol=1e-8):
    """Cross-check: the counting path and the production solver agree numerically."""
    x_counted, _ = instrumented_jdd(h_eff, y)
    x_ref = hermitian_ls_solve(h_eff, y)
    scale = max(float(np.max(np.abs(x_ref))), 1.0)
    return bool(np.max(np.abs(x_counted - x_ref)) <= rtol * scale)
