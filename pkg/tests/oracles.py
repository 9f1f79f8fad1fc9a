"""Independent reference implementations used to check the package.

Everything here is deliberately written the slow, literal way (explicit
matrices, per-path sums, sign-combination enumeration) so the tests do
not share code paths with the implementation under test.
"""

from itertools import product

import numpy as np
from scipy.stats import norm

from dasis.montecarlo import noise_variance_for_snr


def delay_matrices(width: int) -> tuple[np.ndarray, np.ndarray]:
    """Literal slot-delay matrices: identity-with-zeroed-final-slot and its
    column-wise right cyclic shift (the strict one-slot shift)."""
    d0 = np.eye(width)
    d0[width - 1, width - 1] = 0.0
    d1 = np.roll(d0, 1, axis=1)
    return d0, d1


def masked_delay(block: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """M0 @ X @ D0 + M1 @ X @ D1 built from explicit masking matrices."""
    width = block.shape[1]
    d0, d1 = delay_matrices(width)
    m0 = np.diag((np.asarray(bits) == 0).astype(float))
    m1 = np.diag((np.asarray(bits) == 1).astype(float))
    return m1 @ block @ d1 + m0 @ block @ d0


def layer_matrix_form(block, entries, phases, bits) -> np.ndarray:
    """Literal per-layer map H @ Theta @ (M1 X D1 + M0 X D0)."""
    theta = np.diag(np.exp(1j * np.asarray(phases, dtype=float)))
    return np.asarray(entries) @ theta @ masked_delay(block, bits)


def path_sum_propagate(config, stack, padded: np.ndarray) -> np.ndarray:
    """Brute-force two-layer cascade as an explicit sum over delay paths."""
    assert config.num_layers == 2
    n = config.elements_per_layer
    width = padded.shape[1]
    h2 = stack.inter_layer[0]
    w = stack.combining
    u1 = np.exp(1j * config.phases[0])
    u2 = np.exp(1j * config.phases[1])
    b1 = config.delay_bits[0]
    b2 = config.delay_bits[1]
    out = np.zeros(width, dtype=complex)
    for m in range(n):
        for k in range(n):
            gain = w[m] * u1[m] * h2[m, k] * u2[k]
            delay = int(b1[m]) + int(b2[k])
            shifted = np.zeros(width, dtype=complex)
            shifted[delay:] = padded[k, : width - delay]
            out += gain * shifted
    return out


def analytic_bpsk_ber(g, snr_db: float, snr_def: str = "received") -> float:
    """Exact BER of the genie-timed BPSK slicer for an LTI response g.

    Averages the Gaussian tail over every sign pattern of the residual
    taps' real projections (ignores block-edge symbols, which see fewer
    interferers than the steady state).
    """
    g = np.asarray(g, dtype=complex)
    t_star = int(np.argmax(np.abs(g)))
    gs = g[t_star]
    peak2 = abs(gs) ** 2
    sigma2 = noise_variance_for_snr(snr_db, g, snr_def)
    resid = np.delete(g, t_star)
    projections = np.real(np.conj(gs) * resid)
    if sigma2 == 0:
        std = 0.0
    else:
        std = np.sqrt(peak2 * sigma2 / 2.0)
    total = 0.0
    for signs in product((-1.0, 1.0), repeat=projections.size):
        margin = peak2 + float(np.dot(signs, projections))
        if std == 0:
            total += 1.0 if margin < 0 else (0.5 if margin == 0 else 0.0)
        else:
            total += norm.sf(margin / std)
    return total / 2.0 ** projections.size


def predicted_crossing_snr(
    g, target_ber: float, snr_def: str, lo: float = -30.0, hi: float = 80.0
) -> float:
    """Bisect the analytic BER curve for the SNR reaching target_ber."""
    if analytic_bpsk_ber(g, hi, snr_def) > target_ber:
        return float("inf")
    for _ in range(60):
        mid = (lo + hi) / 2.0
        if analytic_bpsk_ber(g, mid, snr_def) > target_ber:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def crossing_from_curve(curve, target: float = 1e-3) -> float:
    """SNR where a measured curve crosses target (log-linear interpolation)."""
    pts = curve.points
    for a, b in zip(pts, pts[1:]):
        if a.ber >= target and 0 < b.ber < target:
            la, lb = np.log10(a.ber), np.log10(b.ber)
            return a.snr_db + (np.log10(target) - la) * (b.snr_db - a.snr_db) / (lb - la)
        if a.ber >= target and b.ber == 0:
            return b.snr_db
    if pts and pts[0].ber < target:
        return pts[0].snr_db
    return float("inf")


def q_function(x: float) -> float:
    return norm.sf(x)
