"""Low-complexity hybrid precoding on top of a beam-search result.

The analog stage steers one RF chain at each found path on both sides. The
digital stage then only has to handle the ``N_S x N_S`` baseband channel
``H_B = W_R^H H F_R``: whiten by ``R_n = W_R^H W_R``, take the SVD, and
water-fill the power over the resulting parallel streams.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .channel import steering_vector
from .errors import ContractViolation, DegenerateCombinerError

ZERO_GAIN_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class PrecodingSolution:
    f_r: np.ndarray
    w_r: np.ndarray
    f_b: np.ndarray
    w_b: np.ndarray
    q: np.ndarray
    effective_gains: np.ndarray = None

    @property
    def n_streams(self):
        return self.f_r.shape[1]


def analog_precoders(result, cb_bs, cb_ms):
    """Steering precoder ``F_R`` (N_A x N_S) and combiner ``W_R`` (M_A x N_S)."""
    return _steer_pairs(result.pairs, cb_bs, cb_ms)


def _steer_pairs(pairs, cb_bs, cb_ms):
    if not pairs:
        raise ContractViolation("analog precoding needs at least one found pair")
    f_r = np.column_stack([steering_vector(cb_bs.n_antennas, cb_bs.oversample_angle(j))
                           for _, j in pairs])
    w_r = np.column_stack([steering_vector(cb_ms.n_antennas, cb_ms.oversample_angle(i))
                           for i, _ in pairs])
    return f_r, w_r


def baseband_channel(h, f_r, w_r, power=None, rng=None, noiseless=True):
    """Equivalent baseband channel ``W_R^H H F_R``.

    With ``noiseless=False`` every entry gets an independent CN(0, 1/power)
    error, which is what correlating an orthogonal training sequence received
    at training SNR ``power`` leaves after normalizing by ``sqrt(power)``.
    """
    f_r = np.asarray(f_r)
    w_r = np.asarray(w_r)
    if f_r.shape[1] != w_r.shape[1]:
        raise ContractViolation(f"F_R has {f_r.shape[1]} columns but W_R has {w_r.shape[1]}")
    if f_r.shape[0] != h.n_bs_antennas or w_r.shape[0] != h.n_ms_antennas:
        raise ContractViolation("analog matrices do not match the channel dimensions")
    h_b = w_r.conj().T @ h.matrix @ f_r
    if not noiseless:
        if power is None or power <= 0:
            raise ContractViolation("noisy baseband estimation needs a positive training SNR")
        noise = rng.standard_normal(h_b.shape) + 1j * rng.standard_normal(h_b.shape)
        h_b = h_b + noise / np.sqrt(2.0 * power)
    return h_b


def waterfill(gains, total_power):
    """Water-filling ``q_i = max(0, mu - 1/gains_i**2)`` with ``sum(q) = total_power``.

    Solved exactly by growing the active set over gains in decreasing order.
    """
    gains = np.asarray(gains, dtype=float)
    if gains.ndim != 1 or gains.size == 0:
        raise ContractViolation("waterfill needs a non-empty 1-D gain vector")
    if np.any(gains <= 0):
        raise ContractViolation("waterfill needs strictly positive gains")
    if total_power <= 0:
        raise ContractViolation(f"total power must be positive, got {total_power}")

    order = np.argsort(-gains, kind="stable")
    floors = 1.0 / gains[order] ** 2
    n_active = 1
    while n_active < gains.size:
        mu = (total_power + math.fsum(floors[:n_active + 1])) / (n_active + 1)
        if mu <= floors[n_active]:
            break
        n_active += 1
    # mu - floor_i via floor differences; avoids cancellation when 1/g^2 >> power
    head = floors[:n_active]
    q_sorted = np.zeros_like(floors)
    q_sorted[:n_active] = [
        max(0.0, (total_power + math.fsum(head - f)) / n_active) for f in head
    ]
    q = np.empty_like(q_sorted)
    q[order] = q_sorted
    return q


def water_level(gains, q):
    """The common level ``mu`` of the active streams of a water-filling solution."""
    gains = np.asarray(gains, dtype=float)
    active = np.asarray(q) > 0
    return float(np.mean(np.asarray(q)[active] + 1.0 / gains[active] ** 2))


def _waterfill_nonneg(gains, total_power):
    """Water-fill over the strictly positive gains; zero gains get no power."""
    gains = np.asarray(gains, dtype=float)
    q = np.zeros_like(gains)
    if gains.size == 0:
        return q
    top = float(np.max(gains))
    usable = gains > ZERO_GAIN_RTOL * top if top > 0 else np.zeros(gains.shape, dtype=bool)
    if not usable.any():
        # nothing to transmit over; spread evenly so the power trace still holds
        q[:] = total_power / gains.size
        return q
    q[usable] = waterfill(gains[usable], total_power)
    return q


def digital_precoders(h_b, w_r, f_r, power):
    """Whitened SVD digital precoder/combiner plus water-filled powers.

    Returns ``(w_b, f_b, q, effective_gains)``. ``F_B = c V_B`` with one scalar
    ``c`` fixing ``||F_R F_B||_F^2 = N_S``; ``W_B = R_n^{-1/2} U_B`` is left
    unscaled since the rate does not depend on combiner scaling. The effective
    per-stream amplitude gains are ``c`` times the singular values.
    """
    h_b = numerics.as_matrix(h_b, "h_b")
    n_s = h_b.shape[0]
    if h_b.shape != (n_s, n_s):
        raise ContractViolation(f"baseband channel must be square, got {h_b.shape}")
    w_r = np.asarray(w_r)
    f_r = np.asarray(f_r)
    if w_r.shape[1] != n_s or f_r.shape[1] != n_s:
        raise ContractViolation("analog matrices must have N_S columns")

    r_n = w_r.conj().T @ w_r
    try:
        r_inv_half = numerics.hermitian_inv_sqrt(r_n)
    except ContractViolation as exc:
        raise DegenerateCombinerError(f"combiner Gram matrix R_n is degenerate: {exc}") from exc

    factors = numerics.svd(r_inv_half @ h_b)
    w_b = r_inv_half @ factors.u
    v = factors.v
    c = math.sqrt(n_s) / np.linalg.norm(f_r @ v)
    f_b = c * v
    effective = c * factors.singular_values
    q = _waterfill_nonneg(effective, power)
    return w_b, f_b, q, effective


def lc_hpc(h, result, cb_bs, cb_ms, power, rng=None, training_snr=None):
    """Full low-complexity hybrid precoding for one channel and search result.

    Pairs that reuse an MS index already taken by an earlier pair are dropped,
    since two identical combiner columns make ``R_n`` singular. Baseband
    estimation is noiseless unless ``training_snr`` is given.
    """
    kept, seen = [], set()
    for pair in result.pairs:
        if pair[0] not in seen:
            seen.add(pair[0])
            kept.append(pair)
    f_r, w_r = _steer_pairs(kept, cb_bs, cb_ms)
    noiseless = training_snr is None or math.isinf(training_snr)
    h_b = baseband_channel(h, f_r, w_r, training_snr, rng, noiseless=noiseless)
    w_b, f_b, q, gains = digital_precoders(h_b, w_r, f_r, power)
    return PrecodingSolution(f_r, w_r, f_b, w_b, q, gains)


def achievable_rate(h, sol, power=None):
    """``log2 det(I + K_W^{-1/2} H_E Q H_E^H K_W^{-H/2})`` in bits/s/Hz."""
    q = np.asarray(sol.q, dtype=float)
    if power is not None and abs(q.sum() - power) > 1e-8 * max(1.0, power):
        raise ContractViolation(f"power allocation sums to {q.sum()}, expected {power}")
    w_eff = sol.w_r @ sol.w_b
    h_e = w_eff.conj().T @ h.matrix @ sol.f_r @ sol.f_b
    k_w = w_eff.conj().T @ w_eff
    try:
        k_inv_half = numerics.hermitian_inv_sqrt(k_w)
    except ContractViolation as exc:
        raise DegenerateCombinerError(f"K_W is not positive definite: {exc}") from exc
    a = k_inv_half @ h_e
    inner = np.eye(a.shape[0]) + (a * q) @ a.conj().T
    return numerics.logdet_hermitian(inner) / math.log(2.0)


def rate_bound(h, n_s, power):
    """Rate of unconstrained SVD precoding over the ``n_s`` strongest modes."""
    if not 1 <= n_s <= min(h.n_ms_antennas, h.n_bs_antennas):
        raise ContractViolation(f"n_s={n_s} exceeds min(M_A, N_A)")
    sigma = numerics.svd(h.matrix).singular_values[:n_s]
    q = _waterfill_nonneg(sigma, power)
    return float(math.fsum(np.log2(1.0 + q * sigma**2)))
