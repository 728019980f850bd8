"""Beam search over the BS/MS angle plane.

Two searches are provided: the brute-force sequential search over the full
over-sampled grid (used as an oracle) and the hierarchical multi-beam search,
which finds paths one at a time and subtracts the contribution of paths it
has already found from every later measurement.

All measurements follow ``y = w_ms^H (sqrt(P) H w_bs + n) - w_ms^H H_fd w_bs``.
"""

from dataclasses import dataclass

import numpy as np

from .channel import complex_noise, measure, steering_matrix, steering_vector
from .codebook import OVERSAMPLE, children, grid_angle, oversample_children
from .errors import ContractViolation


@dataclass(frozen=True, eq=False)
class BeamSearchResult:
    """Found (MS, BS) over-sampling index pairs and their measured gains.

    ``found_channel`` is ``sum_l gains[l] g(M_A, w(I_l)) g(N_A, w(J_l))^H`` and
    is expressed in units of ``sqrt(P) H``.
    """

    pairs: tuple
    gains: tuple
    found_channel: np.ndarray
    measurements_used: int
    oversample_factor: int
    duplicates: int = 0

    @property
    def n_found(self):
        return len(self.pairs)

    @property
    def n_ms_antennas(self):
        return self.found_channel.shape[0]

    @property
    def n_bs_antennas(self):
        return self.found_channel.shape[1]

    def angles(self):
        """``(aod_cos, aoa_cos)`` estimate per found pair."""
        k = self.oversample_factor
        return [(grid_angle(j, self.n_bs_antennas, k), grid_angle(i, self.n_ms_antennas, k))
                for i, j in self.pairs]


@dataclass
class SearchStage:
    """One block of measurements in a hierarchical search trace."""

    path: int
    phase: str
    ms_layer: int
    bs_layer: int
    candidates: list
    magnitudes: list
    winner: tuple


def _found_matrix(pairs, gains, m_a, n_a, k):
    if not pairs:
        return np.zeros((m_a, n_a), dtype=np.complex128)
    a_ms = steering_matrix(m_a, [grid_angle(i, m_a, k) for i, _ in pairs])
    a_bs = steering_matrix(n_a, [grid_angle(j, n_a, k) for _, j in pairs])
    return (a_ms * np.asarray(gains, dtype=np.complex128)) @ a_bs.conj().T


def _make_result(pairs, gains, m_a, n_a, k, used, duplicates=0):
    found = _found_matrix(pairs, gains, m_a, n_a, k)
    found.setflags(write=False)
    return BeamSearchResult(tuple(pairs), tuple(complex(g) for g in gains), found,
                            int(used), int(k), int(duplicates))


def subtracted_measure(h, w_ms, w_bs, found, power, rng=None, noiseless=False):
    """Measurement with the already-found channel response removed."""
    found = np.asarray(found)
    if found.shape != h.matrix.shape:
        raise ContractViolation(f"found channel shape {found.shape} != channel {h.matrix.shape}")
    y = measure(h, w_ms, w_bs, power, rng, noiseless)
    return y - complex(np.vdot(np.asarray(w_ms), found @ np.asarray(w_bs)))


def sequential_search(h, k_oversample, n_s, power, rng=None, noiseless=False):
    """Measure every grid pair and keep the ``n_s`` strongest separated peaks.

    After a peak is taken, every pair within ``K - 1`` grid steps of it on both
    axes (circularly, since ``g`` has period 2) is excluded so one path cannot
    occupy two slots.
    """
    if n_s < 1:
        raise ContractViolation(f"n_s must be >= 1, got {n_s}")
    k = k_oversample
    m_a, n_a = h.n_ms_antennas, h.n_bs_antennas
    g_ms = steering_matrix(m_a, [grid_angle(i, m_a, k) for i in range(1, k * m_a + 1)])
    g_bs = steering_matrix(n_a, [grid_angle(j, n_a, k) for j in range(1, k * n_a + 1)])
    grid = np.sqrt(power) * (g_ms.conj().T @ h.matrix @ g_bs)
    if not noiseless:
        noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        grid = grid + noise / np.sqrt(2.0)

    mags = np.abs(grid)
    available = np.ones(grid.shape, dtype=bool)
    rows = np.arange(grid.shape[0])[:, None]
    cols = np.arange(grid.shape[1])[None, :]
    pairs, gains = [], []
    for _ in range(n_s):
        if not available.any():
            break
        flat = int(np.argmax(np.where(available, mags, -1.0)))
        r, c = divmod(flat, grid.shape[1])
        pairs.append((r + 1, c + 1))
        gains.append(grid[r, c])
        dr = np.minimum(np.abs(rows - r), grid.shape[0] - np.abs(rows - r))
        dc = np.minimum(np.abs(cols - c), grid.shape[1] - np.abs(cols - c))
        available &= ~((dr <= k - 1) & (dc <= k - 1))
    return _make_result(pairs, gains, m_a, n_a, k, grid.size)


class _Prober:
    """Counts measurements against the residual ``sqrt(P) H - H_fd``."""

    def __init__(self, h, power, rng, noiseless):
        self.scaled = np.sqrt(power) * h.matrix
        self.found = np.zeros_like(self.scaled)
        self.residual = self.scaled.copy()
        self.rng = rng
        self.noiseless = noiseless
        self.count = 0

    def __call__(self, w_ms, w_bs):
        self.count += 1
        y = np.vdot(w_ms, self.residual @ w_bs)
        if not self.noiseless:
            y += complex_noise(self.rng, float(np.linalg.norm(w_ms)))
        return complex(y)

    def add_found(self, update):
        self.found = self.found + update
        self.residual = self.scaled - self.found


def _best(values):
    mags = [abs(v) for v in values]
    return int(np.argmax(mags)), mags


def hierarchical_search(h, cb_bs, cb_ms, n_s, i_ly, power, rng=None, noiseless=False, trace=None):
    """Hierarchical multi-beam search.

    Each of the ``n_s`` iterations does an exhaustive search over the
    ``M**i_ly`` x ``M**i_ly`` codeword pairs of the initial layer, refines layer
    by layer (MS children against the fixed BS codeword, then BS children
    against the chosen MS child), and finishes with a ``K`` x ``K`` search in
    the over-sampling layer. When the two arrays differ in size the side that
    reaches its own last layer keeps its codeword while the other continues.

    A pair found twice is stored once with the gains added, so
    ``found_channel`` stays consistent with ``pairs``; ``duplicates`` counts
    such events. If ``trace`` is a list, one ``SearchStage`` per block of
    measurements is appended to it.
    """
    s_bs, s_ms = cb_bs.n_layers, cb_ms.n_layers
    if n_s < 1:
        raise ContractViolation(f"n_s must be >= 1, got {n_s}")
    if not 1 <= i_ly <= min(s_bs, s_ms):
        raise ContractViolation(f"i_ly={i_ly} must lie in 1..{min(s_bs, s_ms)}")
    if cb_bs.n_antennas != h.n_bs_antennas or cb_ms.n_antennas != h.n_ms_antennas:
        raise ContractViolation("codebook sizes do not match the channel")
    if cb_bs.oversample_factor != cb_ms.oversample_factor:
        raise ContractViolation("BS and MS codebooks must share the oversampling factor")
    k = cb_bs.oversample_factor
    m = cb_bs.hierarchical_factor
    s_max = max(s_bs, s_ms)
    probe = _Prober(h, power, rng, noiseless)

    pairs, gains = [], []
    duplicates = 0
    for path in range(1, n_s + 1):
        # initial exhaustive layer search
        count = m**i_ly
        cands = [(a, b) for a in range(1, count + 1) for b in range(1, count + 1)]
        ys = [probe(cb_ms.weights(i_ly, a), cb_bs.weights(i_ly, b)) for a, b in cands]
        best, mags = _best(ys)
        ms_pos, bs_pos = cands[best]
        ms_layer = bs_layer = i_ly
        if trace is not None:
            trace.append(SearchStage(path, "initial", i_ly, i_ly, cands, mags, cands[best]))

        for stage in range(i_ly + 1, s_max + 1):
            if stage <= s_ms:
                w_bs = cb_bs.weights(bs_layer, bs_pos)
                kids = children(cb_ms, ms_layer, ms_pos)
                ys = [probe(cb_ms.weights(stage, c), w_bs) for c in kids]
                best, mags = _best(ys)
                ms_pos, ms_layer = kids[best], stage
                if trace is not None:
                    trace.append(SearchStage(path, "refine-ms", stage, bs_layer,
                                             [(c, bs_pos) for c in kids], mags, (ms_pos, bs_pos)))
            if stage <= s_bs:
                w_ms = cb_ms.weights(ms_layer, ms_pos)
                kids = children(cb_bs, bs_layer, bs_pos)
                ys = [probe(w_ms, cb_bs.weights(stage, c)) for c in kids]
                best, mags = _best(ys)
                bs_pos, bs_layer = kids[best], stage
                if trace is not None:
                    trace.append(SearchStage(path, "refine-bs", ms_layer, stage,
                                             [(ms_pos, c) for c in kids], mags, (ms_pos, bs_pos)))

        cands = [(a, b) for a in oversample_children(cb_ms, ms_pos)
                 for b in oversample_children(cb_bs, bs_pos)]
        ys = [probe(cb_ms.weights(OVERSAMPLE, a), cb_bs.weights(OVERSAMPLE, b)) for a, b in cands]
        best, mags = _best(ys)
        pair, beta = cands[best], ys[best]
        if trace is not None:
            trace.append(SearchStage(path, "oversample", OVERSAMPLE, OVERSAMPLE, cands, mags, pair))

        if pair in pairs:
            duplicates += 1
            gains[pairs.index(pair)] += beta
        else:
            pairs.append(pair)
            gains.append(beta)
        update = beta * np.outer(steering_vector(h.n_ms_antennas, cb_ms.oversample_angle(pair[0])),
                                 steering_vector(h.n_bs_antennas, cb_bs.oversample_angle(pair[1])).conj())
        probe.add_found(update)

    return _make_result(pairs, gains, h.n_ms_antennas, h.n_bs_antennas, k, probe.count, duplicates)
