"""JOINT hierarchical analog codebook (joint sub-array + deactivation).

Layer ``k`` (0..S, ``N = M**S``) holds ``M**k`` constant-amplitude codewords;
codeword ``n`` (1-based) covers the cosine interval
``[-1 + 2(n-1)/M**k, -1 + 2n/M**k]``. Layer ``S`` is the set of basis beams and
an extra over-sampling layer holds ``K*N`` steering vectors on a ``2/(K*N)``
grid.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import steering_matrix, steering_vector
from .errors import ContractViolation, UnsupportedConfiguration

OVERSAMPLE = -1


def integer_log(n, base):
    """Exact ``log_base(n)`` for integer powers, else None."""
    if n < 1 or base < 2:
        return None
    s = 0
    while n % base == 0:
        n //= base
        s += 1
    return s if n == 1 else None


def grid_angle(index, n, k=1):
    """Cosine angle of the ``index``-th (1-based) point of a ``k*n`` uniform grid."""
    return -1.0 + (2.0 * index - 1.0) / (k * n)


@dataclass(frozen=True, eq=False)
class Codeword:
    weights: np.ndarray
    layer: int
    position: int
    coverage: tuple

    @property
    def n_active(self):
        return int(np.count_nonzero(np.abs(self.weights) > 1e-15))


@dataclass(frozen=True, eq=False)
class Codebook:
    n_antennas: int
    hierarchical_factor: int
    layers: tuple
    oversample_layer: tuple
    oversample_factor: int

    @property
    def n_layers(self):
        """S, the index of the basis-beam layer."""
        return len(self.layers) - 1

    def codeword(self, layer, position):
        if layer == OVERSAMPLE:
            return self._get(self.oversample_layer, position, "oversample")
        if not 0 <= layer <= self.n_layers:
            raise ContractViolation(f"layer {layer} outside 0..{self.n_layers}")
        return self._get(self.layers[layer], position, f"layer {layer}")

    @staticmethod
    def _get(seq, position, what):
        if not 1 <= position <= len(seq):
            raise ContractViolation(f"position {position} outside 1..{len(seq)} in {what}")
        return seq[position - 1]

    def weights(self, layer, position):
        return self.codeword(layer, position).weights

    def oversample_angle(self, index):
        return grid_angle(index, self.n_antennas, self.oversample_factor)

    def all_codewords(self):
        for layer in self.layers:
            yield from layer
        yield from self.oversample_layer


def _coverage(layer, position, m):
    width = 2.0 / m**layer
    return (-1.0 + (position - 1) * width, -1.0 + position * width)


def _first_wide_codeword(n, ell):
    """First codeword of layer ``S - ell`` from sub-arrays with deactivation (M = 2)."""
    n_sub = 2 ** ((ell + 1) // 2)
    sub_len = n // n_sub
    n_active = n_sub // 2 if ell % 2 else n_sub
    w = np.zeros(n, dtype=np.complex128)
    for m in range(1, n_active + 1):
        w[(m - 1) * sub_len:m * sub_len] = (
            np.exp(1j * m * np.pi) * steering_vector(sub_len, -1.0 + (2 * m - 1) / sub_len)
        )
    return w


def _freeze(w):
    w = np.asarray(w, dtype=np.complex128)
    w.setflags(write=False)
    return w


@lru_cache(maxsize=32)
def build_codebook(n, m=2, k_oversample=2):
    """Build the JOINT codebook for an ``n``-antenna ULA.

    Only ``m == 2`` is supported. Built codebooks are cached and immutable.
    """
    s = integer_log(n, m) if m >= 2 else None
    if m != 2:
        raise UnsupportedConfiguration(f"JOINT generation is defined for M=2 only, got M={m}")
    if s is None:
        raise UnsupportedConfiguration(f"antenna count {n} is not a power of {m}")
    if k_oversample < 1:
        raise ContractViolation(f"oversampling factor must be >= 1, got {k_oversample}")

    layers = []
    for k in range(s + 1):
        ell = s - k
        count = m**k
        if ell == 0:
            ws = [steering_vector(n, grid_angle(p, n)) for p in range(1, count + 1)]
        else:
            base = _first_wide_codeword(n, ell)
            ws = []
            for p in range(1, count + 1):
                # shift by one coverage width per position
                w = base * np.sqrt(n) * steering_vector(n, 2.0 * (p - 1) / count)
                ws.append(w / np.linalg.norm(w))
        layers.append(tuple(
            Codeword(_freeze(w), k, p, _coverage(k, p, m)) for p, w in enumerate(ws, start=1)
        ))

    kn = k_oversample * n
    over = tuple(
        Codeword(_freeze(steering_vector(n, grid_angle(i, n, k_oversample))), OVERSAMPLE, i,
                 (-1.0 + 2.0 * (i - 1) / kn, -1.0 + 2.0 * i / kn))
        for i in range(1, kn + 1)
    )
    return Codebook(n, m, tuple(layers), over, k_oversample)


def beam_gain(w, omega):
    """Amplitude gain ``|w^H g(N, omega)|``; ``omega`` may be an array."""
    weights = w.weights if isinstance(w, Codeword) else np.asarray(w)
    omegas = np.atleast_1d(np.asarray(omega, dtype=float))
    gains = np.abs(weights.conj() @ steering_matrix(len(weights), omegas))
    return float(gains[0]) if np.ndim(omega) == 0 else gains


def children(cb, layer, position):
    """Positions of the ``M`` children of ``(layer, position)`` in ``layer + 1``."""
    if not 0 <= layer < cb.n_layers:
        raise ContractViolation(f"layer {layer} has no children (S = {cb.n_layers})")
    if not 1 <= position <= cb.hierarchical_factor**layer:
        raise ContractViolation(f"position {position} outside layer {layer}")
    m = cb.hierarchical_factor
    return list(range((position - 1) * m + 1, position * m + 1))


def oversample_children(cb, position):
    """Over-sampling indices inside basis beam ``position`` of layer S."""
    if not 1 <= position <= cb.n_antennas:
        raise ContractViolation(f"basis position {position} outside 1..{cb.n_antennas}")
    k = cb.oversample_factor
    return list(range((position - 1) * k + 1, position * k + 1))
