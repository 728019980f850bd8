"""Sparse multipath mmWave channel, ULA steering vectors and scalar measurements.

Angles are handled in the cosine domain: a path with physical angle ``theta``
is steered by ``g(N, cos(theta))``. The BS (transmit) side carries the AoD
cosine ``psi``, the MS (receive) side the AoA cosine ``omega``, and the channel
is ``H = sqrt(N_A M_A) * sum_l gain_l g(M_A, omega_l) g(N_A, psi_l)^H``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation


def steering_vector(n, omega):
    """Unit-norm ULA response ``exp(j*pi*i*omega)/sqrt(n)`` for i = 0..n-1."""
    if n < 1:
        raise ContractViolation(f"steering_vector needs n >= 1, got {n}")
    return np.exp(1j * np.pi * np.arange(n) * omega) / np.sqrt(n)


def steering_matrix(n, omegas):
    """Columns are ``steering_vector(n, w)`` for each ``w`` in ``omegas``."""
    omegas = np.asarray(omegas, dtype=float)
    return np.exp(1j * np.pi * np.outer(np.arange(n), omegas)) / np.sqrt(n)


@dataclass(frozen=True)
class PathComponent:
    gain: complex
    aod_cos: float
    aoa_cos: float
    aod_phys: float
    aoa_phys: float

    @classmethod
    def from_physical(cls, gain, aod_phys, aoa_phys):
        return cls(complex(gain), float(np.cos(aod_phys)), float(np.cos(aoa_phys)),
                   float(aod_phys), float(aoa_phys))

    @classmethod
    def from_cosines(cls, gain, aod_cos, aoa_cos):
        """Build a path from cosine angles; physical angles land in [0, pi]."""
        if abs(aod_cos) > 1 or abs(aoa_cos) > 1:
            raise ContractViolation("cosine angles must lie in [-1, 1]")
        aod_phys = float(np.arccos(aod_cos))
        aoa_phys = float(np.arccos(aoa_cos))
        return cls(complex(gain), float(aod_cos), float(aoa_cos), aod_phys, aoa_phys)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    paths: tuple
    n_bs_antennas: int
    n_ms_antennas: int
    matrix: np.ndarray

    @property
    def shape(self):
        return self.matrix.shape


def _assemble(paths, n_a, m_a):
    gains = np.array([p.gain for p in paths], dtype=np.complex128)
    a_ms = steering_matrix(m_a, [p.aoa_cos for p in paths])
    a_bs = steering_matrix(n_a, [p.aod_cos for p in paths])
    return np.sqrt(n_a * m_a) * (a_ms * gains) @ a_bs.conj().T


def channel_from_paths(paths, n_a, m_a):
    """Deterministic channel from an explicit path list (test hook)."""
    paths = tuple(paths)
    if not paths:
        raise ContractViolation("a channel needs at least one path")
    if n_a < 1 or m_a < 1:
        raise ContractViolation("antenna counts must be >= 1")
    matrix = _assemble(paths, n_a, m_a)
    matrix.setflags(write=False)
    return ChannelRealization(paths, int(n_a), int(m_a), matrix)


def generate_channel(n_a, m_a, l, rng):
    """Draw ``l`` paths with CN(0, 1/l) gains and uniform [0, 2*pi) physical angles."""
    if l < 1:
        raise ContractViolation(f"path count must be >= 1, got {l}")
    gains = (rng.standard_normal(l) + 1j * rng.standard_normal(l)) * np.sqrt(0.5 / l)
    aod = rng.uniform(0.0, 2 * np.pi, l)
    aoa = rng.uniform(0.0, 2 * np.pi, l)
    paths = [PathComponent.from_physical(g, t, p) for g, t, p in zip(gains, aod, aoa)]
    return channel_from_paths(paths, n_a, m_a)


def complex_noise(rng, scale=1.0):
    """One CN(0, scale**2) sample."""
    re, im = rng.standard_normal(2)
    return scale * (re + 1j * im) / np.sqrt(2.0)


def _check_vectors(h, w_ms, w_bs):
    w_ms = np.asarray(w_ms, dtype=np.complex128)
    w_bs = np.asarray(w_bs, dtype=np.complex128)
    if w_ms.shape != (h.n_ms_antennas,) or w_bs.shape != (h.n_bs_antennas,):
        raise ContractViolation(
            f"combiner/precoder lengths {w_ms.shape}/{w_bs.shape} do not match "
            f"channel {h.n_ms_antennas}x{h.n_bs_antennas}"
        )
    return w_ms, w_bs


def measure(h, w_ms, w_bs, power, rng=None, noiseless=False):
    """Combined scalar observation ``w_ms^H (sqrt(P) H w_bs + n)``.

    The noise is white with unit variance per antenna, so the combined noise
    is CN(0, ||w_ms||^2).
    """
    if power < 0:
        raise ContractViolation(f"power must be >= 0, got {power}")
    w_ms, w_bs = _check_vectors(h, w_ms, w_bs)
    y = np.sqrt(power) * np.vdot(w_ms, h.matrix @ w_bs)
    if not noiseless:
        y += complex_noise(rng, float(np.linalg.norm(w_ms)))
    return complex(y)
