"""Iterative radix-2 FFT plus a naive DFT used as an independent check."""

from __future__ import annotations

import numpy as np


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def fft(x) -> np.ndarray:
    """Unnormalized forward DFT, X[k] = sum_n x[n] exp(-2j*pi*k*n/N).

    Power-of-two lengths use the in-house decimation-in-time transform; other
    lengths fall back to ``numpy.fft.fft``.
    """
    a = np.asarray(x, dtype=complex)
    n = a.shape[-1]
    if not is_power_of_two(n):
        return np.fft.fft(a)
    a = a[..., _bit_reverse_indices(n)].copy()
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = a.reshape(*a.shape[:-1], n // size, size)
        even = blocks[..., :half].copy()
        odd = blocks[..., half:] * tw
        blocks[..., :half] = even + odd
        blocks[..., half:] = even - odd
        a = blocks.reshape(*a.shape[:-1], n)
        size *= 2
    return a


def naive_dft(x) -> np.ndarray:
    """O(N^2) transform straight from the definition."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    k = np.arange(n)
    # reduce k*n mod N before scaling to keep the phase argument small
    phase = np.outer(k, k) % n
    return np.exp(-2j * np.pi * phase / n) @ x
