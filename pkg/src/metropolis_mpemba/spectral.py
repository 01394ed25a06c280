"""Closed-form eigensystem of Metropolis dynamics on the complete graph.

Sort the states by decreasing stationary weight, ``pi[r[0]] >= pi[r[1]] >= ...``
and let ``Z[k]`` be the tail sum of the sorted weights from position ``k``
on.  In that sorted basis the right eigenvectors of the Metropolis generator
are

    v_1 = pi
    v_k = (0, ..., 0, -Z[k], pi[r[k]], ..., pi[r[n]])     (k - 2 leading zeros)

with eigenvalues ``0`` and ``-(Z[k-1] / pi[r[k-1]] + k - 2)`` (1-based), already
ordered by absolute value.  The routines below build this system and map it
back to the original state labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .markov import (
    BoltzmannDistribution,
    SpectrumLike,
    as_spectrum,
    boltzmann,
    _entries,
)

__all__ = [
    "OrderingPermutation",
    "SpectralDecomposition",
    "order_states",
    "tail_sums",
    "closed_form_spectrum",
    "residual",
    "eigenpair_residuals",
]

CLOSED_FORM = "closed-form"
NUMERIC = "numeric"


@dataclass(frozen=True)
class OrderingPermutation:
    """0-based permutation ``r`` with ``r[k]`` the state of ``k``-th largest weight.

    ``inverse[r[k]] == k``.
    """

    r: np.ndarray
    inverse: np.ndarray

    @property
    def one_based(self) -> tuple[int, ...]:
        return tuple(int(i) + 1 for i in self.r)

    def matrix(self) -> np.ndarray:
        """Permutation matrix ``S`` with ``S e_k = e_{r[k]}``."""
        n = self.r.size
        S = np.zeros((n, n))
        S[self.r, np.arange(n)] = 1.0
        return S


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues sorted by ascending magnitude and matching right eigenvectors.

    ``eigenvectors[:, k]`` belongs to ``eigenvalues[k]`` and is expressed in the
    original state basis.  ``source`` is ``"closed-form"`` or ``"numeric"``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source: str

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def vector(self, k: int) -> np.ndarray:
        """Eigenvector ``v_k`` with the 1-based index used in the text."""
        return self.eigenvectors[:, k - 1]

    def value(self, k: int) -> float:
        return float(self.eigenvalues[k - 1])


def order_states(pi: BoltzmannDistribution | np.ndarray) -> OrderingPermutation:
    """Sort states by decreasing weight; ties keep ascending index order."""
    w = np.asarray(getattr(pi, "weights", pi), dtype=float)
    # Sorting log-weights keeps the order exact even when weights underflow.
    key = getattr(pi, "log_weights", None)
    key = w if key is None else np.asarray(key)
    r = np.argsort(-key, kind="stable")
    inv = np.empty_like(r)
    inv[r] = np.arange(r.size)
    return OrderingPermutation(r, inv)


def tail_sums(pi: BoltzmannDistribution | np.ndarray, r: OrderingPermutation) -> np.ndarray:
    """``Z[k] = sum(pi[r[l]] for l >= k)`` (0-based ``k``).

    Accumulated from the smallest weight upward.
    """
    w = np.asarray(getattr(pi, "weights", pi), dtype=float)
    if w.size != r.r.size:
        raise ValueError("distribution and permutation sizes differ")
    return np.cumsum(w[r.r][::-1])[::-1]


def _relative_tails(log_sorted: np.ndarray) -> np.ndarray:
    """``Z[k] / pi[r[k]]`` computed from sorted log-weights without underflow."""
    n = log_sorted.size
    out = np.empty(n)
    for k in range(n):
        out[k] = np.sum(np.exp(log_sorted[k:][::-1] - log_sorted[k]))
    return out


def closed_form_spectrum(spectrum: SpectrumLike, beta: float) -> SpectralDecomposition:
    """Exact eigensystem of the complete-graph Metropolis generator.

    Eigenvectors use normalized weights and are returned unscaled, exactly in
    the form ``(-Z_k, pi_{r_k}, ..., pi_{r_n})`` above, placed back at the
    original state positions.
    """
    spectrum = as_spectrum(spectrum)
    pi = boltzmann(spectrum, beta)
    n = spectrum.n
    perm = order_states(pi)
    r = perm.r
    w_sorted = pi.weights[r]
    Z = tail_sums(pi, perm)
    ratio = _relative_tails(pi.log_weights[r])

    lam = np.zeros(n)
    V_sorted = np.zeros((n, n))
    V_sorted[:, 0] = w_sorted
    for k in range(1, n):
        # 0-based column k is v_{k+1}: -Z at sorted slot k-1, weights from slot k.
        lam[k] = -(ratio[k - 1] + k - 1)
        V_sorted[k - 1, k] = -Z[k]
        V_sorted[k:, k] = w_sorted[k:]

    V = np.empty_like(V_sorted)
    V[r, :] = V_sorted
    lam.setflags(write=False)
    V.setflags(write=False)
    return SpectralDecomposition(lam, V, CLOSED_FORM)


def eigenpair_residuals(R, dec: SpectralDecomposition) -> np.ndarray:
    """Per-pair ``|R v_k - lam_k v_k|_inf / (|R|_inf |v_k|_inf)``."""
    A = _entries(R)
    V = np.asarray(dec.eigenvectors)
    lam = np.asarray(dec.eigenvalues)
    if A.shape[0] != V.shape[0]:
        raise ValueError("matrix and eigenvector sizes differ")
    norm_R = np.max(np.abs(A).sum(axis=1))
    err = np.max(np.abs(A @ V - V * lam[None, :]), axis=0)
    scale = norm_R * np.max(np.abs(V), axis=0)
    return err / scale


def residual(R, dec: SpectralDecomposition) -> float:
    """Worst relative eigen-residual over all pairs of ``dec``."""
    return float(np.max(eigenpair_residuals(R, dec)))
