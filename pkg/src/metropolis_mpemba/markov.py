"""Boltzmann weights, adjacency graphs and Metropolis rate matrices.

Conventions: ``R[i, j]`` is the rate of jumping from state ``j`` to state
``i``, so every column of a generator sums to zero and probability vectors
evolve as ``dp/dt = R p``.  Energies are in units with ``k_B = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .exceptions import DisconnectedGraphError

__all__ = [
    "EnergySpectrum",
    "BoltzmannDistribution",
    "AdjacencyGraph",
    "RateMatrix",
    "as_spectrum",
    "check_beta",
    "boltzmann",
    "build_metropolis",
    "check_detailed_balance",
    "check_generator",
]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class EnergySpectrum:
    """Energy levels of an ``n``-state system (unsorted, repeats allowed)."""

    energies: np.ndarray

    def __post_init__(self):
        e = np.array(self.energies, dtype=float).ravel()
        if e.size < 2:
            raise ValueError(f"need at least 2 energy levels, got {e.size}")
        if not np.all(np.isfinite(e)):
            raise ValueError("energies must be finite")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)

    @property
    def n(self) -> int:
        return self.energies.size

    def __len__(self):
        return self.n

    def shifted(self, c: float) -> "EnergySpectrum":
        return EnergySpectrum(self.energies + c)

    def permuted(self, perm: Sequence[int]) -> "EnergySpectrum":
        """Spectrum whose level ``i`` is the old level ``perm[i]`` (0-based)."""
        return EnergySpectrum(self.energies[np.asarray(perm)])


SpectrumLike = Union[EnergySpectrum, Sequence[float], np.ndarray]


def as_spectrum(spectrum: SpectrumLike) -> EnergySpectrum:
    if isinstance(spectrum, EnergySpectrum):
        return spectrum
    return EnergySpectrum(spectrum)


def check_beta(beta: float) -> float:
    """Validate an inverse temperature; ``beta = 0`` (infinite T) is allowed."""
    b = float(beta)
    if not np.isfinite(b):
        raise ValueError(f"inverse temperature must be finite, got {beta!r}")
    if b < 0:
        raise ValueError(f"negative inverse temperature {beta!r} is not supported")
    return b


@dataclass(frozen=True)
class BoltzmannDistribution:
    """Normalized Boltzmann weights together with their logarithms.

    ``log_weights`` are the unnormalized ``-beta * E_i`` and ``partition_log``
    is ``log Z``, so ``weights == exp(log_weights - partition_log)``.
    """

    weights: np.ndarray
    log_weights: np.ndarray
    partition_log: float

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def log_normalized(self) -> np.ndarray:
        return self.log_weights - self.partition_log


def boltzmann(spectrum: SpectrumLike, beta: float) -> BoltzmannDistribution:
    """Boltzmann distribution ``pi_i = exp(-beta E_i) / Z``.

    The partition function is evaluated with a max-shifted log-sum-exp, so
    exponents of any magnitude are safe.  Weights that are smaller than the
    smallest positive double relative to the largest one underflow to zero;
    ``log_weights`` stays exact in that case.
    """
    spectrum = as_spectrum(spectrum)
    beta = check_beta(beta)
    lw = -beta * spectrum.energies
    logz = float(logsumexp(lw))
    w = np.exp(lw - logz)
    # Re-normalize the rounded weights so the sum is 1 to the last ulp or so.
    w /= w.sum()
    return BoltzmannDistribution(_frozen(w), _frozen(lw), logz)


@dataclass(frozen=True)
class AdjacencyGraph:
    """Undirected graph of allowed transitions (no self-loops).

    ``adjacency`` is a symmetric boolean ``n x n`` matrix.  Use
    :meth:`complete` or :meth:`from_blocked_edges` for the common cases.
    Connectivity is not enforced here; :func:`build_metropolis` rejects
    disconnected graphs.
    """

    adjacency: np.ndarray

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a)):
            raise ValueError("adjacency must not contain self-loops")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def complete(cls, n: int) -> "AdjacencyGraph":
        return cls(~np.eye(n, dtype=bool))

    @classmethod
    def from_blocked_edges(
        cls, n: int, blocked: Iterable[Sequence[int]], one_based: bool = True
    ) -> "AdjacencyGraph":
        """Complete graph on ``n`` states with the listed edges removed."""
        a = ~np.eye(n, dtype=bool)
        off = 1 if one_based else 0
        for pair in blocked:
            i, j = (int(x) - off for x in pair)
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge {tuple(pair)} out of range for n={n}")
            if i == j:
                raise ValueError(f"edge {tuple(pair)} is a self-pair")
            a[i, j] = a[j, i] = False
        return cls(a)

    @property
    def is_complete(self) -> bool:
        return bool(np.all(self.adjacency | np.eye(self.n, dtype=bool)))

    @property
    def is_connected(self) -> bool:
        ncomp, _ = connected_components(self.adjacency, directed=False)
        return ncomp == 1


@dataclass(frozen=True)
class RateMatrix:
    """Generator of a continuous-time jump process on ``graph``."""

    entries: np.ndarray
    graph: AdjacencyGraph

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def _entries(R) -> np.ndarray:
    return np.asarray(getattr(R, "entries", R), dtype=float)


def _weights(pi) -> np.ndarray:
    return np.asarray(getattr(pi, "weights", pi), dtype=float)


def build_metropolis(
    spectrum: SpectrumLike, beta: float, graph: AdjacencyGraph | None = None
) -> RateMatrix:
    """Metropolis generator restricted to ``graph`` (complete if omitted).

    Off-diagonal allowed entries are ``min(1, exp(-beta (E_i - E_j)))`` and
    each diagonal entry is minus the total escape rate of its state.
    """
    spectrum = as_spectrum(spectrum)
    beta = check_beta(beta)
    n = spectrum.n
    if graph is None:
        graph = AdjacencyGraph.complete(n)
    if graph.n != n:
        raise ValueError(f"graph has {graph.n} states but spectrum has {n}")
    if not graph.is_connected:
        raise DisconnectedGraphError("adjacency graph is not connected")

    e = spectrum.energies
    uphill = np.maximum(e[:, None] - e[None, :], 0.0)
    R = np.where(graph.adjacency, np.exp(-beta * uphill), 0.0)
    np.fill_diagonal(R, 0.0)
    np.fill_diagonal(R, -R.sum(axis=0))
    return RateMatrix(_frozen(R), graph)


def check_detailed_balance(R, pi) -> float:
    """Largest detailed-balance violation ``max |R_ij pi_j - R_ji pi_i|``."""
    R = _entries(R)
    w = _weights(pi)
    if R.shape != (w.size, w.size):
        raise ValueError("rate matrix and distribution sizes differ")
    flux = R * w[None, :]
    return float(np.max(np.abs(flux - flux.T)))


def check_generator(R) -> float:
    """Largest absolute column sum; zero for a probability-conserving generator."""
    return float(np.max(np.abs(_entries(R).sum(axis=0))))
