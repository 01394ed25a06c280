"""Independent numeric eigensolver for reversible rate matrices.

A generator obeying detailed balance with respect to ``pi`` is similar to the
symmetric matrix ``S = D^{-1/2} R D^{1/2}`` with ``D = diag(pi)``.  ``S`` is
diagonalized by cyclic Jacobi rotations and the eigenvectors are mapped back
with ``v = D^{1/2} u``.  Nothing here uses the closed-form spectrum, so it can
serve as an oracle for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, DetailedBalanceError
from .markov import BoltzmannDistribution, _entries, check_detailed_balance
from .spectral import NUMERIC, SpectralDecomposition

__all__ = [
    "SymmetrizedGenerator",
    "SpectrumMatchReport",
    "symmetrize",
    "jacobi_eigen",
    "numeric_spectrum",
    "match_spectra",
    "sign_fix",
]

DETAILED_BALANCE_TOL = 1e-10
OFFDIAG_TOL = 1e-14
MAX_SWEEPS = 100


@dataclass(frozen=True)
class SymmetrizedGenerator:
    """Symmetric matrix similar to a reversible generator.

    ``scaling[i] = sqrt(pi_i)``; may be ``None`` for a matrix that was
    symmetric to begin with (identity scaling).
    """

    entries: np.ndarray
    scaling: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SpectrumMatchReport:
    eigenvalue_max_abs_diff: float
    eigenvector_min_alignment: float
    pairing: tuple[tuple[int, int], ...]


def symmetrize(R, pi: BoltzmannDistribution) -> SymmetrizedGenerator:
    """``S_ij = R_ij sqrt(pi_j / pi_i)``, computed from log-weights.

    Raises
    ------
    DetailedBalanceError
        If ``R`` violates detailed balance with respect to ``pi`` by more
        than ``1e-10``.
    """
    A = _entries(R)
    violation = check_detailed_balance(A, pi)
    if violation > DETAILED_BALANCE_TOL:
        raise DetailedBalanceError(
            f"detailed-balance violation {violation:.3g} exceeds {DETAILED_BALANCE_TOL:g}"
        )
    half = 0.5 * np.asarray(pi.log_normalized)
    S = A * np.exp(half[None, :] - half[:, None])
    # Average away the rounding asymmetry; exact symmetry is what Jacobi needs.
    S = 0.5 * (S + S.T)
    return SymmetrizedGenerator(S, np.exp(half))


def _off_norm(A: np.ndarray) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.linalg.norm(off))


def _jacobi(S: np.ndarray, tol: float = OFFDIAG_TOL, max_sweeps: int = MAX_SWEEPS):
    """Cyclic Jacobi diagonalization; returns ``(eigenvalues, U, sweeps)`` unsorted."""
    A = np.array(S, dtype=float)
    n = A.shape[0]
    U = np.eye(n)
    target = tol * float(np.linalg.norm(A))
    for sweep in range(max_sweeps + 1):
        if _off_norm(A) <= target:
            return np.diag(A).copy(), U, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                colp = A[:, p].copy()
                colq = A[:, q]
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp = A[p, :].copy()
                rowq = A[q, :]
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                A[p, q] = A[q, p] = 0.0
                up = U[:, p].copy()
                uq = U[:, q]
                U[:, p] = c * up - s * uq
                U[:, q] = s * up + c * uq
    raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def sign_fix(v: np.ndarray, rel_tol: float = 1e-8) -> np.ndarray:
    """Flip ``v`` so that its first non-negligible entry is positive."""
    v = np.asarray(v, dtype=float)
    big = np.abs(v) > rel_tol * np.max(np.abs(v))
    if not np.any(big):
        return v.copy()
    return v if v[np.argmax(big)] > 0 else -v


def jacobi_eigen(S: SymmetrizedGenerator | np.ndarray) -> SpectralDecomposition:
    """Full eigensystem of a symmetrized generator by cyclic Jacobi rotations.

    Eigenvalues come back sorted by ascending magnitude.  Eigenvectors are
    back-transformed to the original basis (``v = D^{1/2} u``); the one for
    the smallest-magnitude eigenvalue is scaled to a probability vector when
    it is single-signed, the others are sign-fixed (first significant entry
    positive).  When ``S`` is a generator the smallest eigenvalue is the
    structural zero and is stored as exactly ``0.0`` if it rounds to below
    ``1e-12 * ||S||_inf``.

    Raises
    ------
    ConvergenceError
        If the off-diagonal mass does not fall below ``1e-14 ||S||_F`` within
        100 sweeps.
    """
    if not isinstance(S, SymmetrizedGenerator):
        S = SymmetrizedGenerator(np.asarray(S, dtype=float))
    A = np.asarray(S.entries, dtype=float)
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10 * max(np.max(np.abs(A)), 1.0):
        raise ValueError("matrix is not symmetric")
    lam, U, _ = _jacobi(A)

    order = np.lexsort((lam, np.abs(lam)))
    lam = lam[order]
    U = U[:, order]
    V = U if S.scaling is None else U * np.asarray(S.scaling)[:, None]

    cols = []
    for k in range(V.shape[1]):
        v = V[:, k]
        cols.append(sign_fix(v))
    V = np.column_stack(cols)

    if S.scaling is not None:
        v0 = V[:, 0]
        if np.all(v0 >= -1e-12 * np.max(np.abs(v0))):
            V[:, 0] = np.abs(v0) / np.sum(np.abs(v0))
        if abs(lam[0]) <= 1e-12 * np.max(np.abs(A).sum(axis=1)):
            lam[0] = 0.0

    lam.setflags(write=False)
    V.setflags(write=False)
    return SpectralDecomposition(lam, V, NUMERIC)


def numeric_spectrum(R, pi: BoltzmannDistribution) -> SpectralDecomposition:
    """Symmetrize ``R`` with respect to ``pi`` and diagonalize it."""
    return jacobi_eigen(symmetrize(R, pi))


def _orthonormal_basis(M: np.ndarray) -> np.ndarray:
    Q, _ = np.linalg.qr(M)
    return Q


def _groups(values: np.ndarray, tol: float) -> list[list[int]]:
    """Cluster indices whose sorted values are chained within ``tol``."""
    order = np.argsort(values, kind="stable")
    groups = [[int(order[0])]]
    for prev, cur in zip(order[:-1], order[1:]):
        if abs(values[cur] - values[prev]) <= tol:
            groups[-1].append(int(cur))
        else:
            groups.append([int(cur)])
    return groups


def match_spectra(
    a: SpectralDecomposition,
    b: SpectralDecomposition,
    degeneracy_tol: float | None = None,
) -> SpectrumMatchReport:
    """Compare two eigensystems of the same matrix.

    Eigenvalues are paired greedily (each eigenvalue of ``a`` takes the
    closest unused eigenvalue of ``b``).  Eigenvectors are compared by
    direction only: within each cluster of ``a``-eigenvalues closer than
    ``degeneracy_tol`` (default ``1e-7 * max |lambda|``) the spans are compared
    and the cosine of the largest principal angle is reported.  A singleton
    cluster reduces to ``|cos|`` between the two vectors.
    """
    la = np.asarray(a.eigenvalues, dtype=float)
    lb = np.asarray(b.eigenvalues, dtype=float)
    if la.size != lb.size:
        raise ValueError("decompositions have different sizes")
    n = la.size
    if degeneracy_tol is None:
        degeneracy_tol = 1e-7 * max(np.max(np.abs(la)), np.max(np.abs(lb)))

    free = list(range(n))
    pairing = []
    for i in np.argsort(la, kind="stable"):
        j = min(free, key=lambda j: (abs(lb[j] - la[i]), j))
        free.remove(j)
        pairing.append((int(i), int(j)))
    pairing.sort()
    partner = dict(pairing)
    max_diff = max(abs(la[i] - lb[j]) for i, j in pairing)

    Va = np.column_stack([sign_fix(v) for v in np.asarray(a.eigenvectors).T])
    Vb = np.column_stack([sign_fix(v) for v in np.asarray(b.eigenvectors).T])
    Va = Va / np.linalg.norm(Va, axis=0)
    Vb = Vb / np.linalg.norm(Vb, axis=0)

    alignment = 1.0
    for group in _groups(la, degeneracy_tol):
        Qa = _orthonormal_basis(Va[:, group])
        Qb = _orthonormal_basis(Vb[:, [partner[i] for i in group]])
        sv = np.linalg.svd(Qa.T @ Qb, compute_uv=False)
        alignment = min(alignment, float(np.min(sv)))
    alignment = min(max(alignment, 0.0), 1.0)
    return SpectrumMatchReport(float(max_diff), alignment, tuple(pairing))
