"""Slow-mode coefficient ``a2(beta)`` and Mpemba-effect classification.

A system prepared in equilibrium at inverse temperature ``beta`` and quenched
into a bath at ``beta_b`` relaxes as

    p(t) = pi(beta_b) + a2(beta) exp(lambda_2 t) v_2 + faster modes,

with ``a2(beta) = c(beta_b) <v_2| F(beta_b) |pi(beta)>`` and
``F(beta_b) = diag(exp(beta_b E_i))``.  Throughout, ``c(beta_b) = 1``; the
curve's ``convention`` records the eigenvector scaling used.

A *strong* effect is a zero of ``a2`` away from the bath temperature; a
*weak* effect is non-monotonic ``a2`` on one side of it.  Findings at
``beta < beta_b`` (hot preparation) are tagged ``direct``, those at
``beta > beta_b`` (cold preparation) ``inverse``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import bisect
from scipy.special import logsumexp

from .markov import (
    AdjacencyGraph,
    SpectrumLike,
    as_spectrum,
    boltzmann,
    build_metropolis,
    check_beta,
)
from .numeric import numeric_spectrum, sign_fix
from .spectral import SpectralDecomposition, closed_form_spectrum

__all__ = [
    "GridSpec",
    "GapCheck",
    "A2Curve",
    "MpembaReport",
    "log_shifted_partition",
    "a2_inner",
    "a2_complete_closed_form",
    "gap_check",
    "orient_mode",
    "a2_scan",
    "detect_strong",
    "tangential_zeros",
    "detect_weak",
    "classify",
    "analyze",
]

GAP_REL_TOL = 1e-9
ROOT_RTOL = 1e-10
TANGENT_TOL = 1e-9
WEAK_NOISE_FLOOR = 1e-11

DIRECT = "direct"
INVERSE = "inverse"


@dataclass(frozen=True)
class GridSpec:
    """Inverse-temperature grid; the bath value is always added when inside."""

    beta_min: float
    beta_max: float
    points: int = 400
    spacing: str = "log"

    def __post_init__(self):
        if not (np.isfinite(self.beta_min) and np.isfinite(self.beta_max)):
            raise ValueError("grid bounds must be finite")
        if self.beta_min < 0:
            raise ValueError("grid bounds must be non-negative")
        if self.beta_min >= self.beta_max:
            raise ValueError(
                f"beta_min ({self.beta_min}) must be smaller than beta_max ({self.beta_max})"
            )
        if int(self.points) != self.points or self.points < 2:
            raise ValueError(f"grid needs an integer number of points >= 2, got {self.points}")
        if self.spacing not in ("log", "linear"):
            raise ValueError(f"unknown grid spacing {self.spacing!r}")
        if self.spacing == "log" and self.beta_min <= 0:
            raise ValueError("log-spaced grid needs beta_min > 0")

    @classmethod
    def default(cls, beta_b: float) -> "GridSpec":
        return cls(beta_b / 50.0, 50.0 * beta_b, 400, "log")

    def build(self, beta_b: float) -> np.ndarray:
        n = int(self.points)
        if self.spacing == "log":
            g = np.geomspace(self.beta_min, self.beta_max, n)
        else:
            g = np.linspace(self.beta_min, self.beta_max, n)
        g[0], g[-1] = self.beta_min, self.beta_max
        if self.beta_min <= beta_b <= self.beta_max:
            g = np.union1d(g, [beta_b])
        return g


@dataclass(frozen=True)
class GapCheck:
    """Whether the slowest mode is separated from the next one."""

    lambda2: float
    lambda3: float
    ratio: float
    ok: bool


@dataclass(frozen=True)
class A2Curve:
    beta_grid: np.ndarray
    values: np.ndarray
    beta_bath: float
    convention: dict
    gap: GapCheck | None = None
    source: str | None = None
    decomposition: SpectralDecomposition | None = field(default=None, repr=False)
    evaluate: Callable[[float], float] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        g = np.asarray(self.beta_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if g.size < 2 or np.any(np.diff(g) <= 0):
            raise ValueError("beta grid must be strictly increasing")
        g.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "beta_grid", g)
        object.__setattr__(self, "values", v)

    @property
    def bath_exterior(self) -> bool:
        return not (self.beta_grid[0] <= self.beta_bath <= self.beta_grid[-1])

    def value_at_bath(self) -> float | None:
        hit = np.flatnonzero(self.beta_grid == self.beta_bath)
        return float(self.values[hit[0]]) if hit.size else None


@dataclass(frozen=True)
class MpembaReport:
    strong_roots: tuple[float, ...]
    strong_sides: tuple[str, ...]
    weak_intervals: tuple[tuple[float, float], ...]
    weak_sides: tuple[str, ...]
    classification: str
    tangential_candidates: tuple[float, ...] = ()
    gap: GapCheck | None = None
    warnings: tuple[str, ...] = ()


def log_shifted_partition(energies: np.ndarray, beta) -> np.ndarray:
    """``log(exp(beta E_min) Z(beta))`` with ``Z`` the unnormalized partition sum.

    Vectorized over ``beta``.  Computed as ``log(m + tail)`` where ``m`` counts
    the ground-state levels and ``tail`` collects the excited ones, so the
    value stays accurate (and monotone) as it approaches ``log m``.
    """
    e = np.asarray(energies, dtype=float)
    gaps = e - e.min()
    excited = gaps[gaps > 0]
    m = float(np.count_nonzero(gaps == 0))
    b = np.asarray(beta, dtype=float)
    tail = np.exp(-np.multiply.outer(b, excited)).sum(axis=-1)
    return math.log(m) + np.log1p(tail / m)


def a2_inner(spectrum: SpectrumLike, beta_b: float, beta, v2: np.ndarray):
    """``<v2| F(beta_b) |pi(beta)>`` with ``c(beta_b) = 1``.

    Each term ``v2_i exp(beta_b E_i) pi_i(beta)`` is formed from a single
    exponent ``(beta_b - beta) E_i - log Z(beta)``.  Vectorized over ``beta``.
    """
    spectrum = as_spectrum(spectrum)
    e = spectrum.energies
    check_beta(beta_b)
    v2 = np.asarray(v2, dtype=float)
    b = np.atleast_1d(np.asarray(beta, dtype=float))
    if np.any(b < 0):
        raise ValueError("negative inverse temperature is not supported")
    logz = logsumexp(-np.multiply.outer(b, e), axis=-1)
    expo = np.multiply.outer(beta_b - b, e) - logz[:, None]
    out = np.exp(expo) @ v2
    return out if np.ndim(beta) else float(out[0])


def a2_complete_closed_form(spectrum: SpectrumLike, beta_b: float, beta):
    """Complete-graph ``a2 = 1 - e^{beta_b E1} Z(beta_b) / (e^{beta E1} Z(beta))``.

    ``E1`` is the lowest energy and ``Z`` the unnormalized partition sum.  This
    differs from :func:`a2_inner` with the closed-form ``v_2`` by the constant
    factor ``1 / Z(beta_b)``.
    """
    e = as_spectrum(spectrum).energies
    check_beta(beta_b)
    lb = log_shifted_partition(e, beta_b)
    lz = log_shifted_partition(e, beta)
    out = -np.expm1(lb - lz)
    return out if np.ndim(beta) else float(out)


def gap_check(dec: SpectralDecomposition) -> GapCheck:
    """Check ``|lambda_2| < |lambda_3| (1 - 1e-9)``; vacuously true for ``n = 2``."""
    lam = np.asarray(dec.eigenvalues)
    l2 = float(lam[1])
    if lam.size < 3:
        return GapCheck(l2, -math.inf, 0.0, True)
    l3 = float(lam[2])
    ratio = abs(l2) / abs(l3) if l3 != 0 else math.inf
    return GapCheck(l2, l3, ratio, abs(l2) < abs(l3) * (1 - GAP_REL_TOL))


def orient_mode(v: np.ndarray, energies: np.ndarray) -> np.ndarray:
    """Scale a relaxation mode to unit max-norm with ``<E|v> > 0``.

    This matches the orientation of the closed-form modes, which carry their
    positive entries on the higher-energy states.  Falls back to the
    first-significant-entry rule when ``<E|v>`` vanishes.
    """
    v = np.asarray(v, dtype=float)
    v = v / np.max(np.abs(v))
    proj = float(np.dot(v, energies - np.mean(energies)))
    if abs(proj) <= 1e-12 * np.max(np.abs(energies - np.mean(energies)), initial=0.0):
        return sign_fix(v)
    return v if proj > 0 else -v


def a2_scan(
    spectrum: SpectrumLike,
    beta_b: float,
    graph: AdjacencyGraph | None = None,
    grid: GridSpec | None = None,
) -> A2Curve:
    """Sample ``a2`` over an inverse-temperature grid for a quench into ``beta_b``.

    On the complete graph ``v_2`` is the closed-form mode and the curve is
    evaluated through the equivalent reduced expression
    ``a2_complete_closed_form / Z(beta_b)``, which avoids cancellation between
    the ground-state term and the rest.  On other graphs ``v_2`` comes from
    the Jacobi solver, oriented by :func:`orient_mode`.
    """
    spectrum = as_spectrum(spectrum)
    beta_b = check_beta(beta_b)
    if graph is None:
        graph = AdjacencyGraph.complete(spectrum.n)
    grid = grid or GridSpec.default(beta_b)
    betas = grid.build(beta_b)

    R = build_metropolis(spectrum, beta_b, graph)
    e = spectrum.energies
    if graph.is_complete:
        dec = closed_form_spectrum(spectrum, beta_b)
        inv_zb = math.exp(-float(logsumexp(-beta_b * e)))

        def evaluate(b):
            return a2_complete_closed_form(spectrum, beta_b, b) * inv_zb

        convention = {
            "c": 1.0,
            "eigenvector": "closed-form: v2 = (-Z_2, pi_r2, ..., pi_rn) with normalized pi, in the original basis",
            "evaluation": "a2 = (1 - e^{beta_b E_min} Z(beta_b) / (e^{beta E_min} Z(beta))) / Z(beta_b)",
        }
    else:
        dec = numeric_spectrum(R, boltzmann(spectrum, beta_b))
        v2 = orient_mode(dec.vector(2), e)

        def evaluate(b):
            return a2_inner(spectrum, beta_b, b, v2)

        convention = {
            "c": 1.0,
            "eigenvector": "numeric: v2 from Jacobi, unit max-norm, oriented so <E|v2> > 0",
            "evaluation": "a2 = sum_i v2_i exp(beta_b E_i) pi_i(beta)",
        }

    values = np.asarray(evaluate(betas), dtype=float)
    return A2Curve(
        betas, values, beta_b, convention, gap_check(dec), dec.source, dec, evaluate
    )


def _interpolant(curve: A2Curve) -> Callable[[float], float]:
    if curve.evaluate is not None:
        return lambda b: float(curve.evaluate(b))
    return lambda b: float(np.interp(b, curve.beta_grid, curve.values))


def _contains_bath(lo: float, hi: float, beta_b: float) -> bool:
    return lo <= beta_b <= hi


def detect_strong(curve: A2Curve) -> list[float]:
    """Zeros of ``a2`` other than the bath point, refined by bisection.

    A root is bracketed by consecutive nonzero samples of opposite sign;
    brackets that contain ``beta_b`` are skipped.  Without an evaluator on
    the curve the samples are interpolated linearly.
    """
    g, v = curve.beta_grid, curve.values
    f = _interpolant(curve)
    idx = np.flatnonzero(v != 0)
    roots = []
    for i, j in zip(idx[:-1], idx[1:]):
        if np.sign(v[i]) == np.sign(v[j]):
            continue
        lo, hi = float(g[i]), float(g[j])
        if _contains_bath(lo, hi, curve.beta_bath):
            continue
        if j > i + 1:
            # An exact zero sample sits between the two.
            roots.append(float(g[i + 1]))
            continue
        roots.append(float(bisect(f, lo, hi, xtol=1e-300, rtol=ROOT_RTOL)))
    return roots


def tangential_zeros(curve: A2Curve, tol: float = TANGENT_TOL) -> list[float]:
    """Grid points where ``|a2|`` dips below ``tol`` without changing sign.

    Each run of consecutive small samples is reported once, at its smallest
    ``|a2|``.  Samples adjacent to the bath point are ignored.
    """
    g, v = curve.beta_grid, curve.values
    small = np.abs(v) < tol
    nb = np.searchsorted(g, curve.beta_bath)
    near_bath = {nb - 1, nb, nb + 1}
    out = []
    k = 0
    while k < g.size:
        if not small[k] or k in near_bath:
            k += 1
            continue
        start = k
        while k < g.size and small[k] and k not in near_bath:
            k += 1
        run = np.arange(start, k)
        left = v[start - 1] if start > 0 else 0.0
        right = v[k] if k < g.size else 0.0
        if left * right < 0:
            continue
        out.append(float(g[run[np.argmin(np.abs(v[run]))]]))
    return out


def _side_extrema(g: np.ndarray, v: np.ndarray) -> list[tuple[float, float]]:
    d = np.diff(v)
    sig = np.flatnonzero(np.abs(d) > WEAK_NOISE_FLOOR)
    out = []
    for a, b in zip(sig[:-1], sig[1:]):
        if np.sign(d[a]) != np.sign(d[b]):
            out.append((float(g[a]), float(g[b + 1])))
    return out


def detect_weak(curve: A2Curve) -> list[tuple[float, float]]:
    """Grid intervals holding an interior extremum of ``a2`` on one side of ``beta_b``.

    The grid is split at ``beta_b`` (the bath point belongs to both sides)
    and the sign pattern of successive differences is scanned on each side.
    Differences smaller than ``1e-11`` are treated as flat.
    """
    g, v = curve.beta_grid, curve.values
    bb = curve.beta_bath
    hot = g <= bb
    cold = g >= bb
    out = []
    for mask in (hot, cold):
        if np.count_nonzero(mask) >= 3:
            out.extend(_side_extrema(g[mask], v[mask]))
    return out


def _side(beta: float, beta_b: float) -> str:
    return DIRECT if beta < beta_b else INVERSE


def classify(
    strong_roots,
    weak_intervals,
    gap: GapCheck | None,
    beta_b: float,
    tangential=(),
) -> MpembaReport:
    """Assemble the report; each finding is tagged ``direct`` or ``inverse``."""
    strong = tuple(float(r) for r in strong_roots)
    weak = tuple((float(lo), float(hi)) for lo, hi in weak_intervals)
    strong_sides = tuple(_side(r, beta_b) for r in strong)
    weak_sides = tuple(_side(0.5 * (lo + hi), beta_b) for lo, hi in weak)
    if strong and weak:
        label = "strong-and-weak"
    elif strong:
        label = "strong"
    elif weak:
        label = "weak"
    else:
        label = "none"
    warnings = []
    if gap is not None and not gap.ok:
        warnings.append(
            "|lambda2| is not separated from |lambda3|; the single-slow-mode "
            "picture behind a2 does not apply"
        )
    return MpembaReport(
        strong, strong_sides, weak, weak_sides, label,
        tuple(float(t) for t in tangential), gap, tuple(warnings),
    )


def analyze(curve: A2Curve) -> MpembaReport:
    """Run both detectors on ``curve`` and classify."""
    return classify(
        detect_strong(curve),
        detect_weak(curve),
        curve.gap,
        curve.beta_bath,
        tangential_zeros(curve),
    )
