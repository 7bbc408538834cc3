"""Geometric phases of the 2CK ground state under a loop of the coupling phase.

The loop is ``φ2 = φ ∈ [0, 2π)`` at fixed ``λ2 > 0``.  Because the coupling
in ``build_h2`` carries ``e^{-iφ2} a†``, the displaced branch follows
``α₊(φ) = -(λ1 + λ2 e^{-iφ})/(√2 ω)`` while ``α₋ = -λ1/(√2 ω)`` stays put.
Phases use ``φ_B = i ∮ <GS|∂_φ GS> dφ`` and are wrapped to ``(-π, π]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect

from .errors import ConvergenceError, DomainError
from .hilbert import coherent_overlap, eigh
from .models import ModelParams, build_h2, parity_operator_lr
from .tables import ResultTable

PI4 = math.pi / 4
DEFAULT_M = 256
DOUBLING_TOL = 1e-6


def wrap_phase(x: float) -> float:
    """Map to ``(-π, π]``."""
    y = math.remainder(x, 2 * math.pi)
    return math.pi if y == -math.pi else y


@dataclass(frozen=True)
class BerryLoopResult:
    phase: float
    method: str
    samples: int
    converged: bool
    doubling_change: float = float("nan")


class EffectiveH2x2:
    """Two-level model on ``{|GS₊(φ)>, |GS₋>}``.

    ``H(φ) = [[-ω|α₊|², Δ<α₊|α₋>], [Δ<α₋|α₊>, -ω|α₋|²]]``.  The upper-right
    entry is ``<GS₊|H|GS₋>``; the matter matrix element is real and absorbed
    in the sign convention.
    """

    def __init__(self, p: ModelParams):
        self.p = p
        self.alpha_minus = -p.lambda1 / (math.sqrt(2) * p.omega)

    def alpha_plus(self, phi):
        p = self.p
        return -(p.lambda1 + p.lambda2 * np.exp(-1j * np.asarray(phi))) / (math.sqrt(2) * p.omega)

    def overlap(self, phi):
        """``<α₋|α₊(φ)>``."""
        ap = self.alpha_plus(phi)
        am = self.alpha_minus
        return np.exp(-0.5 * am**2 - 0.5 * np.abs(ap) ** 2 + am * ap)

    def delta_e(self, phi):
        """``ω(|α₊|² - |α₋|²)``."""
        return self.p.omega * (np.abs(self.alpha_plus(phi)) ** 2 - self.alpha_minus**2)

    def entries(self, phi) -> np.ndarray:
        """Stack of matrices, shape ``(..., 2, 2)``."""
        phi = np.asarray(phi, dtype=float)
        p = self.p
        ap = self.alpha_plus(phi)
        ov = self.overlap(phi)
        h = np.empty(phi.shape + (2, 2), dtype=complex)
        h[..., 0, 0] = -p.omega * np.abs(ap) ** 2
        h[..., 1, 1] = -p.omega * self.alpha_minus**2
        h[..., 0, 1] = p.delta * np.conj(ov)
        h[..., 1, 0] = p.delta * ov
        return h


def _analytic_unwrapped(p: ModelParams, tol: float = 1e-9) -> tuple[float, float]:
    eff = EffectiveH2x2(p)
    r2 = p.lambda2**2 / (2 * p.omega**2)
    if r2 == 0.0:
        return 0.0, 0.0

    def integrand(phi):
        de = eff.delta_e(phi)
        rad = de**2 + 4 * p.delta**2 * abs(eff.overlap(phi)) ** 2
        if rad <= 0:
            raise DomainError(f"two-level gap closes at phi = {phi:.6g}")
        return r2 * 0.5 * (1.0 + de / math.sqrt(rad))

    return quad(integrand, 0.0, 2 * math.pi, epsabs=tol, epsrel=0.0, limit=1000, points=[math.pi])


def berry_analytic(p: ModelParams, tol: float = 1e-9) -> BerryLoopResult:
    """Adiabatic Berry phase of the two-level model by quadrature.

    ``φ_B = (λ2²/2ω²) ∫ ½[1 + δE/√(δE² + 4Δ²|<α₋|α₊>|²)] dφ``: the coherent
    loop phase of the displaced branch weighted by its ground-state
    population.
    """
    val, err = _analytic_unwrapped(p, tol)
    return BerryLoopResult(wrap_phase(val), "analytic", 0, bool(err <= tol), err)


def berry_analytic_printed(p: ModelParams, tol: float = 1e-9) -> BerryLoopResult:
    """The alternative closed form with radicand ``4Δ²|<α₋|α₊>|² - δE²``.

    ``φ_B = ∫ dφ/(2ω) δE [1 - δE/√(4Δ²|<α₋|α₊>|² - δE²)]``.  Only defined
    where the radicand is positive, which fails across most of the loop once
    ``λ1 λ2 / ω ≫ Δ``.

    Raises
    ------
    DomainError
        Naming the first loop angle where the radicand is not positive.
    """
    eff = EffectiveH2x2(p)
    grid = np.linspace(0.0, 2 * math.pi, 4097)
    rad = 4 * p.delta**2 * np.abs(eff.overlap(grid)) ** 2 - eff.delta_e(grid) ** 2
    bad = np.flatnonzero(rad <= 0)
    if bad.size:
        raise DomainError(f"radicand is not positive at phi = {grid[bad[0]]:.6g}")

    def integrand(phi):
        de = eff.delta_e(phi)
        r = 4 * p.delta**2 * abs(eff.overlap(phi)) ** 2 - de**2
        return de / (2 * p.omega) * (1.0 - de / math.sqrt(r))

    val, err = quad(integrand, 0.0, 2 * math.pi, epsabs=tol, epsrel=0.0, limit=1000)
    return BerryLoopResult(wrap_phase(val), "analytic_printed", 0, bool(err <= tol), err)


def _pancharatnam(vs: np.ndarray, metric: np.ndarray | None = None) -> float:
    """``-arg Π_k <v_k|G_k|v_{k+1}>`` around a closed loop (``vs[M] = vs[0]``)."""
    nxt = np.roll(vs, -1, axis=0)
    if metric is None:
        links = np.einsum("ki,ki->k", vs.conj(), nxt)
    else:
        links = np.einsum("ki,ki,ki->k", vs.conj(), metric, nxt)
    # accumulate phases to avoid underflow of long products
    return wrap_phase(-float(np.sum(np.angle(links))))


def _loop_2x2(p: ModelParams, m: int) -> float:
    eff = EffectiveH2x2(p)
    phis = 2 * math.pi * np.arange(m) / m
    w, v = np.linalg.eigh(eff.entries(phis))
    if np.min(w[:, 1] - w[:, 0]) < 1e-12:
        raise DomainError("degenerate two-level loop point")
    vs = v[:, :, 0]
    ap = eff.alpha_plus(phis)
    apn = np.roll(ap, -1)
    g = np.ones((m, 2), dtype=complex)
    g[:, 0] = np.exp(-0.5 * np.abs(ap) ** 2 - 0.5 * np.abs(apn) ** 2 + np.conj(ap) * apn)
    return _pancharatnam(vs, g)


def wilson_2x2(p: ModelParams, m_points: int = DEFAULT_M, m_cap: int = 1 << 16) -> BerryLoopResult:
    """Discrete Wilson loop of the two-level model.

    Starting at ``m_points`` the loop is doubled until two successive
    resolutions agree within ``1e-6`` or ``m_cap`` is reached.
    """
    if m_points < 8:
        raise ValueError("need at least 8 loop points")
    m = m_points
    prev = _loop_2x2(p, m)
    while True:
        cur = _loop_2x2(p, 2 * m)
        change = abs(wrap_phase(cur - prev))
        m *= 2
        if change < DOUBLING_TOL or 2 * m > m_cap:
            return BerryLoopResult(cur, "wilson2x2", m, change < DOUBLING_TOL, change)
        prev = cur


def _loop_full(p: ModelParams, m: int, rephase_seed: int | None = None) -> float:
    base = build_h2(p.replace(lambda2=0.0)).entries
    dim = base.shape[0]
    vs = np.empty((m, dim), dtype=complex)
    rng = np.random.default_rng(rephase_seed) if rephase_seed is not None else None
    for k in range(m):
        s = eigh(build_h2(p.replace(phi2=2 * math.pi * k / m)), n_lowest=2, check_residual=False)
        if s.energies[1] - s.energies[0] < 1e-12:
            raise ConvergenceError(f"ground-state gap closes at loop point {k}")
        vs[k] = s.vectors[:, 0]
        if rng is not None:
            vs[k] *= np.exp(2j * math.pi * rng.random())
    return _pancharatnam(vs)


def wilson_full(p: ModelParams, m_points: int = DEFAULT_M, rephase_seed: int | None = None) -> BerryLoopResult:
    """Wilson loop over exact ground states of ``build_h2`` (one doubling check).

    ``rephase_seed`` multiplies every eigenvector by a random phase first;
    the closed product must not change.
    """
    if p.lambda1 / (2 * p.delta) < 4:
        raise DomainError("full Wilson loop expects lambda1 / (2 delta) >= 4")
    if m_points < 8:
        raise ValueError("need at least 8 loop points")
    a = _loop_full(p, m_points, rephase_seed)
    b = _loop_full(p, 2 * m_points, rephase_seed)
    change = abs(wrap_phase(b - a))
    return BerryLoopResult(b, "wilson_full", 2 * m_points, change < DOUBLING_TOL, change)


def solve_lambda2_pi4(p: ModelParams, bracket: tuple[float, float] | None = None) -> float:
    """``λ2`` at which the analytic Berry phase equals ``π/4``.

    The bracket defaults to ``(0, λ1]``.  Monotonicity is checked on 32
    sample points before bisection; the unwrapped phase is used so the
    branch cut at ``π`` does not masquerade as a decrease.
    """
    lo, hi = bracket if bracket is not None else (0.0, p.lambda1)

    def f(l2):
        return _analytic_unwrapped(p.replace(lambda2=l2))[0] - PI4

    samples = np.linspace(lo, hi, 32)
    vals = np.array([f(x) for x in samples])
    if np.any(np.diff(vals) < -1e-12):
        raise DomainError("Berry phase is not monotone on the bracket")
    if not (vals[0] <= 0 <= vals[-1]):
        raise DomainError(f"no sign change of phi_B - pi/4 on [{lo}, {hi}]")
    root = bisect(f, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(f(root)) >= 1e-6:
        raise ConvergenceError("bisection did not reach |phi_B - pi/4| < 1e-6")
    return float(root)


def braid_curve(p: ModelParams, lambda1_grid: Iterable[float]) -> ResultTable:
    """``(λ1, λ2*)`` pairs with ``φ_B(λ2*) = π/4``."""
    rows = []
    for l1 in lambda1_grid:
        q = p.replace(lambda1=float(l1))
        root = solve_lambda2_pi4(q)
        rows.append([float(l1), root, berry_analytic(q.replace(lambda2=root)).phase])
    return ResultTable(["lambda1", "lambda2_star", "phase"], rows)


def berry_scan(p: ModelParams, lambda2_grid: Iterable[float], m_points: int = DEFAULT_M, full: bool = False) -> ResultTable:
    """Berry phase versus ``λ2`` by every available method."""
    rows = []
    for l2 in lambda2_grid:
        q = p.replace(lambda2=float(l2))
        a = berry_analytic(q).phase
        w = wilson_2x2(q, m_points).phase
        f = wilson_full(q, m_points).phase if full else float("nan")
        rows.append([float(l2), a, w, f])
    return ResultTable(["lambda2", "analytic", "wilson2x2", "wilson_full"], rows)


def parity_landscape(
    p: ModelParams,
    lambda2_grid: Iterable[float],
    phi2_grid: Iterable[float],
    ring: bool = True,
) -> ResultTable:
    """Ground-state parity over ``λ2 e^{iφ2}``.

    Columns: ``lambda2, phi2, P, P_inner, ring``.  ``P`` uses the outer pair
    (the non-local fermion of the number basis); ``P_inner`` the pair
    adjacent to the first cavity site.  Rows with ``ring = 1`` sit on
    ``λ2 = λ2*``.
    """
    po = parity_operator_lr(p.n_max, "outer").entries
    pi = parity_operator_lr(p.n_max, "inner").entries
    phis = [float(x) for x in phi2_grid]
    cells = [(float(l2), ph, 0.0) for l2 in lambda2_grid for ph in phis]
    if ring:
        star = solve_lambda2_pi4(p)
        cells += [(star, ph, 1.0) for ph in phis]
    rows = []
    for l2, ph, flag in cells:
        g = eigh(build_h2(p.replace(lambda2=l2, phi2=ph)), n_lowest=1, check_residual=False).vectors[:, 0]
        rows.append([l2, ph, np.vdot(g, po @ g).real, np.vdot(g, pi @ g).real, flag])
    return ResultTable(["lambda2", "phi2", "P", "P_inner", "ring"], rows)
