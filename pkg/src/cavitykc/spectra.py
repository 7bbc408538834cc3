"""Exact and approximate spectral results of the reduced models."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DomainError
from .hilbert import (
    HilbertSpec,
    MatterBasis,
    OperatorMatrix,
    QuantumState,
    coherent_overlap,
    coherent_state,
    eigh,
)
from .models import (
    ModelParams,
    build_h1,
    build_h2,
    lambda2_effective,
    number_basis_state,
    number_to_z,
    photon_annihilation,
    photon_number,
    spec_2ck,
)
from .tables import ResultTable

CUTOFF_TOL = 1e-8


def laguerre(n: int, x: float) -> float:
    """``L_n(x)`` by the three-term recurrence."""
    l_prev, l_cur = 1.0, 1.0 - x
    if n == 0:
        return l_prev
    for k in range(1, n):
        l_prev, l_cur = l_cur, ((2 * k + 1 - x) * l_cur - k * l_prev) / (k + 1)
    return l_cur


def perturbative_levels_1ck(p: ModelParams, n_upto: int) -> list[tuple[int, float, float]]:
    """Displaced-oscillator levels of the 1CK model to first order in Δ.

    ``E_{n,±} = ½[2nω - λ²/ω ± sqrt(λ⁴/ω² + 16Δ² e^{-x} L_n(x)²)]`` with
    ``x = λ²/ω²``.

    Returns
    -------
    list of (n, E_plus, E_minus)
    """
    lam, w, d = p.lambda1, p.omega, p.delta
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    x = (lam / w) ** 2
    out = []
    for n in range(n_upto + 1):
        root = math.sqrt(lam**4 / w**2 + 16 * d**2 * math.exp(-x) * laguerre(n, x) ** 2)
        base = 2 * n * w - lam**2 / w
        out.append((n, 0.5 * (base + root), 0.5 * (base - root)))
    return out


def compare_perturbative_1ck(p: ModelParams, n_upto: int = 2, window: int | None = None) -> ResultTable:
    """Pair each perturbative level with a distinct exact level.

    The pairing minimises the total absolute deviation over the lowest
    ``window`` exact levels, so near-degenerate ladders are not mismatched by
    plain sorting.
    """
    levels = perturbative_levels_1ck(p, n_upto)
    pred, labels = [], []
    for n, ep, em in levels:
        pred += [ep, em]
        labels += [(n, +1), (n, -1)]
    window = window or max(4 * len(pred), 16)
    exact = eigh(build_h1(p), n_lowest=window, check_residual=False).energies
    cost = np.abs(np.subtract.outer(np.array(pred), exact))
    r, c = linear_sum_assignment(cost)
    rows = [
        (labels[i][0], labels[i][1], pred[i], exact[j], abs(pred[i] - exact[j]))
        for i, j in sorted(zip(r, c))
    ]
    return ResultTable(["n", "branch", "E_pert", "E_exact", "abs_err"], rows, {"lambda": p.lambda1})


@dataclass(frozen=True)
class SectorPrediction:
    """Product ground state of one ultrastrong-coupling sector."""

    sector: str
    alpha: complex
    matter_state: QuantumState
    energy: float

    def state(self, n_max: int) -> QuantumState:
        """``matter ⊗ |alpha>`` in z coordinates on the 2CK space."""
        m = number_to_z(self.matter_state.amplitudes, "2CK")
        ph = coherent_state(self.alpha, n_max)
        return QuantumState.from_unnormalized(spec_2ck(n_max), np.kron(m, ph.amplitudes))


_NUMBER_SPEC = HilbertSpec((4,), MatterBasis.NUMBER_LRC, photon=False)


def _sector_matter(sector: str) -> QuantumState:
    label, phase = {"I": ("011", 1.0), "II": ("101", 1j), "III": ("110", 1j)}[sector]
    return QuantumState(_NUMBER_SPEC, phase * number_basis_state(label, "2CK"))


def sector_alphas(p: ModelParams) -> dict[str, complex]:
    l2 = lambda2_effective(p)
    s = math.sqrt(2) * p.omega
    return {"I": -(p.lambda1 + l2) / s, "II": -p.lambda1 / s, "III": -l2 / s}


def _require_phi1_zero(p: ModelParams):
    if abs(math.sin(p.phi1)) > 1e-12 or math.cos(p.phi1) < 0:
        raise ValueError("sector formulas assume phi1 = 0")


def usc_ground_2ck(p: ModelParams) -> SectorPrediction:
    """Ultrastrong-coupling product ground state of the 2CK model.

    Sector I for ``λ2 > 0``, II for ``-λ1 < λ2 < 0``, III for ``λ2 < -λ1``,
    with ``λ2`` the real effective coupling.  The boundaries are rejected.
    """
    _require_phi1_zero(p)
    l2 = lambda2_effective(p)
    if l2 == 0.0 or l2 == -p.lambda1:
        raise DomainError(f"lambda2 = {l2} lies on a sector boundary")
    sector = "I" if l2 > 0 else ("II" if l2 > -p.lambda1 else "III")
    alpha = sector_alphas(p)[sector]
    return SectorPrediction(sector, alpha, _sector_matter(sector), -p.omega * abs(alpha) ** 2)


@dataclass(frozen=True)
class TransitionAnalysis:
    """Two-state mixing of sectors I and II near ``λ2 = 0``."""

    theta: float
    e_gs: float
    coefficients: tuple[float, float]
    alpha_i: complex
    alpha_ii: complex

    def state(self, n_max: int) -> QuantumState:
        """``-sin(θ/2)|GS_I> + cos(θ/2)|GS_II>`` on the 2CK space."""
        ci, cii = self.coefficients
        gi = SectorPrediction("I", self.alpha_i, _sector_matter("I"), 0.0).state(n_max)
        gii = SectorPrediction("II", self.alpha_ii, _sector_matter("II"), 0.0).state(n_max)
        return QuantumState.from_unnormalized(gi.spec, ci * gi.amplitudes + cii * gii.amplitudes)


def transition_analysis(p: ModelParams) -> TransitionAnalysis:
    """First-order-in-Δ ground state across the ``λ2 = 0`` anti-crossing.

    ``tan θ = -4ωΔ e^{-λ2²/(4ω²)} / (λ2(λ2 + 2λ1))``, with θ taken in
    ``(0, π)`` so the state is continuous through ``λ2 = 0`` and tends to
    sector II (I) for negative (positive) ``λ2``.
    """
    _require_phi1_zero(p)
    l1, l2, w, d = p.lambda1, lambda2_effective(p), p.omega, p.delta
    al = sector_alphas(p)
    a1, a2 = al["I"], al["II"]
    ov = abs(coherent_overlap(a2, a1))
    e = -0.5 * (w * (a1.real**2 + a2.real**2) + math.sqrt(w**2 * (a1.real**2 - a2.real**2) ** 2 + 4 * d**2 * ov**2))
    num = 4 * w * d * math.exp(-(l2**2) / (4 * w**2))
    theta = math.atan2(num, -l2 * (l2 + 2 * l1))
    return TransitionAnalysis(theta, e, (-math.sin(theta / 2), math.cos(theta / 2)), a1, a2)


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """``|<a|b>|²``."""
    if a.spec.subsystem_dims != b.spec.subsystem_dims:
        raise ValueError("fidelity of states on different spaces")
    return min(1.0, abs(a.inner(b)) ** 2)


def ground_state(H: OperatorMatrix) -> tuple[float, QuantumState]:
    s = eigh(H, n_lowest=1, check_residual=False)
    return s.ground_energy, s.ground


def cutoff_check(builder: Callable[[ModelParams], OperatorMatrix], p: ModelParams) -> dict:
    """Ground energy at ``n_max`` and ``2 n_max`` and the resulting verdict."""
    e1 = eigh(builder(p), n_lowest=1, check_residual=False).ground_energy
    e2 = eigh(builder(p.replace(n_max=2 * p.n_max)), n_lowest=1, check_residual=False).ground_energy
    shift = abs(e2 - e1)
    return {"n_max": p.n_max, "e0": e1, "e0_doubled": e2, "shift": shift, "converged": bool(shift <= CUTOFF_TOL)}


def merge_cutoff_checks(checks: Iterable[dict]) -> dict:
    checks = list(checks)
    worst = max(checks, key=lambda c: c["shift"])
    return {
        "n_max": worst["n_max"],
        "points_checked": len(checks),
        "max_shift": worst["shift"],
        "converged": all(c["converged"] for c in checks),
    }


def low_gap(H: OperatorMatrix) -> float:
    e = eigh(H, n_lowest=2, check_residual=False).energies
    return float(e[1] - e[0])


def phase_diagram_sweep(p: ModelParams, lambda2_grid: Iterable[float], check_cutoff: bool = True) -> ResultTable:
    """Ground-state photon observables of the 2CK model along real ``λ2``.

    Columns: ``lambda2, a_re, a_im, n_mean, E0, cutoff_shift, p_0 ... p_{n_max-1}``.
    """
    grid = [float(x) for x in lambda2_grid]
    if not all(math.isfinite(x) for x in grid):
        raise ValueError("grid values must be finite")
    spec = spec_2ck(p.n_max)
    a_op, n_op = photon_annihilation(spec), photon_number(spec)
    rows, checks = [], []
    for l2 in grid:
        q = p.replace(lambda2=l2)
        e0, gs = ground_state(build_h2(q))
        a = gs.expect(a_op)
        dist = np.sum(np.abs(gs.matter_photon()) ** 2, axis=0)
        shift = float("nan")
        if check_cutoff:
            c = cutoff_check(build_h2, q)
            checks.append(c)
            shift = c["shift"]
        rows.append([l2, a.real, a.imag, gs.expect(n_op).real, e0, shift, *dist])
    cols = ["lambda2", "a_re", "a_im", "n_mean", "E0", "cutoff_shift"] + [f"p_{k}" for k in range(p.n_max)]
    meta = {"cutoff": merge_cutoff_checks(checks)} if checks else {}
    return ResultTable(cols, rows, meta)


def ground_state_indicators(p: ModelParams, lambda2_grid: Iterable[float]) -> ResultTable:
    """Exact ground energy and fidelities against the sector and mixing states.

    Columns: ``lambda2, E_exact, E_usc, E_mix, fid_I, fid_II, fid_mix``.
    ``E_usc`` is ``-ω|α|²`` of the sector containing ``λ2`` (NaN on a boundary).
    """
    rows = []
    for l2 in lambda2_grid:
        q = p.replace(lambda2=float(l2))
        e0, gs = ground_state(build_h2(q))
        try:
            e_usc = usc_ground_2ck(q).energy
        except DomainError:
            e_usc = float("nan")
        ta = transition_analysis(q)
        al = sector_alphas(q)
        fi = fidelity(gs, SectorPrediction("I", al["I"], _sector_matter("I"), 0.0).state(p.n_max))
        fii = fidelity(gs, SectorPrediction("II", al["II"], _sector_matter("II"), 0.0).state(p.n_max))
        rows.append([float(l2), e0, e_usc, ta.e_gs, fi, fii, fidelity(gs, ta.state(p.n_max))])
    return ResultTable(["lambda2", "E_exact", "E_usc", "E_mix", "fid_I", "fid_II", "fid_mix"], rows)


def spectrum_table(p: ModelParams, n_upto: int = 2) -> ResultTable:
    """Exact 1CK levels next to their perturbative partners."""
    t = compare_perturbative_1ck(p, n_upto)
    return ResultTable(t.columns, t.rows, {"lambda": p.lambda1, "n_upto": n_upto})
