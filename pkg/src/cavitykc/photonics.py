"""Reduced photon states, matter-conditioned projections and Wigner functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .hilbert import (
    SIGMA_X,
    HilbertSpec,
    QuantumState,
    coherent_amplitudes,
    coherent_state,
    eigh,
    photon_spec,
    truncation_safe,
)
from .models import ModelParams, build_h2, number_basis_state, number_to_z
from .tables import ResultTable

DEFAULT_EXTENT = 4.0
DEFAULT_POINTS = 161
LEAK_FLAG = 1e-6
_CHUNK = 8192


@dataclass(frozen=True)
class CatSpec:
    """``(|α> ± |-α>)/N±`` with ``N±² = 2(1 ± e^{-2|α|²})``."""

    alpha: complex
    parity: str = "even"

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ValueError("parity must be 'even' or 'odd'")
        if self.parity == "odd" and self.alpha == 0:
            raise ValueError("odd cat with alpha = 0 does not exist")

    @property
    def sign(self) -> int:
        return 1 if self.parity == "even" else -1

    @property
    def norm_sq(self) -> float:
        return 2.0 * (1.0 + self.sign * math.exp(-2.0 * abs(self.alpha) ** 2))

    def state(self, n_max: int) -> QuantumState:
        if not truncation_safe(self.alpha, n_max):
            raise DomainError(f"cat with |alpha|={abs(self.alpha):.4g} is unsafe at n_max={n_max}")
        v = (coherent_amplitudes(self.alpha, n_max) + self.sign * coherent_amplitudes(-self.alpha, n_max)) / math.sqrt(
            self.norm_sq
        )
        return QuantumState.from_unnormalized(photon_spec(n_max), v)


def cat_fidelity(photon_state: QuantumState, cat: CatSpec) -> float:
    """``|<Cat|ψ>|²``."""
    return min(1.0, abs(cat.state(photon_state.spec.n_max).inner(photon_state)) ** 2)


def _require_photon(psi: QuantumState):
    if not psi.spec.photon:
        raise ValueError("state has no photon factor")


def reduce_photon(psi: QuantumState) -> np.ndarray:
    """Photon density matrix after tracing out every matter factor."""
    _require_photon(psi)
    m = psi.matter_photon()
    rho = m.T @ m.conj()
    rho = 0.5 * (rho + rho.conj().T)
    if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
        raise ValueError("reduced density matrix is not positive")
    return rho


def project_matter(psi: QuantumState, matter_state) -> tuple[float, QuantumState]:
    """Born probability and conditional photon state for a matter outcome.

    ``matter_state`` is a ``QuantumState`` on the matter factors or a raw
    coordinate vector in the same basis as ``psi``.
    """
    _require_photon(psi)
    v = matter_state.amplitudes if isinstance(matter_state, QuantumState) else np.asarray(matter_state, dtype=complex)
    if v.shape != (psi.spec.matter_dim,):
        raise ValueError("matter state does not match the matter factors")
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValueError("matter state is not normalized")
    phot = v.conj() @ psi.matter_photon()
    prob = float(np.vdot(phot, phot).real)
    if prob < 1e-12:
        raise DomainError(f"outcome probability {prob:.3e} is too small to condition on")
    return prob, QuantumState.from_unnormalized(photon_spec(psi.spec.n_max), phot)


def photon_parity_expectation(rho: np.ndarray) -> float:
    return float(np.real(np.sum((-1.0) ** np.arange(rho.shape[0]) * np.diag(rho))))


def as_density(x) -> np.ndarray:
    if isinstance(x, QuantumState):
        return np.outer(x.amplitudes, x.amplitudes.conj())
    return np.asarray(x, dtype=complex)


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """``W(x, p)`` with ``β = x + ip``; ``values[i, j]`` sits at ``(x_axis[j], p_axis[i])``."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    leakage: np.ndarray = field(repr=False)

    @property
    def flagged(self) -> np.ndarray:
        """Points where the displaced state loses more than ``1e-6`` beyond the cutoff."""
        return self.leakage > LEAK_FLAG

    def integral(self) -> float:
        dx = self.x_axis[1] - self.x_axis[0]
        dp = self.p_axis[1] - self.p_axis[0]
        return float(np.sum(self.values) * dx * dp)

    def at(self, x: float, p: float) -> float:
        j = int(np.argmin(np.abs(self.x_axis - x)))
        i = int(np.argmin(np.abs(self.p_axis - p)))
        return float(self.values[i, j])

    def table(self, meta: dict | None = None) -> ResultTable:
        xx, pp = np.meshgrid(self.x_axis, self.p_axis)
        rows = np.column_stack([xx.ravel(), pp.ravel(), self.values.ravel(), self.leakage.ravel()])
        return ResultTable(["x", "p", "W", "leakage"], rows, dict(meta or {}))


def default_axis(extent: float = DEFAULT_EXTENT, points: int = DEFAULT_POINTS) -> np.ndarray:
    return np.linspace(-extent, extent, points)


def _diagonal_elements(x: np.ndarray, k: int, n_count: int) -> np.ndarray:
    """``|<n+k|D(γ)|n>|`` up to sign for ``n < n_count`` at ``x = |γ|²``.

    Normalized Laguerre recurrence, shape ``(n_count, len(x))``; forward
    stable unlike the column recurrence of ``D|n>``.
    """
    f = np.empty((n_count, x.size))
    with np.errstate(divide="ignore"):
        logx = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), -np.inf)
    f0 = np.exp(0.5 * k * logx - 0.5 * x - 0.5 * gammaln(k + 1)) if k else np.exp(-0.5 * x)
    f[0] = f0
    if n_count > 1:
        f[1] = (1 + k - x) * f0 / math.sqrt(k + 1)
    for n in range(1, n_count - 1):
        f[n + 1] = ((2 * n + 1 + k - x) * f[n] - math.sqrt(n * (n + k)) * f[n - 1]) / math.sqrt((n + 1) * (n + k + 1))
    return f


def displacement_block(gamma: complex, n_max: int) -> np.ndarray:
    """Exact ``<m|D(γ)|n>`` for ``m, n < n_max`` of the untruncated operator."""
    x = np.array([abs(gamma) ** 2])
    ph = np.exp(1j * np.angle(gamma))
    d = np.zeros((n_max, n_max), dtype=complex)
    for k in range(n_max):
        f = _diagonal_elements(x, k, n_max - k)[:, 0]
        idx = np.arange(n_max - k)
        d[idx + k, idx] = f * ph**k
        d[idx, idx + k] = f * (-np.conj(ph)) ** k
    return d


def _wigner_chunk(rho: np.ndarray, comps: np.ndarray, beta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = rho.shape[0]
    sgn = (-1.0) ** np.arange(n)
    g = 2 * beta
    x = np.abs(g) ** 2
    eth = np.exp(1j * np.angle(g))
    acc = np.zeros(beta.size)
    # D(-β) applied to the weighted eigencomponents, for the leakage flag
    xb = np.abs(beta) ** 2
    ebm = np.exp(1j * np.angle(-beta))
    disp = np.zeros((beta.size, comps.shape[1], n), dtype=complex)
    for k in range(n):
        cnt = n - k
        f = _diagonal_elements(x, k, cnt)
        s = np.einsum("n,ng->g", sgn[:cnt] * np.diagonal(rho, k), f)
        acc += (1.0 if k == 0 else 2.0) * np.real(eth**k * s)
        fb = _diagonal_elements(xb, k, cnt)
        lo = (ebm**k)[:, None, None] * np.einsum("ng,rn->grn", fb, comps[:cnt].T)
        disp[:, :, k:] += lo
        if k:
            up = ((-np.conj(ebm)) ** k)[:, None, None] * np.einsum("ng,rn->grn", fb, comps[k:].T)
            disp[:, :, :cnt] += up
    leak = 1.0 - np.sum(np.abs(disp) ** 2, axis=(1, 2))
    return (2.0 / math.pi) * acc, np.maximum(leak, 0.0)


def wigner(rho, x_axis: np.ndarray | None = None, p_axis: np.ndarray | None = None) -> WignerGrid:
    """Wigner function by the displaced-parity formula.

    ``W(β) = (2/π) Tr[ρ D(β) Π D(-β)] = (2/π) Tr[ρ D(2β) Π]`` with exact
    matrix elements of ``D``, so values are exact for the given ``ρ``.
    Normalized to ``∫ W d²β = 1``; the vacuum gives ``W(0) = 2/π``.

    Parameters
    ----------
    rho : ndarray or QuantumState
        Photon density matrix or pure photon state.
    x_axis, p_axis : ndarray, optional
        Uniform axes for ``Re β`` and ``Im β``; default 161 points on [-4, 4].
    """
    rho = as_density(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    x_axis = default_axis() if x_axis is None else np.asarray(x_axis, dtype=float)
    p_axis = default_axis() if p_axis is None else np.asarray(p_axis, dtype=float)
    for ax in (x_axis, p_axis):
        if ax.size < 2 or not np.all(np.isfinite(ax)) or np.ptp(np.diff(ax)) > 1e-9 * max(1.0, np.ptp(ax)):
            raise ValueError("axes must be finite, uniform and have at least two points")
    w, v = np.linalg.eigh(rho)
    keep = w > 1e-14
    comps = v[:, keep] * np.sqrt(w[keep])
    xx, pp = np.meshgrid(x_axis, p_axis)
    beta = (xx + 1j * pp).ravel()
    vals = np.empty(beta.size)
    leak = np.empty(beta.size)
    step = max(1, _CHUNK // max(1, comps.shape[1]))
    for s in range(0, beta.size, step):
        vals[s : s + step], leak[s : s + step] = _wigner_chunk(rho, comps, beta[s : s + step])
    shape = (p_axis.size, x_axis.size)
    return WignerGrid(x_axis, p_axis, vals.reshape(shape), leak.reshape(shape))


def wigner_coherent(alpha: complex, beta) -> np.ndarray:
    """Closed form ``(2/π) exp(-2|β-α|²)``."""
    return (2 / math.pi) * np.exp(-2 * np.abs(np.asarray(beta) - alpha) ** 2)


def wigner_cat(cat: CatSpec, beta) -> np.ndarray:
    """Closed-form Wigner function of an ideal cat."""
    b = np.asarray(beta, dtype=complex)
    a = cat.alpha
    diag = np.exp(-2 * np.abs(b - a) ** 2) + np.exp(-2 * np.abs(b + a) ** 2)
    cross = 2 * np.exp(-2 * np.abs(b) ** 2) * np.cos(4 * np.imag(np.conj(a) * b))
    return (2 / math.pi) * (diag + cat.sign * cross) / cat.norm_sq


# -- special point of the 2CK model ------------------------------------------


def cat_matter_states() -> dict[str, np.ndarray]:
    """``Ψ̃± = (|101> ± |110>)/√2`` mapped to the z coordinates of ``build_h2``."""
    a = number_basis_state("101", "2CK")
    b = number_basis_state("110", "2CK")
    return {
        "+": number_to_z((a + b) / math.sqrt(2), "2CK"),
        "-": number_to_z((a - b) / math.sqrt(2), "2CK"),
    }


def _x_state(s1: int, s2: int) -> np.ndarray:
    w, v = np.linalg.eigh(SIGMA_X)
    e = {-1: v[:, 0], 1: v[:, 1]}
    return np.kron(e[s1], e[s2])


@dataclass(frozen=True, eq=False)
class CatAnalysis:
    """Ground-state cat diagnostics of the 2CK model."""

    alpha: complex
    probabilities: dict
    conditioned: dict
    fidelities: dict
    parities: dict
    purity: float
    two_branch_norm: float
    rho: np.ndarray = field(repr=False)

    def grids(self, x_axis=None, p_axis=None) -> dict[str, WignerGrid]:
        out = {"full": wigner(self.rho, x_axis, p_axis)}
        for key, st in self.conditioned.items():
            out[key] = wigner(st, x_axis, p_axis)
        return out


def cat_analysis(p: ModelParams) -> CatAnalysis:
    """Condition the exact 2CK ground state on ``Ψ̃±`` and compare with cats.

    Even (odd) cat for ``Ψ̃+`` (``Ψ̃-``) with ``α = -λ1/(√2 ω)``.  The
    two-branch weight is that of ``|+,->_x ⊗ |-α>`` and ``|-,+>_x ⊗ |α>``.
    """
    gs = eigh(build_h2(p), n_lowest=1, check_residual=False).ground
    alpha = -p.lambda1 * np.exp(-1j * p.phi1) / (math.sqrt(2) * p.omega)
    rho = reduce_photon(gs)
    probs, cond, fids, pars = {}, {}, {}, {}
    for key, m in cat_matter_states().items():
        prob, ph = project_matter(gs, m)
        probs[key], cond[key] = prob, ph
        fids[key] = cat_fidelity(ph, CatSpec(alpha, "even" if key == "+" else "odd"))
        pars[key] = photon_parity_expectation(as_density(ph))
    n = p.n_max
    mp = gs.matter_photon()
    w = 0.0
    for (s1, s2), a in (((1, -1), -alpha), ((-1, 1), alpha)):
        amp = _x_state(s1, s2).conj() @ mp
        w += abs(np.vdot(coherent_state(a, n).amplitudes, amp)) ** 2
    purity = float(np.real(np.trace(rho @ rho)))
    return CatAnalysis(complex(alpha), probs, cond, fids, pars, purity, float(w), rho)


def cat_wigner_tables(p: ModelParams, x_axis=None, p_axis=None) -> dict[str, ResultTable]:
    """Wigner tables of the unconditioned and both conditioned photon states."""
    ca = cat_analysis(p)
    out = {}
    for key, g in ca.grids(x_axis, p_axis).items():
        meta = {
            "state": key,
            "W00": float(wigner(ca.rho if key == "full" else ca.conditioned[key], [0.0, 1.0], [0.0, 1.0]).values[0, 0]),
            "W_min": float(g.values.min()),
            "integral": g.integral(),
            "flagged_points": int(g.flagged.sum()),
        }
        if key != "full":
            meta.update(probability=ca.probabilities[key], cat_fidelity=ca.fidelities[key], photon_parity=ca.parities[key])
        else:
            meta.update(purity=ca.purity, two_branch_norm=ca.two_branch_norm)
        out[key] = g.table(meta)
    return out
