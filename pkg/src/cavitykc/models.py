"""Reduced Rabi-like Hamiltonians of a Kitaev chain coupled to one cavity mode.

Two reductions are built here:

* 1CK, one bulk site in the cavity: a single two-level matter factor whose
  index 0 is the empty bond pair ``|oo>`` (energy -2Δ) and index 1 the filled
  pair ``|••>`` (energy +2Δ).
* 2CK, two adjacent bulk sites: two two-level factors.  Index 0 of each is the
  "-" label.  The matter energy is ``2Δ·(bond fermion count) - 3Δ``, so the
  joint labels map to ``(--, -+, +-, ++) = (|ooo>, |o••>, |••o>, |•o•>)``.

Both act on spaces ``[matter..., n_max]`` with the photon factor last.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .hilbert import (
    SIGMA_X,
    SIGMA_Z,
    HilbertSpec,
    MatterBasis,
    OperatorMatrix,
    QuantumState,
    boson_ops,
    coherent_state,
)

# Sign s_P relating the parity readout to the non-local occupation,
# P = s_P (2 n_LR - 1).  Fixed by the lambda2 -> 0 limit; see
# ``calibrate_parity_sign``.
PARITY_SIGN = -1


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical knobs.

    Defaults use units with ``2Δ = 1`` at resonance ``ω = 4Δ`` and the
    ultrastrong coupling ``λ1 = 4``.
    """

    delta: float = 0.5
    omega: float = 2.0
    lambda1: float = 4.0
    phi1: float = 0.0
    lambda2: float = 0.0
    phi2: float = 0.0
    mu: float = 0.0
    chain_length: int = 6
    cavity_site: int = 3
    n_max: int = 60

    def __post_init__(self):
        for name in ("delta", "omega", "lambda1", "phi1", "lambda2", "phi2", "mu"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"{name} must be finite, got {v!r}")
        if self.delta <= 0:
            raise ConfigError("delta must be positive")
        if self.omega <= 0:
            raise ConfigError("omega must be positive")
        if self.lambda1 < 0:
            raise ConfigError("lambda1 must be non-negative")
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ConfigError("n_max must be an integer >= 2")
        if int(self.chain_length) != self.chain_length or self.chain_length < 2:
            raise ConfigError("chain_length must be an integer >= 2")

    def replace(self, **kw) -> "ModelParams":
        return dataclasses.replace(self, **kw)

    def check_oracle(self, n_cavity_sites: int = 1) -> None:
        """Bulk condition for full-chain runs: 2 <= s and s + n_cav - 1 <= N - 1."""
        s, n = self.cavity_site, self.chain_length
        if s < 2 or s + n_cavity_sites - 1 > n - 1:
            raise ConfigError(f"cavity site {s} is not in the bulk of a chain of {n} sites")


def _quadrature(n_max: int, phi: float) -> np.ndarray:
    a, ad, _ = boson_ops(n_max)
    return np.exp(-1j * phi) * ad.entries + np.exp(1j * phi) * a.entries


def spec_1ck(n_max: int) -> HilbertSpec:
    return HilbertSpec((2, n_max))


def spec_2ck(n_max: int) -> HilbertSpec:
    return HilbertSpec((2, 2, n_max))


def build_h1(p: ModelParams) -> OperatorMatrix:
    """Single-site cavity Hamiltonian.

    ``H1 = diag(-2Δ, 2Δ) ⊗ 1 + ω 1 ⊗ a†a + (λ/2)(1 - σx) ⊗ (e^{-iφ} a† + e^{iφ} a)``
    with ``λ = lambda1`` and ``φ = phi1``.
    """
    n = p.n_max
    _, _, num = boson_ops(n)
    i2 = np.eye(2)
    h = np.kron(np.diag([-2 * p.delta, 2 * p.delta]), np.eye(n))
    h = h + p.omega * np.kron(i2, num.entries)
    h = h + 0.5 * p.lambda1 * np.kron(i2 - SIGMA_X, _quadrature(n, p.phi1))
    return OperatorMatrix(spec_1ck(n), h)


def h1_terms(p: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """``(H0, V)`` with ``build_h1 = H0 + λ V`` (used by the coupling ramp)."""
    n = p.n_max
    _, _, num = boson_ops(n)
    i2 = np.eye(2)
    h0 = np.kron(np.diag([-2 * p.delta, 2 * p.delta]), np.eye(n)) + p.omega * np.kron(i2, num.entries)
    v = 0.5 * np.kron(i2 - SIGMA_X, _quadrature(n, p.phi1))
    return h0.astype(complex), v


MATTER_ENERGIES_2CK = np.array([-3.0, 1.0, 1.0, 1.0])


def _qubit_op(m: np.ndarray, which: int) -> np.ndarray:
    i2 = np.eye(2)
    return np.kron(m, i2) if which == 1 else np.kron(i2, m)


def build_h2(p: ModelParams) -> OperatorMatrix:
    """Two-site cavity Hamiltonian.

    ``H2 = Δ·diag(-3, 1, 1, 1) ⊗ 1 + ω a†a + Σ_r λ_r/(2√2) (1 - σx_r) ⊗ (e^{-iφ_r} a† + h.c.)``.
    ``lambda2`` may be negative; this is the same as ``phi2 + π``.
    """
    n = p.n_max
    _, _, num = boson_ops(n)
    i4 = np.eye(4)
    h = np.kron(p.delta * np.diag(MATTER_ENERGIES_2CK), np.eye(n))
    h = h + p.omega * np.kron(i4, num.entries)
    for which, lam, phi in ((1, p.lambda1, p.phi1), (2, p.lambda2, p.phi2)):
        if lam != 0.0:
            h = h + lam / (2 * math.sqrt(2)) * np.kron(i4 - _qubit_op(SIGMA_X, which), _quadrature(n, phi))
    return OperatorMatrix(spec_2ck(n), h)


# Columns: images of the z-basis states in the number basis.
# 1CK number order: |n_LR n_c> = (|00>, |11>).
_U1 = np.array([[1, 1], [-1j, 1j]], dtype=complex) / math.sqrt(2)
# 2CK number order: |n_LR n_c1 n_c2> = (|000>, |011>, |101>, |110>);
# z order (--, -+, +-, ++).
_U2 = 0.5 * np.array(
    [
        [1, 1, 1, 1],
        [1, -1, -1, 1],
        [-1j, -1j, 1j, 1j],
        [-1j, 1j, -1j, 1j],
    ],
    dtype=complex,
)
NUMBER_LABELS_1CK = ("00", "11")
NUMBER_LABELS_2CK = ("000", "011", "101", "110")


def basis_change(model: str) -> OperatorMatrix:
    """Unitary from z-basis coordinates to number-basis coordinates.

    Parameters
    ----------
    model : {"1CK", "2CK"}

    Returns
    -------
    OperatorMatrix
        Matter-only matrix ``U`` with ``psi_number = U @ psi_z``.
    """
    key = model.upper()
    if key == "1CK":
        return OperatorMatrix(HilbertSpec((2,), MatterBasis.NUMBER_LRC, photon=False), _U1)
    if key == "2CK":
        return OperatorMatrix(HilbertSpec((4,), MatterBasis.NUMBER_LRC, photon=False), _U2)
    raise ValueError(f"unknown model {model!r}")


def number_to_z(matter_number: np.ndarray, model: str) -> np.ndarray:
    """Map number-basis matter coordinates to z-basis coordinates."""
    return basis_change(model).entries.conj().T @ np.asarray(matter_number, dtype=complex)


def number_basis_state(label: str, model: str) -> np.ndarray:
    """Unit vector of a number-basis label such as ``"110"``."""
    labels = NUMBER_LABELS_1CK if model.upper() == "1CK" else NUMBER_LABELS_2CK
    v = np.zeros(len(labels), dtype=complex)
    v[labels.index(label)] = 1.0
    return v


def lift(matter: np.ndarray, spec: HilbertSpec) -> OperatorMatrix:
    """Matter operator (z coordinates) tensored with the photon identity."""
    return OperatorMatrix(spec, np.kron(matter, np.eye(spec.n_max)))


def _outer_parity_matter() -> np.ndarray:
    d = np.diag([-1.0, -1.0, 1.0, 1.0]).astype(complex)  # 2 n_LR - 1
    return PARITY_SIGN * (_U2.conj().T @ d @ _U2)


def _inner_parity_matter() -> np.ndarray:
    # i γ_{s-1,2} γ_{s+1,1} reduces to σx(1) σz(2) in the z basis
    return PARITY_SIGN * np.kron(SIGMA_X, SIGMA_Z)


def parity_operator_lr(n_max: int, pair: str = "outer") -> OperatorMatrix:
    """Parity of the Majorana pair flanking the two-site cavity.

    Parameters
    ----------
    n_max : int
        Photon cutoff of the 2CK space.
    pair : {"outer", "inner"}
        ``"outer"`` is ``s_P (2 n_LR - 1)`` for the non-local fermion built
        from the Majoranas outside both cavity sites, conjugated into z
        coordinates.  ``"inner"`` is ``s_P · i γ_{s-1,2} γ_{s+1,1}``, the pair
        adjacent to the first cavity site, in the same gauge as the full-chain
        reduction.
    """
    if pair == "outer":
        m = _outer_parity_matter()
    elif pair == "inner":
        m = _inner_parity_matter()
    else:
        raise ValueError(f"unknown Majorana pair {pair!r}")
    return lift(m, spec_2ck(n_max))


def braiding_operator(n_max: int, pair: str = "outer") -> OperatorMatrix:
    """``U_B = (1 + γL γR)/√2`` with ``γL γR = -i P``."""
    p = parity_operator_lr(n_max, pair).entries
    eye = np.eye(p.shape[0])
    return OperatorMatrix(spec_2ck(n_max), (eye - 1j * p) / math.sqrt(2))


def fusion_correlator_1ck(n_max: int) -> OperatorMatrix:
    """``P(s-1, s+1) = -σx ⊗ 1`` on the 1CK space."""
    return lift(-SIGMA_X, spec_1ck(n_max))


def photon_annihilation(spec: HilbertSpec) -> OperatorMatrix:
    a, _, _ = boson_ops(spec.n_max)
    return OperatorMatrix(spec, np.kron(np.eye(spec.matter_dim), a.entries))


def photon_number(spec: HilbertSpec) -> OperatorMatrix:
    _, _, num = boson_ops(spec.n_max)
    return OperatorMatrix(spec, np.kron(np.eye(spec.matter_dim), num.entries))


def lambda2_effective(p: ModelParams) -> float:
    """Real coupling ``λ2 e^{iφ2}`` for ``φ2 ∈ {0, π}`` (mod 2π)."""
    c = math.cos(p.phi2)
    if abs(abs(c) - 1.0) > 1e-12:
        raise ValueError("an effective real lambda2 needs phi2 = 0 or pi")
    return p.lambda2 * (1.0 if c > 0 else -1.0)


def reference_ground_state_lambda2_zero(p: ModelParams) -> QuantumState:
    """Ultrastrong-coupling ground state of the 2CK model at ``λ2 → 0``.

    Matter part ``|•_LR, •_c1, o_c2>`` in the number basis with the photon in
    ``|α>``, ``α = -λ1 e^{-iφ1}/(√2 ω)``.
    """
    m = number_to_z(number_basis_state("110", "2CK"), "2CK")
    alpha = -p.lambda1 * np.exp(-1j * p.phi1) / (math.sqrt(2) * p.omega)
    ph = coherent_state(alpha, p.n_max)
    return QuantumState.from_unnormalized(spec_2ck(p.n_max), np.kron(m, ph.amplitudes))


@lru_cache(maxsize=8)
def calibrate_parity_sign(lambda1: float = 4.0, omega: float = 2.0, delta: float = 0.5, n_max: int = 60) -> int:
    """Sign making the exact ground state read ``P → -1`` as ``λ2 → 0+``.

    Uses the inner Majorana pair, whose readout is continuous in ``λ2`` at
    the origin.  The outer pair gives the same sign on the analytic
    ``λ2 → 0`` state (``n_LR = 1``).  The result must equal :data:`PARITY_SIGN`.
    """
    from .hilbert import eigh

    p = ModelParams(delta=delta, omega=omega, lambda1=lambda1, lambda2=1e-3, n_max=n_max)
    gs = eigh(build_h2(p), n_lowest=1).ground
    raw = PARITY_SIGN * gs.expect(parity_operator_lr(n_max, "inner")).real
    return -1 if raw > 0 else 1
