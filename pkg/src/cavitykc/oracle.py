"""Full Kitaev chain coupled to one cavity mode, used to validate reductions.

Conventions
-----------
* Sites are numbered ``1..N`` and ordered left to right in the Kronecker
  product, followed by the photon factor.  Each site factor has basis
  ``(|0>, |1>)`` (empty, occupied).
* Jordan-Wigner: ``c_j = Z_1 ... Z_{j-1} σ⁻_j`` with ``Z = diag(1, -1)``.
* Majoranas: ``γ_{j,1} = c_j + c_j†`` and ``γ_{j,2} = -i(c_j - c_j†)``.
* Chain Hamiltonian::

      H_KC = -μ Σ_j (n_j - 1) - t Σ_j (c_j† c_{j+1} + h.c.)
             + Δ Σ_j (c_j c_{j+1} + c_{j+1}† c_j†)

  At ``μ = 0, t = Δ`` this equals ``iΔ Σ γ_{j,2} γ_{j+1,1}``.
* Bond fermions ``d_j = (γ_{j,2} + i γ_{j+1,1})/2`` so that
  ``2 d_j† d_j - 1 = i γ_{j,2} γ_{j+1,1}``; the edge fermion is
  ``e = (γ_{N,2} + i γ_{1,1})/2``.
* Cavity coupling ``(1/√n_cav) Σ_{j∈cav} λ_j n_j (e^{-iφ_j} a† + e^{iφ_j} a)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import ConfigError
from .hilbert import HilbertSpec, MatterBasis, OperatorMatrix, QuantumState, boson_ops, eigh
from .models import ModelParams, build_h1, build_h2, fusion_correlator_1ck, h1_terms, spec_1ck

PAIRING_SIGN = +1
JW_CONVENTION = "c_j = Z_1...Z_{j-1} sigma^-_j, Z = diag(1,-1), site 1 leftmost"
MAX_DIM = 4096
LAMBDA_CALIBRATION = 1.0  # reduced coupling / chain coupling


@dataclass(frozen=True)
class ChainSpec:
    """Parameters of the full chain.

    ``cavity_sites`` are 1-based and must be contiguous.
    """

    n_sites: int
    delta: float = 0.5
    t_hop: float | None = None
    mu: float = 0.0
    cavity_sites: tuple[int, ...] = (3,)
    n_max: int = 64
    omega: float = 2.0

    def __post_init__(self):
        if self.t_hop is None:
            object.__setattr__(self, "t_hop", self.delta)
        sites = tuple(sorted(int(s) for s in self.cavity_sites))
        object.__setattr__(self, "cavity_sites", sites)
        if self.n_sites < 2:
            raise ConfigError("chain needs at least two sites")
        if any(s < 1 or s > self.n_sites for s in sites):
            raise ConfigError(f"cavity sites {sites} outside 1..{self.n_sites}")
        if sites and sites != tuple(range(sites[0], sites[0] + len(sites))):
            raise ConfigError("cavity sites must be contiguous")
        if self.n_max < 2:
            raise ConfigError("n_max must be at least 2")

    @property
    def sweet_spot(self) -> bool:
        return self.mu == 0.0 and self.t_hop == self.delta

    @property
    def in_bulk(self) -> bool:
        return bool(self.cavity_sites) and self.cavity_sites[0] >= 2 and self.cavity_sites[-1] <= self.n_sites - 1

    @classmethod
    def from_params(cls, p: ModelParams, n_cavity_sites: int = 1) -> "ChainSpec":
        s = p.cavity_site
        return cls(
            n_sites=p.chain_length,
            delta=p.delta,
            mu=p.mu,
            cavity_sites=tuple(range(s, s + n_cavity_sites)),
            n_max=p.n_max,
            omega=p.omega,
        )


# ---------------------------------------------------------------- fermions

_Z = np.diag([1.0, -1.0])
_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])


@lru_cache(maxsize=16)
def _annihilators(n: int) -> tuple[np.ndarray, ...]:
    ops = []
    for j in range(n):
        m = np.ones((1, 1))
        for k in range(n):
            m = np.kron(m, _Z if k < j else (_LOWER if k == j else np.eye(2)))
        m.setflags(write=False)
        ops.append(m)
    return tuple(ops)


def annihilator(n_sites: int, j: int) -> np.ndarray:
    """``c_j`` (1-based) on the ``2^N`` fermion space."""
    return _annihilators(n_sites)[j - 1]


def number_op(n_sites: int, j: int) -> np.ndarray:
    c = annihilator(n_sites, j)
    return c.T @ c


def majorana(n_sites: int, j: int, k: int) -> np.ndarray:
    """``γ_{j,k}`` for ``k ∈ {1, 2}``."""
    c = annihilator(n_sites, j).astype(complex)
    if k == 1:
        return c + c.T
    if k == 2:
        return -1j * (c - c.T)
    raise ValueError("Majorana index must be 1 or 2")


def fermion_parity(n_sites: int) -> np.ndarray:
    """``Π_j (1 - 2 n_j)``, diagonal ±1."""
    bits = _popcount(n_sites)
    return np.diag(1.0 - 2.0 * (bits % 2))


def _popcount(n_sites: int) -> np.ndarray:
    idx = np.arange(2**n_sites)
    return np.array([bin(i).count("1") for i in idx])


def sector_indices(n_sites: int, sector: str) -> np.ndarray:
    par = _popcount(n_sites) % 2
    if sector == "even":
        return np.flatnonzero(par == 0)
    if sector == "odd":
        return np.flatnonzero(par == 1)
    raise ValueError(f"unknown sector {sector!r}")


def chain_hamiltonian(spec: ChainSpec) -> np.ndarray:
    """Fermionic ``H_KC`` on ``2^N`` states."""
    n = spec.n_sites
    c = [annihilator(n, j) for j in range(1, n + 1)]
    dim = 2**n
    h = np.zeros((dim, dim))
    for j in range(n):
        h -= spec.mu * (c[j].T @ c[j] - np.eye(dim))
    for j in range(n - 1):
        hop = c[j].T @ c[j + 1]
        h -= spec.t_hop * (hop + hop.T)
        pair = c[j] @ c[j + 1]
        h += PAIRING_SIGN * spec.delta * (pair + pair.T)
    return h.astype(complex)


def bond_annihilator(n_sites: int, j: int) -> np.ndarray:
    """``d_j = (γ_{j,2} + i γ_{j+1,1})/2`` for ``j = 1..N-1``."""
    return 0.5 * (majorana(n_sites, j, 2) + 1j * majorana(n_sites, j + 1, 1))


def edge_annihilator(n_sites: int) -> np.ndarray:
    return 0.5 * (majorana(n_sites, n_sites, 2) + 1j * majorana(n_sites, 1, 1))


# ---------------------------------------------------------------- full chain

Coupling = tuple[int, float, float]


def _chain_space(spec: ChainSpec, sector: str | None) -> HilbertSpec:
    if sector is None:
        return HilbertSpec((2,) * spec.n_sites + (spec.n_max,), MatterBasis.CHAIN_SITES)
    return HilbertSpec((2 ** (spec.n_sites - 1), spec.n_max), MatterBasis.CHAIN_SITES, sector=sector)


def _check_couplings(spec: ChainSpec, couplings: Sequence[Coupling]):
    sites = tuple(sorted(int(s) for s, _, _ in couplings))
    if sites and sites != spec.cavity_sites:
        raise ConfigError(f"couplings on {sites} but cavity sites are {spec.cavity_sites}")


@dataclass(frozen=True, eq=False)
class ChainTerms:
    """Pieces of ``H = H_f ⊗ 1 + ω 1 ⊗ a†a + Σ_j g_j n_j ⊗ q_j``."""

    h_f: np.ndarray
    number: list[np.ndarray]
    quad: list[np.ndarray]
    gains: list[float]
    photon_number: np.ndarray
    omega: float

    def assemble(self, scale: float = 1.0) -> np.ndarray:
        """Full matrix with every coupling multiplied by ``scale``."""
        nf, nb = self.h_f.shape[0], self.photon_number.shape[0]
        h = np.kron(self.h_f, np.eye(nb)) + self.omega * np.kron(np.eye(nf), self.photon_number)
        for nj, q, g in zip(self.number, self.quad, self.gains):
            if g != 0.0:
                h = h + scale * g * np.kron(nj, q)
        return h

    def parts(self) -> tuple[np.ndarray, np.ndarray]:
        """``(H0, V)`` with ``H = H0 + s V`` for a global coupling scale ``s``."""
        h0 = self.assemble(0.0)
        return h0, self.assemble(1.0) - h0


def chain_terms(spec: ChainSpec, couplings: Sequence[Coupling], sector: str | None = None) -> ChainTerms:
    _check_couplings(spec, couplings)
    n = spec.n_sites
    keep = None if sector is None else sector_indices(n, sector)

    def r(m):
        return m if keep is None else m[np.ix_(keep, keep)]

    a, ad, num = boson_ops(spec.n_max)
    ncav = max(len(couplings), 1)
    nums, quads, gains = [], [], []
    for site, lam, phi in couplings:
        nums.append(r(number_op(n, site).astype(complex)))
        quads.append(np.exp(-1j * phi) * ad.entries + np.exp(1j * phi) * a.entries)
        gains.append(lam / (LAMBDA_CALIBRATION * math.sqrt(ncav)))
    return ChainTerms(r(chain_hamiltonian(spec)), nums, quads, gains, num.entries, spec.omega)


def build_full_chain(
    spec: ChainSpec, couplings: Sequence[Coupling], sector: str | None = None, max_dim: int = MAX_DIM
) -> OperatorMatrix:
    """Dense chain-plus-cavity Hamiltonian.

    Parameters
    ----------
    spec : ChainSpec
    couplings : list of (site, λ, φ)
        One entry per cavity site.  Use λ as it appears in the reduced model.
    sector : {"even", "odd"}, optional
        Build only that fermion-parity block (dimension ``2^{N-1} n_max``).
    max_dim : int
        Refuse to build anything larger.
    """
    if spec.n_sites > 8:
        raise ConfigError("full chain limited to N <= 8")
    space = _chain_space(spec, sector)
    if space.dim > max_dim:
        raise ConfigError(f"dimension {space.dim} exceeds cap {max_dim}")
    return OperatorMatrix(space, chain_terms(spec, couplings, sector).assemble())


def _chain_size(space: HilbertSpec) -> int:
    if space.basis is not MatterBasis.CHAIN_SITES:
        raise ValueError("state is not a full-chain state")
    if space.sector is None:
        return len(space.subsystem_dims) - 1
    return int(round(math.log2(space.subsystem_dims[0]))) + 1


def fermion_operator(space: HilbertSpec, m: np.ndarray) -> np.ndarray:
    """Restrict a ``2^N`` fermion matrix to ``space`` (full or one sector)."""
    if space.sector is None:
        return m
    keep = sector_indices(_chain_size(space), space.sector)
    return m[np.ix_(keep, keep)]


def fermion_expectation(psi: QuantumState, m: np.ndarray) -> complex:
    """``<psi| m ⊗ 1 |psi>`` for a fermion-only matrix ``m``."""
    mm = fermion_operator(psi.spec, m)
    amp = psi.amplitudes.reshape(mm.shape[0], psi.spec.n_max)
    return complex(np.vdot(amp, mm @ amp))


def majorana_correlator(psi: QuantumState, j2: int, k1: int) -> float:
    """``i <γ_{j,2} γ_{k,1}>`` on a full-chain state."""
    n = _chain_size(psi.spec)
    if not (1 <= j2 <= n and 1 <= k1 <= n):
        raise ValueError("site out of range")
    m = 1j * majorana(n, j2, 2) @ majorana(n, k1, 1)
    return fermion_expectation(psi, m).real


def parity_projector(space: HilbertSpec, sector: str) -> OperatorMatrix:
    """Projector onto a fermion-parity sector of the full space."""
    n = _chain_size(space)
    par = np.diag(fermion_parity(n))
    sign = 1.0 if sector == "even" else -1.0
    diag = np.repeat((1.0 + sign * par) / 2.0, space.n_max)
    return OperatorMatrix(space, np.diag(diag).astype(complex))


def sector_project(obj: Union[OperatorMatrix, QuantumState], sector: str):
    """Restrict an operator or a state on the full chain space to one sector.

    States are renormalized after projection.
    """
    space = obj.spec
    if space.sector is not None:
        raise ValueError("object is already sector-restricted")
    n = _chain_size(space)
    keep_f = sector_indices(n, sector)
    keep = (keep_f[:, None] * space.n_max + np.arange(space.n_max)[None, :]).ravel()
    target = _chain_space(ChainSpec(n, cavity_sites=(), n_max=space.n_max), sector)
    if isinstance(obj, OperatorMatrix):
        return OperatorMatrix(target, obj.entries[np.ix_(keep, keep)])
    return QuantumState.from_unnormalized(target, obj.amplitudes[keep])


def embed_sector_state(psi: QuantumState) -> QuantumState:
    """Inverse of :func:`sector_project` for states."""
    n = _chain_size(psi.spec)
    keep_f = sector_indices(n, psi.spec.sector)
    full = np.zeros((2**n, psi.spec.n_max), dtype=complex)
    full[keep_f] = psi.amplitudes.reshape(len(keep_f), psi.spec.n_max)
    return QuantumState(_chain_space(ChainSpec(n, cavity_sites=(), n_max=psi.spec.n_max), None), full.ravel())


# ---------------------------------------------------------------- reductions


def _active_bonds(spec: ChainSpec) -> list[int]:
    s = spec.cavity_sites
    return list(range(s[0] - 1, s[-1] + 1))


def _d_vacuum(n: int) -> np.ndarray:
    occ = sum(b.conj().T @ b for b in (bond_annihilator(n, j) for j in range(1, n)))
    e = edge_annihilator(n)
    occ = occ + e.conj().T @ e
    w, v = np.linalg.eigh(occ)
    if abs(w[0]) > 1e-10 or w[1] < 0.5:
        raise RuntimeError("bond-fermion vacuum is not unique")
    vac = v[:, 0]
    return vac / (vac[np.argmax(np.abs(vac))] / abs(vac[np.argmax(np.abs(vac))]))


def _fix_phase(target: np.ndarray, source: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Rephase ``target`` so ``<target|op|source> = -1/2``."""
    amp = np.vdot(target, op @ source)
    if abs(abs(amp) - 0.5) > 1e-10:
        raise RuntimeError(f"unexpected matrix element modulus {abs(amp)}")
    return target * (amp / abs(amp)) * -1.0


def reduction_isometry(spec: ChainSpec) -> np.ndarray:
    """Columns: fermion states of the reduced matter basis (z coordinates).

    All bonds outside the cavity region and the edge fermion are empty.  The
    phases are fixed so that each ``n_j`` of a cavity site acts as
    ``(1 - σx)/2`` on its qubit.
    """
    n = spec.n_sites
    if not spec.in_bulk:
        raise ConfigError("reduction needs cavity sites in the bulk")
    vac = _d_vacuum(n)
    b = _active_bonds(spec)
    dd = {j: bond_annihilator(n, j).conj().T for j in b}
    if len(spec.cavity_sites) == 1:
        (s,) = spec.cavity_sites
        filled = dd[s - 1] @ dd[s] @ vac
        filled = _fix_phase(filled / np.linalg.norm(filled), vac, number_op(n, s))
        return np.stack([vac, filled], axis=1)
    if len(spec.cavity_sites) == 2:
        s = spec.cavity_sites[0]
        ns, ns1 = number_op(n, s), number_op(n, s + 1)
        pm = dd[s - 1] @ dd[s] @ vac  # (+,-) = |••o>
        mp = dd[s] @ dd[s + 1] @ vac  # (-,+) = |o••>
        pp = dd[s - 1] @ dd[s + 1] @ vac  # (+,+) = |•o•>
        pm = _fix_phase(pm / np.linalg.norm(pm), vac, ns)
        mp = _fix_phase(mp / np.linalg.norm(mp), vac, ns1)
        pp = _fix_phase(pp / np.linalg.norm(pp), mp, ns)
        return np.stack([vac, mp, pm, pp], axis=1)
    raise ConfigError("reduction implemented for one or two cavity sites")


def spectator_shift(spec: ChainSpec) -> float:
    """Energy of the empty spectator bonds relative to the reduced model."""
    n_active = len(_active_bonds(spec))
    return -(spec.n_sites - 1 - n_active) * spec.delta


def reduced_model(spec: ChainSpec, couplings: Sequence[Coupling]) -> OperatorMatrix:
    """The matching reduced Hamiltonian (``build_h1`` or ``build_h2``)."""
    cp = sorted(couplings)
    if len(cp) == 1:
        p = ModelParams(delta=spec.delta, omega=spec.omega, lambda1=cp[0][1], phi1=cp[0][2], n_max=spec.n_max)
        return build_h1(p)
    p = ModelParams(
        delta=spec.delta,
        omega=spec.omega,
        lambda1=cp[0][1],
        phi1=cp[0][2],
        lambda2=cp[1][1],
        phi2=cp[1][2],
        n_max=spec.n_max,
    )
    return build_h2(p)


def project_to_reduced(spec: ChainSpec, couplings: Sequence[Coupling]) -> tuple[np.ndarray, float]:
    """``W† H W`` on the reduced block and the leakage ``||(1 - WW†) H W||``."""
    terms = chain_terms(spec, couplings)
    w = reduction_isometry(spec)
    nb = spec.n_max
    wf = np.kron(w, np.eye(nb))
    h = terms.assemble()
    hw = h @ wf
    red = wf.conj().T @ hw
    leak = float(np.linalg.norm(hw - wf @ red))
    return red, leak


@dataclass(frozen=True)
class ReductionReport:
    block_error: float  # max |W†HW - (H_red + shift)|
    leakage: float
    shift: float
    reduced_levels: np.ndarray
    full_levels: np.ndarray
    max_level_error: float  # each reduced level vs its nearest full-chain level
    calibration: float = LAMBDA_CALIBRATION


def reduction_check(spec: ChainSpec, couplings: Sequence[Coupling], n_levels: int = 8) -> ReductionReport:
    """Compare the full chain against the reduced model.

    The block spanned by the reduced basis (spectator bonds and edge mode
    empty) must equal the reduced Hamiltonian plus :func:`spectator_shift`,
    and every one of the lowest ``n_levels`` shifted reduced levels must
    appear in the full even-sector spectrum.
    """
    if not spec.sweet_spot:
        raise ConfigError("reductions hold only at mu = 0, t = delta")
    red_block, leak = project_to_reduced(spec, couplings)
    h_red = reduced_model(spec, couplings).entries
    shift = spectator_shift(spec)
    block_err = float(np.max(np.abs(red_block - h_red - shift * np.eye(h_red.shape[0]))))
    red_levels = np.linalg.eigvalsh(h_red)[:n_levels] + shift
    full = build_full_chain(spec, couplings, sector="even")
    top = red_levels[-1]
    full_levels = np.linalg.eigvalsh(full.entries)
    full_levels = full_levels[full_levels <= top + 1.0]
    err = float(max(np.min(np.abs(full_levels - e)) for e in red_levels))
    return ReductionReport(block_err, leak, shift, red_levels, full_levels, err)


def edge_mode_splitting(spec: ChainSpec) -> float:
    """``|E_0(even) - E_0(odd)|`` of the uncoupled chain with photons.

    At ``λ = 0`` these are the two lowest levels of the whole space.
    """
    e = []
    for sec in ("even", "odd"):
        h = build_full_chain(spec, [], sector=sec)
        e.append(eigh(h, n_lowest=1, check_residual=False).ground_energy)
    return abs(e[0] - e[1])


def full_chain_ramp(
    spec: ChainSpec,
    lambda_max: float,
    t_a: float,
    phi: float = 0.0,
    n_samples: int = 512,
    dt: float | None = None,
):
    """Linear coupling ramp on the even sector of the full chain.

    Returns ``(times, P_full, P_reduced, dt)`` where ``P`` is
    ``i<γ_{s-1,2} γ_{s+1,1}>`` in the chain and ``-<σx>`` in the reduced
    model, both integrated with the same fixed step.
    """
    from .dynamics import AffineHamiltonian, RampSchedule, evolve

    if len(spec.cavity_sites) != 1:
        raise ConfigError("ramp comparison uses a single cavity site")
    (s,) = spec.cavity_sites
    sched = RampSchedule(lambda_max, t_a)
    terms = chain_terms(spec, [(s, 1.0, phi)], sector="even")
    h0, v = terms.parts()
    space = _chain_space(spec, "even")
    hf = AffineHamiltonian(space, h0, v, sched.coupling, (0.0, lambda_max))
    psi0_full = eigh(OperatorMatrix(space, h0), n_lowest=1, check_residual=False).ground

    p = ModelParams(delta=spec.delta, omega=spec.omega, lambda1=1.0, phi1=phi, n_max=spec.n_max)
    r0, rv = h1_terms(p)
    hr = AffineHamiltonian(spec_1ck(spec.n_max), r0, rv, sched.coupling, (0.0, lambda_max))
    psi0_red = eigh(OperatorMatrix(spec_1ck(spec.n_max), r0), n_lowest=1, check_residual=False).ground

    if dt is None:
        dt = 0.1 / max(hf.spectral_radius(), hr.spectral_radius())
    traj_f = evolve(hf, psi0_full, t_a, dt=dt, n_samples=n_samples, refine=False)
    traj_r = evolve(hr, psi0_red, t_a, dt=dt, n_samples=n_samples, refine=False)

    g = fermion_operator(space, 1j * majorana(spec.n_sites, s - 1, 2) @ majorana(spec.n_sites, s + 1, 1))
    nf = g.shape[0]
    amps = traj_f.states.reshape(len(traj_f.times), nf, spec.n_max)
    p_full = np.einsum("tan,ab,tbn->t", amps.conj(), g, amps).real
    corr = fusion_correlator_1ck(spec.n_max).entries
    p_red = np.einsum("ti,ij,tj->t", traj_r.states.conj(), corr, traj_r.states).real
    return traj_f.times, p_full, p_red, traj_f.dt
