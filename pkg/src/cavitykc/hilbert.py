"""Tensor-product Hilbert spaces with a truncated photon mode.

Every space is an ordered list of subsystem dimensions.  Matter factors come
first and the photon factor, when present, is always the last one.  Matrices
are dense complex ``numpy`` arrays; the thin wrappers below only carry the
tensor structure along so that mismatched operands fail loudly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .errors import DomainError

HERMITIAN_TOL = 1e-10
NORM_TOL = 1e-10


class MatterBasis(enum.Enum):
    """Coordinate system used for the matter factors of a space."""

    OCCUPATION_Z = "occupation_z"  # bond-fermion occupations / z-spin labels
    NUMBER_LRC = "number_lrc"  # non-local L,R fermion plus intracavity fermions
    CHAIN_SITES = "chain_sites"  # site occupations of the full chain


@dataclass(frozen=True)
class HilbertSpec:
    """Ordered tensor structure of a state space.

    Parameters
    ----------
    subsystem_dims : tuple of int
        Factor dimensions in the fixed order (matter..., photon).
    basis : MatterBasis
        Tag of the matter coordinates.
    photon : bool
        Whether the last factor is the truncated photon mode.
    sector : str, optional
        Name of a symmetry sector the space has been restricted to.
    """

    subsystem_dims: tuple[int, ...]
    basis: MatterBasis = MatterBasis.OCCUPATION_Z
    photon: bool = True
    sector: str | None = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.subsystem_dims)
        object.__setattr__(self, "subsystem_dims", dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"invalid subsystem dimensions {dims}")
        if self.photon and dims[-1] < 2:
            raise ValueError("photon cutoff n_max must be at least 2")

    @property
    def dim(self) -> int:
        return int(np.prod(self.subsystem_dims))

    @property
    def n_max(self) -> int:
        if not self.photon:
            raise ValueError("space has no photon factor")
        return self.subsystem_dims[-1]

    @property
    def matter_dims(self) -> tuple[int, ...]:
        return self.subsystem_dims[:-1] if self.photon else self.subsystem_dims

    @property
    def matter_dim(self) -> int:
        return int(np.prod(self.matter_dims)) if self.matter_dims else 1

    def with_n_max(self, n_max: int) -> "HilbertSpec":
        if not self.photon:
            raise ValueError("space has no photon factor")
        return HilbertSpec(self.matter_dims + (n_max,), self.basis, True, self.sector)

    def matter_spec(self) -> "HilbertSpec":
        return HilbertSpec(self.matter_dims, self.basis, False, self.sector)


def photon_spec(n_max: int) -> HilbertSpec:
    return HilbertSpec((n_max,), photon=True)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense square operator on a tagged tensor-product space."""

    spec: HilbertSpec
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.entries)
        if m.shape != (self.spec.dim, self.spec.dim):
            raise ValueError(f"matrix shape {m.shape} does not match dimension {self.spec.dim}")
        object.__setattr__(self, "entries", m)

    def _check(self, other: "OperatorMatrix"):
        if other.spec.subsystem_dims != self.spec.subsystem_dims:
            raise ValueError(
                f"operator dims {other.spec.subsystem_dims} != {self.spec.subsystem_dims}"
            )

    def __add__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.spec, self.entries + other.entries)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.spec, self.entries - other.entries)
        return NotImplemented

    def __neg__(self):
        return OperatorMatrix(self.spec, -self.entries)

    def __mul__(self, c):
        if np.isscalar(c):
            return OperatorMatrix(self.spec, c * self.entries)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.spec, self.entries @ other.entries)
        if isinstance(other, QuantumState):
            if other.spec.subsystem_dims != self.spec.subsystem_dims:
                raise ValueError("state and operator live on different spaces")
            return self.entries @ other.amplitudes
        return NotImplemented

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.spec, self.entries.conj().T)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0))

    def expect(self, psi: "QuantumState") -> complex:
        return psi.expect(self)


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Normalized state vector on a tagged space.

    Construction rejects vectors whose norm deviates from one by more than
    ``1e-10``; use :meth:`from_unnormalized` to rescale explicitly.
    """

    spec: HilbertSpec
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _frozen(np.ravel(self.amplitudes))
        if v.shape != (self.spec.dim,):
            raise ValueError(f"state length {v.size} does not match dimension {self.spec.dim}")
        nrm = float(np.linalg.norm(v))
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {nrm!r} differs from 1")
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def from_unnormalized(cls, spec: HilbertSpec, amplitudes) -> "QuantumState":
        v = np.asarray(amplitudes, dtype=complex).ravel()
        nrm = np.linalg.norm(v)
        if nrm < 1e-300:
            raise ValueError("cannot normalize the zero vector")
        return cls(spec, v / nrm)

    def inner(self, other: "QuantumState") -> complex:
        """Return ``<self|other>``."""
        if other.spec.subsystem_dims != self.spec.subsystem_dims:
            raise ValueError("states live on different spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expect(self, op: Union[OperatorMatrix, np.ndarray]) -> complex:
        m = op.entries if isinstance(op, OperatorMatrix) else np.asarray(op)
        if isinstance(op, OperatorMatrix) and op.spec.subsystem_dims != self.spec.subsystem_dims:
            raise ValueError("state and operator live on different spaces")
        return complex(np.vdot(self.amplitudes, m @ self.amplitudes))

    def matter_photon(self) -> np.ndarray:
        """Amplitudes reshaped to (matter_dim, n_max)."""
        return self.amplitudes.reshape(self.spec.matter_dim, self.spec.n_max)


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Ascending eigenvalues with gauge-fixed eigenvectors (columns)."""

    spec: HilbertSpec
    energies: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    hermiticity_error: float = 0.0
    max_residual: float = 0.0

    def state(self, k: int = 0) -> QuantumState:
        return QuantumState.from_unnormalized(self.spec, self.vectors[:, k])

    @property
    def ground(self) -> QuantumState:
        return self.state(0)

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])


@dataclass(frozen=True)
class Identity:
    """Identity placeholder for :func:`tensor`."""

    dim: int


def boson_ops(n_max: int) -> tuple[OperatorMatrix, OperatorMatrix, OperatorMatrix]:
    """Truncated ladder operators on ``n_max`` Fock states.

    Returns
    -------
    (a, a_dag, n) : tuple of OperatorMatrix
        ``n`` is computed as ``a_dag @ a`` so it is exactly diagonal.
    """
    if n_max < 2:
        raise ValueError("photon cutoff n_max must be at least 2")
    a = np.diag(np.sqrt(np.arange(1, n_max, dtype=float)), 1).astype(complex)
    ad = a.conj().T
    sp = photon_spec(n_max)
    return OperatorMatrix(sp, a), OperatorMatrix(sp, ad), OperatorMatrix(sp, ad @ a)


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
# index 0 is the lower-energy ("-") label throughout
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)


def spin_op(name: str) -> OperatorMatrix:
    """Pauli matrix on a bare two-level factor (index 0 is the ``-`` state)."""
    mats = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z, "i": np.eye(2, dtype=complex)}
    return OperatorMatrix(HilbertSpec((2,), photon=False), mats[name])


def tensor(ops: Sequence[Union[OperatorMatrix, Identity]], spec: HilbertSpec | None = None) -> OperatorMatrix:
    """Kronecker product in the given factor order.

    The resulting space concatenates the factor dimensions.  When ``spec`` is
    given its dimensions must agree and its tags are used for the result;
    otherwise the photon flag is inherited from the last factor.
    """
    if not ops:
        raise ValueError("tensor needs at least one factor")
    dims: list[int] = []
    m = np.ones((1, 1), dtype=complex)
    photon = False
    basis = MatterBasis.OCCUPATION_Z
    for op in ops:
        if isinstance(op, Identity):
            dims.append(op.dim)
            m = np.kron(m, np.eye(op.dim, dtype=complex))
            photon = False
        else:
            dims.extend(op.spec.subsystem_dims)
            m = np.kron(m, op.entries)
            photon = op.spec.photon
            if op.spec.basis is not MatterBasis.OCCUPATION_Z:
                basis = op.spec.basis
    if spec is None:
        spec = HilbertSpec(tuple(dims), basis=basis, photon=photon)
    elif int(np.prod(dims)) != spec.dim or (
        len(spec.subsystem_dims) == len(dims) and tuple(dims) != spec.subsystem_dims
    ):
        raise ValueError(f"factor dims {dims} do not match target {spec.subsystem_dims}")
    return OperatorMatrix(spec, m)


def eigh(H: OperatorMatrix, n_lowest: int | None = None, check_residual: bool = True) -> SpectrumResult:
    """Hermitian eigendecomposition with a fixed eigenvector gauge.

    Each eigenvector is rephased so its largest-magnitude component is real
    and positive.

    Parameters
    ----------
    H : OperatorMatrix
        Must be Hermitian within ``1e-10``.
    n_lowest : int, optional
        Only compute the lowest ``n_lowest`` eigenpairs.
    check_residual : bool
        Record ``max ||Hv - Ev|| / ||H||`` over the returned pairs.
    """
    herm = H.hermiticity_error()
    if herm > HERMITIAN_TOL:
        raise ValueError(f"matrix is not Hermitian (max |H - H^dag| = {herm:.3e})")
    m = 0.5 * (H.entries + H.entries.conj().T)
    if n_lowest is None or n_lowest >= m.shape[0]:
        w, v = np.linalg.eigh(m)
    else:
        w, v = scipy.linalg.eigh(m, subset_by_index=[0, n_lowest - 1], driver="evr")
    idx = np.argmax(np.abs(v), axis=0)
    lead = v[idx, np.arange(v.shape[1])]
    v = v * (np.abs(lead) / lead)[None, :]
    res = 0.0
    if check_residual:
        scale = max(np.linalg.norm(m, 2), 1e-300)
        res = float(np.max(np.linalg.norm(m @ v - v * w[None, :], axis=0)) / scale)
    return SpectrumResult(H.spec, w, v, herm, res)


def truncation_safe(alpha: complex, n_max: int) -> bool:
    """Cutoff heuristic ``|alpha|^2 + 8|alpha| + 16 <= n_max``."""
    r = abs(alpha)
    return r * r + 8 * r + 16 <= n_max


def coherent_amplitudes(alpha: complex, n_max: int) -> np.ndarray:
    """Untruncated-normalization coherent amplitudes ``e^{-|a|^2/2} a^n/sqrt(n!)``."""
    c = np.empty(n_max, dtype=complex)
    c[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, n_max):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def coherent_state(alpha: complex, n_max: int) -> QuantumState:
    """Truncated coherent state, renormalized after truncation."""
    if not truncation_safe(alpha, n_max):
        raise DomainError(
            f"|alpha|={abs(alpha):.4g} needs n_max >= {abs(alpha) ** 2 + 8 * abs(alpha) + 16:.1f}, got {n_max}"
        )
    c = coherent_amplitudes(alpha, n_max)
    leak = 1.0 - float(np.vdot(c, c).real)
    if leak > 1e-10:
        raise DomainError(f"coherent state leaks {leak:.3e} beyond the cutoff")
    return QuantumState.from_unnormalized(photon_spec(n_max), c)


def fock_state(n: int, n_max: int) -> QuantumState:
    v = np.zeros(n_max, dtype=complex)
    v[n] = 1.0
    return QuantumState(photon_spec(n_max), v)


def coherent_overlap(alpha: complex, beta: complex) -> complex:
    """Closed-form ``<alpha|beta>`` of untruncated coherent states."""
    return complex(np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * abs(beta) ** 2 + np.conj(alpha) * beta))


def displacement_op(alpha: complex, n_max: int) -> OperatorMatrix:
    """``exp(alpha a^dag - conj(alpha) a)`` of the truncated ladder operators."""
    a, ad, _ = boson_ops(n_max)
    return OperatorMatrix(photon_spec(n_max), scipy.linalg.expm(alpha * ad.entries - np.conj(alpha) * a.entries))


def photon_parity(n_max: int) -> OperatorMatrix:
    return OperatorMatrix(photon_spec(n_max), np.diag((-1.0) ** np.arange(n_max)))


def product_state(matter: np.ndarray, photon: QuantumState, spec: HilbertSpec) -> QuantumState:
    """``matter (x) photon`` on ``spec`` (matter given as raw coordinates)."""
    m = np.asarray(matter, dtype=complex).ravel()
    return QuantumState.from_unnormalized(spec, np.kron(m, photon.amplitudes))
