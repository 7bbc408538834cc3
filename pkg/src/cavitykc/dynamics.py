"""Time evolution under a linear coupling ramp and the fusion diagnostic."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol, Union

import numpy as np
from scipy.integrate import trapezoid

from .errors import ConvergenceError
from .hilbert import HilbertSpec, OperatorMatrix, QuantumState, eigh
from .models import ModelParams, build_h1, fusion_correlator_1ck, h1_terms, spec_1ck
from .tables import ResultTable

DEFAULT_SAMPLES = 512
DT_RHO = 0.1  # step size times spectral radius
SELF_CONSISTENCY_TOL = 1e-10
NORM_ABORT = 1e-6


@dataclass(frozen=True)
class RampSchedule:
    """Linear ramp ``λ(t) = λ_max t / t_a`` held at ``λ_max`` afterwards."""

    lambda_max: float
    t_a: float

    def __post_init__(self):
        if not self.t_a > 0:
            raise ValueError("annealing time must be positive")

    def coupling(self, t: float) -> float:
        return self.lambda_max * min(t / self.t_a, 1.0)


class TimeDependentHamiltonian(Protocol):
    spec: HilbertSpec

    def __call__(self, t: float) -> OperatorMatrix: ...


class AffineHamiltonian:
    """``H(t) = H0 + f(t) V`` with ``f`` bounded by ``coeff_range``.

    Parameters
    ----------
    spec : HilbertSpec
    h0, v : ndarray
        Hermitian matrices.
    coeff : callable
        Scalar coefficient ``f(t)``.
    coeff_range : (float, float)
        Bounds of ``f`` over the integration window; the spectral radius is
        convex in ``f`` so its maximum sits at one of the two ends.
    """

    def __init__(self, spec: HilbertSpec, h0: np.ndarray, v: np.ndarray, coeff: Callable[[float], float], coeff_range):
        self.spec = spec
        self.h0 = np.asarray(h0, dtype=complex)
        self.v = np.asarray(v, dtype=complex)
        self.coeff = coeff
        self.coeff_range = tuple(coeff_range)
        self._stack = np.vstack([self.h0, self.v])
        self._d = self.h0.shape[0]

    def __call__(self, t: float) -> OperatorMatrix:
        return OperatorMatrix(self.spec, self.h0 + self.coeff(t) * self.v)

    def apply(self, t: float, psi: np.ndarray) -> np.ndarray:
        y = self._stack @ psi
        return y[: self._d] + self.coeff(t) * y[self._d :]

    def spectral_radius(self) -> float:
        return max(float(np.max(np.abs(np.linalg.eigvalsh(self.h0 + f * self.v)))) for f in self.coeff_range)


def _apply(H, t: float, psi: np.ndarray) -> np.ndarray:
    if hasattr(H, "apply"):
        return H.apply(t, psi)
    return H(t).entries @ psi


def _spectral_radius(H, t_final: float) -> float:
    if hasattr(H, "spectral_radius"):
        return H.spectral_radius()
    return max(float(np.max(np.abs(np.linalg.eigvalsh(H(t).entries)))) for t in (0.0, 0.5 * t_final, t_final))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution of the Schrödinger equation."""

    spec: HilbertSpec
    times: np.ndarray
    states: np.ndarray = field(repr=False)  # (n_samples, dim)
    dt: float
    norm_drift: float
    deficits: tuple[float, ...] = ()

    @property
    def final_state(self) -> QuantumState:
        return QuantumState.from_unnormalized(self.spec, self.states[-1])


def _rk4(H, psi0: np.ndarray, n_intervals: int, steps_per_sample: int, dt: float) -> np.ndarray:
    out = np.empty((n_intervals + 1, psi0.size), dtype=complex)
    psi = psi0.copy()
    out[0] = psi
    t = 0.0
    h2 = 0.5 * dt
    k = 0
    for i in range(1, n_intervals + 1):
        for _ in range(steps_per_sample):
            t = k * dt
            k1 = -1j * _apply(H, t, psi)
            k2 = -1j * _apply(H, t + h2, psi + h2 * k1)
            k3 = -1j * _apply(H, t + h2, psi + h2 * k2)
            k4 = -1j * _apply(H, t + dt, psi + dt * k3)
            psi = psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            k += 1
        out[i] = psi
    return out


def evolve(
    H_of_t: Union[AffineHamiltonian, TimeDependentHamiltonian],
    psi0: QuantumState,
    t_final: float,
    dt: float | None = None,
    n_samples: int = DEFAULT_SAMPLES,
    refine: bool = True,
    max_halvings: int = 4,
) -> Trajectory:
    """Integrate ``i dψ/dt = H(t) ψ`` with fixed-step classical RK4.

    The step is aligned to ``n_samples`` uniform output times and chosen so
    that ``dt · ρ(H) <= 0.1``.  With ``refine`` the run is repeated at half
    the step until the final states agree to a fidelity deficit below
    ``1e-10``; the finer run is returned.

    Raises
    ------
    ConvergenceError
        If the norm drifts by more than ``1e-6`` or refinement fails.
    """
    if abs(np.linalg.norm(psi0.amplitudes) - 1.0) > 1e-10:
        raise ValueError("initial state is not normalized")
    if n_samples < 2:
        raise ValueError("need at least two samples")
    n_int = n_samples - 1
    rho = _spectral_radius(H_of_t, t_final)
    dt_max = DT_RHO / max(rho, 1e-300)
    if dt is not None:
        if dt * rho > DT_RHO * (1 + 1e-9):
            raise ValueError(f"dt * spectral radius = {dt * rho:.3g} exceeds {DT_RHO}")
        dt_max = dt
    steps = max(1, math.ceil(t_final / (n_int * dt_max)))
    if t_final == 0:
        steps = 0

    def run(m: int) -> tuple[np.ndarray, float]:
        step = t_final / (n_int * m) if m else 0.0
        return _rk4(H_of_t, psi0.amplitudes, n_int, m, step), step

    states, used = run(steps)
    deficits: list[float] = []
    if refine and steps:
        for _ in range(max_halvings):
            finer, fused = run(2 * steps)
            a, b = states[-1], finer[-1]
            d = 1.0 - abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real)
            deficits.append(max(d, 0.0))
            states, used, steps = finer, fused, 2 * steps
            if d < SELF_CONSISTENCY_TOL:
                break
        else:
            raise ConvergenceError(f"step halving did not converge; deficits {deficits}")
    norms = np.sum(np.abs(states) ** 2, axis=1)
    drift = float(np.max(np.abs(1.0 - norms)))
    if drift > NORM_ABORT:
        raise ConvergenceError(f"norm drift {drift:.3e} with dt = {used:.3e}; reduce the step size")
    times = np.linspace(0.0, t_final, n_samples)
    return Trajectory(psi0.spec, times, states, used, drift, tuple(deficits))


@dataclass(frozen=True, eq=False)
class RampResult:
    """Fusion correlator along a coupling ramp."""

    times: np.ndarray
    lambdas: np.ndarray
    correlator: np.ndarray
    gs_fidelity: np.ndarray
    norm_drift: float
    final_state: QuantumState
    dt: float
    deficits: tuple[float, ...] = ()

    @property
    def final_correlator(self) -> float:
        return float(self.correlator[-1])

    @property
    def time_averaged_correlator(self) -> float:
        t = self.times
        return float(trapezoid(self.correlator, t) / (t[-1] - t[0])) if t[-1] > t[0] else float(self.correlator[0])

    def table(self) -> ResultTable:
        rows = np.column_stack([self.times, self.lambdas, self.correlator, self.gs_fidelity])
        meta = {
            "norm_drift": self.norm_drift,
            "dt": self.dt,
            "P_final": self.final_correlator,
            "P_time_average": self.time_averaged_correlator,
        }
        return ResultTable(["t", "lambda_t", "P", "gs_fidelity"], rows, meta)


def static_correlator(p: ModelParams) -> float:
    """Ground-state ``P = -<σx>`` of ``build_h1``."""
    gs = eigh(build_h1(p), n_lowest=1, check_residual=False).ground
    return gs.expect(fusion_correlator_1ck(p.n_max)).real


def fusion_ramp(
    p: ModelParams,
    schedule: RampSchedule,
    n_samples: int = DEFAULT_SAMPLES,
    refine: bool = True,
    track_fidelity: bool = True,
) -> RampResult:
    """Ramp the 1CK coupling from zero and record ``P(t) = -<σx>``.

    Starts from the ground state of ``build_h1`` at ``λ = 0``; ``lambda1``
    of ``p`` is ignored in favour of the schedule.
    """
    q = p.replace(lambda1=0.0)
    h0, v = h1_terms(q)
    H = AffineHamiltonian(spec_1ck(p.n_max), h0, v, schedule.coupling, (0.0, schedule.lambda_max))
    psi0 = eigh(OperatorMatrix(H.spec, h0), n_lowest=1, check_residual=False).ground
    traj = evolve(H, psi0, schedule.t_a, n_samples=n_samples, refine=refine)
    corr = fusion_correlator_1ck(p.n_max).entries
    st = traj.states
    pc = np.einsum("ti,ij,tj->t", st.conj(), corr, st).real / np.sum(np.abs(st) ** 2, axis=1)
    lam = np.array([schedule.coupling(t) for t in traj.times])
    fid = np.full(len(lam), np.nan)
    if track_fidelity:
        for i, (t, l) in enumerate(zip(traj.times, lam)):
            g = eigh(H(t), n_lowest=1, check_residual=False).vectors[:, 0]
            fid[i] = abs(np.vdot(g, st[i])) ** 2 / np.vdot(st[i], st[i]).real
    return RampResult(traj.times, lam, pc, fid, traj.norm_drift, traj.final_state, traj.dt, traj.deficits)


def final_gs_fidelity(p: ModelParams, schedule: RampSchedule, result: RampResult) -> float:
    g = eigh(build_h1(p.replace(lambda1=schedule.lambda_max)), n_lowest=1, check_residual=False).ground
    return abs(g.inner(result.final_state)) ** 2


def ramp_convergence_scan(p: ModelParams, t_a_grid: Iterable[float], lambda_max: float | None = None) -> ResultTable:
    """Final and time-averaged correlator versus annealing time.

    Columns: ``t_a, P_final, P_time_average, gs_fidelity, norm_drift``.
    """
    lam = p.lambda1 if lambda_max is None else lambda_max
    rows = []
    for ta in t_a_grid:
        sched = RampSchedule(lam, float(ta))
        r = fusion_ramp(p, sched, track_fidelity=False)
        rows.append([float(ta), r.final_correlator, r.time_averaged_correlator, final_gs_fidelity(p, sched, r), r.norm_drift])
    meta = {"P_static": static_correlator(p.replace(lambda1=lam)), "lambda_max": lam}
    return ResultTable(["t_a", "P_final", "P_time_average", "gs_fidelity", "norm_drift"], rows, meta)


def fusion_static_map(p: ModelParams, omega_grid: Iterable[float], lambda_grid: Iterable[float]) -> ResultTable:
    """Ground-state correlator ``P`` over photon energy and coupling."""
    rows = []
    for w in omega_grid:
        for lam in lambda_grid:
            q = p.replace(omega=float(w), lambda1=float(lam))
            rows.append([float(w), float(lam), static_correlator(q)])
    return ResultTable(["omega", "lambda", "P"], rows)
