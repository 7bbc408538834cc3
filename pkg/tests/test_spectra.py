import math

import numpy as np
import pytest

from cavitykc.errors import DomainError
from cavitykc.models import ModelParams, build_h1, build_h2
from cavitykc.spectra import (
    compare_perturbative_1ck,
    cutoff_check,
    fidelity,
    ground_state,
    ground_state_indicators,
    laguerre,
    perturbative_levels_1ck,
    phase_diagram_sweep,
    sector_alphas,
    transition_analysis,
    usc_ground_2ck,
)

BASE = ModelParams(delta=0.5, omega=2.0, lambda1=4.0, n_max=60)


@pytest.mark.parametrize("n,x,expected", [(0, 4.0, 1.0), (1, 4.0, -3.0), (2, 4.0, 1.0), (3, 1.5, -0.6875)])
def test_laguerre_values(n, x, expected):
    assert laguerre(n, x) == pytest.approx(expected, abs=1e-14)


def test_laguerre_against_scipy():
    from scipy.special import eval_laguerre

    for n in range(12):
        assert laguerre(n, 2.7) == pytest.approx(eval_laguerre(n, 2.7), rel=1e-12, abs=1e-12)


def test_perturbative_levels_zero_coupling():
    levels = perturbative_levels_1ck(BASE.replace(lambda1=0.0), 2)
    assert levels[0][1:] == pytest.approx((1.0, -1.0))
    assert levels[1][1:] == pytest.approx((3.0, 1.0))


def test_perturbative_ground_value():
    _, _, e_minus = perturbative_levels_1ck(BASE, 0)[0]
    assert e_minus == pytest.approx(-8.00229, abs=1e-5)


def test_perturbative_matches_exact_at_zero_coupling():
    t = compare_perturbative_1ck(BASE.replace(lambda1=0.0), 2)
    assert t.column("abs_err").max() < 1e-10


@pytest.mark.xfail(strict=True, reason="same-n pairing is first order in Delta; errors reach 0.14-0.62 for lambda in [2, 6]")
@pytest.mark.parametrize("lam", [2.0, 4.0, 6.0])
def test_perturbative_accuracy_strong_coupling(lam):
    t = compare_perturbative_1ck(BASE.replace(lambda1=lam), 2)
    assert t.column("abs_err").max() <= 0.05


def test_sector_alphas():
    al = sector_alphas(BASE.replace(lambda2=2.0))
    assert al["I"] == pytest.approx(-6 / (2 * math.sqrt(2)))
    assert al["II"] == pytest.approx(-math.sqrt(2))
    assert al["III"] == pytest.approx(-1 / math.sqrt(2))


@pytest.mark.parametrize("l2,sector", [(2.0, "I"), (-2.0, "II"), (-6.0, "III")])
def test_usc_sector_selection(l2, sector):
    s = usc_ground_2ck(BASE.replace(lambda2=l2))
    assert s.sector == sector
    assert s.energy == pytest.approx(-BASE.omega * abs(s.alpha) ** 2)
    assert np.linalg.norm(s.state(60).amplitudes) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("l2", [0.0, -4.0])
def test_usc_boundaries_rejected(l2):
    with pytest.raises(DomainError):
        usc_ground_2ck(BASE.replace(lambda2=l2))


def test_usc_requires_phi1_zero():
    with pytest.raises(ValueError):
        usc_ground_2ck(BASE.replace(lambda2=1.0, phi1=0.5))


@pytest.mark.parametrize("l2,expected", [(-6.0, 0.996), (-5.0, 0.993), (2.0, 0.987), (4.0, 0.997), (6.0, 0.999)])
def test_sector_fidelity_deep_in_sector(l2, expected):
    q = BASE.replace(lambda2=l2)
    _, gs = ground_state(build_h2(q))
    assert fidelity(gs, usc_ground_2ck(q).state(60)) == pytest.approx(expected, abs=2e-3)


@pytest.mark.xfail(strict=True, reason="sector II overlaps sector I strongly at lambda1/2Delta = 4; fidelity 0.960")
def test_sector_fidelity_interior_point():
    q = BASE.replace(lambda2=-2.0)
    _, gs = ground_state(build_h2(q))
    assert fidelity(gs, usc_ground_2ck(q).state(60)) > 0.98


def test_transition_at_zero():
    t = transition_analysis(BASE.replace(lambda2=0.0))
    assert t.e_gs == pytest.approx(-4.5, abs=1e-9)
    assert t.coefficients == pytest.approx((-math.sqrt(0.5), math.sqrt(0.5)), abs=1e-12)


def test_transition_limits():
    neg = transition_analysis(BASE.replace(lambda2=-2.0))
    pos = transition_analysis(BASE.replace(lambda2=2.0))
    assert abs(neg.coefficients[1]) > 0.99
    assert abs(pos.coefficients[0]) > 0.99


@pytest.mark.xfail(strict=True, reason="two-state mixing misses the energy by 0.11-0.13 against the 0.05 * 2 Delta bound")
@pytest.mark.parametrize("l2", [0.2, 0.4])
def test_transition_energy_accuracy(l2):
    q = BASE.replace(lambda2=l2)
    e0, _ = ground_state(build_h2(q))
    assert abs(transition_analysis(q).e_gs - e0) <= 0.05 * 2 * q.delta


@pytest.mark.xfail(strict=True, reason="mixing-state fidelity is 0.979 at lambda2 = 0.2")
def test_transition_fidelity():
    t = ground_state_indicators(BASE, [0.2])
    assert t.column("fid_mix")[0] > 0.99


def test_phase_diagram_sector_one_point():
    t = phase_diagram_sweep(BASE, [4.0], check_cutoff=False)
    assert t.column("a_re")[0] == pytest.approx(-2 * math.sqrt(2), abs=0.02)
    assert abs(t.column("a_im")[0]) < 1e-10
    dist = t.rows[0, 6:]
    assert dist.sum() == pytest.approx(1.0, abs=1e-12)


def test_phase_diagram_jump_at_sector_boundary():
    t = phase_diagram_sweep(BASE, [-4.2, -3.8], check_cutoff=False)
    jump = abs(t.column("a_re")[1] - t.column("a_re")[0])
    assert jump > 1.0


def test_phase_diagram_poisson_at_zero():
    t = phase_diagram_sweep(BASE, [0.0], check_cutoff=False)
    dist = t.rows[0, 6:]
    assert t.column("n_mean")[0] == pytest.approx(1.916, abs=5e-3)
    mean = dist @ np.arange(dist.size)
    assert mean == pytest.approx(t.column("n_mean")[0], abs=1e-10)


def test_phase_diagram_cutoff_meta():
    t = phase_diagram_sweep(BASE.replace(n_max=40), [1.0])
    c = t.meta["cutoff"]
    assert c["points_checked"] == 1
    assert c["converged"] == (c["max_shift"] <= 1e-8)


def test_cutoff_check_flags_small_cutoff():
    c = cutoff_check(build_h1, BASE.replace(n_max=12))
    assert not c["converged"]
    assert cutoff_check(build_h1, BASE)["converged"]


def test_phase_diagram_rejects_nonfinite():
    with pytest.raises(ValueError):
        phase_diagram_sweep(BASE, [float("inf")])


def test_fidelity_space_mismatch():
    _, a = ground_state(build_h1(BASE.replace(n_max=20, lambda1=1.0)))
    _, b = ground_state(build_h2(BASE.replace(n_max=20)))
    with pytest.raises(ValueError):
        fidelity(a, b)
