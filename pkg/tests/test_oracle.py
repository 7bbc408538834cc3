import numpy as np
import pytest

from cavitykc.errors import ConfigError
from cavitykc.hilbert import eigh
from cavitykc.oracle import (
    ChainSpec,
    annihilator,
    bond_annihilator,
    build_full_chain,
    chain_hamiltonian,
    edge_mode_splitting,
    embed_sector_state,
    fermion_parity,
    full_chain_ramp,
    majorana,
    majorana_correlator,
    parity_projector,
    reduction_check,
    reduction_isometry,
    sector_project,
)


def _anticomm(a, b):
    return a @ b + b @ a


def test_canonical_anticommutation():
    n = 4
    c = [annihilator(n, j) for j in range(1, n + 1)]
    for i in range(n):
        for j in range(n):
            assert np.allclose(_anticomm(c[i], c[j].T), np.eye(16) * (i == j))
            assert np.allclose(_anticomm(c[i], c[j]), 0)


def test_majorana_algebra():
    g = majorana(3, 2, 1)
    assert np.allclose(g @ g, np.eye(8))
    assert np.allclose(g, g.conj().T)
    assert np.allclose(_anticomm(g, majorana(3, 2, 2)), 0)
    with pytest.raises(ValueError):
        majorana(3, 1, 3)


def test_two_site_levels():
    e = np.linalg.eigvalsh(chain_hamiltonian(ChainSpec(2, cavity_sites=())))
    assert np.allclose(e, [-0.5, -0.5, 0.5, 0.5], atol=1e-14)


def test_sweet_spot_majorana_form():
    n, d = 5, 0.5
    h = chain_hamiltonian(ChainSpec(n, delta=d))
    ref = sum(1j * d * majorana(n, j, 2) @ majorana(n, j + 1, 1) for j in range(1, n))
    assert np.allclose(h, ref, atol=1e-14)


def test_six_site_ground_degeneracy():
    e = np.linalg.eigvalsh(chain_hamiltonian(ChainSpec(6)))
    assert np.allclose(e[:2], -2.5, atol=1e-12)
    assert e[2] - e[1] == pytest.approx(1.0, abs=1e-12)


def test_bond_fermions_diagonalize_chain():
    n, d = 4, 0.5
    h = chain_hamiltonian(ChainSpec(n, delta=d))
    ref = sum(d * (2 * b.conj().T @ b - np.eye(16)) for b in (bond_annihilator(n, j) for j in range(1, n)))
    assert np.allclose(h, ref, atol=1e-14)


def test_hamiltonian_conserves_parity():
    h = chain_hamiltonian(ChainSpec(5, mu=0.3, t_hop=0.7))
    p = fermion_parity(5)
    assert np.allclose(h @ p, p @ h)


def test_majorana_correlator_on_ground_state():
    spec = ChainSpec(6, cavity_sites=(3,), n_max=4)
    h = build_full_chain(spec, [(3, 0.0, 0.0)], sector="even")
    gs = embed_sector_state(eigh(h, n_lowest=1).ground)
    assert majorana_correlator(gs, 2, 3) == pytest.approx(-1.0, abs=1e-12)
    assert majorana_correlator(gs, 2, 4) == pytest.approx(0.0, abs=1e-12)


def test_parity_projectors():
    spec = ChainSpec(3, cavity_sites=(2,), n_max=3)
    space = build_full_chain(spec, [(2, 1.0, 0.0)]).spec
    pe = parity_projector(space, "even").entries
    po = parity_projector(space, "odd").entries
    assert np.allclose(pe + po, np.eye(space.dim))
    assert np.allclose(pe @ pe, pe)
    assert np.allclose(pe @ po, 0)


def test_full_hamiltonian_commutes_with_parity():
    spec = ChainSpec(4, cavity_sites=(2, 3), n_max=4)
    h = build_full_chain(spec, [(2, 1.0, 0.3), (3, 0.5, 1.1)])
    pe = parity_projector(h.spec, "even").entries
    assert np.allclose(h.entries @ pe, pe @ h.entries, atol=1e-13)


def test_sector_dimension_and_projection():
    spec = ChainSpec(6, cavity_sites=(3,), n_max=8)
    h_even = build_full_chain(spec, [(3, 1.0, 0.0)], sector="even")
    assert h_even.spec.dim == 32 * 8
    full = build_full_chain(spec, [(3, 1.0, 0.0)])
    assert np.allclose(sector_project(full, "even").entries, h_even.entries)


def test_sector_round_trip():
    spec = ChainSpec(4, cavity_sites=(2,), n_max=3)
    h = build_full_chain(spec, [(2, 1.0, 0.0)], sector="odd")
    psi = eigh(h, n_lowest=1).ground
    back = sector_project(embed_sector_state(psi), "odd")
    assert np.allclose(back.amplitudes, psi.amplitudes)


def test_size_limits():
    with pytest.raises(ConfigError):
        build_full_chain(ChainSpec(9, cavity_sites=(3,)), [(3, 1.0, 0.0)])
    with pytest.raises(ConfigError):
        build_full_chain(ChainSpec(8, cavity_sites=(3,), n_max=64), [(3, 1.0, 0.0)])
    with pytest.raises(ConfigError):
        build_full_chain(ChainSpec(6, cavity_sites=(3,)), [(4, 1.0, 0.0)])


def test_reduction_needs_bulk_site():
    with pytest.raises(ConfigError):
        reduction_isometry(ChainSpec(6, cavity_sites=(1,)))


def test_reduction_isometry_orthonormal():
    w = reduction_isometry(ChainSpec(6, cavity_sites=(3, 4)))
    assert np.allclose(w.conj().T @ w, np.eye(4), atol=1e-12)


@pytest.mark.parametrize("n_sites", [5, 6])
def test_single_site_reduction(n_sites):
    spec = ChainSpec(n_sites, cavity_sites=(3,), n_max=24)
    r = reduction_check(spec, [(3, 2.0, 0.4)])
    assert r.block_error < 1e-12
    assert r.leakage < 1e-10
    assert r.max_level_error < 1e-9


def test_two_site_reduction():
    spec = ChainSpec(6, cavity_sites=(3, 4), n_max=20)
    r = reduction_check(spec, [(3, 2.0, 0.0), (4, 1.0, 0.5)])
    assert r.block_error < 1e-12
    assert r.leakage < 1e-10
    assert r.max_level_error < 1e-9


def test_reduction_off_sweet_spot_rejected():
    with pytest.raises(ConfigError):
        reduction_check(ChainSpec(5, cavity_sites=(3,), mu=0.1, n_max=8), [(3, 1.0, 0.0)])


def test_edge_splitting_at_sweet_spot():
    assert edge_mode_splitting(ChainSpec(5, cavity_sites=(3,), n_max=4)) < 1e-12


def test_ramp_matches_reduced_model():
    spec = ChainSpec(5, cavity_sites=(3,), n_max=12)
    t, pf, pr, dt = full_chain_ramp(spec, 1.0, 2.0, n_samples=16)
    assert pf[0] == pytest.approx(0.0, abs=1e-12)
    assert np.max(np.abs(pf - pr)) < 1e-9
