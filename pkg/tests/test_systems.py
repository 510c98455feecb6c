import math

import numpy as np
import pytest

from polarvi.errors import PoleSingularity
from polarvi.linalg import hat, polar_project, skew_inner, vee
from polarvi.systems import (
    DipoleParams,
    dipole,
    dipole_d_g,
    dipole_d_mu,
    dipole_energy,
    dipole_energy_right,
    dipole_initial_state,
    dipole_potential,
    rigid_body,
    rigid_body_reduced,
    zero_hamiltonian,
)

from conftest import random_rotation, random_skew

G0 = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])


def expm_skew(x):
    """Rodrigues formula for exp of a 3x3 skew matrix."""
    th = np.linalg.norm(vee(x))
    if th == 0.0:
        return np.eye(3)
    return np.eye(3) + math.sin(th) / th * x + (1 - math.cos(th)) / th**2 * (x @ x)


def test_default_parameters():
    p = DipoleParams()
    np.testing.assert_allclose(p.inertia, np.diag([1.01, 1.0, 0.01]), rtol=1e-15, atol=0)
    np.testing.assert_array_equal(p.y_plus, [0.0, 0.1, -1.0])
    np.testing.assert_array_equal(p.y_minus, [0.0, -0.1, -1.0])
    np.testing.assert_array_equal(p.z, [0.0, 0.0, -1.5])
    assert np.all(np.linalg.eigvalsh(p.inertia) > 0)


def test_energy_at_identity():
    # charges at (0, +-0.1, -1) sit at distance sqrt(0.01 + 0.25) from z
    r = math.sqrt(0.01 + 0.25)
    assert dipole_energy(np.eye(3), np.zeros((3, 3))) == pytest.approx(1.0 + 1 / r - 1 / r, abs=1e-15)
    asym_params = DipoleParams(z=np.array([0.0, 0.2, -1.5]))
    expected = 1.0 + 1 / math.sqrt(0.01 + 0.25) - 1 / math.sqrt(0.09 + 0.25)
    assert dipole_potential(np.eye(3), asym_params) == pytest.approx(expected, abs=1e-14)


def test_initial_state():
    st = dipole_initial_state()
    np.testing.assert_array_equal(st.g, G0)
    np.testing.assert_array_equal(st.g[1], [0.0, 0.0, -1.0])
    np.testing.assert_array_equal(st.g @ st.g.T, np.eye(3))
    np.testing.assert_allclose(vee(st.p), [0.0, 0.0, -0.01], atol=1e-17)


def test_initial_energy():
    st = dipole_initial_state()
    expected = 0.005 + 1 / math.sqrt(3.56) - 1 / math.sqrt(2.96)
    assert dipole_energy(st.g, st.p) == pytest.approx(expected, abs=1e-14)


def test_zero_momentum_is_pure_potential(rng):
    for _ in range(5):
        g = random_rotation(rng, 3)
        try:
            assert dipole_energy(g, np.zeros((3, 3))) == dipole_potential(g)
        except PoleSingularity:
            pass


def test_pole_singularity():
    # at g = I the + charge sits at (0, 0.1, -1); put the fixed charge there
    p = DipoleParams(z=np.array([0.0, 0.1, -1.0]))
    with pytest.raises(PoleSingularity):
        dipole_energy(np.eye(3), np.zeros((3, 3)), p)
    with pytest.raises(PoleSingularity):
        dipole_d_g(np.eye(3), np.zeros((3, 3)), p)


def test_gravity_only_at_identity_has_no_torque():
    p = DipoleParams(q=0.0)
    np.testing.assert_array_equal(dipole_d_g(np.eye(3), np.zeros((3, 3)), p), 0.0)


def test_isotropy_without_forces(rng):
    p = DipoleParams(q=0.0, m=0.0)
    for _ in range(10):
        g = random_rotation(rng, 3)
        np.testing.assert_array_equal(dipole_d_g(g, random_skew(rng, 3), p), 0.0)


def test_charge_part_is_linear_in_q_beta(rng):
    g = random_rotation(rng, 3)
    mu = random_skew(rng, 3)
    grav = dipole_d_g(g, mu, DipoleParams(q=0.0))
    base = dipole_d_g(g, mu) - grav
    scaled = dipole_d_g(g, mu, DipoleParams(q=3.0, beta=0.5)) - grav
    np.testing.assert_allclose(scaled, 1.5 * base, atol=1e-13)


def _sample_states(rng, count):
    out = []
    while len(out) < count:
        g = random_rotation(rng, 3)
        mu = random_skew(rng, 3, 0.05)
        try:
            dipole_energy(g, mu)
        except PoleSingularity:
            continue
        out.append((g, mu))
    return out


def test_d_g_matches_projected_curve_differences(rng):
    t = 1e-5
    for g, mu in _sample_states(rng, 50):
        om = random_skew(rng, 3)
        om /= np.linalg.norm(vee(om))
        fd = (dipole_energy(g @ polar_project(np.eye(3) + t * om), mu)
              - dipole_energy(g @ polar_project(np.eye(3) - t * om), mu)) / (2 * t)
        assert skew_inner(dipole_d_g(g, mu), om) == pytest.approx(fd, abs=1e-6)


def test_d_g_matches_exponential_curve_differences(rng):
    t = 1e-5
    for g, mu in _sample_states(rng, 20):
        om = random_skew(rng, 3)
        fd = (dipole_energy(g @ expm_skew(t * om), mu) - dipole_energy(g @ expm_skew(-t * om), mu)) / (2 * t)
        assert skew_inner(dipole_d_g(g, mu), om) == pytest.approx(fd, abs=1e-6)


def test_d_mu_matches_differences(rng):
    t = 1e-5
    for g, mu in _sample_states(rng, 20):
        d = random_skew(rng, 3)
        fd = (dipole_energy(g, mu + t * d) - dipole_energy(g, mu - t * d)) / (2 * t)
        assert skew_inner(dipole_d_mu(g, mu), d) == pytest.approx(fd, abs=1e-6)


def test_frame_identity(rng):
    for g, _ in _sample_states(rng, 20):
        p = rng.standard_normal(3) * 0.1
        lhs = dipole_energy_right(g, p)
        rhs = dipole_energy(g, hat(g.T @ p))
        assert lhs == pytest.approx(rhs, abs=1e-13)


def test_hamiltonian_bundle_delegates(rng):
    h = dipole()
    g, mu = _sample_states(rng, 1)[0]
    assert h.energy(g, mu) == dipole_energy(g, mu)
    np.testing.assert_array_equal(h.d_g(g, mu), dipole_d_g(g, mu))
    np.testing.assert_array_equal(h.d_mu(g, mu), dipole_d_mu(g, mu))


# -- rigid body ------------------------------------------------------------

def test_rigid_body_reduced_examples(rng):
    j = np.diag([1.0, 2.0, 3.0])
    rb = rigid_body_reduced(j)
    assert rb.energy(np.zeros((3, 3))) == 0.0
    np.testing.assert_array_equal(rb.d_mu(np.zeros((3, 3))), 0.0)
    mu = random_skew(rng, 3)
    np.testing.assert_allclose(rigid_body_reduced(np.eye(3)).d_mu(mu), mu, atol=1e-15)
    assert rb.energy(hat([1.0, 2.0, 3.0])) == pytest.approx(0.5 * (1 + 2 + 3))


def test_rigid_body_reduced_d_mu_differences(rng):
    rb = rigid_body_reduced(np.diag([0.7, 1.3, 2.1]))
    t = 1e-5
    for _ in range(20):
        mu, d = random_skew(rng, 3), random_skew(rng, 3)
        fd = (rb.energy(mu + t * d) - rb.energy(mu - t * d)) / (2 * t)
        assert skew_inner(rb.d_mu(mu), d) == pytest.approx(fd, abs=1e-8)


def test_rigid_body_full_is_invariant(rng):
    j = np.diag([0.7, 1.3, 2.1])
    full, red = rigid_body(j), rigid_body_reduced(j)
    g, mu = random_rotation(rng, 3), random_skew(rng, 3)
    assert full.energy(g, mu) == red.energy(mu)
    np.testing.assert_array_equal(full.d_g(g, mu), 0.0)
    np.testing.assert_array_equal(full.d_mu(g, mu), red.d_mu(mu))


def test_zero_hamiltonian():
    z = zero_hamiltonian(4)
    assert z.energy(np.eye(4), np.zeros((4, 4))) == 0.0
    assert z.d_g(np.eye(4), np.zeros((4, 4))).shape == (4, 4)
