"""Acceptance criteria.  Each test records one PASS/FAIL line, listed again in
the terminal summary under "acceptance criteria"."""
import time

import numpy as np
import pytest

from polarvi.harness import DEFAULT_INERTIA, DEFAULT_MOMENTUM, Scenario, run_order_study, run_scenario
from polarvi.integrators import CotangentState, ReducedState, integrate, make_stepper
from polarvi.linalg import (
    hat,
    polar_fixes_identity,
    lyap_spd,
    polar_decompose,
    polar_project,
    skew_inner,
    spectral_norm,
    sylvester_rot,
    vee,
)
from polarvi.systems import rigid_body, rigid_body_reduced
from polarvi.tableaux import builtin, sprk_partner, sprk_step
from polarvi.tangent import FixedPointConfig, StageGeometry, chain_solve, dpol, dpol_star

from conftest import random_gl_plus, random_rotation, random_skew, random_spd, record_acceptance
from test_linalg import _projects_to_identity, kron_lyap, kron_sylvester
from test_tangent import assembled_phi_star, coords, from_coords, random_instance

ORDER_HS = [1 / 10, 1 / 14, 1 / 20, 1 / 28]
ORDER_TARGET = {"gl1": 2.0, "rk3": 3.0, "gl2": 4.0}
# criterion 2 bounds on max |H_k - H_0|: (lower, upper)
ENERGY_BOUNDS = {"gl1": (1e-6, 1e-4), "rk3": (1e-7, 1e-5), "gl2": (0.0, 1e-8), "gl3": (0.0, 1e-9)}
ENERGY_STEP = {"gl1": 0.01, "rk3": 0.01, "gl2": 0.01, "gl3": 1 / 26}
J = np.diag(DEFAULT_INERTIA)
MU0 = hat(DEFAULT_MOMENTUM)


@pytest.fixture(scope="module")
def drift_reports():
    return {
        name: run_scenario(Scenario(method=name, h=ENERGY_STEP[name], steps=10_000, record_every=10))
        for name in ENERGY_BOUNDS
    }


def test_c1_convergence_orders(tmp_path):
    start = time.perf_counter()
    ref = tmp_path / "reference.json"
    slopes = {}
    for name in ("gl1", "rk3", "gl2"):
        slopes[name] = run_order_study(Scenario(method=name), ORDER_HS, 0.5, reference=ref).slope
    slopes["gl3"] = run_order_study(Scenario(method="gl3"), ORDER_HS[:3], 0.5, reference=ref).slope
    elapsed = time.perf_counter() - start
    ok = all(abs(slopes[k] - v) <= 0.25 for k, v in ORDER_TARGET.items()) and slopes["gl3"] >= 5.5
    ok = ok and elapsed < 120.0
    detail = " ".join(f"{k}={v:.3f}" for k, v in slopes.items())
    record_acceptance("C1", ok, f"convergence orders {detail} in {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_c2_energy_conservation(drift_reports):
    parts, ok = [], True
    for name, (lo, hi) in ENERGY_BOUNDS.items():
        err = drift_reports[name].summary["max_energy_err"]
        ok = ok and lo <= err <= hi
        parts.append(f"{name}={err:.2e}")
    slope = drift_reports["gl3"].summary["drift_slope"]
    ok = ok and abs(slope) <= 1e-13
    record_acceptance("C2", ok, f"max energy error {' '.join(parts)}; gl3 drift slope {slope:.2e}/step")
    assert ok


@pytest.mark.slow
def test_c3_orthogonality(drift_reports):
    worst = max(max(r.summary["max_ortho_err"], r.summary["max_stage_ortho_err"]) for r in drift_reports.values())
    ok = worst <= 1e-13
    record_acceptance("C3", ok, f"max orthogonality error over all steps and stages {worst:.2e}")
    assert ok


@pytest.mark.slow
def test_c4_casimir():
    c0 = np.linalg.norm(vee(MU0))
    step = make_stepper(rigid_body_reduced(J), builtin("gl2"), 0.01, reduced=True)
    worst = [0.0]

    def observe(k, st, cache):
        worst[0] = max(worst[0], abs(np.linalg.norm(vee(st.mu)) - c0))

    integrate(step, ReducedState(MU0), 10_000, observers=[observe])
    ok = worst[0] <= 1e-11
    record_acceptance("C4", ok, f"Casimir deviation over 1e4 reduced steps {worst[0]:.2e}")
    assert ok


def test_c5_full_reduced_equivalence():
    worst = 0.0
    for name in ("gl1", "rk3", "gl2", "gl3"):
        t = builtin(name)
        full = make_stepper(rigid_body(J), t, 0.01)
        red = make_stepper(rigid_body_reduced(J), t, 0.01, reduced=True)
        fs, rs = CotangentState(np.eye(3), MU0), ReducedState(MU0)
        for _ in range(100):
            fs, _ = full(fs)
            rs, _ = red(rs)
            worst = max(worst, float(np.max(np.abs(fs.p - rs.mu))))
    ok = worst <= 1e-10
    record_acceptance("C5", ok, f"full vs reduced momenta over 100 steps, max difference {worst:.2e}")
    assert ok


def test_c6_kernel_suites():
    rng = np.random.default_rng(6)
    # polar adjointness
    adj = 0.0
    for n in (2, 3, 5):
        for _ in range(100):
            a, b, w = random_gl_plus(rng, n), rng.standard_normal((n, n)), random_skew(rng, n)
            f = polar_decompose(a)
            gap = abs(skew_inner(w, dpol(f, b)) - np.trace(dpol_star(f, w) @ b.T))
            adj = max(adj, gap / max(1.0, np.linalg.norm(w) * np.linalg.norm(b)))
    # Lyapunov and Sylvester solvers against the Kronecker oracle
    dense = 0.0
    for n in (2, 3, 4, 5):
        for _ in range(10):
            p, c = random_spd(rng, n), random_skew(rng, n)
            x = lyap_spd(p, c)
            dense = max(dense, spectral_norm(p @ x + x @ p + c) / (spectral_norm(p) * spectral_norm(x) + spectral_norm(c)),
                        spectral_norm(x - kron_lyap(p, c)) / max(1.0, spectral_norm(x)))
            m = polar_project(np.eye(n) + random_skew(rng, n, 0.15))
            y = sylvester_rot(m, c)
            dense = max(dense, spectral_norm(m @ y + y @ m.T - c) / max(1.0, spectral_norm(c)),
                        spectral_norm(y - kron_sylvester(m, c)) / max(1.0, spectral_norm(y)))
    # adjoint chain against the assembled linear system
    chain = 0.0
    cfg = FixedPointConfig(1e-15, 200)
    for s in (2, 3):
        g0, a, omegas, rots, factors = random_instance(rng, 3, s, 0.05)
        geom = StageGeometry.full(g0, rots, factors, omegas, a, 0.05)
        op = assembled_phi_star(g0, a, omegas, rots, factors, 0.05)
        rhs = np.array([random_skew(rng, 3) for _ in range(s)])
        sol = np.linalg.solve(op, np.concatenate([coords(r) for r in rhs]))
        expected = np.array([from_coords(v, 3) for v in sol.reshape(s, -1)])
        chain = max(chain, float(np.max(np.abs(chain_solve(geom, rhs, cfg) - expected))))
    # predicate for "projects to the identity" on symmetric and skew perturbations
    agree = 0
    for trial in range(100):
        q = random_rotation(rng, 3)
        if trial % 3 == 0:
            s = random_skew(rng, 3, rng.uniform(1e-3, 0.5))
        else:
            lo = -0.9 if trial % 3 == 1 else -2.5
            s = q @ np.diag(rng.uniform(lo, 1.5, 3)) @ q.T
            s = 0.5 * (s + s.T)
        agree += polar_fixes_identity(s) == _projects_to_identity(s)
    ok = adj <= 1e-12 and dense <= 1e-12 and chain <= 1e-11 and agree == 100
    record_acceptance("C6", ok, f"adjointness {adj:.1e}, dense solvers {dense:.1e}, chain {chain:.1e}, "
                                f"identity predicate {agree}/100")
    assert ok


def test_c7_tableau_oracle():
    # every step of the midpoint oscillator against the exact Cayley rotation of the previous state
    cayley = 0.0
    t = builtin("gl1")
    for h in (0.01, 0.1, 0.5):
        d, c = 1.0 + h * h / 4, 1.0 - h * h / 4
        q, p = np.array([1.0]), np.array([0.0])
        for _ in range(100):
            q1, p1 = sprk_step(t, lambda x, v: -x, lambda x, m: m, q, p, h)
            cayley = max(cayley, abs(q1[0] - (c * q[0] + h * p[0]) / d), abs(p1[0] - (c * p[0] - h * q[0]) / d))
            q, p = q1, p1
    pairing = 0.0
    for name in ("gl1", "rk3", "gl2", "gl3"):
        tb = builtin(name)
        at, b = sprk_partner(tb).a, tb.b
        pairing = max(pairing, float(np.max(np.abs(b[:, None] * at + (b[:, None] * tb.a).T - np.outer(b, b)))))
    ok = cayley <= 1e-12 and pairing <= 1e-15
    record_acceptance("C7", ok, f"Cayley map deviation {cayley:.1e}, pairing identity {pairing:.1e}")
    assert ok
