"""Tests for curvature sampling, self-dual projection, holonomy transport,
the drift inequality, the annulus quadratic-form identity, and grid
serialization."""

import json
import math

import numpy as np
import pytest

from ipl import _su2
from ipl.gauge import (
    ConnectionSource,
    DomainError,
    circle_holonomies,
    connection_derivative,
    connection_from_json,
    connection_to_json,
    curvature,
    curvature_norm,
    flat_connection,
    holonomy,
    monodromy_drift_defect,
    random_quadratic_form_fixture,
    segment_transports,
    self_dual_part,
    weitzenbock_defect,
)
from ipl.geometry import AnnulusGrid, Loop, TorusSpec, reduce_dual
from ipl.models import ModelParams, model_connection, perturb

TORUS = TorusSpec()
SIGMA3 = np.diag([1.0 + 0.0j, -1.0 + 0.0j])


def rand_points(rng, n, r_lo=5.0, r_hi=80.0):
    pts = np.empty((n, 4))
    pts[:, 0] = np.exp(rng.uniform(math.log(r_lo), math.log(r_hi), size=n))
    pts[:, 1] = rng.uniform(0, 2 * math.pi, size=n)
    pts[:, 2] = rng.uniform(0, TORUS.period_x, size=n)
    pts[:, 3] = rng.uniform(0, TORUS.period_y, size=n)
    return pts


def test_flat_connection_curvature_vanishes():
    conn = flat_connection(reduce_dual((0.3, 0.2), TORUS), TORUS)
    pts = rand_points(np.random.default_rng(0), 20)
    F = curvature(conn, pts).components
    assert np.max(np.abs(F)) == 0.0


def test_finite_difference_derivative_matches_analytic():
    base = model_connection(ModelParams(lam=0.1 + 0.05j, mu=0.4 - 0.3j,
                                        alpha=0.2), TORUS)
    # same evaluator, but with the exact derivative withheld
    fd_conn = ConnectionSource(evaluate=base.evaluate, torus=TORUS,
                               derivative=None, r_min=base.r_min)
    pts = rand_points(np.random.default_rng(1), 12)
    for axis in range(4):
        num = connection_derivative(fd_conn, pts, axis)
        exact = base.derivative(pts, axis)
        assert np.max(np.abs(num - exact)) < 1e-8


def test_curvature_of_explicit_radial_field():
    # a_x = i g(r) sigma3 with g = 1/r: the only nonzero coordinate-frame
    # component is F_rx = g'(r) = -1/r^2 (abelian, no commutator term)
    def evaluate(points):
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[:-1] + (4, 2, 2), dtype=complex)
        out[..., 2, :, :] = (1j / points[..., 0])[..., None, None] * SIGMA3
        return out

    def derivative(points, axis):
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[:-1] + (4, 2, 2), dtype=complex)
        if axis == 0:
            out[..., 2, :, :] = (-1j / points[..., 0] ** 2)[..., None, None] * SIGMA3
        return out

    conn = ConnectionSource(evaluate=evaluate, torus=TORUS,
                            derivative=derivative, r_min=1e-6)
    pts = rand_points(np.random.default_rng(2), 10)
    F = curvature(conn, pts)
    expected = (-1j / pts[:, 0] ** 2)[:, None, None] * SIGMA3
    assert np.max(np.abs(F.f_rx - expected)) < 1e-13
    for name in ("f_rtheta", "f_ry", "f_thetax", "f_thetay", "f_xy"):
        assert np.max(np.abs(getattr(F, name))) < 1e-13


def test_self_dual_projection_matches_hand_formula():
    conn = model_connection(ModelParams(lam=0.05j, mu=0.7, alpha=0.1), TORUS)
    pts = rand_points(np.random.default_rng(3), 8)
    sample = curvature(conn, pts)
    fh = sample.unit_frame()
    c = self_dual_part(sample)
    assert np.allclose(c[..., 0, :, :],
                       0.5 * (fh[..., 0, :, :] + fh[..., 5, :, :]))
    assert np.allclose(c[..., 1, :, :],
                       0.5 * (fh[..., 1, :, :] - fh[..., 4, :, :]))
    assert np.allclose(c[..., 2, :, :],
                       0.5 * (fh[..., 2, :, :] + fh[..., 3, :, :]))


def test_curvature_norm_component_split():
    conn = model_connection(ModelParams(mu=1.0), TORUS)
    pts = rand_points(np.random.default_rng(4), 8)
    full = curvature_norm(conn, pts)
    kah = curvature_norm(conn, pts, components="kahler")
    assert np.all(kah <= full + 1e-15)
    with pytest.raises(ValueError):
        curvature_norm(conn, pts, components="bogus")


def test_domain_guard():
    conn = model_connection(ModelParams(mu=1.0), TORUS)  # r_min > 0
    with pytest.raises(DomainError):
        curvature(conn, np.array([[0.0, 0.0, 0.0, 0.0]]))


def test_flat_holonomy_closed_form():
    # transport h' = -A(gamma') h along the x-circle of length Lx gives
    # exp(-i c1 Lx sigma3) = diag(exp(-2 pi i xi1), exp(+2 pi i xi1))
    xi = reduce_dual((0.3, 0.2), TORUS)
    conn = flat_connection(xi, TORUS)
    loop = Loop(kind="x-circle", base=(10.0, 0.0, 0.0, 0.0))
    h = holonomy(conn, loop, steps=256).matrix
    expected = np.diag([np.exp(-2j * math.pi * 0.3),
                        np.exp(+2j * math.pi * 0.3)])
    assert np.max(np.abs(h - expected)) < 1e-12

    loop_y = Loop(kind="y-circle", base=(10.0, 0.0, 0.0, 0.0))
    hy = holonomy(conn, loop_y, steps=256).matrix
    expected_y = np.diag([np.exp(-2j * math.pi * 0.2),
                          np.exp(+2j * math.pi * 0.2)])
    assert np.max(np.abs(hy - expected_y)) < 1e-12


def test_abelian_theta_holonomy_closed_form():
    # semisimple model theta component is i alpha sigma3, so the theta
    # monodromy is exp(-2 pi i alpha sigma3) for any radius
    alpha = 0.2
    conn = model_connection(ModelParams(alpha=alpha), TORUS)
    bases = np.array([[12.0, 0.0, 1.0, 2.0], [70.0, 0.0, 0.5, 0.1]])
    mats = circle_holonomies(conn, "theta", bases, steps=512)
    expected = np.diag([np.exp(-2j * math.pi * alpha),
                        np.exp(+2j * math.pi * alpha)])
    assert np.max(np.abs(mats - expected)) < 1e-10


def test_holonomy_is_special_unitary():
    conn = perturb(flat_connection(reduce_dual((0.1, 0.4), TORUS), TORUS),
                   amplitude=0.3, seed=5, r_lo=5.0, r_hi=50.0)
    loop = Loop(kind="theta-circle", base=(20.0, 0.0, 2.0, 1.0))
    h = holonomy(conn, loop, steps=512).matrix
    assert _su2.su2_defect(h) < 1e-10


def test_segment_transports_compose():
    conn = model_connection(ModelParams(lam=0.1, mu=0.5, alpha=0.1), TORUS)
    way = np.array([[10.0, 0.0, 0.0, 0.0],
                    [20.0, 0.5, 1.0, 0.5],
                    [30.0, 1.0, 2.0, 1.0]])
    hops = segment_transports(conn, way, steps_per_seg=256)
    direct = segment_transports(conn, way[[0, 2]], steps_per_seg=512)
    # composing the two hops along the same polyline path differs from the
    # straight-line transport, but both must be special unitary
    assert _su2.su2_defect(hops[1] @ hops[0]) < 1e-10
    assert _su2.su2_defect(direct[0]) < 1e-10


def test_drift_defect_zero_for_flat():
    conn = flat_connection(reduce_dual((0.25, 0.1), TORUS), TORUS)
    Lx = TORUS.period_x

    def phi(t, s):
        t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
        out = np.zeros(t.shape + (4,))
        out[..., 0] = 10.0 + 5.0 * t
        out[..., 2] = Lx * s
        out[..., 3] = 1.0
        return out

    def dphi_dt(t, s):
        t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
        out = np.zeros(t.shape + (4,))
        out[..., 0] = 5.0
        return out

    def dphi_ds(t, s):
        t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
        out = np.zeros(t.shape + (4,))
        out[..., 2] = Lx
        return out

    from ipl.gauge import CircleFamily
    fam = CircleFamily(phi=phi, dphi_dt=dphi_dt, dphi_ds=dphi_ds)
    d = monodromy_drift_defect(conn, fam, n_t=9, n_s=128)
    assert d["defect"] <= 1e-12
    assert np.max(np.abs(d["rhs"])) < 1e-15


def test_weitzenbock_identity_on_random_fixtures():
    rng = np.random.default_rng(7)
    for j in range(6):
        form = random_quadratic_form_fixture(rng, 3.0, 9.0)
        gamma = None if j % 2 == 0 else reduce_dual((0.37, 0.61), TORUS)
        d = weitzenbock_defect(form, gamma, 3.0, 9.0, torus=TORUS)
        scale = max(1.0, d["grad_sq"])
        assert abs(d["defect"]) / scale < 1e-10
        assert abs(d["outer_term"]) < 1e-10


def test_connection_serialization_round_trip():
    conn = model_connection(ModelParams(lam=0.1 + 0.05j, mu=0.4, alpha=0.2),
                            TORUS)
    grid = AnnulusGrid(6.0, 30.0, n_r=5, n_theta=4, n_x=4, n_y=4)
    blob = connection_to_json(conn, grid)
    text = json.dumps(blob)  # must survive an actual serialization pass
    torus2, grid2, comps = connection_from_json(json.loads(text))
    assert torus2.period_x == TORUS.period_x
    assert grid2.n_r == 5 and grid2.n_theta == 4

    pts = np.zeros((5, 4, 4, 4, 4))
    R, TH, X, Y = np.meshgrid(grid.rs, grid.thetas, grid.xs(TORUS),
                              grid.ys(TORUS), indexing="ij")
    pts[..., 0], pts[..., 1], pts[..., 2], pts[..., 3] = R, TH, X, Y
    assert comps.shape == (5, 4, 4, 4, 4, 2, 2)
    assert np.max(np.abs(comps - conn.evaluate(pts))) == 0.0


def test_connection_from_json_rejects_reduced_payload():
    conn = model_connection(ModelParams(mu=1.0), TORUS)
    grid = AnnulusGrid(6.0, 30.0, n_r=5, n_theta=4, n_x=4, n_y=4)
    blob = connection_to_json(conn, grid)
    blob["reduced"] = True
    with pytest.raises(ValueError):
        connection_from_json(blob)
