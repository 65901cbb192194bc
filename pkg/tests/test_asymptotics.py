"""Tests for asymptotic-invariant extraction: flat limits, limiting
holonomy, residue fits, decay exponents, charge shells, and the twisted
Poincare constant."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ipl.asymptotics import (
    E3,
    ExtractionError,
    FlatLimit,
    asymptotic_states,
    decay_exponent,
    extract_invariants,
    flat_limit,
    instanton_number,
    limiting_holonomy,
    poincare_constant,
    residue,
)
from ipl.gauge import ConnectionSource, flat_connection
from ipl.geometry import TorusSpec, reduce_dual
from ipl.models import ModelParams, model_connection, nilpotent_model, perturb

TORUS = TorusSpec()
RINGS = (50.0, 100.0, 200.0, 400.0)


def synthetic_flat_limit(lambda1, lambda2):
    return FlatLimit(lambda1=lambda1, lambda2=lambda2, rings=(1.0, 2.0, 3.0, 4.0),
                     per_ring=np.zeros((4, 2)), drift=0.0, axis=E3.copy(),
                     torus=TORUS)


def test_flat_limit_needs_four_rings():
    conn = model_connection(ModelParams(mu=1.0), TORUS)
    with pytest.raises(ValueError):
        flat_limit(conn, (50.0, 100.0, 200.0))


def test_flat_limit_of_flat_connection():
    xi = reduce_dual((0.3, 0.2), TORUS)
    conn = flat_connection(xi, TORUS)
    fl = flat_limit(conn, RINGS)
    assert fl.drift < 1e-10
    states = asymptotic_states(fl)
    assert states.xi0.xi1 == pytest.approx(0.3, abs=1e-9)
    assert states.xi0.xi2 == pytest.approx(0.2, abs=1e-9)
    assert not states.order_two


def test_branch_canonicalization_flips_above_half():
    # raw exponents (0, 0.7): the first nonzero reduced component exceeds
    # 1/2, so the canonical representative is the sign-flipped (0, 0.3)
    states = asymptotic_states(synthetic_flat_limit(0.0, 0.7))
    assert states.flipped
    assert states.xi0.xi1 == pytest.approx(0.0, abs=1e-12)
    assert states.xi0.xi2 == pytest.approx(0.3, abs=1e-12)

    states2 = asymptotic_states(synthetic_flat_limit(0.2, 0.9))
    assert not states2.flipped
    assert states2.xi0.xi1 == pytest.approx(0.2, abs=1e-12)


def test_order_two_detection():
    assert asymptotic_states(synthetic_flat_limit(0.0, 0.0)).order_two
    assert asymptotic_states(synthetic_flat_limit(1.0, 0.0)).order_two
    assert not asymptotic_states(synthetic_flat_limit(0.4, 0.0)).order_two


def test_limiting_holonomy_of_model():
    alpha = 0.2
    conn = model_connection(ModelParams(lam=0.1, mu=0.5, alpha=alpha), TORUS)
    got = limiting_holonomy(conn, RINGS)
    assert abs(got) == pytest.approx(alpha, abs=1e-9)


def test_residue_fit_recovers_lambda_and_mu():
    lam, mu = 0.1 - 0.07j, 0.3 + 0.2j
    conn = model_connection(ModelParams(lam=lam, mu=mu, alpha=0.2), TORUS)
    mu_hat, diag = residue(conn, RINGS)
    assert abs(abs(mu_hat) - abs(mu)) < 1e-10
    assert abs(abs(diag["lambda_hat"]) - abs(lam)) < 1e-10
    assert diag["max_residual"] < 1e-8


def test_extract_invariants_round_trip_semisimple():
    p = ModelParams(lam=0.1 - 0.07j, mu=0.3 + 0.2j, alpha=0.2)
    inv = extract_invariants(model_connection(p, TORUS), RINGS)
    assert inv.kind == "semisimple"
    # lambda12 = (0.2, -0.14): reduced exponents (0.2, 0.86), no flip
    assert not inv.diagnostics["branch_flipped"]
    assert inv.xi0.xi1 == pytest.approx(0.2, abs=1e-9)
    assert inv.xi0.xi2 == pytest.approx(0.86, abs=1e-9)
    assert inv.alpha == pytest.approx(0.2, abs=1e-9)
    assert abs(inv.mu - p.mu) < 1e-9
    lam_hat = complex(*inv.diagnostics["residue_fit"]["lambda_hat"])
    assert abs(lam_hat - p.lam) < 1e-9


def test_extract_invariants_flipped_branch_negates_alpha_and_mu():
    # lambda12 = (0, 0.7) reduces above 1/2: extraction must report the
    # canonical branch with alpha and mu jointly negated
    p = ModelParams(lam=0.35j, mu=0.3, alpha=0.2)
    inv = extract_invariants(model_connection(p, TORUS), RINGS)
    assert inv.diagnostics["branch_flipped"]
    assert inv.xi0.xi2 == pytest.approx(0.3, abs=1e-9)
    assert inv.alpha == pytest.approx(-0.2, abs=1e-9)
    assert abs(inv.mu + p.mu) < 1e-9


def test_extract_invariants_nilpotent():
    inv = extract_invariants(nilpotent_model(TORUS), RINGS)
    assert inv.kind == "nilpotent"
    assert inv.diagnostics["order_two"]
    assert abs(inv.alpha) < 1e-9
    assert inv.mu == 0.0
    assert inv.xi0.xi1 == pytest.approx(0.0, abs=1e-9)
    assert inv.xi0.xi2 == pytest.approx(0.0, abs=1e-9)


def test_kind_detection_not_fooled_by_flat_model():
    inv = extract_invariants(model_connection(ModelParams(), TORUS), RINGS)
    assert inv.kind == "semisimple"


def test_decay_exponent_semisimple():
    conn = model_connection(ModelParams(mu=1.0), TORUS)
    fit = decay_exponent(conn, np.geomspace(20.0, 500.0, 8), with_log=False)
    assert fit["gamma"] == pytest.approx(-2.0, abs=1e-9)
    assert fit["monotone"]


def test_decay_exponent_nilpotent_log_power():
    conn = nilpotent_model(TORUS)
    rings = np.geomspace(math.e ** 2, math.e ** 6, 10)
    fit = decay_exponent(conn, rings, components="kahler", with_log=True)
    assert fit["gamma"] == pytest.approx(-2.0, abs=1e-9)
    assert fit["log_power"] == pytest.approx(-2.0, abs=1e-9)


def test_decay_exponent_flat_connection_sentinel():
    conn = flat_connection(reduce_dual((0.3, 0.2), TORUS), TORUS)
    fit = decay_exponent(conn, np.geomspace(20.0, 500.0, 8))
    assert fit["gamma"] == -math.inf


def test_instanton_number_monotone_guard():
    sigma3 = np.diag([1.0 + 0.0j, -1.0 + 0.0j])

    def ev(points):
        points = np.asarray(points, float)
        out = np.zeros(points.shape[:-1] + (4, 2, 2), dtype=complex)
        out[..., 2, :, :] = (1j * points[..., 0])[..., None, None] * sigma3
        return out

    def dv(points, axis):
        points = np.asarray(points, float)
        out = np.zeros(points.shape[:-1] + (4, 2, 2), dtype=complex)
        if axis == 0:
            out[..., 2, :, :] = (1j * np.ones(points.shape[:-1]))[..., None, None] * sigma3
        return out

    grow = ConnectionSource(evaluate=ev, torus=TORUS, derivative=dv,
                            r_min=1e-3)
    with pytest.raises(ExtractionError):
        instanton_number(grow, 100.0, r_inner=1.0)


def test_extraction_survives_unavailable_charge_estimate():
    # bump noise on a flat background makes outer shells non-monotone; the
    # extraction must degrade the charge diagnostic instead of aborting
    conn = perturb(model_connection(ModelParams(alpha=-0.25), TORUS),
                   delta=0.5, amplitude=0.05, seed=20260815,
                   r_lo=5.0, r_hi=600.0)
    inv = extract_invariants(conn, RINGS, kind="semisimple")
    assert inv.k_estimate is None
    assert "k_note" in inv.diagnostics
    assert inv.alpha == pytest.approx(-0.25, abs=1e-3)


def test_poincare_constant_untwisted():
    # lowest nonzero Fourier symbol on the square torus is 1
    assert poincare_constant(None, torus=TORUS) == pytest.approx(1.0)


def test_poincare_constant_twisted_hand_values():
    # exponents (0.3, 0.15): off-diagonal symbol min over integer shifts of
    # (n + 0.6)^2 + (m + 0.3)^2 is 0.16 + 0.09 = 0.25
    fl = synthetic_flat_limit(0.3, 0.15)
    assert poincare_constant(fl, torus=TORUS) == pytest.approx(0.25)
    # order-two (0.5, 0): the off-diagonal shift is integral, its zero mode
    # joins the excluded kernel, and the bound returns to 1
    fl2 = synthetic_flat_limit(0.5, 0.0)
    assert poincare_constant(fl2, torus=TORUS) == pytest.approx(1.0)


@given(l1=st.floats(0.01, 0.49), l2=st.floats(0.01, 0.49))
@settings(max_examples=50, deadline=None)
def test_poincare_constant_positive_and_bounded(l1, l2):
    c = poincare_constant(synthetic_flat_limit(l1, l2), torus=TORUS)
    assert 0.0 < c <= 1.0 + 1e-12
