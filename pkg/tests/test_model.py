import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from allelofear import DomainError, ModelParams, PreconditionError, RawParams, cubic, jacobian, kinetics, nondimensionalize, thresholds
from allelofear.equilibria import interior_roots
from allelofear.model import det_via_v, m_of_x

from conftest import model_params

UNIT = dict(r1=1.0, r2=1.0, alpha1=1.0, alpha2=1.0, beta1=1.0, beta2=1.0, eta=1.0, xi=1.0)


# ------------------------------------------------------------ parameters


def test_params_reject_nonpositive_rates():
    with pytest.raises(DomainError, match="parameter a"):
        ModelParams(a=0.0, b=1, c=1, k=0, m=0)
    with pytest.raises(DomainError, match="parameter m"):
        ModelParams(a=1, b=1, c=1, k=0, m=-0.1)
    with pytest.raises(DomainError):
        ModelParams(a=1, b=math.nan, c=1, k=0, m=0)


def test_zero_fear_is_admitted_but_rejected_where_positivity_is_needed():
    p = ModelParams(a=0.5, b=1, c=1, k=0.0, m=0.2)
    with pytest.raises(DomainError, match="k must be > 0"):
        p.require_positive_fear_and_toxin()


def test_nondimensionalize_unit_scalings():
    p = nondimensionalize(RawParams(**UNIT))
    assert p.as_dict() == dict(a=1.0, b=1.0, c=1.0, k=1.0, m=1.0)


def test_nondimensionalize_halved_growth_of_second_species():
    # r2 = 2 with alpha2 = 2 keeps k2 = 1; then b = 1/2 and m = 1/2
    p = nondimensionalize(RawParams(**{**UNIT, "r2": 2.0, "alpha2": 2.0}))
    assert p.b == pytest.approx(0.5, abs=1e-15)
    assert p.m == pytest.approx(0.5, abs=1e-15)


def test_nondimensionalize_names_offending_field():
    with pytest.raises(DomainError, match="eta"):
        nondimensionalize(RawParams(**{**UNIT, "eta": 0.0}))


# -------------------------------------------------------------- kinetics


def test_kinetics_hand_evaluated(example_params):
    # exact rational arithmetic: b x (1 - x - c y) and y (1/(1+kx) - y - a x - m x y)
    dx, dy = kinetics(example_params, (0.5, 0.5))
    assert dx == pytest.approx(-0.005, abs=1e-15)
    assert dy == pytest.approx(-0.021169354838709676, abs=1e-15)


@given(model_params())
def test_origin_and_unit_x_are_rest_points(p):
    assert kinetics(p, (0.0, 0.0)) == (0.0, 0.0)
    dx, dy = kinetics(p, (1.0, 0.0))
    assert dx == 0.0 and dy == 0.0


@given(model_params(), st.floats(0, 3), st.floats(0, 3))
def test_axes_are_invariant(p, x, y):
    assert kinetics(p, (0.0, y))[0] == 0.0
    assert kinetics(p, (x, 0.0))[1] == 0.0


# -------------------------------------------------------------- jacobian


def test_jacobian_at_origin_and_unit_x(example_params):
    p = example_params
    J0 = jacobian(p, (0.0, 0.0)).as_array()
    np.testing.assert_array_equal(J0, [[p.b, 0.0], [0.0, 1.0]])
    J1 = jacobian(p, (1.0, 0.0)).as_array()
    np.testing.assert_allclose(J1, [[-p.b, -p.b * p.c], [0.0, 1 / (1 + p.k) - p.a]], atol=1e-15)


def _fd_jacobian(p, s, h=1e-5):
    out = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        fp = np.array(kinetics(p, tuple(np.add(s, e))))
        fm = np.array(kinetics(p, tuple(np.subtract(s, e))))
        out[:, j] = (fp - fm) / (2 * h)
    return out


def test_jacobian_matches_finite_differences_at_fixed_point(example_params):
    np.testing.assert_allclose(jacobian(example_params, (0.3, 0.4)).as_array(),
                               _fd_jacobian(example_params, (0.3, 0.4)), atol=1e-6)


@given(model_params(), st.floats(0, 1), st.floats(0, 1))
def test_jacobian_matches_finite_differences(p, x, y):
    np.testing.assert_allclose(jacobian(p, (x, y)).as_array(), _fd_jacobian(p, (x, y)), atol=1e-6)


def test_jacobian_trace_and_det_accessors(example_params):
    J = jacobian(example_params, (0.3, 0.4))
    M = J.as_array()
    assert J.trace == pytest.approx(np.trace(M), abs=1e-15)
    assert J.det == pytest.approx(np.linalg.det(M), abs=1e-14)


# ----------------------------------------------------------------- cubic


def test_cubic_coefficients(example_params):
    cu = cubic(example_params)
    assert cu.A1 == pytest.approx(0.165, abs=1e-15)
    assert cu.A2 == pytest.approx(0.722, abs=1e-15)
    assert cu.A3 == pytest.approx(-0.58, abs=1e-15)
    assert cu.A4 == pytest.approx(0.1, abs=1e-15)


def test_cubic_vanishes_where_nullclines_cross():
    # independent route: scan x for the crossing of the two nullclines y = (1-x)/c
    # and y(1/(1+kx) - y - a x - m x y) = 0, then evaluate u there
    p = ModelParams(a=0.3, b=0.5, c=1.1, k=1.1, m=0.2)
    xs = np.arange(1e-6, 1.0, 1e-6)
    ys = (1 - xs) / p.c
    g = 1 / (1 + p.k * xs) - ys - p.a * xs - p.m * xs * ys
    idx = np.nonzero(np.sign(g[:-1]) != np.sign(g[1:]))[0]
    assert len(idx) == 2
    cu = cubic(p)
    for i in idx:
        assert abs(cu.u(xs[i])) < 1e-5


def test_cubic_constant_term_vanishes_at_unit_competition():
    assert cubic(ModelParams(a=0.4, b=1, c=1.0, k=2, m=0.3)).A4 == 0.0


@given(model_params())
def test_cubic_coefficient_identity(p):
    cu = cubic(p)
    assert cu.A2 == pytest.approx((cu.A3 + p.k) * p.k + p.m, abs=1e-12)


@given(model_params(k_lo=0.05))
def test_local_min_of_u_is_a_critical_point_with_positive_curvature(p):
    cu = cubic(p)
    E = cu.local_min_abscissa()
    if E is None:
        assert cu.discriminant < 0 or cu.A1 == 0
        return
    scale = abs(3 * cu.A1 * E * E) + abs(2 * cu.A2 * E) + abs(cu.A3)
    assert abs(cu.v(E)) < 1e-12 * max(1.0, scale)
    assert 6 * cu.A1 * E + 2 * cu.A2 > 0


# ------------------------------------------------------------ thresholds


@pytest.mark.parametrize("a,expected", [(0.8, 0.25), (0.3, 7 / 3), (1.0, 0.0)])
def test_fear_threshold(a, expected):
    assert thresholds(ModelParams(a=a, b=1, c=1, k=0, m=0)).k_star == pytest.approx(expected, abs=1e-15)


@given(model_params())
def test_thresholds_are_pure(p):
    assert thresholds(p) == thresholds(p)


def test_threshold_closed_forms():
    th = thresholds(ModelParams(a=0.2, b=0.2, c=1.1, k=0.2, m=0.6))
    assert th.m_star == pytest.approx(-1 + 0.36 * 1.1, abs=1e-15)
    assert th.m_dstar == pytest.approx(0.6, abs=1e-15)
    assert th.m1 == pytest.approx(1 - 0.22 - 0.2, abs=1e-15)
    assert th.m2 == pytest.approx((2 * 0.22 * 0.2 + 0.22 - 0.2 - 1) / 1.2, abs=1e-15)


# ---------------------------------------------------------------- m_of_x


@given(model_params(k_lo=0.05))
def test_m_of_x_round_trip(p):
    for x in interior_roots(p):
        if 1e-3 < x < 1 - 1e-3:
            assert m_of_x(p, x) == pytest.approx(p.m, abs=1e-8)
            assert abs(cubic(p.with_(m=max(m_of_x(p, x), 0.0))).u(x)) < 1e-10 * max(1.0, 1 / x)


def test_m_of_x_at_saddle_node_abscissa():
    p = ModelParams(a=0.3, b=0.2, c=1.1, k=1.1, m=0.1)
    E = 0.34893938845492495  # double root of u at the saddle-node, frozen from the bifurcation module
    assert m_of_x(p, E) == pytest.approx(0.1262554731, abs=1e-8)


@pytest.mark.parametrize("x", [0.0, 1.0, -0.2, 1.5])
def test_m_of_x_singular_endpoints(x):
    with pytest.raises(DomainError):
        m_of_x(ModelParams(a=0.3, b=0.2, c=1.1, k=1.1, m=0.1), x)


def test_m_of_x_diverges_towards_one():
    p = ModelParams(a=0.3, b=0.2, c=1.1, k=1.1, m=0.1)
    vals = [abs(m_of_x(p, 1 - 10.0**-j)) for j in (2, 4, 6)]
    assert vals[0] < vals[1] < vals[2] and vals[2] > 1e4


# -------------------------------------------------------------- det_via_v


def test_det_via_v_matches_jacobian_and_signs():
    p = ModelParams(a=0.3, b=0.5, c=1.1, k=1.1, m=0.15)
    roots = interior_roots(p)
    assert len(roots) == 2
    dets = []
    for x in roots:
        d = det_via_v(p, x)
        assert d == pytest.approx(jacobian(p, (x, (1 - x) / p.c)).det, abs=1e-8)
        dets.append(d)
    # the smaller root is the saddle
    assert dets[0] < 0 < dets[1]


def test_det_via_v_zero_at_double_root():
    from allelofear.bifurcation import saddle_node_points

    E, m_sn = saddle_node_points(0.3, 1.1, 1.1)[0]
    p = ModelParams(a=0.3, b=0.2, c=1.1, k=1.1, m=m_sn)
    assert abs(det_via_v(p, E)) < 1e-9


def test_det_via_v_rejects_non_roots(example_params):
    with pytest.raises(PreconditionError):
        det_via_v(example_params, 0.5)
