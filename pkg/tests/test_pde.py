import math

import numpy as np
import pytest

from allelofear import AssumptionViolation, DomainError, ModelParams, PreconditionError
from allelofear.pde import (
    SANDWICH_C,
    comparison_triplet,
    detect_convergence,
    homogeneous_candidates,
    integrate_pde,
    kinetic_reference,
    laplacian,
    make_fear_field,
    sandwich_tolerance,
    strong_competition_restrictions,
    trapezoid_weights,
    wedge_check,
)

TOXIC = ModelParams(a=0.3, b=0.2, c=1.1, k=0.0, m=0.15)
BISTABLE = ModelParams(a=0.2, b=0.2, c=1.1, k=0.0, m=0.15)
WEAK_COMP = ModelParams(a=0.2, b=0.2, c=0.9, k=0.0, m=1.6)


def sine(k0, k1, n=200):
    return make_fear_field("shifted_sine", {"offset": k0, "amplitude": k1, "frequency": 10.0}, n=n)


# ------------------------------------------------------------- fear field


def test_shifted_sine_extrema_are_exact():
    f = sine(3.0, 1.0, n=1000)
    assert (f.k_hat, f.k_tilde) == (3.0, 4.0)
    assert f.samples.min() >= 3.0 and f.samples.max() <= 4.0
    assert f.n == 1000 and f.h == pytest.approx(math.pi / 1000)


def test_constant_zero_field_is_rejected():
    with pytest.raises(AssumptionViolation):
        make_fear_field("constant", {"value": 0.0})


def test_isolated_zeros_are_accepted():
    f = sine(0.0, 0.1)
    assert f.k_hat == 0.0 and f.k_tilde == pytest.approx(0.1)
    assert f.zero_measure <= 3 * f.h


def test_negative_samples_are_rejected():
    with pytest.raises(AssumptionViolation, match="nonnegative"):
        make_fear_field("tabulated", {"values": [1.0] * 20 + [-0.1]})
    with pytest.raises(AssumptionViolation):
        sine(-0.5, 1.0)


def test_zero_plateau_is_rejected():
    vals = np.ones(101)
    vals[10:40] = 0.0
    with pytest.raises(AssumptionViolation, match="isolated"):
        make_fear_field("tabulated", {"values": vals.tolist()})


def test_tabulated_field_takes_n_from_values():
    f = make_fear_field("tabulated", {"values": np.linspace(1, 2, 33).tolist()})
    assert f.n == 32 and (f.k_hat, f.k_tilde) == (1.0, 2.0)


def test_field_argument_checks():
    with pytest.raises(DomainError):
        make_fear_field("constant", {"value": 1.0}, n=8)
    with pytest.raises(DomainError):
        make_fear_field("parabola", {"value": 1.0})


def test_field_csv(tmp_path):
    f = sine(3.0, 1.0, n=20)
    f.to_csv(tmp_path / "k.csv")
    lines = (tmp_path / "k.csv").read_text().splitlines()
    assert lines[0] == "x,k" and len(lines) == 22


# ---------------------------------------------------------- discretisation


@pytest.mark.parametrize("n", [16, 100, 1000])
def test_discrete_mass_is_conserved_by_diffusion(n):
    w = trapezoid_weights(n)
    rng = np.random.default_rng(n)
    x = rng.uniform(0, 2, n + 1)
    # one unit of time of pure diffusion cannot change the weighted sum
    assert abs(w @ (laplacian(n) @ x)) < 1e-10 * n * n
    assert w.sum() == pytest.approx(math.pi)


def test_laplacian_is_second_order_on_cosines():
    errs = []
    for n in (50, 100):
        x = np.linspace(0, math.pi, n + 1)
        errs.append(np.max(np.abs(laplacian(n) @ np.cos(2 * x) + 4 * np.cos(2 * x))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_pure_diffusion_keeps_mass():
    # with v absent and b negligible the reaction terms vanish, leaving pure diffusion of u
    f = make_fear_field("constant", {"value": 1.0}, n=64)
    x = f.grid
    u0 = 1.0 + 0.1 * np.cos(3 * x)
    sol = integrate_pde(ModelParams(a=0.3, b=1e-12, c=1.0, k=1.0, m=0.0), f, 1.0, 1.0,
                        (u0, np.zeros_like(x)), 1.0, times=[0.5])
    w = trapezoid_weights(64)
    masses = [w @ u for u in sol.u]
    assert max(masses) - min(masses) < 1e-10


# -------------------------------------------------------------- integration


def test_flat_data_matches_kinetics_for_constant_field():
    times = (1.0, 10.0, 100.0)
    f = make_fear_field("constant", {"value": 3.0}, n=200)
    sol = integrate_pde(TOXIC, f, 1.0, 1.0, (2.0, 0.4), 100.0, times=times)
    ref = kinetic_reference(TOXIC, 3.0, (2.0, 0.4), 100.0, times)
    for j, t in enumerate(times):
        i = int(np.searchsorted(sol.times, t))
        assert np.max(np.abs(sol.u[i] - ref[j, 0])) < 1e-6
        assert np.max(np.abs(sol.v[i] - ref[j, 1])) < 1e-6
        assert np.ptp(sol.u[i]) < 1e-9


def test_snapshots_and_positivity():
    sol = integrate_pde(TOXIC, sine(3.0, 1.0), 1.0, 1.0, (2.0, 0.4), 20.0, times=[5.0, 10.0])
    np.testing.assert_array_equal(sol.times, [0.0, 5.0, 10.0, 20.0])
    assert sol.u.min() >= 0 and sol.v.min() >= 0


def test_integrate_pde_argument_checks():
    f = sine(3.0, 1.0)
    with pytest.raises(DomainError):
        integrate_pde(TOXIC, f, 0.0, 1.0, (1.0, 1.0), 1.0)
    with pytest.raises(DomainError):
        integrate_pde(TOXIC, f, 1.0, 1.0, (-1.0, 1.0), 1.0)
    with pytest.raises(DomainError):
        integrate_pde(TOXIC, f, 1.0, 1.0, (1.0, 1.0), 1.0, times=[2.0])
    with pytest.raises(DomainError):
        integrate_pde(TOXIC, f, 1.0, 1.0, (np.ones(5), 1.0), 1.0)


def test_snapshot_csv(tmp_path):
    f = sine(3.0, 1.0, n=20)
    sol = integrate_pde(TOXIC, f, 1.0, 1.0, (2.0, 0.4), 1.0)
    sol.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "t,x,u,v" and len(lines) == 1 + 2 * 21


# ---------------------------------------------------------------- sandwich


def test_sandwich_tolerance_formula():
    h = math.pi / 1000
    assert sandwich_tolerance(h) == pytest.approx(1e-6 + SANDWICH_C * h * h)


def test_constant_field_sandwich_is_degenerate():
    f = make_fear_field("constant", {"value": 3.0}, n=100)
    rep = comparison_triplet(TOXIC, f, 1.0, 1.0, (2.0, 0.4), 50.0)
    assert rep.holds
    assert np.max(np.abs(rep.hetero.v - rep.hat.v)) < 1e-10
    assert np.max(np.abs(rep.hetero.v - rep.tilde.v)) < 1e-10


@pytest.mark.parametrize("params,k,init,expected", [
    (TOXIC, (3.0, 1.0), (2.0, 0.4), "(1,0)"),
    (BISTABLE, (4.0, 1.0), (0.01, 1.5), "(0,1)"),
    (BISTABLE, (4.0, 1.0), (1.5, 0.5), "(1,0)"),
    (WEAK_COMP, (0.0, 0.1), (4.0, 4.0), "interior"),
])
def test_sandwich_and_terminal_state_coarse_grid(params, k, init, expected):
    f = sine(*k, n=200)
    rep = comparison_triplet(params, f, 1.0, 1.0, init, 500.0)
    assert rep.holds, (rep.max_lower_violation, rep.max_upper_violation)
    cands, box = homogeneous_candidates(params, f)
    assert detect_convergence(rep.hetero, cands, 1e-3, box).verdict == expected


def test_comparison_needs_flat_data():
    f = sine(3.0, 1.0, n=20)
    with pytest.raises(PreconditionError):
        comparison_triplet(TOXIC, f, 1.0, 1.0, (np.ones(21), 0.4), 1.0)


def test_weak_competition_interior_is_init_independent():
    f = sine(0.0, 0.1, n=200)
    ends = []
    for init in ((4.0, 4.0), (0.1, 0.1)):
        sol = integrate_pde(WEAK_COMP, f, 1.0, 1.0, init, 500.0)
        ends.append(np.concatenate([sol.u[-1], sol.v[-1]]))
    assert np.max(np.abs(ends[0] - ends[1])) < 1e-6


def test_grid_refinement_is_second_order():
    # terminal change under doubling stays below four squared coarse cells
    out = {}
    for n in (100, 200):
        sol = integrate_pde(TOXIC, sine(3.0, 1.0, n=n), 1.0, 1.0, (2.0, 0.4), 20.0)
        out[n] = (sol.u[-1], sol.v[-1])
    h = math.pi / 100
    change = max(np.max(np.abs(out[200][i][::2] - out[100][i])) for i in range(2))
    assert change < 4 * h * h


# ------------------------------------------------------------- convergence


def test_detect_convergence_none_when_not_flat():
    f = sine(3.0, 1.0, n=50)
    sol = integrate_pde(TOXIC, f, 1.0, 1.0, (1.0 + 0.5 * np.cos(f.grid), 0.4), 0.1)
    cands, box = homogeneous_candidates(TOXIC, f)
    rep = detect_convergence(sol, cands, 1e-3, box)
    assert rep.verdict == "none"
    assert rep.oscillation[0] > 1e-3


def test_detect_convergence_argument_checks():
    f = sine(3.0, 1.0, n=20)
    sol = integrate_pde(TOXIC, f, 1.0, 1.0, (2.0, 0.4), 1.0)
    with pytest.raises(DomainError):
        detect_convergence(sol, [], 0.0)


# -------------------------------------------------------------------- wedge


def test_strong_competition_restrictions_report_both_variants():
    r = strong_competition_restrictions(BISTABLE, 4.0)
    assert all(r.values())
    assert len(r) == 6


def test_wedge_structure():
    rep = wedge_check(BISTABLE, sine(4.0, 1.0, n=200), 500.0)
    assert rep.saddle_hat == pytest.approx((0.029, 0.882), abs=5e-3)
    assert rep.saddle_tilde == pytest.approx((0.022, 0.888), abs=5e-3)
    assert rep.v_ordering and rep.ordering_holds
    assert [(exp, got) for _, exp, got in rep.probes] == [("(0,1)", "(0,1)"), ("(1,0)", "(1,0)")]
    assert rep.passed


def test_wedge_rejects_weak_competition():
    with pytest.raises(PreconditionError, match="c > 1"):
        wedge_check(WEAK_COMP, sine(0.5, 0.1, n=50), 10.0)
