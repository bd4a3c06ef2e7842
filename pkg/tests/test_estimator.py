from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from mixfbm import (EstimatorSpec, GridPath, KernelSpec, QKind, QPath, Role, ThetaSpec, TimeGrid, bandwidth,
                    estimate_q_path, kernel_eval, sup_risk)
from mixfbm.estimator import Smoother, bandwidth_exponent, interior_mask, rate_exponent
from mixfbm.harness import Experiment, ExperimentConfig


def test_kernel_values():
    epa, uni = KernelSpec("epanechnikov"), KernelSpec("uniform")
    assert kernel_eval(0.0, epa) == 0.75
    assert kernel_eval(0.3, uni) == 0.5
    assert kernel_eval(1.2, uni) == 0.0
    assert kernel_eval(-1.01, epa) == 0.0
    np.testing.assert_array_equal(kernel_eval(np.array([-2.0, 0.5, 2.0]), epa), [0.0, 0.5625, 0.0])


@pytest.mark.parametrize("kind", ["epanechnikov", "uniform"])
def test_builtin_kernels_normalized(kind):
    k = KernelSpec(kind)
    assert abs(integrate.quad(k, -1, 1, epsabs=1e-13)[0] - 1.0) <= 1e-10
    assert k.support == (-1.0, 1.0)


def test_custom_kernel():
    u = np.array([-0.5, 0.0, 1.5])
    k = KernelSpec("custom", u, np.array([0.0, 1.0, 0.0]))
    assert k.support == (-0.5, 1.5)
    assert kernel_eval(0.75, k) == pytest.approx(0.5)
    assert kernel_eval(2.0, k) == 0.0
    with pytest.raises(ValueError):
        KernelSpec("custom", u, np.array([0.0, 2.0, 0.0]))
    with pytest.raises(ValueError):
        KernelSpec("custom", np.array([0.1, 0.5, 1.0]), np.array([0.0, 4.4, 0.0]))
    with pytest.raises(ValueError):
        KernelSpec("gaussian")


def test_bandwidth_values():
    assert bandwidth(0.1, 1.0, 1.0) == pytest.approx(0.1 ** (4 / 7), rel=1e-15)
    assert bandwidth(0.1, 1.0, 1.0) == pytest.approx(0.26826957952797, rel=1e-12)
    assert bandwidth_exponent(1.0) == pytest.approx(4 / 7)
    assert bandwidth_exponent(0.5) == pytest.approx(4 / 5)
    assert rate_exponent(1.0) == pytest.approx(8 / 7)
    for bad in [(0.0, 1.0, 1.0), (0.1, 1.0, 0.0), (0.1, 0.0, 1.0), (-1, 1.0, 1.0)]:
        with pytest.raises(ValueError):
            bandwidth(*bad)


def test_variance_term_decreases():
    vals = [e**2 * bandwidth(e, 1.0) ** -1.5 for e in (0.2, 0.1, 0.05)]
    for e, v in zip((0.2, 0.1, 0.05), vals):
        assert v == pytest.approx(e ** (8 / 7), rel=1e-12)
    assert vals[0] > vals[1] > vals[2]


@given(st.integers(1, 40), st.integers(1, 40))
def test_exponent_identity_rational(p, q):
    gamma = Fraction(min(p, q), max(p, q))
    beta = Fraction(4) / (4 * gamma + 3)
    # h^{2 gamma} = eps^2 h^{-3/2} with h = eps^beta, compared as exponents of eps
    assert 2 * gamma * beta == 2 - Fraction(3, 2) * beta
    assert 0 < beta < Fraction(4, 3)
    assert 2 * gamma * beta == Fraction(8) * gamma / (4 * gamma + 3)


def test_interior_mask():
    grid = TimeGrid(1.0, 10)
    mask = interior_mask(grid, 0.2, (-1.0, 1.0))
    np.testing.assert_array_equal(mask, [False, False, True, True, True, True, True, True, True, False, False])


def intrinsic_path(fam, q_of_t):
    q = q_of_t(fam.grid.midpoints)
    return GridPath(fam.grid, np.concatenate([[0], np.cumsum(q * np.diff(fam.qv))]), Role.TRANSFORM_Z)


@pytest.mark.parametrize("kind", ["epanechnikov", "uniform"])
def test_constant_drift_recovered(fam07_256, kind):
    c = 1.7
    Z = intrinsic_path(fam07_256, lambda s: np.full_like(s, c))
    est = estimate_q_path(Z, EstimatorSpec(KernelSpec(kind)), 0.05, fam07_256)
    inner = ~est.boundary
    dt_over_h = fam07_256.grid.dt / est.h
    np.testing.assert_allclose(est.values[inner], c, rtol=dt_over_h)
    assert est.path.kind is QKind.ESTIMATE_QHAT


def test_zero_data_gives_zero(fam07_128):
    Z = GridPath(fam07_128.grid, np.zeros(129), Role.TRANSFORM_Z)
    est = estimate_q_path(Z, EstimatorSpec(), 0.1, fam07_128)
    assert np.all(est.values == 0.0)


def test_estimator_linear_in_z(fam07_128):
    rng = np.random.default_rng(0)
    z1, z2 = (np.concatenate([[0], np.cumsum(rng.standard_normal(128))]) for _ in range(2))
    f = lambda z: estimate_q_path(GridPath(fam07_128.grid, z, Role.TRANSFORM_Z), EstimatorSpec(), 0.1,
                                  fam07_128).values
    np.testing.assert_allclose(f(0.5 * z1 + 2 * z2), 0.5 * f(z1) + 2 * f(z2), atol=1e-10)


def test_noiseless_error_shrinks_with_h():
    from mixfbm import build_family
    fam = build_family(TimeGrid(1.0, 1024), 0.7)
    q = lambda s: np.sin(3 * s) + s
    Z = intrinsic_path(fam, q)
    errs = []
    for h in (0.2, 0.1, 0.05):
        sm = Smoother(fam, KernelSpec(), h)
        vals = sm.apply(Z.increments())
        t = fam.grid.points
        inner = interior_mask(fam.grid, 0.2, (-1, 1))
        errs.append(np.max(np.abs(vals - q(t))[inner]))
    assert errs[0] > errs[1] > errs[2]
    # smooth target, symmetric kernel: bias shrinks at least like h^gamma with gamma = 1
    assert errs[1] < 0.5 * errs[0] and errs[2] < 0.5 * errs[1]


def test_bandwidth_below_resolution(fam07_128):
    Z = GridPath(fam07_128.grid, np.zeros(129), Role.TRANSFORM_Z)
    with pytest.raises(ValueError, match="two grid steps"):
        estimate_q_path(Z, EstimatorSpec(bandwidth_constant=0.001), 0.1, fam07_128)


def test_sup_risk_examples():
    grid = TimeGrid(1.0, 16)
    target = QPath(grid, np.linspace(0, 1, 17), QKind.TARGET_QSTAR)
    same = [target.values.copy() for _ in range(3)]
    assert sup_risk(same, target).sup_risk == 0.0
    d = 0.37
    single = sup_risk([target.values + d], target)
    assert single.sup_risk == pytest.approx(d * d, rel=1e-14)
    assert np.isnan(single.se)
    with pytest.raises(ValueError):
        sup_risk([], target)
    with pytest.raises(ValueError):
        sup_risk(same, target, interior=np.zeros(17, dtype=bool))


def test_sup_risk_reports_argmax_and_se():
    grid = TimeGrid(1.0, 4)
    target = QPath(grid, np.zeros(5), QKind.TARGET_QSTAR)
    reps = [np.array([0, 1, 3, 0, 0.0]), np.array([0, -1, 1, 0, 0.0])]
    s = sup_risk(reps, target, "full_with_flag")
    assert s.argmax == 2 and s.argmax_t == 0.5
    assert s.sup_risk == pytest.approx(5.0)
    assert s.se == pytest.approx(np.std([9.0, 1.0], ddof=1) / np.sqrt(2))
    np.testing.assert_allclose(s.curve, [0, 1, 5, 0, 0])


@pytest.mark.slow
def test_paired_noise_levels_reduce_error():
    cfg = ExperimentConfig(theta_form="constant", theta_params=(0.5,), H=0.7, n=512,
                           eps_list=(0.1, 0.05), replications=200, seed=99)
    exp = Experiment(cfg)
    per_eps = {0.1: [], 0.05: []}
    for r in range(cfg.replications):
        for rep in exp.replicate(r, cfg.eps_list):
            per_eps[rep.eps].append(rep.qhat)
    mse = {}
    for eps, ests in per_eps.items():
        inner = ~ests[0].boundary
        err = np.stack([e.values for e in ests]) - exp.qstar.values
        mse[eps] = np.mean(err[:, inner] ** 2)
    assert mse[0.05] < mse[0.1]
