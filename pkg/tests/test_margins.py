"""Margin solver: closed-form cases, a planar grid oracle, duality
residuals, and monotonicity in the perturbation radius."""

import math

import numpy as np
import pytest

from advlab.data import Dataset
from advlab.margins import MarginResult, adversarial_margin, standard_margin
from advlab.norms import PerturbationModel, dual_exponent, lp_norm


def _dataset(feats, labels):
    labels = np.asarray(labels, dtype=float)
    return Dataset(
        features=np.asarray(feats, dtype=float),
        labels=labels,
        clean_labels=labels.copy(),
        noise_indices=np.array([], dtype=int),
        spec=None,
    )


def _vec_norms(dirs, q):
    if math.isinf(q):
        return np.abs(dirs).max(axis=1)
    if q == 2.0:
        return np.linalg.norm(dirs, axis=1)
    return (np.abs(dirs) ** q).sum(axis=1) ** (1.0 / q)


def _grid_oracle(z, sphere_q, pen_q, eps, m=400_000):
    ang = np.linspace(0.0, 2.0 * math.pi, m, endpoint=False)
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    dirs = dirs / _vec_norms(dirs, sphere_q)[:, None]
    vals = (z @ dirs.T).min(axis=0)
    if eps > 0.0:
        vals = vals - eps * _vec_norms(dirs, pen_q)
    return float(vals.max())


def test_single_sample_standard_margin_is_dual_norm():
    # max_{||theta||_q = 1} theta.z = ||z||_p by Hoelder
    rng = np.random.default_rng(0)
    for q in [1.0, 1.5, 2.0, 4.0, math.inf]:
        z = rng.normal(size=6)
        ds = _dataset(z[None, :], [1.0])
        res = standard_margin(ds, q=q)
        assert res.value == pytest.approx(lp_norm(z, dual_exponent(q)), rel=1e-6)
        assert lp_norm(res.direction, q) == pytest.approx(1.0, rel=1e-12)


def test_single_sample_adversarial_margin_euclidean():
    z = np.array([3.0, 4.0])
    ds = _dataset(z[None, :], [1.0])
    model = PerturbationModel(p=2.0, epsilon=0.75)
    res = adversarial_margin(ds, model)
    # theta = z/||z|| is optimal; value = ||z|| - eps
    assert res.value == pytest.approx(5.0 - 0.75, abs=1e-8)
    assert np.linalg.norm(res.direction) == pytest.approx(1.0, rel=1e-12)


def test_antipodal_pair_has_zero_margin():
    z = np.array([1.0, 2.0, -0.5])
    ds = _dataset(np.stack([z, -z]), [1.0, 1.0])
    res = standard_margin(ds, q=2.0)
    assert abs(res.value) <= 1e-7


def test_margin_result_value_matches_direction():
    rng = np.random.default_rng(1)
    feats = rng.normal(size=(8, 5))
    labels = np.where(rng.random(8) < 0.5, -1.0, 1.0)
    ds = _dataset(feats, labels)
    model = PerturbationModel(p=2.0, epsilon=0.1)
    res = adversarial_margin(ds, model)
    assert isinstance(res, MarginResult)
    z = ds.signed_features
    recomputed = float((z @ res.direction).min()) - 0.1 * lp_norm(res.direction, 2.0)
    assert recomputed == res.value
    assert res.certificate_gap >= 0.0


def test_planar_instances_match_grid_oracle():
    """Twenty random 3-point planar problems across exponents and radii."""
    rng = np.random.default_rng(2)
    for trial in range(20):
        feats = rng.normal(size=(3, 2))
        labels = np.where(rng.random(3) < 0.5, -1.0, 1.0)
        ds = _dataset(feats, labels)
        z = ds.signed_features
        q = [1.0, 1.5, 2.0, 4.0, math.inf][trial % 5]
        eps = [0.0, 0.05, 0.2][trial % 3]

        got = standard_margin(ds, q=q).value
        want = _grid_oracle(z, q, q, 0.0)
        assert got == pytest.approx(want, abs=1e-3), (trial, q)

        model = PerturbationModel(p=dual_exponent(q), epsilon=eps)
        got_adv = adversarial_margin(ds, model).value
        want_adv = _grid_oracle(z, 2.0, q, eps)
        assert got_adv == pytest.approx(want_adv, abs=1e-3), (trial, q, eps)


def test_adversarial_margin_monotone_in_epsilon():
    rng = np.random.default_rng(3)
    feats = rng.normal(size=(10, 5)) + 1.0
    ds = _dataset(feats, np.ones(10))
    for p in [2.0, math.inf]:
        prev = math.inf
        for eps in [0.0, 0.05, 0.1, 0.2, 0.4]:
            val = adversarial_margin(ds, PerturbationModel(p=p, epsilon=eps)).value
            assert val <= prev + 1e-9
            prev = val


def test_adversarial_never_exceeds_standard_at_q2():
    rng = np.random.default_rng(4)
    for seed in range(5):
        feats = rng.normal(size=(12, 8)) + 0.5
        labels = np.where(rng.random(12) < 0.5, -1.0, 1.0)
        ds = _dataset(feats, labels)
        std = standard_margin(ds, q=2.0).value
        adv = adversarial_margin(ds, PerturbationModel(p=2.0, epsilon=0.1)).value
        assert adv <= std + 1e-9


def test_nonseparable_instance_reports_negative_margin():
    # three directions 120 degrees apart surround the origin; the best any
    # unit vector can do against the worst of them is cos(120) = -1/2
    s = math.sqrt(3.0) / 2.0
    feats = np.array([[1.0, 0.0], [-0.5, s], [-0.5, -s]])
    res = standard_margin(_dataset(feats, np.ones(3)), q=2.0)
    assert res.value == pytest.approx(-0.5, abs=1e-6)
