"""Smoke tests for the python bindings."""

import math

import pytest

import invaug as iv


@pytest.fixture(scope="module")
def space():
    return iv.TransformSpace(["identity", "rotate", "scale"], 30)


@pytest.fixture(scope="module")
def rings():
    spec = iv.SyntheticSpec("rings", n_train=120, n_test=80, noise_sigma=0.1,
                            seed=7, n_classes=2)
    return iv.make_dataset_pair(spec)


def test_dataset_generation_is_deterministic(rings):
    train, test = rings
    spec = iv.SyntheticSpec("rings", n_train=120, n_test=80, noise_sigma=0.1,
                            seed=7, n_classes=2)
    train2, _ = iv.make_dataset_pair(spec)
    assert len(train) == 120 and len(test) == 80
    assert train.samples[5].x == train2.samples[5].x


def test_rings_labels_rotation_invariant(space):
    spec = iv.SyntheticSpec("rings", n_train=40, n_test=10, noise_sigma=0.0,
                            seed=3, n_classes=3)
    ds = iv.make_rings(spec)
    rotations = iv.TransformSpace(["rotate"], 30)
    for s in ds.samples[:10]:
        for g in rotations.elements():
            assert iv.rings_label(iv.apply(g, s.x), 3) == s.y


def test_space_measure(space):
    assert len(space) == 61
    assert iv.measure(space) == 61.0
    assert len(space.elements()) == 61


def test_gradient_check():
    config = iv.MLPConfig([2, 16, 16, 3], "tanh", 0.5, 1)
    report = iv.gradient_check(config, n_probes=5, seed=1)
    assert report["max_rel_err"] < 1e-5


def test_smoothed_lambda_identities(space, rings):
    train, _ = rings
    config = iv.MLPConfig([2, 16, 2], "tanh", 0.5, 2)
    theta = iv.init_params(config)
    s = train.samples[0]
    ol = iv.orbit_losses(theta, config, s.x, s.y, space)
    sd = iv.smoothed_lambda(ol)
    assert math.isclose(sum(sd.probs), 1.0, abs_tol=1e-12)
    assert math.isclose(2.0 * sd.c_star, sum(ol.losses), rel_tol=1e-12)
    max_loss, argmax = iv.adversarial_loss(ol)
    assert ol.losses[argmax] == max_loss
    assert iv.expected_smoothed_loss(ol, sd) <= max_loss


def test_mh_chain_members_and_determinism(space, rings):
    train, _ = rings
    config = iv.MLPConfig([2, 16, 2], "tanh", 0.5, 4)
    theta = iv.init_params(config)
    s = train.samples[1]
    cfg = iv.SamplerConfig(n_steps=2, m=3)
    a = iv.mh_chain(theta, config, s.x, s.y, space, cfg, 99)
    b = iv.mh_chain(theta, config, s.x, s.y, space, cfg, 99)
    assert len(a) == 3
    assert all(x == y for x, y in zip(a, b))
    indices = {space.index_of(g) for g in a}
    assert all(0 <= i < len(space) for i in indices)


def test_exact_sample_point_mass(space):
    probs = [0.0] * len(space)
    probs[7] = 1.0
    rng = iv.Rng(5)
    for _ in range(10):
        assert space.index_of(iv.exact_sample(space, probs, rng)) == 7


def test_train_round_trip(rings):
    train_ds, test_ds = rings
    space = iv.TransformSpace(["identity", "rotate"], 30)
    mc = iv.MLPConfig([2, 16, 2], "tanh", 0.5, 11)
    tc = iv.TrainerConfig(mode="primal_dual", epsilon=0.5, eta_p=0.1,
                          epochs=8, batch_size=32, seed=13)
    result = iv.train(train_ds, test_ds, space, mc, tc)
    assert len(result.epochs) == 8
    for em in result.epochs:
        assert em.gamma >= 0.0
        assert 0.0 <= em.test_accuracy <= 1.0
        assert sum(em.transform_histogram) == len(train_ds)
    assert result.epochs[-1].train_loss < result.epochs[0].train_loss


def test_dual_update_projection():
    assert iv.dual_update(0.0, 0.5, -1.0) == 0.0
    assert math.isclose(iv.dual_update(0.1, 0.001, -0.5), 0.0995)
    assert iv.lagrangian(1.0, 2.0, 0.1) == pytest.approx(1.2)
