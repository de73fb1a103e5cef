import numpy as np
import pytest

from dikernel.baselines import (LinearHead, ce_loss_and_grad, fit_head, head_scores, ls_loss_and_grad,
                                softmax_ce, train_ce, train_ls)
from dikernel.data import make_blobs, minmax_scale
from dikernel.feature_maps import FourierMap, NystromMap, features, init_fourier, init_nystrom
from dikernel.kernels import KernelConfig
from dikernel.objectives import DIConfig, mrlse, nys_di
from dikernel.predictors import classify, krr_fit, krr_predict, mse
from dikernel.training import TrainConfig, train_fourier, train_nystrom
from conftest import fd_grad, rel

KC = KernelConfig(gamma=2.0)


@pytest.fixture(scope="module")
def blobs():
    ds, _ = minmax_scale(make_blobs(1500, 2, 3, clusters_per_class=2, separation=1.0, noise=0.6, seed=5))
    return ds


def batch(rng, N=20, d=3, L=3):
    return rng.uniform(size=(d, N)), np.eye(L)[np.arange(N) % L]


def test_fourier_head_matches_krr(rng):
    X, Y = batch(rng)
    fmap = init_fourier(KC, 3, 4, 0)
    head = fit_head(X, Y, fmap, DIConfig(1e-3), chunk=7)
    m = krr_fit(features(X, fmap), Y, DIConfig(1e-3))
    np.testing.assert_allclose(head.W, m.W, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(head.b, m.b, rtol=1e-8, atol=1e-10)


def test_nystrom_head_matches_whitened_krr(rng):
    X, Y = batch(rng, N=30)
    nmap = init_nystrom(X, 5, 0)
    head = fit_head(X, Y, nmap, DIConfig(1e-3), KC)
    m = krr_fit(features(X, nmap, KC), Y, DIConfig(1e-3))
    np.testing.assert_allclose(head_scores(head, X, nmap, KC), krr_predict(m, features(X, nmap, KC)),
                               rtol=1e-6, atol=1e-8)


def test_batch_head_attains_minimum_loss(rng):
    X, Y = batch(rng, N=25)
    cfg = DIConfig(1e-2)
    fmap = init_fourier(KC, 3, 4, 1)
    loss = ls_loss_and_grad(X, Y, fmap, fit_head(X, Y, fmap, cfg), cfg)[0]
    assert loss == pytest.approx(mrlse(features(X, fmap), Y, cfg), rel=1e-8)
    nmap = init_nystrom(X, 4, 1)
    loss = ls_loss_and_grad(X, Y, nmap, fit_head(X, Y, nmap, cfg, KC), cfg, KC)[0]
    Yc = Y - Y.mean(0)
    assert loss == pytest.approx(np.sum(Yc ** 2) - nys_di(X, Y, nmap, cfg, KC), rel=1e-8)


def test_ls_gradients_finite_differences(rng):
    X, Y = batch(rng)
    cfg = DIConfig(1e-2)
    head = LinearHead(rng.normal(size=(4, 3)), rng.normal(size=3))
    nmap = init_nystrom(X, 4, 2)
    _, (g,), (hW, hb) = ls_loss_and_grad(X, Y, nmap, head, cfg, KC)
    f = lambda hh: ls_loss_and_grad(X, Y, nmap, hh, cfg, KC)[0]
    assert rel(hW, fd_grad(lambda W: f(LinearHead(W, head.b)), head.W)) < 1e-5
    assert rel(hb, fd_grad(lambda b: f(LinearHead(head.W, b)), head.b)) < 1e-5
    f = fd_grad(lambda Z: ls_loss_and_grad(X, Y, NystromMap(Z), head, cfg, KC)[0], nmap.X_r)
    assert rel(g, f) < 1e-5
    fmap = init_fourier(KC, 3, 4, 2)
    gW, gb = ls_loss_and_grad(X, Y, fmap, head, cfg)[1]
    fW = fd_grad(lambda W: ls_loss_and_grad(X, Y, FourierMap(W, fmap.b_f), head, cfg)[0], fmap.W_f)
    fb = fd_grad(lambda b: ls_loss_and_grad(X, Y, FourierMap(fmap.W_f, np.mod(b, 2 * np.pi)), head, cfg)[0],
                 fmap.b_f)
    assert rel(gW, fW) < 1e-5 and rel(gb, fb) < 1e-5


def test_ce_simple_values():
    loss, _ = softmax_ce(np.zeros((5, 4)), np.arange(5) % 4)
    assert loss == pytest.approx(np.log(4), rel=1e-14)
    losses = [softmax_ce(np.array([[m, 0.0, 0.0]]), [0])[0] for m in (1.0, 10.0, 40.0)]
    assert losses[0] > losses[1] > losses[2] and losses[2] < 1e-16


def test_ce_shift_invariant_and_nonnegative(rng):
    Z = rng.normal(size=(6, 3)) * 5
    lab = rng.integers(0, 3, 6)
    a = softmax_ce(Z, lab)[0]
    assert a >= 0
    assert softmax_ce(Z + rng.normal(size=(6, 1)) * 100, lab)[0] == pytest.approx(a, rel=1e-12)


@pytest.mark.parametrize("kind", ["nystrom", "fourier"])
def test_ce_gradients_finite_differences(rng, kind):
    X, Y = batch(rng)
    lab = Y.argmax(1)
    head = LinearHead(rng.normal(size=(4, 3)), rng.normal(size=3))
    m = init_nystrom(X, 4, 3) if kind == "nystrom" else init_fourier(KC, 3, 4, 3)
    _, g_map, (gW, gb) = ce_loss_and_grad(X, lab, m, head, KC)
    f = lambda hh: ce_loss_and_grad(X, lab, m, hh, KC)[0]
    assert rel(gW, fd_grad(lambda W: f(LinearHead(W, head.b)), head.W)) < 1e-5
    assert rel(gb, fd_grad(lambda b: f(LinearHead(head.W, b)), head.b)) < 1e-5
    if kind == "nystrom":
        fm = fd_grad(lambda Z: ce_loss_and_grad(X, lab, NystromMap(Z), head, KC)[0], m.X_r)
        assert rel(g_map[0], fm) < 1e-5
    else:
        fm = fd_grad(lambda W: ce_loss_and_grad(X, lab, FourierMap(W, m.b_f), head)[0], m.W_f)
        assert rel(g_map[0], fm) < 1e-5


def test_ls_zero_epochs(blobs):
    nmap = init_nystrom(blobs, 8, 0)
    out, head, rep = train_ls(blobs, nmap, TrainConfig(batch_size=300, max_epochs=0), DIConfig(), KC)
    assert out is nmap and rep.epochs == 0
    ref = fit_head(blobs.X, blobs.Y, nmap, DIConfig(), KC)
    np.testing.assert_allclose(head.W, ref.W)


@pytest.mark.parametrize("kind", ["nystrom", "fourier"])
def test_ls_training_lowers_train_mse(blobs, kind):
    m0 = init_nystrom(blobs, 8, 0) if kind == "nystrom" else init_fourier(KC, 2, 8, 0)
    m1, head, rep = train_ls(blobs, m0, TrainConfig(batch_size=300, lr0=1e-2, max_epochs=100), DIConfig(), KC)

    def train_mse(m):
        F = features(blobs.X, m, KC)
        return mse(krr_predict(krr_fit(F, blobs.Y), F), blobs.Y)

    assert rep.final_mu < rep.initial_mu
    assert train_mse(m1) <= train_mse(m0)
    np.testing.assert_allclose(head.W, fit_head(blobs.X, blobs.Y, m1, DIConfig(), KC).W)


def test_ls_follows_di_training(blobs):
    # an optimal per-batch head makes the map gradient the negative DI gradient
    cfg = TrainConfig(batch_size=300, lr0=1e-2, max_epochs=3, saturation_rel_tol=1e-12)
    m0 = init_nystrom(blobs, 8, 0)
    a = train_ls(blobs, m0, cfg, DIConfig(), KC)[0]
    b = train_nystrom(blobs, m0, cfg, DIConfig(), KC)[0]
    np.testing.assert_allclose(a.X_r, b.X_r, atol=1e-7)
    f0 = init_fourier(KC, 2, 8, 0)
    a = train_ls(blobs, f0, cfg, DIConfig(), KC)[0]
    b = train_fourier(blobs, f0, cfg)[0]
    np.testing.assert_allclose(a.W_f, b.W_f, atol=1e-7)


@pytest.mark.parametrize("kind", ["nystrom", "fourier"])
def test_ce_training_lowers_loss(blobs, kind):
    m0 = init_nystrom(blobs, 8, 0) if kind == "nystrom" else init_fourier(KC, 2, 8, 0)
    m1, head, rep = train_ce(blobs, m0, TrainConfig(batch_size=300, lr0=1e-2, max_epochs=100), KC)
    assert rep.initial_mu == pytest.approx(np.log(3))
    assert rep.final_mu < rep.initial_mu
    acc = np.mean(classify(head_scores(head, blobs.X, m1, KC)) == blobs.labels)
    assert acc > 1 / 3


def test_ce_needs_labels(blobs):
    from dataclasses import replace
    reg = replace(blobs, labels=None)
    with pytest.raises(ValueError):
        train_ce(reg, init_fourier(KC, 2, 4, 0), TrainConfig(batch_size=300), KC)
