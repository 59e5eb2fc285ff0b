"""Bi-disc profile, radial extension and the embeddings built from them."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from symplength import bidisc_embedding, bidisc_profile, fiber_frame_embedding, local_ball_embedding, radial_extension
from symplength.manifolds import ModelError
from symplength.symplectic import (
    bidisc_radius,
    compose,
    finite_difference_jacobian,
    standard_form,
)

radii = st.floats(0.1, 3.0)


# -- profile ---------------------------------------------------------------------


@pytest.mark.parametrize("a,b", [(1, 1), (2, 0.5), (0.3, 0.7)])
def test_profile_endpoint_value(a, b):
    R = 2 * math.sqrt(a * b / math.pi)
    f, fp = bidisc_profile(a, b, R)
    assert f == pytest.approx(a * b, rel=1e-14)
    assert fp == 0.0


def test_profile_at_zero():
    f, fp = bidisc_profile(1, 1, 0.0)
    assert f == 0.0
    assert fp == pytest.approx(2 / math.sqrt(math.pi))


def test_profile_matches_quadrature():
    f, _ = bidisc_profile(1, 1, 0.5)
    ref, _ = quad(lambda t: math.sqrt(4 / math.pi - t * t), 0, 0.5, epsabs=1e-14, epsrel=1e-14)
    assert abs(f - ref) <= 1e-10


@given(radii, radii, st.floats(0.0, 1.0))
def test_profile_odd_monotone_concave(a, b, s):
    R = bidisc_radius(a, b)
    t = s * R
    f, fp = bidisc_profile(a, b, t)
    fm, fpm = bidisc_profile(a, b, -t)
    assert fm == pytest.approx(-f, abs=1e-15)
    assert fp >= 0 and fpm == pytest.approx(fp)
    if 1e-6 < s < 1:
        assert f / t > fp


def test_profile_out_of_range():
    with pytest.raises(ValueError):
        bidisc_profile(1, 1, 1.2)


# -- radial extension ------------------------------------------------------------


def test_radial_extension_at_origin():
    phi, D = radial_extension(1, 1, np.zeros(3))
    assert np.array_equal(phi, np.zeros(3))
    assert np.allclose(D, 2 / math.sqrt(math.pi) * np.eye(3), atol=1e-15)


def test_radial_extension_one_dimensional_reduces_to_profile():
    for q in (-0.9, -0.1, 0.3, 1.05):
        phi, D = radial_extension(1, 1, np.array([q]))
        f, fp = bidisc_profile(1, 1, q)
        assert phi[0] == pytest.approx(f, rel=1e-13)
        assert D[0, 0] == pytest.approx(fp, rel=1e-12, abs=1e-15)


def test_radial_extension_matches_displayed_formula(rng):
    for _ in range(50):
        q = rng.normal(size=3) * 0.4
        r = np.linalg.norm(q)
        f, fp = bidisc_profile(1.0, 2.0, r)
        u = q / r
        expected = (fp - f / r) * np.outer(u, u) + f / r * np.eye(3)
        phi, D = radial_extension(1.0, 2.0, q)
        assert np.allclose(phi, f * u, rtol=1e-13)
        assert np.allclose(D, expected, rtol=1e-11, atol=1e-13)


def test_radial_extension_vs_finite_differences(rng):
    for _ in range(20):
        q = rng.uniform(-0.7, 0.7, 2)
        _, D = radial_extension(1, 1, q)
        Dfd = finite_difference_jacobian(lambda x: radial_extension(1, 1, x)[0], q, 1e-6)
        assert np.linalg.norm(D - Dfd) <= 1e-6 * np.linalg.norm(D)


def test_radial_extension_lower_bound(rng):
    a, b = 0.8, 1.3
    R = bidisc_radius(a, b)
    q = rng.normal(size=(10_000, 2))
    q *= (rng.uniform(0, 0.999, 10_000) * R / np.linalg.norm(q, axis=1))[:, None]
    h = rng.normal(size=(10_000, 2))
    _, D = radial_extension(a, b, q)
    _, fp = bidisc_profile(a, b, np.linalg.norm(q, axis=1))
    Dh = np.linalg.norm((D @ h[..., None])[..., 0], axis=1)
    assert np.all(Dh >= fp * np.linalg.norm(h, axis=1) - 1e-10)


def test_radial_extension_smooth_across_series_cutoff():
    # the auxiliary functions switch from series to direct formulas at |q| = R/2
    R = bidisc_radius(1, 1)
    for s in (0.5 - 1e-9, 0.5 + 1e-9):
        q = np.array([s * R, 0.0])
        _, D = radial_extension(1, 1, q)
        Dfd = finite_difference_jacobian(lambda x: radial_extension(1, 1, x)[0], q, 1e-7)
        assert np.allclose(D, Dfd, atol=1e-7)


def test_radial_extension_outside_ball():
    with pytest.raises(ValueError):
        radial_extension(1, 1, np.array([1.2, 0.0]))


# -- bi-disc embedding ---------------------------------------------------------


def test_bidisc_origin_fixed():
    e = bidisc_embedding(1, 1, 1e-3)
    assert np.array_equal(e(np.zeros(4)), np.zeros(4))


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_bidisc_image_inside_target(a, b):
    e = bidisc_embedding(a, b, 1e-3)
    X = e.domain.sample(10_000)
    assert np.all(e.target.margin(e(X)) >= 0)


def test_bidisc_domain_capacity():
    for a, b in [(1, 1), (2, 0.5), (0.3, 0.7)]:
        e = bidisc_embedding(a, b, 1e-3)
        assert e.capacity == pytest.approx(4 * a * b * (1 - 1e-3) ** 2, rel=1e-14)


@given(radii, radii, st.floats(1.1, 3.0))
def test_bidisc_capacity_conformal(a, b, lam):
    c0 = bidisc_embedding(a, b, 1e-3).capacity
    c1 = bidisc_embedding(lam * a, lam * b, 1e-3).capacity
    assert c1 == pytest.approx(lam**2 * c0, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_bidisc_jacobian_vs_finite_differences(n):
    e = bidisc_embedding(0.7, 1.3, 1e-3, n)
    X = e.domain.sample(200)
    J = e.jac(X)
    Jfd = finite_difference_jacobian(e.mapping, X, 1e-6)
    rel = np.linalg.norm(J - Jfd, axis=(-2, -1)) / np.linalg.norm(J, axis=(-2, -1))
    assert rel.max() <= 1e-4


def test_bidisc_volume_preserving():
    e = bidisc_embedding(1, 1, 1e-3, 2)
    J = e.jac(e.domain.sample(2000))
    assert np.allclose(np.abs(np.linalg.det(J)), 1.0, atol=1e-8)


def test_bidisc_invalid_shrink():
    with pytest.raises(ValueError):
        bidisc_embedding(1, 1, 0.0)


def test_standard_form_pairs_q_with_p():
    O = standard_form(2)
    x = np.array([1.0, 0, 0, 0])
    y = np.array([0, 0, 1.0, 0])
    assert x @ O @ y == 1.0


# -- embeddings into disc bundles ---------------------------------------------------


def test_fiber_frame_is_identity_on_torus(torus):
    psi = fiber_frame_embedding(torus, [0.2, 0.3], 0.2, 0.9)
    X = psi.domain.sample(100)
    Y = psi(X)
    assert np.allclose(Y[:, :2], X[:, :2] + [0.2, 0.3])
    assert np.allclose(Y[:, 2:], X[:, 2:])
    assert np.array_equal(psi.jac(X[0]), np.eye(4))


def test_fiber_frame_center(sphere):
    q0 = np.array([0.05, -0.02])
    psi = fiber_frame_embedding(sphere, q0, 0.05, 0.9)
    assert np.allclose(psi(np.zeros(4)), np.r_[q0, 0, 0], atol=1e-15)


def test_fiber_frame_too_large(torus):
    with pytest.raises(ModelError):
        fiber_frame_embedding(torus, [0, 0], 0.3, 0.9)


def test_local_ball_capacity_on_torus(torus):
    rho_p = math.sqrt(1 / 1.1)
    emb = local_ball_embedding(torus, [0.0, 0.0], 0.1, rho_p, 1e-3)
    assert emb.capacity == pytest.approx(2 * 0.1 * rho_p * (1 - 1e-3) ** 2, rel=1e-14)
    assert 2 * 0.1 * rho_p == pytest.approx(0.19069, abs=1e-5)


def test_local_ball_center_and_parts(sphere):
    q0 = np.array([0.1, 0.05])
    emb = local_ball_embedding(sphere, q0, 0.05, 0.95, 1e-3)
    assert np.allclose(emb(np.zeros(4)), np.r_[q0, 0, 0], atol=1e-14)
    X = emb.domain.sample(64)
    real = X.copy()
    real[:, 2:] = 0
    assert np.all(emb(real)[:, 2:] == 0)
    imag = X.copy()
    imag[:, :2] = 0
    assert np.allclose(emb(imag)[:, :2], q0, atol=1e-14)


def test_local_ball_base_radius_below_tube(sphere, torus):
    for model in (sphere, torus):
        emb = local_ball_embedding(model, model.sample_points(1)[0], 0.04, 0.9)
        assert emb.base_radius < 0.02


def test_compose_chain_rule():
    e = bidisc_embedding(1, 1, 1e-3, 1)
    scale = bidisc_embedding(1, 1, 1e-3, 1)
    scale.mapping = lambda x: np.concatenate([2 * x[..., :1], 0.5 * x[..., 1:]], axis=-1)
    scale.jacobian = lambda x: np.broadcast_to(np.diag([2.0, 0.5]), x.shape + (2,))
    c = compose(scale, e)
    X = e.domain.sample(50)
    assert np.allclose(c.jac(X), finite_difference_jacobian(c.mapping, X, 1e-6), atol=1e-6)
