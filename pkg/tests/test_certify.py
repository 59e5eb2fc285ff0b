"""Sampled certificates and their JSON form."""

import json

import numpy as np
import pytest

from symplength import bidisc_embedding, certify, local_ball_embedding
from symplength.certify import (
    CertificateStore,
    certificate_from_dict,
    check_containment,
    check_disjoint,
    check_liouville,
    check_relative_boundary,
    check_symplectic,
)
from symplength.symplectic import SymplecticMapSpec, ball, bidisc


def linear_map(M, r=1.0, n=1):
    M = np.asarray(M, float)
    return SymplecticMapSpec(
        name="linear",
        n=n,
        domain=ball(r, n),
        target=Region_plane(n),
        mapping=lambda x: x @ M.T,
        jacobian=lambda x: np.broadcast_to(M, x.shape + (2 * n,)),
        center=np.zeros(n),
    )


def Region_plane(n):
    from symplength.symplectic import Region

    return Region("plane", n)


def test_linear_symplectic_map_has_zero_violation():
    shear = [[1.0, 0.0], [0.7, 1.0]]
    res = check_symplectic(linear_map(shear), 1000, 1e-12)
    assert res.worst == 0.0 and res.passed


def test_broken_map_fails_symplecticity():
    res = check_symplectic(linear_map([[1.0, 0.0], [0.0, 2.0]]), 1000, 1e-8)
    assert not res.passed
    # J^T Omega J - Omega = Omega (2 - 1), Frobenius norm sqrt(2)
    assert res.worst == pytest.approx(np.sqrt(2.0))
    assert res.witness is not None


def test_identity_is_liouville():
    assert check_liouville(linear_map(np.eye(2)), 500, 1e-12).worst == 0.0


def test_translation_in_p_fails_liouville():
    spec = linear_map(np.eye(2))
    spec.mapping = lambda x: x + np.array([0.0, 0.3])
    assert not check_liouville(spec, 500, 1e-8).passed


def test_bidisc_checks_pass():
    e = bidisc_embedding(1, 1, 1e-3)
    sym = check_symplectic(e, 10_000, 1e-9)
    lio = check_liouville(e, 10_000, 1e-9)
    assert sym.passed and sym.worst <= 1e-9
    assert lio.passed and lio.worst <= 1e-9


def test_bidisc_real_part_exactly_on_zero_section():
    e = bidisc_embedding(1.5, 0.4, 1e-3)
    res = check_relative_boundary(e, 2000, 1e-300)
    assert res.worst == 0.0 and res.passed


def test_containment_fails_without_shrink():
    e = bidisc_embedding(1, 1, 1e-3)
    e.target = bidisc(0.99, 1.0, 2)
    res = check_containment(e, 2000)
    assert not res.passed and res.witness is not None


def test_disjoint_balls_on_torus(torus):
    a = local_ball_embedding(torus, [0.0, 0.0], 0.2, 0.9)
    b = local_ball_embedding(torus, [0.5, 0.0], 0.2, 0.9)
    assert check_disjoint(a, b).passed
    assert not check_disjoint(a, a).passed


def test_sampled_disjointness_with_lipschitz_margin():
    a = bidisc_embedding(1, 1, 1e-3, 1)
    b = bidisc_embedding(1, 1, 1e-3, 1)
    shifted = b.mapping
    b.mapping = lambda x: shifted(x) + np.array([20.0, 0.0])
    b.model = None
    res = check_disjoint(a, b, samples=2048)
    assert res.passed and "Lipschitz" in res.note
    assert not check_disjoint(a, bidisc_embedding(1, 1, 1e-3, 1), samples=2048).passed


def test_certify_bidisc_all_checks():
    cert = certify(bidisc_embedding(1, 1, 1e-3))
    assert cert.verdict
    assert [c.name for c in cert.checks] == ["symplectic", "liouville", "containment", "relative"]
    # worst violations are recorded on passing checks too
    assert all(np.isfinite(c.worst) for c in cert.checks)


def test_certify_broken_map_names_check():
    cert = certify(linear_map([[1.0, 0.0], [0.0, 2.0]]), ["symplectic", "liouville"], samples=256)
    assert not cert.verdict
    assert not cert.check("symplectic").passed


def test_certify_empty_is_vacuous():
    cert = certify(bidisc_embedding(1, 1, 1e-3), [])
    assert cert.verdict and cert.flags == ["no checks"]


def test_certify_unknown_check():
    with pytest.raises(ValueError):
        certify(bidisc_embedding(1, 1), ["nonsense"])


def test_certificate_json_roundtrip():
    cert = certify(bidisc_embedding(1, 1, 1e-3), samples=512)
    doc = json.loads(cert.to_json())
    assert doc["map"] == "bidisc"
    assert doc["params"]["a"] == 1 and doc["params"]["eps"] == 0.001
    assert {"name", "samples", "tol", "worst", "pass"} <= set(doc["checks"][0])
    back = certificate_from_dict(doc)
    assert back.to_dict() == cert.to_dict()


def test_certificates_bit_reproducible():
    a = certify(bidisc_embedding(0.3, 0.7, 1e-3), samples=1000).to_json()
    b = certify(bidisc_embedding(0.3, 0.7, 1e-3), samples=1000).to_json()
    assert a == b


def test_store_ids_unique():
    store = CertificateStore()
    ids = [store.add(certify(bidisc_embedding(1, 1), [])) for _ in range(3)]
    assert len(set(ids)) == 3 and len(store) == 3


@pytest.mark.parametrize("name", ["torus", "sphere", "revolution"])
def test_local_ball_certifies(name, request):
    model = request.getfixturevalue(name)
    q0 = model.sample_points(2, seed=9)[1]
    d = 0.04
    cert = certify(local_ball_embedding(model, q0, d, (1 / (1 + d)) ** 0.5), samples=256)
    assert cert.verdict, cert.to_json()


def test_liouville_implies_symplectic_for_lifts(sphere):
    emb = local_ball_embedding(sphere, [0.02, 0.01], 0.05, 0.9)
    lio = check_liouville(emb, 256)
    sym = check_symplectic(emb, 256)
    assert lio.passed and sym.passed
    J = emb.jac(emb.domain.sample(256))
    assert np.allclose(np.abs(np.linalg.det(J)), 1.0, atol=1e-6)
