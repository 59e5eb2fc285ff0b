"""Capacity bounds, volumes and packing audits."""

import math

import numpy as np
import pytest

from symplength import NeighborhoodSpec, bidisc_cyl_upper, bidisc_gromov_lower, euclidean_volume, packing_audit, rho_lower, sphere_packing_example
from symplength.capacities import (
    bidisc_report,
    monte_carlo_volume,
    projective_packing_example,
    reports_to_csv,
    shadow_box_area,
    volume_width_bound,
)
from symplength.distance_engine import RhoBound
from symplength.manifolds import FlatTorus
from symplength.symplectic import Region, ball, bidisc, disc_bundle

EPS = 1e-3


def test_gromov_lower_values():
    assert bidisc_gromov_lower(1, 1, 1e-9).value == pytest.approx(4.0, abs=1e-7)
    g = bidisc_gromov_lower(2, 0.5, EPS)
    assert g.value == pytest.approx(4 * (1 - EPS) ** 2) and g.certificate


def test_gromov_lower_conformal():
    for lam in (0.5, 1.7, 3.0):
        a = bidisc_gromov_lower(0.4, 0.9, EPS, samples=1024).value
        b = bidisc_gromov_lower(lam * 0.4, lam * 0.9, EPS, samples=1024).value
        assert b == pytest.approx(lam**2 * a, rel=1e-12)


def test_cyl_upper_and_shadow():
    assert bidisc_cyl_upper(1, 1).value == 4.0
    for n in (1, 2, 3):
        area = shadow_box_area(1.0, 1.0, n)
        assert area <= 4.0
        if n == 1:
            assert area == pytest.approx(4.0, rel=2e-2)


def test_ordering_and_monotonicity_on_grid():
    vals = [0.5, 1.0, 1.5, 2.0, 2.5]
    lower = {}
    for a in vals:
        for b in vals:
            lo = bidisc_gromov_lower(a, b, EPS, samples=512).value
            assert lo <= bidisc_cyl_upper(a, b).value
            lower[a, b] = lo
    for (a, b), lo in lower.items():
        for (a2, b2), lo2 in lower.items():
            if a <= a2 and b <= b2:
                assert lo <= lo2


def test_euclidean_volumes(sphere):
    assert euclidean_volume(ball(1.0, 2)) == pytest.approx(math.pi**2 / 2)
    circle = FlatTorus([1.0])
    assert euclidean_volume(disc_bundle(circle)) == pytest.approx(2.0)
    assert euclidean_volume(bidisc(1, 1, 2)) == pytest.approx(math.pi**2)
    assert monte_carlo_volume(bidisc(1, 1, 2), 200_000) == pytest.approx(math.pi**2, rel=1e-2)
    with pytest.raises(ValueError):
        euclidean_volume(Region("box", 1, {"lo": [0, 0], "hi": [1, 1]}))


def test_volume_obstruction_weaker_than_4ab():
    for n in (2, 3):
        for a, b in [(1, 1), (0.3, 2.0), (1.5, 0.2)]:
            assert volume_width_bound(bidisc(a, b, n)) > 4 * a * b
    assert volume_width_bound(bidisc(1, 1, 1)) == pytest.approx(4.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sphere_packing_example(n):
    rep = sphere_packing_example(n)
    assert abs(rep["balls_volume"] - rep["bundle_volume"]) <= 1e-10
    assert rep["four_diam"] == pytest.approx(2.0)
    assert rep["packing_number"] == 2.0


def test_sphere_packing_closed_forms():
    assert sphere_packing_example(1)["bundle_volume"] == pytest.approx(2.0)
    assert sphere_packing_example(2)["balls_volume"] == pytest.approx(1.0)


def test_projective_example():
    rep = projective_packing_example(1)
    assert rep["balls_volume"] == pytest.approx(rep["bundle_volume"], abs=1e-12)
    assert rep["four_diam"] == 1.0
    assert projective_packing_example(2)["status"] == "not modeled"


def test_bidisc_report_json_and_csv():
    rep = bidisc_report(1, 1)
    assert rep.ordered and 3.99 <= rep.gromov_lower <= rep.cyl_upper == 4.0
    assert rep.flags == {"conformal": True, "monotone": True}
    assert '"ordered": true' in rep.to_json()
    assert reports_to_csv([rep]).startswith("region,gromov_lower,cyl_upper,volume")


def test_packing_audit_on_torus_sweep(torus):
    spec = NeighborhoodSpec.unit(torus)
    bounds = [rho_lower(spec, [0.0, 0.0], [d, 0.0]) for d in (0.4, 0.2, 0.1, 0.05, 0.01, 0.002)]
    rep = packing_audit(bounds, spec)
    assert rep.passed and rep.pairs == 6
    # the tightest ratio comes from the smallest pair: sqrt(1/(1+d)) (1-eps)^2
    assert rep.tightest_ratio == pytest.approx(math.sqrt(1 / 1.002) * (1 - EPS) ** 2, rel=1e-12)


def test_packing_audit_empty_and_violation(torus):
    spec = NeighborhoodSpec.unit(torus)
    assert packing_audit([], spec).passed
    fake = RhoBound(0.3, 0.2, 0.2, "forged", "packing-inequality", ("cert-x",))
    assert not packing_audit([fake], spec).passed


def test_packing_audit_at_diameter(torus):
    spec = NeighborhoodSpec.unit(torus)
    diam = math.sqrt(2) / 2
    b = rho_lower(spec, [0.0, 0.0], [0.5, 0.5])
    assert b.d_g == pytest.approx(diam)
    assert 4 * spec.r_max * b.d_g == pytest.approx(4 * diam)
    assert packing_audit([b], spec).passed
