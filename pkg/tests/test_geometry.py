import math
import unittest

import numpy as np

from slicecalc.clifford import slice_coordinates
from slicecalc.errors import ArgumentError, DomainError, GeometryError
from slicecalc.geometry import (
    ProfileRegion,
    build_domain,
    gauss_residual,
    sphere_area,
    sphere_rule,
    with_singular_patch,
)
from slicecalc.slicefn import make_named


DISK = "kind=disk,u0=0,v0=2,R=0.5"
RECTANGLE = "kind=rectangle,a=-0.5,b=0.5,v_min=1,v_max=2"
SECTOR = "kind=annulus-sector,u0=0,v0=2,r_in=0.2,r_out=0.6,theta0=0.3,theta1=2.5"


class ProfileRegionTests(unittest.TestCase):
    def test_parse_reads_key_value_form(self) -> None:
        profile = ProfileRegion.parse(DISK, resolution=24)
        self.assertEqual("disk", profile.kind)
        self.assertEqual({"u0": 0.0, "v0": 2.0, "R": 0.5}, profile.params)
        self.assertEqual(24, profile.resolution)
        self.assertEqual(DISK, profile.describe())
        self.assertEqual([], profile.validate())

    def test_from_mapping_matches_parse(self) -> None:
        profile = ProfileRegion.from_mapping({"kind": "rectangle", "a": -0.5, "b": 0.5, "v_min": 1, "v_max": 2})
        self.assertEqual(ProfileRegion.parse(RECTANGLE).params, profile.params)
        self.assertEqual({"kind": "rectangle", "a": -0.5, "b": 0.5, "v_min": 1.0, "v_max": 2.0}, profile.to_dict())

    def test_malformed_profiles_are_rejected(self) -> None:
        with self.assertRaises(ArgumentError):
            ProfileRegion.parse("kind=ellipse,a=1")
        with self.assertRaises(ArgumentError):
            ProfileRegion.parse("kind=disk,u0=0,v0=2")
        with self.assertRaises(ArgumentError):
            ProfileRegion.parse("kind=disk,u0=0,v0=2,R=0.5,extra=1")
        with self.assertRaises(ArgumentError):
            ProfileRegion.parse("kind=disk,u0=0,v0=two,R=0.5")

    def test_profiles_touching_the_real_axis_fail_validation(self) -> None:
        profile = ProfileRegion.parse("kind=disk,u0=0,v0=0.3,R=0.5")
        errors = profile.validate()
        self.assertEqual(1, len(errors))
        self.assertIn("v = 0", errors[0])
        with self.assertRaises(DomainError):
            build_domain(profile, 2)

    def test_degenerate_shapes_fail_validation(self) -> None:
        self.assertTrue(ProfileRegion.parse("kind=disk,u0=0,v0=2,R=-1").validate())
        self.assertTrue(ProfileRegion.parse("kind=rectangle,a=1,b=0,v_min=1,v_max=2").validate())
        self.assertTrue(
            ProfileRegion.parse("kind=annulus-sector,u0=0,v0=2,r_in=0.6,r_out=0.2,theta0=0,theta1=1").validate()
        )


class QuadratureTests(unittest.TestCase):
    def test_sphere_area(self) -> None:
        self.assertAlmostEqual(2.0, sphere_area(1))
        self.assertAlmostEqual(2.0 * math.pi, sphere_area(2))
        self.assertAlmostEqual(4.0 * math.pi, sphere_area(3))
        self.assertAlmostEqual(2.0 * math.pi ** 2, sphere_area(4))

    def test_sphere_rules_cover_half_the_sphere(self) -> None:
        for m in (1, 2, 3, 4, 5):
            rule = sphere_rule(m, 8)
            self.assertAlmostEqual(sphere_area(m) / 2.0, float(np.sum(rule.weights)), places=10)
            np.testing.assert_allclose(np.linalg.norm(rule.nodes, axis=1), 1.0, atol=1e-12)

    def test_sphere_rule_needs_positive_order(self) -> None:
        with self.assertRaises(ArgumentError):
            sphere_rule(3, 0)

    def test_volume_of_solid_torus(self) -> None:
        domain = build_domain(ProfileRegion.parse(DISK, 16), 2)
        # 2 pi * v0 * pi R^2
        self.assertAlmostEqual(math.pi ** 2, domain.volume, places=10)
        domain1 = build_domain(ProfileRegion.parse(DISK, 16), 1)
        self.assertAlmostEqual(2.0 * math.pi * 0.25, domain1.volume, places=10)

    def test_volume_of_rectangle_profile(self) -> None:
        domain = build_domain(ProfileRegion.parse(RECTANGLE, 8), 2)
        self.assertAlmostEqual(2.0 * math.pi * 1.0 * (4.0 - 1.0) / 2.0, domain.volume, places=10)

    def test_slice_rule_integrates_profile_area(self) -> None:
        for text, area in ((DISK, math.pi * 0.25), (RECTANGLE, 1.0), (SECTOR, 0.5 * 2.2 * (0.36 - 0.04))):
            domain = build_domain(ProfileRegion.parse(text, 16), 2)
            self.assertAlmostEqual(area, domain.slice_quad.total_weight, places=10)
            self.assertTrue(bool(np.all(domain.contains(domain.slice_quad.nodes[:, 0], domain.slice_quad.nodes[:, 1]))))

    def test_boundary_rule_measures_perimeter(self) -> None:
        domain = build_domain(ProfileRegion.parse(DISK, 32), 2)
        self.assertAlmostEqual(math.pi, domain.boundary_quad.perimeter, places=12)
        normals = domain.boundary_quad.full_normals()
        np.testing.assert_allclose(np.linalg.norm(normals, axis=1), 1.0, atol=1e-14)

    def test_boundary_rule_refines_for_close_targets(self) -> None:
        domain = build_domain(ProfileRegion.parse(DISK, 32), 2)
        fine = domain.boundary_for_distance(0.001)
        self.assertLessEqual(fine.spacing, 0.001 / 4.0 + 1e-15)
        self.assertIs(domain.boundary_quad, domain.boundary_for_distance(1.0))

    def test_singular_patch_keeps_total_area(self) -> None:
        domain = build_domain(ProfileRegion.parse(DISK, 16), 2)
        patched = with_singular_patch(domain, (0.0, 2.0), 0.1)
        self.assertEqual(1, len(patched.slice_quad.singular_patches))
        self.assertAlmostEqual(math.pi * 0.25, patched.slice_quad.total_weight, places=10)
        with self.assertRaises(GeometryError):
            with_singular_patch(domain, (0.0, 2.0), 0.6)
        with self.assertRaises(GeometryError):
            with_singular_patch(domain, (0.0, 2.0), 0.0)

    def test_gauss_theorem_on_the_slice(self) -> None:
        domain = build_domain(ProfileRegion.parse(DISK, 32), 2)
        for name in ("identity", "square", "conjugate"):
            f = make_named(name, 2)
            g = make_named("identity", 2)
            self.assertLess(gauss_residual(domain, f, g), 1e-8)


class AxialDomainTests(unittest.TestCase):
    def setUp(self) -> None:
        self.domain = build_domain(ProfileRegion.parse(DISK, 16), 3)

    def test_distances(self) -> None:
        self.assertAlmostEqual(0.5, self.domain.inradius)
        self.assertEqual((0.0, 2.0), self.domain.center)
        u, v, nu, nv = self.domain.nearest_boundary_point(0.0, 2.2)
        self.assertAlmostEqual(0.0, u)
        self.assertAlmostEqual(2.5, v)
        self.assertAlmostEqual(0.0, nu)
        self.assertAlmostEqual(1.0, nv)
        self.assertAlmostEqual(0.3, self.domain.distance_to_boundary(0.0, 2.2))

    def test_probe_sets(self) -> None:
        for u, v in self.domain.interior_probes():
            self.assertTrue(bool(self.domain.contains(u, v)))
        for u, v in self.domain.exterior_probes():
            self.assertFalse(bool(self.domain.contains(u, v)))
        for u, v in self.domain.boundary_probes():
            self.assertLess(self.domain.distance_to_boundary(u, v), 1e-12)

    def test_lift_keeps_slice_coordinates_and_is_seeded(self) -> None:
        points = self.domain.interior_probes(4)
        lifted = self.domain.lift(points, seed=5)
        for (u, v), q in zip(points, lifted):
            pu, pv, _ = slice_coordinates(q)
            self.assertAlmostEqual(u, pu)
            self.assertAlmostEqual(v, pv)
        again = self.domain.lift(points, seed=5)
        self.assertEqual([q.vector for q in lifted], [q.vector for q in again])

    def test_sphere_units_are_unit_vectors(self) -> None:
        units = self.domain.sphere_units()
        self.assertEqual(self.domain.sphere_quad.size, len(units))
        for I in units[:5]:
            self.assertAlmostEqual(1.0, float(np.linalg.norm(I.array)))


if __name__ == "__main__":
    unittest.main()
