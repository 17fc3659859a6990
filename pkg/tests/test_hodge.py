import math
import unittest

import numpy as np

from slicecalc.cli import load_tolerances
from slicecalc.errors import ArgumentError, DegreeReductionError
from slicecalc.geometry import ProfileRegion, build_domain
from slicecalc.hodge import (
    boundary_bubble,
    build_basis,
    complementarity_defect,
    idempotence_defect,
    im_q_trace,
    im_q_witness,
    inner_product,
    l2_norm,
    orthogonal_witness,
    orthogonality_residual,
    project_P,
    q_image_trace_check,
)
from slicecalc.operators import FieldSample
from slicecalc.slicefn import linear_combination, make_named


DISK = "kind=disk,u0=0,v0=2,R=0.5"
RECTANGLE = "kind=rectangle,a=-0.5,b=0.5,v_min=1,v_max=2"


def tolerance(identity: str) -> float:
    return load_tolerances()[identity]["tolerance"]


class InnerProductTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.domain = build_domain(ProfileRegion.parse(DISK, 16), 2, sphere_order=8)

    def test_norm_of_one_is_root_volume(self) -> None:
        self.assertAlmostEqual(math.sqrt(self.domain.volume), l2_norm(make_named("one", 2), self.domain), places=10)

    def test_grid_path_matches_slice_path(self) -> None:
        f, g = make_named("exp", 2), make_named("conjugate", 2)
        nodes = self.domain.slice_quad.nodes
        F1, F2 = f.stem.values(nodes[:, 0], nodes[:, 1])
        tabulated = FieldSample.from_stem_values(self.domain, F1, F2)
        exact = inner_product(f, g, self.domain)
        grid = inner_product(tabulated, g, self.domain)
        scale = max(1.0, exact.norm())
        self.assertLess((exact - grid).norm() / scale, 1e-12)

    def test_inner_product_is_conjugate_symmetric(self) -> None:
        f, g = make_named("exp", 2), make_named("square", 2)
        fg = inner_product(f, g, self.domain)
        gf = inner_product(g, f, self.domain)
        self.assertTrue(fg.is_close(gf.conjugate(), tol=1e-10 * max(1.0, fg.norm())))

    def test_mixed_algebras_are_rejected(self) -> None:
        with self.assertRaises(ArgumentError):
            inner_product(make_named("one", 3), make_named("one", 3), self.domain)


class BergmanBasisTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.domain = build_domain(ProfileRegion.parse(DISK, 16), 2, sphere_order=8)
        cls.basis = build_basis(cls.domain, 4)

    def test_basis_layout(self) -> None:
        self.assertEqual(5 * 4, self.basis.size)
        self.assertEqual(2 * 4 + 3, self.basis.index(2, 3))
        self.assertEqual((20, 20, 4), self.basis.gram.shape)
        self.assertGreater(self.basis.condition, 1.0)

    def test_gram_matches_inner_products(self) -> None:
        i, j = self.basis.index(1, 1), self.basis.index(3, 2)
        exact = inner_product(self.basis.functions[i], self.basis.functions[j], self.domain)
        self.assertLess((exact - self.basis.gram_entry(i, j)).norm() / max(1.0, exact.norm()), 1e-12)
        self.assertAlmostEqual(self.domain.volume, float(self.basis.gram[0, 0, 0]), places=9)

    def test_gram_is_conjugate_symmetric(self) -> None:
        scale = float(np.max(np.abs(self.basis.gram)))
        self.assertLess(self.basis.conjugate_symmetry_defect() / scale, 1e-12)

    def test_condition_is_that_of_the_scaled_gram(self) -> None:
        M = self.basis.monomial_gram
        d = np.sqrt(np.diag(M))
        expected = np.linalg.cond(M / np.outer(d, d))
        self.assertLess(abs(self.basis.condition - expected) / expected, 1e-6)

    def test_ill_conditioned_degree_is_refused(self) -> None:
        with self.assertRaises(DegreeReductionError) as ctx:
            build_basis(self.domain, 30)
        self.assertGreater(ctx.exception.condition, 1e12)
        with self.assertRaises(DegreeReductionError):
            build_basis(self.domain, 20)
        with self.assertRaises(ArgumentError):
            build_basis(self.domain, -1)


class ProjectionTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.domain = build_domain(ProfileRegion.parse(DISK, 16), 2, sphere_order=8)
        cls.basis = build_basis(cls.domain, 4)

    def test_polynomials_are_fixed_by_P(self) -> None:
        split = project_P(make_named("square", 2), self.basis, self.domain)
        expected = np.zeros((5, 4))
        expected[2, 0] = 1.0
        np.testing.assert_allclose(split.coefficients, expected, atol=1e-8)
        self.assertLess(l2_norm(split.q_part, self.domain), 1e-7)

    def test_tabulated_polynomials_are_fixed_by_P(self) -> None:
        f = make_named("square", 2)
        nodes = self.domain.slice_quad.nodes
        F1, F2 = f.stem.values(nodes[:, 0], nodes[:, 1])
        split = project_P(FieldSample.from_stem_values(self.domain, F1, F2), self.basis, self.domain)
        expected = np.zeros((5, 4))
        expected[2, 0] = 1.0
        np.testing.assert_allclose(split.coefficients, expected, atol=1e-8)
        self.assertEqual("tabulated", split.q_part.kind)

    def test_split_of_a_non_monogenic_function(self) -> None:
        f = make_named("conjugate", 2)
        split = project_P(f, self.basis, self.domain)
        self.assertLess(complementarity_defect(f, split, self.domain), tolerance("hodge-complementarity"))
        self.assertLess(orthogonality_residual(f, split, self.basis, self.domain), tolerance("hodge-orthogonality"))
        self.assertLess(idempotence_defect(split, self.basis, self.domain), tolerance("hodge-idempotence"))
        self.assertGreater(l2_norm(split.q_part, self.domain), 1e-3)
        self.assertEqual("slice", split.p_part.kind)
        self.assertEqual(2, split.p_function().dim)

    def test_projection_needs_matching_algebra(self) -> None:
        with self.assertRaises(ArgumentError):
            project_P(make_named("one", 3), self.basis, self.domain)


class ImageOfQTests(unittest.TestCase):
    def test_bubble_vanishes_on_the_boundary(self) -> None:
        for text in (DISK, RECTANGLE):
            domain = build_domain(ProfileRegion.parse(text, 16), 2, sphere_order=4)
            bubble = boundary_bubble(domain)
            nodes = domain.boundary_quad.nodes
            F1, F2 = bubble.stem.values(nodes[:, 0], nodes[:, 1])
            self.assertLess(float(np.max(np.abs(F1))), 1e-12)
            self.assertEqual(0.0, float(np.max(np.abs(F2))))
            u, v = domain.center
            self.assertGreater(float(bubble.stem.values(np.array([u]), np.array([v]))[0][0, 0]), 0.0)

    def test_witness_has_zero_trace(self) -> None:
        domain = build_domain(ProfileRegion.parse(DISK, 32), 2, sphere_order=4)
        probes = domain.lift(domain.boundary_probes(3), seed=6)
        witness = im_q_witness(boundary_bubble(domain))
        limits = load_tolerances()["im-q-trace"]
        traces = im_q_trace(witness, domain, probes)
        self.assertLess(max(traces), limits["tolerance"])
        control = im_q_trace(make_named("one", 2), domain, probes)
        self.assertGreater(min(control), limits["control_factor"] * limits["tolerance"])

    def test_orthogonal_witness_leaves_the_polynomial_part(self) -> None:
        domain = build_domain(ProfileRegion.parse(DISK, 16), 2, sphere_order=8)
        basis = build_basis(domain, 4)
        witness = orthogonal_witness(boundary_bubble(domain))
        split = project_P(linear_combination([make_named("square", 2), witness], [1.0, 1.0]), basis, domain)
        expected = np.zeros((5, 4))
        expected[2, 0] = 1.0
        np.testing.assert_allclose(split.coefficients, expected, atol=1e-6)
        self.assertGreater(l2_norm(split.q_part, domain), 1e-2)

    def test_g_witness_is_not_orthogonal_to_polynomials(self) -> None:
        domain = build_domain(ProfileRegion.parse(DISK, 16), 2, sphere_order=8)
        split = project_P(im_q_witness(boundary_bubble(domain)), build_basis(domain, 4), domain)
        self.assertGreater(l2_norm(split.p_part, domain), 1e-2)


class QImageTraceTests(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.domain = build_domain(ProfileRegion.parse(DISK, 16), 2, sphere_order=8)
        cls.basis = build_basis(cls.domain, 4)
        cls.probes = cls.domain.lift(cls.domain.boundary_probes(2), seed=9)
        cls.limits = load_tolerances()["im-q-trace"]

    def test_polynomial_input_passes_with_a_resolved_p_part(self) -> None:
        report = q_image_trace_check(make_named("square", 2), self.basis, self.domain, self.probes)
        self.assertEqual("im-q-trace", report.identity)
        self.assertLess(report.max_residual, self.limits["tolerance"])
        self.assertGreater(report.extra["control"], self.limits["control_factor"] * self.limits["tolerance"])
        self.assertLess(report.extra["p_tail"], 1e-8)
        self.assertEqual(4, report.extra["degree"])

    def test_conjugate_keeps_a_nonzero_q_trace(self) -> None:
        report = q_image_trace_check(make_named("conjugate", 2), self.basis, self.domain, self.probes)
        self.assertGreater(report.max_residual, 10 * self.limits["tolerance"])
        self.assertIsNotNone(report.extra["p_tail"])

    def test_low_degree_has_no_tail_estimate(self) -> None:
        report = q_image_trace_check(make_named("identity", 2), build_basis(self.domain, 1), self.domain,
                                     self.probes[:1])
        self.assertIsNone(report.extra["p_tail"])


if __name__ == "__main__":
    unittest.main()
