import math
import unittest

import numpy as np

from slicecalc.clifford import Multivector, Paravector, UnitSliceVector
from slicecalc.errors import ArgumentError, DomainError, SingularityError
from slicecalc.slicefn import (
    NAMED_FUNCTIONS,
    GConfig,
    apply_G,
    apply_G_field,
    g_image,
    is_slice_monogenic,
    linear_combination,
    make_named,
    make_polynomial,
    parse_function_name,
    radial_weight,
    right_multiply,
    sliceness_defect,
    validate_stem,
)


Q = Paravector(2, 0.4, (1.2, -0.7))
PROBES = [(0.1, 1.8), (-0.2, 2.1), (0.3, 2.3)]


class NamedFunctionTests(unittest.TestCase):
    def test_identity_square_and_conjugate(self) -> None:
        q = Q.to_multivector()
        self.assertTrue(make_named("identity", 2)(Q).is_close(q, tol=1e-13))
        self.assertTrue(make_named("square", 2)(Q).is_close(q * q, tol=1e-13))
        self.assertTrue(make_named("cube", 2)(Q).is_close(q * q * q, tol=1e-12))
        self.assertTrue(make_named("conjugate", 2)(Q).is_close(q.conjugate(), tol=1e-13))
        self.assertTrue(make_named("one", 2)(Q).is_close(Multivector.scalar(2, 1.0)))

    def test_exp_on_the_real_axis(self) -> None:
        value = make_named("exp", 3)(Paravector(3, 0.7, (0.0, 0.0, 0.0)))
        self.assertAlmostEqual(math.exp(0.7), value.scalar_part)

    def test_exp_on_a_slice(self) -> None:
        I = UnitSliceVector.basis(2, 2)
        value = make_named("exp", 2)(Paravector.from_slice(0.5, 1.0, I))
        expected = Multivector.scalar(2, math.exp(0.5) * math.cos(1.0)) + I.to_multivector() * (math.exp(0.5) * math.sin(1.0))
        self.assertTrue(value.is_close(expected, tol=1e-13))

    def test_inv_shift_is_the_paravector_inverse(self) -> None:
        f = parse_function_name("inv_shift(-1)", 2)
        expected = (Q + 1.0).inverse().to_multivector()
        self.assertTrue(f(Q).is_close(expected, tol=1e-13))
        with self.assertRaises(DomainError):
            f(Paravector(2, -1.0, (0.0, 0.0)))

    def test_unknown_names_are_rejected(self) -> None:
        with self.assertRaises(ArgumentError):
            make_named("sine", 2)
        with self.assertRaises(ArgumentError):
            parse_function_name("inv_shift(x)", 2)
        with self.assertRaises(ArgumentError):
            parse_function_name("inv_shift", 2)

    def test_named_stems_satisfy_even_odd_conditions(self) -> None:
        for name in NAMED_FUNCTIONS:
            f = parse_function_name("inv_shift(-3)", 2) if name == "inv_shift" else make_named(name, 2)
            self.assertEqual([], validate_stem(f.stem))

    def test_broken_stem_is_reported(self) -> None:
        f = make_named("identity", 2)
        bad = type(f.stem)(2, f.stem.F2, f.stem.F1, name="swapped")
        errors = validate_stem(bad)
        self.assertEqual(1, len(errors))
        self.assertIn("even-odd", errors[0])


class ConstructorTests(unittest.TestCase):
    def test_polynomial_puts_coefficients_on_the_right(self) -> None:
        a0 = Multivector.blade(2, 1, 2)
        a1 = Multivector.basis(2, 1)
        f = make_polynomial([a0, a1])
        q = Q.to_multivector()
        self.assertTrue(f(Q).is_close(a0 + q * a1, tol=1e-13))

    def test_polynomial_needs_one_algebra(self) -> None:
        with self.assertRaises(ArgumentError):
            make_polynomial([1.0, 2.0])

    def test_linear_combination(self) -> None:
        f = linear_combination([make_named("identity", 2), make_named("conjugate", 2)], [1.0, 1.0])
        self.assertTrue(f(Q).is_close(Multivector.scalar(2, 0.8), tol=1e-13))
        with self.assertRaises(ArgumentError):
            linear_combination([make_named("identity", 2)], [1.0, 2.0])

    def test_right_multiply(self) -> None:
        a = Multivector.basis(2, 2)
        f = right_multiply(make_named("square", 2), a)
        q = Q.to_multivector()
        self.assertTrue(f(Q).is_close(q * q * a, tol=1e-13))

    def test_radial_weight_scales_by_vector_norm(self) -> None:
        f = radial_weight(make_named("identity", 2), 2)
        r = Q.vector_norm
        self.assertTrue(f(Q).is_close(Q.to_multivector() * r ** 2, tol=1e-12))


class CauchyRiemannTests(unittest.TestCase):
    def test_monogenic_functions_are_detected(self) -> None:
        for name in ("one", "identity", "square", "exp"):
            ok, residual = is_slice_monogenic(make_named(name, 2), PROBES)
            self.assertTrue(ok)
            self.assertLess(residual, 1e-10)
        ok, residual = is_slice_monogenic(make_named("conjugate", 2), PROBES)
        self.assertFalse(ok)
        self.assertAlmostEqual(2.0, residual)

    def test_G_of_conjugate_is_two(self) -> None:
        value = apply_G(make_named("conjugate", 3), Paravector(3, 0.2, (0.5, 1.0, -0.4)))
        self.assertTrue(value.is_close(Multivector.scalar(3, 2.0), tol=1e-12))

    def test_finite_difference_mode_agrees_with_analytic(self) -> None:
        f = make_named("exp", 2)
        analytic = apply_G(linear_combination([f, make_named("conjugate", 2)], [1.0, 1.0]), Q)
        fd = apply_G(linear_combination([f, make_named("conjugate", 2)], [1.0, 1.0]), Q, GConfig("finite-difference", 1e-5))
        self.assertTrue(analytic.is_close(fd, tol=1e-6))

    def test_g_image_is_a_slice_function(self) -> None:
        gf = g_image(make_named("conjugate", 2))
        self.assertTrue(gf(Q).is_close(Multivector.scalar(2, 2.0), tol=1e-12))

    def test_G_of_an_arbitrary_field(self) -> None:
        f = make_named("conjugate", 2)
        value = apply_G_field(f, Q, 1e-3)
        self.assertTrue(value.is_close(Multivector.scalar(2, 2.0), tol=1e-9))
        with self.assertRaises(ArgumentError):
            apply_G_field(f, Q, 5.0)

    def test_G_is_undefined_on_the_real_axis(self) -> None:
        with self.assertRaises(SingularityError):
            apply_G(make_named("identity", 2), Paravector(2, 1.0, (0.0, 0.0)))

    def test_config_validation(self) -> None:
        with self.assertRaises(ArgumentError):
            GConfig("symbolic")
        with self.assertRaises(ArgumentError):
            GConfig("finite-difference", 0.0)

    def test_is_slice_monogenic_needs_probes(self) -> None:
        with self.assertRaises(ArgumentError):
            is_slice_monogenic(make_named("identity", 2), [])


class SlicenessTests(unittest.TestCase):
    def test_slice_functions_obey_the_representation_formula(self) -> None:
        I = UnitSliceVector.basis(2, 1)
        for name in ("square", "exp", "conjugate"):
            self.assertLess(sliceness_defect(make_named(name, 2), Q, I), 1e-12)

    def test_left_multiplication_breaks_sliceness(self) -> None:
        e1 = Multivector.basis(2, 1)
        q = Paravector.from_slice(0.3, 1.5, UnitSliceVector.basis(2, 2))

        def left(x: Paravector) -> Multivector:
            return e1 * x.to_multivector()

        self.assertAlmostEqual(3.0, sliceness_defect(left, q, UnitSliceVector.basis(2, 1)))


if __name__ == "__main__":
    unittest.main()
