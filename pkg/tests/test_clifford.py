import math
import unittest

import numpy as np

from slicecalc.clifford import (
    Multivector,
    Paravector,
    UnitSliceVector,
    algebra,
    axiom_defects,
    paravector_inverse,
    slice_coordinates,
)
from slicecalc.errors import AlgebraMismatchError, ArgumentError, SingularInputError


class CliffordAlgebraTests(unittest.TestCase):
    def test_generators_square_to_minus_one_and_anticommute(self) -> None:
        for m in (1, 2, 3, 5):
            for i in range(1, m + 1):
                e = Multivector.basis(m, i)
                self.assertTrue((e * e).is_close(Multivector.scalar(m, -1.0)))
                for j in range(i + 1, m + 1):
                    f = Multivector.basis(m, j)
                    self.assertTrue((e * f + f * e).is_close(Multivector.zero(m)))

    def test_blade_order_picks_up_sign(self) -> None:
        e12 = Multivector.blade(3, 1, 2)
        e21 = Multivector.blade(3, 2, 1)
        self.assertTrue((e12 + e21).is_close(Multivector.zero(3)))
        self.assertTrue((Multivector.basis(3, 1) * Multivector.basis(3, 2)).is_close(e12))
        self.assertEqual("e12", algebra(3).blade_name(algebra(3).index_of_blade[(1, 2)]))

    def test_conjugation_flips_vectors_and_bivectors(self) -> None:
        e1 = Multivector.basis(2, 1)
        e12 = Multivector.blade(2, 1, 2)
        self.assertTrue(e1.conjugate().is_close(-e1))
        self.assertTrue(e12.conjugate().is_close(-e12))
        self.assertTrue(Multivector.scalar(2, 3.0).conjugate().is_close(Multivector.scalar(2, 3.0)))

    def test_vectorised_product_broadcasts_over_leading_axes(self) -> None:
        alg = algebra(3)
        rng = np.random.default_rng(1)
        a = rng.standard_normal((4, 5, alg.size))
        b = rng.standard_normal((5, alg.size))
        batch = alg.product(a, b)
        self.assertEqual((4, 5, alg.size), batch.shape)
        single = Multivector(3, a[2, 3]) * Multivector(3, b[3])
        np.testing.assert_allclose(single.coeffs, batch[2, 3], atol=1e-13)

    def test_axioms_hold_on_random_cases(self) -> None:
        for m in (1, 2, 4):
            x, defects = axiom_defects(m, 200, np.random.default_rng(m))
            self.assertEqual((200, m + 1), x.shape)
            self.assertLess(float(np.max(defects)), 1e-12)

    def test_axiom_check_needs_cases(self) -> None:
        with self.assertRaises(ArgumentError):
            axiom_defects(2, 0, np.random.default_rng(0))

    def test_unsupported_dimension_is_rejected(self) -> None:
        with self.assertRaises(ArgumentError):
            algebra(7)
        with self.assertRaises(ArgumentError):
            Multivector(2, [1.0, 2.0])


class ParavectorTests(unittest.TestCase):
    def test_paravector_times_conjugate_is_squared_norm(self) -> None:
        x = Paravector(3, 0.5, (1.0, -2.0, 0.25))
        product = x * x.conjugate()
        self.assertTrue(product.is_close(Multivector.scalar(3, x.norm() ** 2), tol=1e-12))

    def test_inverse(self) -> None:
        x = Paravector(2, -1.5, (0.3, 2.0))
        product = x * paravector_inverse(x)
        self.assertTrue(product.is_close(Multivector.scalar(2, 1.0), tol=1e-12))
        with self.assertRaises(SingularInputError):
            Paravector(2, 0.0, (0.0, 0.0)).inverse()

    def test_slice_coordinates_recover_the_slice(self) -> None:
        I = UnitSliceVector.from_vector([1.0, -2.0, 2.0])
        u, v, J = slice_coordinates(Paravector.from_slice(1.5, 2.0, I))
        self.assertAlmostEqual(1.5, u)
        self.assertAlmostEqual(2.0, v)
        np.testing.assert_allclose(I.array, J.array, atol=1e-14)

    def test_real_points_have_no_slice_unit(self) -> None:
        u, v, I = slice_coordinates(Paravector(2, 3.0, (0.0, 0.0)))
        self.assertEqual((3.0, 0.0, None), (u, v, I))

    def test_slice_units_square_to_minus_one(self) -> None:
        I = UnitSliceVector.random(4, np.random.default_rng(3))
        square = I.to_multivector() * I.to_multivector()
        self.assertTrue(square.is_close(Multivector.scalar(4, -1.0), tol=1e-13))
        self.assertAlmostEqual(1.0, math.sqrt(sum(c * c for c in (-I).components)))

    def test_unit_vectors_must_have_norm_one(self) -> None:
        with self.assertRaises(ArgumentError):
            UnitSliceVector((0.5, 0.5))
        with self.assertRaises(SingularInputError):
            UnitSliceVector.from_vector([0.0, 0.0])

    def test_mixed_algebras_are_rejected(self) -> None:
        with self.assertRaises(AlgebraMismatchError):
            Paravector(2, 1.0, (0.0, 1.0)) + Paravector(3, 1.0, (0.0, 1.0, 0.0))
        with self.assertRaises(ArgumentError):
            Paravector(2, 1.0, (1.0,))


if __name__ == "__main__":
    unittest.main()
