import unittest
from occflow.config.validators import Validator, constraints, exceptions


class TestValidator(unittest.TestCase):
    """
    Test Validators Class

    Test class for checking the functionality of the validator object.

    """

    def setUp(self) -> None:
        """
        Set up the validators to test with.

        :return: None

        """

        self.validator1 = Validator(
            constraints=[
                constraints.IsGreaterThan(min_value=10)
            ]
        )
        self.validator2 = Validator(
            constraints=[
                constraints.IsGreaterThan(min_value=10),
                constraints.IsPositiveInteger()
            ]
        )
        self.validator3 = Validator(
            constraints=[
                constraints.IsString()
            ]
        )
        self.validator4 = Validator(
            constraints=[
                constraints.IsGreaterThan(min_value=10),
                constraints.IsPositiveInteger()
            ]
        )

    def test_comparator(self) -> None:
        """
        Test the comparator operator of the validator.

        :return: None

        """

        # Non-required constraints
        self.assertNotEqual(self.validator1, self.validator2)
        self.assertNotEqual(self.validator1, self.validator3)
        self.assertEqual(self.validator2, self.validator4)
        self.assertNotEqual(self.validator3, self.validator4)
        self.assertNotEqual(self.validator1, Validator())
        self.assertNotEqual(self.validator1, None)

        # Required constraints
        self.validator2.is_required = True
        self.assertTrue(self.validator2.is_required)
        self.assertNotEqual(self.validator2, self.validator4)
        self.validator4.add(constraints=[constraints.IsRequired()])
        self.assertTrue(self.validator4.is_required)
        self.assertEqual(self.validator2, self.validator4)

    def test_containment(self) -> None:
        """
        Test the containment operator of the validator.

        :return: None

        """

        self.assertIn(constraints.IsGreaterThan(min_value=10), self.validator1)
        self.assertNotIn(constraints.IsGreaterThan(min_value=11), self.validator1)
        self.assertNotIn(constraints.IsString(), self.validator1)
        self.assertNotIn("IsString", self.validator3)

    def test_add_remove(self) -> None:
        """
        Test adding and removing constraints (duplicates are ignored).

        :return: None

        """

        self.assertEqual(len(self.validator1), 1)
        self.validator1.add(constraints=constraints.IsGreaterThan(min_value=10))
        self.assertEqual(len(self.validator1), 1)
        self.validator1.add(constraints=[constraints.IsInteger(), constraints.IsOdd()])
        self.assertEqual(len(self.validator1), 3)
        self.validator1.remove(constraints=constraints.IsInteger())
        self.assertEqual(len(self.validator1), 2)
        self.assertNotIn(constraints.IsInteger(), self.validator1)

        self.validator1.add(constraints=constraints.IsRequired())
        self.assertTrue(self.validator1.is_required)
        self.validator1.remove(constraints=constraints.IsRequired())
        self.assertFalse(self.validator1.is_required)

    def test_required(self) -> None:
        """
        Test that requiring a value propagates non-nullability to the constraints.

        :return: None

        """

        self.assertTrue(self.validator3.is_valid(value=None))
        self.validator3.is_required = True
        self.assertFalse(self.validator3.is_valid(value=None))
        self.assertRaises(exceptions.NullFieldException, self.validator3.is_valid, **{"value": None, "strict": True})

        self.validator3.is_required = False
        self.assertTrue(self.validator3.is_valid(value=None))
        self.assertNotIn(constraints.IsRequired(), self.validator3)

    def test_is_valid(self) -> None:
        """
        Test validation against every constraint, raising the first failure when strict.

        :return: None

        """

        self.assertTrue(self.validator2.is_valid(value=12, strict=True))
        self.assertFalse(self.validator2.is_valid(value=10))
        self.assertFalse(self.validator2.is_valid(value=12.5))
        self.assertRaises(exceptions.NotGreaterThanValueError, self.validator2.is_valid, **{"value": 3, "strict": True})
        self.assertRaises(exceptions.IntegerValueError, self.validator2.is_valid, **{"value": 12.5, "strict": True})

    def test_copy(self) -> None:
        """
        Test that copies are equal but independent.

        :return: None

        """

        duplicate = self.validator2.__copy__()
        self.assertEqual(duplicate, self.validator2)
        duplicate.add(constraints=constraints.IsOdd())
        self.assertNotEqual(duplicate, self.validator2)


if __name__ == "__main__":
    unittest.main()
