import unittest


class BankAccountTest(unittest.TestCase):
    def setUp(self):
        self.alice = BankAccount("alice", 100)
        self.bob = BankAccount("bob")

    def test_deposit(self):
        self.assertEqual(self.alice.deposit(50), 150)
        with self.assertRaises(ValueError):
            self.alice.deposit(0)

    def test_withdraw(self):
        self.assertEqual(self.alice.withdraw(30), 70)
        with self.assertRaises(InsufficientFunds) as ctx:
            self.bob.withdraw(1)
        self.assertIn("bob has 0", str(ctx.exception))

    def test_transfer(self):
        self.assertTrue(self.alice.transfer(self.bob, 60))
        self.assertFalse(self.alice.transfer(self.bob, 60))
        self.assertEqual((self.alice.balance, self.bob.balance), (40, 60))

    def test_statement(self):
        self.assertEqual(self.bob.statement(), "empty")
        self.alice.deposit(5)
        self.alice.withdraw(10)
        self.assertEqual(self.alice.statement(), "deposit: 5\nwithdraw: 10")
