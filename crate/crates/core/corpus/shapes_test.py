import math
import unittest


class ShapesTest(unittest.TestCase):
    def test_area(self):
        self.assertAlmostEqual(area({"kind": "circle", "r": 1}), math.pi)
        self.assertEqual(area({"kind": "rect", "w": 2, "h": 3}), 6)
        self.assertEqual(area(("square", 4)), 16)
        with self.assertRaises(ValueError):
            area({"kind": "rect", "w": 0, "h": 3})

    def test_largest(self):
        shapes = [("square", 2), {"kind": "circle", "r": 2}, "junk", {"kind": "rect", "w": 3, "h": 3}]
        self.assertEqual(largest(shapes), {"kind": "circle", "r": 2})
        self.assertIsNone(largest(["junk"]))
