import unittest

GRAPH = {"a": ["b", "c"], "b": ["d"], "c": ["d"], "d": ["e"], "e": [], "x": ["y"], "y": ["x"]}


class GraphTest(unittest.TestCase):
    def test_shortest_path(self):
        self.assertEqual(shortest_path(GRAPH, "a", "e"), ["a", "b", "d", "e"])
        self.assertIsNone(shortest_path(GRAPH, "a", "x"))
        self.assertGreater(visits, 0)

    def test_components(self):
        undirected = {"a": ["b"], "b": ["a"], "c": [], "x": ["y"], "y": ["x"]}
        self.assertEqual(count_components(undirected), 3)
