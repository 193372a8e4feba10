import unittest


class LRUCacheTest(unittest.TestCase):
    def test_eviction(self):
        cache = LRUCache(2)
        cache.put(1, "one")
        cache.put(2, "two")
        self.assertEqual(cache.get(1), "one")
        cache.put(3, "three")
        self.assertEqual(cache.get(2), -1)
        self.assertEqual(cache.get(3), "three")

    def test_update_keeps_size(self):
        cache = LRUCache(1)
        cache.put("a", 1)
        cache.put("a", 2)
        self.assertEqual(cache.get("a"), 2)
        self.assertEqual(len(cache.store), 1)

    def test_hit_rate(self):
        cache = LRUCache(1)
        self.assertEqual(cache.hit_rate(), 0.0)
        cache.put(1, 1)
        cache.get(1)
        cache.get(2)
        self.assertEqual(cache.hit_rate(), 0.5)
