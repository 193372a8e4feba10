class LRUCache:
    def __init__(self, capacity):
        self.capacity = capacity
        self.store = {}
        self.order = []
        self.hits = 0
        self.misses = 0

    def get(self, key):
        if key not in self.store:
            self.misses += 1
            return -1
        self.hits += 1
        self._touch(key)
        return self.store[key]

    def put(self, key, value):
        if key in self.store:
            self._touch(key)
        elif len(self.store) >= self.capacity:
            oldest = self.order.pop(0)
            del self.store[oldest]
            self.order.append(key)
        else:
            self.order.append(key)
        self.store[key] = value

    def _touch(self, key):
        self.order.remove(key)
        self.order.append(key)

    def hit_rate(self):
        total = self.hits + self.misses
        return self.hits / total if total else 0.0
