import random


class MinesweeperGame:
    def __init__(self, n, k, seed=None):
        self.n = n
        self.k = k
        self.rng = random.Random(seed)
        self.minesweeper_map = self.generate_mine_sweeper_map()
        self.player_map = self.generate_player_map()
        self.score = 0

    def sweep(self, x, y):
        if self.minesweeper_map[x][y] == 'X':
            return False
        else:
            self.player_map[x][y] = self.minesweeper_map[x][y]
            self.score += 1
            if self.check_won(self.player_map):
                return True
            return self.player_map

    def check_won(self, map):
        for i in range(self.n):
            for j in range(self.n):
                if map[i][j] == '-' and self.minesweeper_map[i][j] != 'X':
                    return False
        return True

    def generate_mine_sweeper_map(self):
        arr = [[0 for _ in range(self.n)] for _ in range(self.n)]
        placed = 0
        while placed < self.k:
            x = self.rng.randint(0, self.n - 1)
            y = self.rng.randint(0, self.n - 1)
            if arr[y][x] == 'X':
                continue
            arr[y][x] = 'X'
            placed += 1
            for i in (x - 1, x, x + 1):
                for j in (y - 1, y, y + 1):
                    if 0 <= i < self.n and 0 <= j < self.n and arr[j][i] != 'X':
                        arr[j][i] += 1
        return arr

    def generate_player_map(self):
        return [['-' for _ in range(self.n)] for _ in range(self.n)]
