def transpose(matrix):
    return [list(row) for row in zip(*matrix)]


def multiply(left, right):
    if not left or not right or len(left[0]) != len(right):
        raise ValueError("shape mismatch")
    result = [[0] * len(right[0]) for _ in left]
    for i, row in enumerate(left):
        for j in range(len(right[0])):
            total = 0
            for k, value in enumerate(row):
                total += value * right[k][j]
            result[i][j] = total
    return result


def power(matrix, exponent):
    size = len(matrix)
    result = [[int(i == j) for j in range(size)] for i in range(size)]
    base = matrix
    while exponent > 0:
        if exponent % 2 == 1:
            result = multiply(result, base)
        base = multiply(base, base)
        exponent //= 2
    return result


def fibonacci(n):
    return power([[1, 1], [1, 0]], n)[0][1]
