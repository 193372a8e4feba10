import math


def area(shape):
    match shape:
        case {"kind": "circle", "r": r}:
            return math.pi * r * r
        case {"kind": "rect", "w": w, "h": h} if w > 0 and h > 0:
            return w * h
        case ("square", side):
            return side * side
        case _:
            raise ValueError(f"unknown shape {shape!r}")


def largest(shapes):
    best = None
    best_area = -1.0
    for shape in shapes:
        try:
            current = area(shape)
        except ValueError:
            continue
        if current > best_area:
            best, best_area = shape, current
    return best
