from collections import deque

visits = 0


def shortest_path(graph, start, goal):
    global visits
    parents = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        visits += 1
        if node == goal:
            break
        for neighbor in graph.get(node, ()):
            if neighbor not in parents:
                parents[neighbor] = node
                queue.append(neighbor)
    if goal not in parents:
        return None
    path = []
    step = goal
    while step is not None:
        path.append(step)
        step = parents[step]
    return path[::-1]


def count_components(graph):
    seen = set()
    components = 0

    def explore(node):
        nonlocal components
        stack = [node]
        while stack:
            current = stack.pop()
            if current in seen:
                continue
            seen.add(current)
            stack.extend(graph.get(current, ()))

    for node in graph:
        if node not in seen:
            components += 1
            explore(node)
    return components
