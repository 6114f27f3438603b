import numpy as np

from cupcf import RatingsMatrix

# Five-user toy grid: users 1..5, items 1..4, 0 = unrated.
TOY = np.array([
    [0, 5, 4, 3],
    [4, 4, 0, 2],
    [0, 0, 1, 4],
    [5, 2, 4, 4],
    [1, 0, 3, 0],
])


def matrix_from_grid(grid):
    grid = np.asarray(grid)
    u, i = np.nonzero(grid)
    return RatingsMatrix.from_triples(u + 1, i + 1, grid[u, i])


def grid_to_dict(grid):
    grid = np.asarray(grid)
    return {u + 1: {i + 1: int(grid[u, i]) for i in np.flatnonzero(grid[u])} for u in range(grid.shape[0])}


def random_grid(rng, n_users, n_items, density=0.5):
    """Random 1..5 grid where every user has at least one rating."""
    grid = rng.integers(1, 6, size=(n_users, n_items))
    grid[rng.random((n_users, n_items)) >= density] = 0
    for u in range(n_users):
        if not grid[u].any():
            grid[u, rng.integers(n_items)] = rng.integers(1, 6)
    return grid


ACCEPTANCE_LINES = []
