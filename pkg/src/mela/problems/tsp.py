"""Traveling-salesperson instances: generation, distances, tour length."""

from __future__ import annotations

import numpy as np

from ..core import SeedStream


def gen_tsp_instances(n_instances: int, n_cities: int, stream: SeedStream) -> list[np.ndarray]:
    """Generate city coordinate sets, i.i.d. uniform in the unit square."""
    if n_cities < 3:
        raise ValueError(f"need at least 3 cities, got {n_cities}")
    rng = stream.rng()
    return [rng.random((n_cities, 2)) for _ in range(n_instances)]


def distance_matrix(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def tsp_tour_length(coords: np.ndarray, tour: np.ndarray) -> float:
    """Length of the closed tour visiting every city exactly once."""
    tour = np.asarray(tour, dtype=np.int64)
    n = coords.shape[0]
    if tour.shape != (n,) or not np.array_equal(np.sort(tour), np.arange(n)):
        raise ValueError("tour is not a permutation of all cities")
    steps = coords[tour] - coords[np.roll(tour, -1)]
    return float(np.sqrt((steps**2).sum(axis=1)).sum())


def save_instances(instances: list[np.ndarray], path: str, seed_label: str) -> None:
    """Write instance coordinates in the plain-text exchange format.

    Header line: ``tsp <n_instances> <n_cities> <seed_label>``, then one
    ``x y`` row per city, instances concatenated in order.
    """
    n_cities = instances[0].shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"tsp {len(instances)} {n_cities} {seed_label}\n")
        for coords in instances:
            for x, y in coords:
                fh.write(f"{float(x)!r} {float(y)!r}\n")


def load_instances(path: str) -> list[np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if not header or header[0] != "tsp":
            raise ValueError(f"{path} is not a tsp instance file")
        n_instances, n_cities = int(header[1]), int(header[2])
        rows = [tuple(float(t) for t in line.split()) for line in fh if line.strip()]
    if len(rows) != n_instances * n_cities:
        raise ValueError(f"{path}: expected {n_instances * n_cities} rows, got {len(rows)}")
    flat = np.array(rows)
    return [flat[i * n_cities : (i + 1) * n_cities] for i in range(n_instances)]
