"""Bin-packing instances and the bin-count objective."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import SeedStream


@dataclass(frozen=True)
class BppInstance:
    item_sizes: np.ndarray  # integer sizes, one per item
    capacity: int

    def lower_bound(self) -> int:
        return int(np.ceil(self.item_sizes.sum() / self.capacity))


class CapacityViolation(ValueError):
    def __init__(self, bin_id: object, load: int, capacity: int):
        self.bin_id = bin_id
        super().__init__(f"bin {bin_id!r} holds {load} > capacity {capacity}")


def gen_bpp_instances(
    n_instances: int,
    n_items: int,
    capacity: int,
    size_lo: int,
    size_hi: int,
    stream: SeedStream,
) -> list[BppInstance]:
    """Instances with item sizes i.i.d. uniform integers in [size_lo, size_hi]."""
    if not 0 < size_lo <= size_hi <= capacity:
        raise ValueError(
            f"need 0 < size_lo <= size_hi <= capacity, got [{size_lo}, {size_hi}] vs {capacity}"
        )
    rng = stream.rng()
    return [
        BppInstance(rng.integers(size_lo, size_hi + 1, size=n_items), int(capacity))
        for _ in range(n_instances)
    ]


def bpp_count_bins(instance: BppInstance, assignment: dict[int, object]) -> int:
    """Number of distinct bins used by an item -> bin assignment.

    Raises CapacityViolation naming the offending bin if any bin overflows.
    """
    loads: dict[object, int] = {}
    for item, bin_id in assignment.items():
        loads[bin_id] = loads.get(bin_id, 0) + int(instance.item_sizes[item])
    for bin_id, load in loads.items():
        if load > instance.capacity:
            raise CapacityViolation(bin_id, load, instance.capacity)
    return len(loads)


def save_instances(instances: list[BppInstance], path: str, seed_label: str) -> None:
    """Header: ``bpp <n_instances> <n_items> <capacity> <seed_label>``; then
    one row of item sizes per instance."""
    n_items = len(instances[0].item_sizes)
    capacity = instances[0].capacity
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"bpp {len(instances)} {n_items} {capacity} {seed_label}\n")
        for inst in instances:
            fh.write(" ".join(str(int(s)) for s in inst.item_sizes) + "\n")


def load_instances(path: str) -> list[BppInstance]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if not header or header[0] != "bpp":
            raise ValueError(f"{path} is not a bpp instance file")
        n_instances, n_items, capacity = int(header[1]), int(header[2]), int(header[3])
        instances = []
        for line in fh:
            if not line.strip():
                continue
            sizes = np.array([int(t) for t in line.split()], dtype=np.int64)
            if len(sizes) != n_items:
                raise ValueError(f"{path}: row with {len(sizes)} items, expected {n_items}")
            instances.append(BppInstance(sizes, capacity))
    if len(instances) != n_instances:
        raise ValueError(f"{path}: expected {n_instances} instances, got {len(instances)}")
    return instances
