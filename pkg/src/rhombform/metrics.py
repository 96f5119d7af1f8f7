"""Configuration statistics: EMD to the target rhombus, graph distances, perimeter, holes."""
from __future__ import annotations

from dataclasses import dataclass, fields
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from .configuration import Configuration
from .grid import SIDES, Cell, add, rhombus_cells
from .topology import decompose, hop_distances

CSV_COLUMNS = ("generator", "n", "seed", "variant", "rounds", "emd", "eccentricity",
               "closeness", "diameter", "perimeter", "holes", "pseudo_holes", "terminated")


@dataclass(frozen=True)
class MetricsRecord:
    n: int
    emd: int
    eccentricity: int
    closeness: Fraction
    diameter: int
    perimeter: int
    holes: int
    pseudo_holes: int

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def emd_to_rhombus(config: Configuration) -> int:
    """Minimum total Manhattan cost of matching the modules onto the target rhombus."""
    src = np.array(sorted(config.occupied), dtype=np.int64)
    dst = np.array(rhombus_cells(config.leader, len(config)), dtype=np.int64)
    cost = np.abs(src[:, None, :] - dst[None, :, :]).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    return int(cost[rows, cols].sum())


def perimeter(cells) -> int:
    cells = set(cells)
    return sum(1 for c in cells for d in SIDES if add(c, d) not in cells)


def eccentricities(cells) -> dict[Cell, int]:
    cells = list(cells)
    return {c: max(hop_distances(cells, c).values()) for c in cells}


def summarize(config: Configuration) -> MetricsRecord:
    cells = list(config.occupied)
    ecc = eccentricities(cells)
    holes, pseudo = decompose(cells)
    return MetricsRecord(
        n=len(cells),
        emd=emd_to_rhombus(config),
        eccentricity=ecc[config.leader],
        closeness=Fraction(sum(ecc.values()), len(cells)),
        diameter=max(ecc.values()),
        perimeter=perimeter(cells),
        holes=sum(1 for h in holes if not h.infinite),
        pseudo_holes=sum(1 for p in pseudo if not p.infinite),
    )


def csv_row(generator: str, seed: int, variant: str, rounds: int, terminated: bool,
            record: MetricsRecord) -> dict:
    """One row in :data:`CSV_COLUMNS` order; closeness is written as a float."""
    row = {"generator": generator, "n": record.n, "seed": seed, "variant": variant, "rounds": rounds}
    row.update(record.as_dict())
    row["closeness"] = f"{float(record.closeness):.6g}"
    row["terminated"] = terminated
    return {k: row[k] for k in CSV_COLUMNS}
