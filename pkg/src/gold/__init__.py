"""Gold layer - analysis cells and dataset statistics."""

from src.gold.dataset_stats import dataset_stats
from src.gold.grid import (
    assemble_grid,
    assemble_observations,
    cells_from_observations,
    classified_markets,
    with_labels,
)

__all__ = [
    "assemble_grid",
    "assemble_observations",
    "cells_from_observations",
    "classified_markets",
    "dataset_stats",
    "with_labels",
]
