"""Synthetic markets with known calibration structure and an independent fitter."""

from src.synth.generator import (
    SyntheticDataset,
    generate,
    generate_cell,
    horizon_midpoints,
    size_ranges,
)
from src.synth.oracle import oracle_fit
from src.synth.spec import (
    ContractCountLaw,
    CountLaw,
    LatentLaw,
    LatentProbLaw,
    SynthSpec,
    TargetMode,
    TradeCountLaw,
    TradesPerMarket,
)

__all__ = [
    "ContractCountLaw",
    "CountLaw",
    "LatentLaw",
    "LatentProbLaw",
    "SynthSpec",
    "SyntheticDataset",
    "TargetMode",
    "TradeCountLaw",
    "TradesPerMarket",
    "generate",
    "generate_cell",
    "horizon_midpoints",
    "size_ranges",
    "oracle_fit",
]
