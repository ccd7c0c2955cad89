"""Posterior sampling of the hierarchical model from pipeline configuration."""

from __future__ import annotations

import numpy as np

from das.logger import log_info
from src.bayes.model import BayesModel, BayesModelSpec
from src.bayes.nuts import PosteriorDraws, SamplerSettings, sample
from src.common.grid import SlopeGrid
from src.config import PipelineConfig


def model_spec(cfg: PipelineConfig) -> BayesModelSpec:
    return BayesModelSpec(
        representative_log_size=tuple(cfg.binning.representative_log_size),
        beta_constraint=cfg.sampler.beta_constraint,
    )


def sample_posterior(
    grid: SlopeGrid,
    spec: BayesModelSpec,
    settings: SamplerSettings,
    threads: int = 1,
    cell_mask: np.ndarray | None = None,
) -> PosteriorDraws:
    """Draws of every constrained parameter; a complete grid is required unless masked."""
    model = BayesModel(grid, spec, cell_mask)
    log_info(
        f"Hierarchical model over {model.mask.sum()} cells, "
        f"{model.dim} unconstrained coordinates, beta {spec.beta_constraint}"
    )
    return sample(model, settings, threads)


def settings_from_config(cfg: PipelineConfig, seed: int | None = None) -> SamplerSettings:
    return SamplerSettings(
        chains=cfg.sampler.chains,
        warmup=cfg.sampler.warmup,
        keep=cfg.sampler.keep,
        target_accept=cfg.sampler.target_accept,
        max_depth=cfg.sampler.max_depth,
        seed=cfg.seed if seed is None else seed,
    )
