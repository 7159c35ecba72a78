"""Synthetic tabular datasets for demos, tests, and desk-scale campaigns."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .tabular import Dataset, default_names, from_array


def make_latent_tabular(
    n_obs: int = 10_000,
    n_feat: int = 50,
    rank: int = 5,
    noise: float = 0.05,
    scale_decades: float = 4.0,
    seed: int = 0,
    dtype: str = "f64",
    row_corr: float = 0.0,
) -> Dataset:
    """Low-rank tabular data with heteroscedastic per-column scales.

    Columns are linear mixtures of `rank` shared latent factors, unit-variance
    before scaling, then stretched so column magnitudes span `scale_decades`
    decades, plus white noise at `noise` times each column's scale.  The
    shared factors make every column largely predictable from the others,
    which is the regime where aggressive lossy reduction should leave model
    quality intact.

    `row_corr` > 0 turns the factors into stationary AR(1) paths with that
    lag-one correlation, mimicking instrument streams whose rows arrive in
    time order.  Rows stay identically distributed; only their ordering
    carries structure, so shuffling or a contiguous split both give the same
    marginal statistics.
    """
    if rank < 1 or rank > n_feat:
        raise ConfigError(f"rank must be in [1, n_feat], got {rank}")
    if n_obs < 2:
        raise ConfigError(f"need at least 2 observations, got {n_obs}")
    if noise < 0:
        raise ConfigError(f"noise must be nonnegative, got {noise}")
    if not 0.0 <= row_corr < 1.0:
        raise ConfigError(f"row_corr must be in [0, 1), got {row_corr}")
    rng = np.random.default_rng(seed)
    factors = rng.normal(size=(n_obs, rank))
    if row_corr > 0.0:
        # unit-variance AR(1): x[t] = rho x[t-1] + sqrt(1 - rho^2) e[t]
        decay = float(np.sqrt(1.0 - row_corr * row_corr))
        for t in range(1, n_obs):
            factors[t] = row_corr * factors[t - 1] + decay * factors[t]
    loadings = rng.normal(size=(rank, n_feat))
    base = factors @ loadings
    base /= base.std(axis=0)
    scales = 10.0 ** np.linspace(-scale_decades / 2, scale_decades / 2, n_feat)
    values = scales * (base + noise * rng.normal(size=base.shape))
    return from_array(values, default_names(n_feat), dtype)


def make_cluster_labels(
    n_obs: int = 2_000,
    n_feat: int = 8,
    n_classes: int = 3,
    separation: float = 4.0,
    seed: int = 0,
) -> Dataset:
    """Gaussian blobs with the class id appended as the last column."""
    if n_classes < 2:
        raise ConfigError(f"need at least 2 classes, got {n_classes}")
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=separation, size=(n_classes, n_feat))
    labels = rng.integers(0, n_classes, size=n_obs)
    points = centers[labels] + rng.normal(size=(n_obs, n_feat))
    values = np.column_stack([points, labels.astype(np.float64)])
    names = default_names(n_feat) + ("label",)
    return from_array(values, names)
