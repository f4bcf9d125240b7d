"""
Preprocessing and Monte-Carlo dropout inference.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np
import torch

from src.core.errors import InvalidParameterError, NormalizationError, ShapeMismatchError
from src.hazard.maps import Label, SafetyMap
from src.segmenter.network import BayesianSegNet, ModelConfig
from src.terrain.dem import DEM, resample_bilinear

logger = logging.getLogger(__name__)


@dataclass
class TrainedModel:
    """Network weights plus the normalization range fixed by the training set"""

    config: ModelConfig
    network: BayesianSegNet
    norm_min: float
    norm_max: float
    training_meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.norm_min < self.norm_max:
            raise NormalizationError(f"Normalization range is empty: [{self.norm_min}, {self.norm_max}]")


@dataclass
class MeanSoftmaxMap:
    """
    Per-pixel class probabilities, shape (2, H, W)

    Channel order follows the label codes: probs[0] is unsafe, probs[1] is safe.
    """

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 3 or probs.shape[0] != 2:
            raise InvalidParameterError(f"MeanSoftmaxMap must have shape (2, H, W), got {probs.shape}")
        if np.any(np.abs(probs.sum(axis=0) - 1.0) > 1e-6):
            raise InvalidParameterError("Class probabilities do not sum to 1")
        self.probs = np.clip(probs, 0.0, 1.0)

    @classmethod
    def from_p_safe(cls, p_safe: np.ndarray) -> 'MeanSoftmaxMap':
        p_safe = np.clip(np.asarray(p_safe, dtype=np.float64), 0.0, 1.0)
        return cls(np.stack([1.0 - p_safe, p_safe]))

    @property
    def p_safe(self) -> np.ndarray:
        return self.probs[Label.SAFE]

    @property
    def p_unsafe(self) -> np.ndarray:
        return self.probs[Label.UNSAFE]

    @property
    def shape(self):
        return self.probs.shape[1:]

    def to_grid(self, height: int, width: int) -> 'MeanSoftmaxMap':
        """Bilinear resample (corner aligned) to another grid size"""
        if (height, width) == tuple(self.shape):
            return MeanSoftmaxMap(self.probs.copy())
        return MeanSoftmaxMap.from_p_safe(resample_bilinear(self.p_safe, height, width))


def preprocess(dem: DEM, train_min: float, train_max: float, target_size: int) -> np.ndarray:
    """
    Resize a DEM to the network input size and normalize heights to [0, 1]

    Args:
        dem: Input terrain
        train_min: Minimum height across the training set
        train_max: Maximum height across the training set
        target_size: Network input size (square)

    Returns:
        float32 array (target_size, target_size), clamped to [0, 1]
    """
    if not train_min < train_max:
        raise NormalizationError(f"Degenerate normalization range [{train_min}, {train_max}]")
    resized = resample_bilinear(dem.heights, target_size, target_size)
    normalized = (resized - train_min) / (train_max - train_min)
    return np.clip(normalized, 0.0, 1.0).astype(np.float32)


def _as_batch(model: TrainedModel, grid: np.ndarray) -> torch.Tensor:
    size = model.config.input_size
    grid = np.asarray(grid)
    if grid.shape != (size, size):
        raise ShapeMismatchError(f"Input shape {grid.shape} does not match model input ({size}, {size})")
    dtype = next(model.network.parameters()).dtype
    return torch.as_tensor(grid, dtype=dtype).reshape(1, 1, size, size)


def _forward(model: TrainedModel, grid: np.ndarray, generator) -> np.ndarray:
    model.network.eval()
    with torch.no_grad():
        logits = model.network(_as_batch(model, grid), generator=generator)
    return torch.softmax(logits.double(), dim=1)[0].numpy()


def stochastic_forward(model: TrainedModel, grid: np.ndarray, sample_seed: int) -> np.ndarray:
    """
    One forward pass with dropout masks drawn from sample_seed

    Batch-norm uses its frozen running statistics.

    Returns:
        (2, S, S) softmax probabilities
    """
    generator = torch.Generator().manual_seed(int(sample_seed))
    return _forward(model, grid, generator)


def deterministic_forward(model: TrainedModel, grid: np.ndarray) -> np.ndarray:
    """Forward pass with dropout disabled"""
    return _forward(model, grid, None)


def average_samples(samples: Sequence[np.ndarray]) -> MeanSoftmaxMap:
    """Per-pixel arithmetic mean of softmax samples, each (2, H, W)"""
    if not samples:
        raise InvalidParameterError("Need at least one sample to average")
    stack = np.stack([np.asarray(s, dtype=np.float64) for s in samples])
    # Shifted mean: identical samples reproduce the first one bit-exactly
    first = stack[0]
    return MeanSoftmaxMap(first + (stack - first).mean(axis=0))


def mc_predict(model: TrainedModel, grid: np.ndarray, samples: int, base_seed: int) -> MeanSoftmaxMap:
    """
    Monte-Carlo dropout prediction

    Args:
        model: Trained model
        grid: Preprocessed input (input_size x input_size)
        samples: Number of stochastic passes M
        base_seed: Pass m uses seed base_seed + m

    Returns:
        Mean softmax over the M passes
    """
    if samples < 1:
        raise InvalidParameterError(f"MC sample count must be >= 1, got {samples}")
    outputs = [stochastic_forward(model, grid, base_seed + m) for m in range(samples)]
    return average_samples(outputs)


def argmax_labels(msm: MeanSoftmaxMap) -> SafetyMap:
    """Safe where p_safe > p_unsafe; ties resolve to Unsafe"""
    labels = np.where(msm.p_safe > msm.p_unsafe, int(Label.SAFE), int(Label.UNSAFE))
    return SafetyMap(labels.astype(np.uint8))


def predict_dem(model: TrainedModel, dem: DEM, samples: int, base_seed: int) -> MeanSoftmaxMap:
    """Preprocess, run mc_predict, and resample back to the DEM grid"""
    grid = preprocess(dem, model.norm_min, model.norm_max, model.config.input_size)
    msm = mc_predict(model, grid, samples, base_seed)
    return msm.to_grid(dem.height, dem.width)
