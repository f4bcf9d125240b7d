"""
Training loop: SGD with momentum on per-pixel cross-entropy.
Invalid pixels are excluded from the loss.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from src.core.errors import InvalidParameterError, TrainingError
from src.hazard.maps import Label, SafetyMap, require_same_shape
from src.segmenter.inference import TrainedModel, preprocess
from src.segmenter.network import ModelConfig, build_network
from src.terrain.dem import DEM, resample_nearest

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Optimizer and schedule"""

    batch_size: int = 8
    learning_rate: float = 1e-4
    momentum: float = 0.9
    epochs: int = 300
    rng_seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise InvalidParameterError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise InvalidParameterError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise InvalidParameterError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.epochs < 1:
            raise InvalidParameterError(f"epochs must be >= 1, got {self.epochs}")


def training_range(dataset: Sequence[Tuple[DEM, SafetyMap]]) -> Tuple[float, float]:
    """Minimum and maximum height across all training inputs"""
    low = min(float(dem.heights.min()) for dem, _ in dataset)
    high = max(float(dem.heights.max()) for dem, _ in dataset)
    return low, high


def prepare_tensors(dataset: Sequence[Tuple[DEM, SafetyMap]], norm_min: float, norm_max: float,
                    size: int) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Stack preprocessed inputs and nearest-neighbour resized labels

    Returns:
        (inputs (N, 1, S, S) float32, targets (N, S, S) int64)
    """
    inputs = []
    targets = []
    for dem, smap in dataset:
        require_same_shape(dem, smap, 'DEM and label map')
        inputs.append(preprocess(dem, norm_min, norm_max, size))
        targets.append(resample_nearest(smap.labels, size, size).astype(np.int64))
    return (torch.from_numpy(np.stack(inputs)).unsqueeze(1),
            torch.from_numpy(np.stack(targets)))


def train(dataset: Sequence[Tuple[DEM, SafetyMap]], cfg: TrainConfig, mcfg: ModelConfig) -> TrainedModel:
    """
    Train a segmentation network on (noisy DEM, label) pairs

    Args:
        dataset: Training pairs; labels come from the clean DEMs
        cfg: Optimizer settings
        mcfg: Architecture

    Returns:
        TrainedModel with per-epoch losses in training_meta['losses']
    """
    if not dataset:
        raise TrainingError("Training dataset is empty")
    norm_min, norm_max = training_range(dataset)
    if not norm_min < norm_max:
        raise TrainingError(f"Training heights span an empty range [{norm_min}, {norm_max}]")

    inputs, targets = prepare_tensors(dataset, norm_min, norm_max, mcfg.input_size)
    if bool(torch.all(targets == int(Label.INVALID))):
        raise TrainingError("Every training label is Invalid")

    network = build_network(mcfg)
    network.train()
    optimizer = torch.optim.SGD(network.parameters(), lr=cfg.learning_rate, momentum=cfg.momentum)
    shuffle_gen = torch.Generator().manual_seed(int(cfg.rng_seed))
    dropout_gen = torch.Generator().manual_seed(int(cfg.rng_seed) + 1)

    logger.info(f"Training on {len(dataset)} samples for {cfg.epochs} epochs "
                f"(batch {cfg.batch_size}, lr {cfg.learning_rate}, momentum {cfg.momentum})")
    losses: List[float] = []
    count = inputs.shape[0]
    for epoch in range(1, cfg.epochs + 1):
        order = torch.randperm(count, generator=shuffle_gen)
        batch_losses = []
        for start in range(0, count, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            y = targets[batch]
            if not bool(torch.any(y != int(Label.INVALID))):
                continue
            optimizer.zero_grad()
            logits = network(inputs[batch], generator=dropout_gen)
            loss = F.cross_entropy(logits, y, ignore_index=int(Label.INVALID))
            loss.backward()
            optimizer.step()
            batch_losses.append(float(loss.item()))
        epoch_loss = float(np.mean(batch_losses))
        if not np.isfinite(epoch_loss):
            raise TrainingError(f"Loss diverged at epoch {epoch}")
        losses.append(epoch_loss)
        logger.debug(f"Epoch {epoch}/{cfg.epochs}: loss {epoch_loss:.6f}")

    if len(losses) > 1 and losses[-1] >= losses[0]:
        logger.warning(f"Training loss did not decrease ({losses[0]:.6f} -> {losses[-1]:.6f})")
    logger.info(f"Training finished: loss {losses[0]:.6f} -> {losses[-1]:.6f}")

    network.eval()
    meta = {
        'epochs': cfg.epochs,
        'first_loss': losses[0],
        'final_loss': losses[-1],
        'losses': losses,
        'samples': len(dataset),
    }
    return TrainedModel(mcfg, network, norm_min, norm_max, meta)


def format_training_log(losses: Sequence[float]) -> str:
    """Line-oriented `epoch,loss` log"""
    lines = ['epoch,loss'] + [f"{i},{loss!r}" for i, loss in enumerate(losses, start=1)]
    return '\n'.join(lines) + '\n'
