"""
Segmenter package: MC-dropout encoder-decoder, training and inference.
"""

from src.segmenter.network import BayesianSegNet, MCDropout, ModelConfig, build_network
from src.segmenter.inference import (MeanSoftmaxMap, TrainedModel, argmax_labels, average_samples,
                                     deterministic_forward, mc_predict, predict_dem, preprocess,
                                     stochastic_forward)
from src.segmenter.training import TrainConfig, format_training_log, train
from src.segmenter.model_io import load_model, save_model

__all__ = [
    'BayesianSegNet', 'MCDropout', 'ModelConfig', 'build_network',
    'MeanSoftmaxMap', 'TrainedModel', 'argmax_labels', 'average_samples',
    'deterministic_forward', 'mc_predict', 'predict_dem', 'preprocess', 'stochastic_forward',
    'TrainConfig', 'format_training_log', 'train',
    'load_model', 'save_model',
]
