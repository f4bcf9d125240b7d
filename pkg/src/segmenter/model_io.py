"""
Versioned model file: magic line, one JSON header line, little-endian tensor payload.
"""

import json
import logging
from dataclasses import asdict

import numpy as np
import torch

from src.core.errors import MalformedHeaderError, TruncatedPayloadError
from src.segmenter.inference import TrainedModel
from src.segmenter.network import ModelConfig, build_network
from src.terrain.dem_io import PathLike, atomic_write_bytes

logger = logging.getLogger(__name__)

MODEL_MAGIC = b'HDSEG-MODEL 1\n'
_PAYLOAD_DTYPES = {
    torch.float32: '<f4',
    torch.float64: '<f8',
    torch.int64: '<i8',
}


def encode_model(model: TrainedModel) -> bytes:
    state = model.network.state_dict()
    tensors = []
    payload = []
    for name, tensor in state.items():
        dtype = _PAYLOAD_DTYPES[tensor.dtype]
        tensors.append([name, list(tensor.shape), dtype])
        payload.append(np.ascontiguousarray(tensor.detach().cpu().numpy(), dtype=dtype).tobytes())
    header = {
        'config': asdict(model.config),
        'norm_min': model.norm_min,
        'norm_max': model.norm_max,
        'training_meta': model.training_meta,
        'tensors': tensors,
    }
    header_line = json.dumps(header, sort_keys=True, separators=(',', ':')).encode('utf-8')
    return MODEL_MAGIC + header_line + b'\n' + b''.join(payload)


def decode_model(data: bytes) -> TrainedModel:
    if not data.startswith(MODEL_MAGIC):
        raise MalformedHeaderError("Not a model file (bad magic)")
    newline = data.find(b'\n', len(MODEL_MAGIC))
    if newline < 0:
        raise MalformedHeaderError("Model header is not terminated")
    try:
        header = json.loads(data[len(MODEL_MAGIC):newline].decode('utf-8'))
        config = ModelConfig(**header['config'])
        tensors = header['tensors']
    except (ValueError, KeyError, TypeError) as e:
        raise MalformedHeaderError(f"Bad model header: {e}")

    network = build_network(config)
    offset = newline + 1
    state = {}
    for name, shape, dtype in tensors:
        dtype = np.dtype(dtype)
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if offset + nbytes > len(data):
            raise TruncatedPayloadError(f"Model payload ends inside tensor '{name}'")
        array = np.frombuffer(data, dtype=dtype, count=nbytes // dtype.itemsize, offset=offset)
        state[name] = torch.from_numpy(array.reshape(shape).astype(dtype.newbyteorder('=')))
        offset += nbytes
    if offset != len(data):
        raise MalformedHeaderError(f"{len(data) - offset} trailing bytes after model payload")
    network.load_state_dict(state)
    network.eval()
    return TrainedModel(config, network, header['norm_min'], header['norm_max'],
                        header.get('training_meta', {}))


def save_model(model: TrainedModel, path: PathLike):
    """Write a .model file"""
    atomic_write_bytes(path, encode_model(model))
    logger.info(f"Model saved to {path}")


def load_model(path: PathLike) -> TrainedModel:
    """Read a .model file"""
    with open(path, 'rb') as f:
        model = decode_model(f.read())
    logger.debug(f"Model loaded from {path}")
    return model
