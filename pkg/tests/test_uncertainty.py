"""
Unit tests for predictive entropy and the uncertainty threshold
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.core.errors import CalibrationError, InvalidParameterError, MalformedHeaderError
from src.hazard.maps import Label, SafetyMap
from src.segmenter.inference import MeanSoftmaxMap
from src.uncertainty.entropy import (LN2, UncertaintyMap, predictive_entropy, read_uncertainty_map,
                                     write_uncertainty_map)
from src.uncertainty.threshold import (UncertaintyThreshold, apply_threshold, calibrate_threshold,
                                       read_threshold, write_threshold)


def _entropy_of(p_safe) -> np.ndarray:
    return predictive_entropy(MeanSoftmaxMap.from_p_safe(np.atleast_2d(p_safe))).entropy


def test_entropy_identities():
    assert abs(_entropy_of(0.5)[0, 0] - math.log(2)) < 1e-9
    assert abs(_entropy_of(1.0)[0, 0]) < 1e-9
    assert abs(_entropy_of(0.0)[0, 0]) < 1e-9
    assert LN2 == math.log(2.0)

    print("✓ Entropy identities")


def test_entropy_of_skewed_softmax():
    assert abs(_entropy_of(0.9)[0, 0] - 0.3251) < 1e-4
    assert abs(_entropy_of(0.1)[0, 0] - 0.3251) < 1e-4


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
def test_entropy_bounds_and_symmetry(p):
    h = _entropy_of(p)[0, 0]
    assert 0.0 <= h <= LN2
    assert abs(h - _entropy_of(1.0 - p)[0, 0]) < 1e-9


def test_entropy_is_monotone_towards_half():
    p = np.linspace(0.0, 0.5, 51)
    h = _entropy_of(p)[0]
    assert np.all(np.diff(h) > 0)


def test_uncertainty_map_bounds():
    with pytest.raises(InvalidParameterError):
        UncertaintyMap(np.array([[-0.1]]))
    with pytest.raises(InvalidParameterError):
        UncertaintyMap(np.array([[0.8]]))


def test_uncertainty_map_file(tmp_path):
    umap = _entropy_of(np.linspace(0, 1, 9).reshape(3, 3))
    write_uncertainty_map(UncertaintyMap(umap), tmp_path / 'u.entropy')
    loaded = read_uncertainty_map(tmp_path / 'u.entropy')
    assert np.allclose(loaded.entropy, umap, atol=1e-7)


def test_calibrate_is_pooled_mean():
    maps = [UncertaintyMap(np.full((2, 2), 0.1)), UncertaintyMap(np.array([[0.3, 0.3], [0.5, 0.5]]))]
    t = calibrate_threshold(maps, provenance='val')
    assert abs(t.value - 0.25) < 1e-12
    assert t.provenance == 'val'


def test_calibrate_skips_invalid_truth():
    maps = [UncertaintyMap(np.array([[0.2, 0.6]]))]
    validity = [SafetyMap(np.array([[Label.SAFE, Label.INVALID]]))]
    assert abs(calibrate_threshold(maps, validity).value - 0.2) < 1e-12

    with pytest.raises(CalibrationError):
        calibrate_threshold(maps, [SafetyMap.filled((1, 2), Label.INVALID)])
    with pytest.raises(CalibrationError):
        calibrate_threshold([])
    with pytest.raises(InvalidParameterError):
        calibrate_threshold(maps, [])


def test_apply_threshold():
    pred = SafetyMap(np.array([[Label.SAFE, Label.UNSAFE, Label.SAFE, Label.INVALID]]))
    unc = UncertaintyMap(np.array([[0.1, 0.5, 0.3, 0.0]]))
    out = apply_threshold(pred, unc, UncertaintyThreshold(0.3))
    assert out.labels.tolist() == [[Label.SAFE, Label.INVALID, Label.SAFE, Label.INVALID]]

    everything = apply_threshold(pred, unc, UncertaintyThreshold(LN2))
    assert np.array_equal(everything.labels, pred.labels)


def test_lowering_threshold_only_adds_invalid():
    rng = np.random.default_rng(8)
    pred = SafetyMap(rng.choice([Label.UNSAFE, Label.SAFE, Label.INVALID], size=(16, 16)).astype(np.uint8))
    unc = UncertaintyMap(rng.uniform(0.0, LN2, size=(16, 16)))

    previous = pred.labels != Label.INVALID
    for value in np.linspace(LN2, 0.0, 12):
        out = apply_threshold(pred, unc, UncertaintyThreshold(float(value)))
        valid = out.labels != Label.INVALID
        assert np.all(previous | ~valid)
        assert np.array_equal(out.labels[valid], pred.labels[valid])
        previous = valid


def test_threshold_range():
    with pytest.raises(InvalidParameterError):
        UncertaintyThreshold(-0.01)
    with pytest.raises(InvalidParameterError):
        UncertaintyThreshold(0.7)


def test_threshold_file(tmp_path):
    t = UncertaintyThreshold(0.123456789012345, 'validation 20 DEMs')
    write_threshold(t, tmp_path / 'threshold.txt')
    loaded = read_threshold(tmp_path / 'threshold.txt')
    assert loaded.value == t.value
    assert loaded.provenance == t.provenance

    (tmp_path / 'bad.txt').write_text('validation_set=x\n')
    with pytest.raises(MalformedHeaderError):
        read_threshold(tmp_path / 'bad.txt')


if __name__ == '__main__':
    print("Running uncertainty tests...\n")
    test_entropy_identities()
    test_calibrate_is_pooled_mean()
    print("\nALL TESTS PASSED ✓")
