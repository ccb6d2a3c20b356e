"""Sequence generator contracts: frame pairing, the anchored first frame,
exact translation, geometric drift, and schedule overrides."""
import numpy as np
import pytest

from corruption_bench.errors import ParameterError
from corruption_bench.imaging import as_buffer, mean_l2
from corruption_bench.perturbations import (COMMON_KINDS, EXTRA_KINDS,
                                            MIN_FRAMES, NOISE_MODE_KINDS,
                                            PERTURBATION_KINDS,
                                            PerturbationSpec, frame_pairs,
                                            perturbation_sequence)
from corruption_bench.randomness import RandomStream
from corruption_bench.schedules import SeveritySchedule


def frames(img, kind, seed=5, n=MIN_FRAMES, difficulty="normal",
           schedule=None):
    spec = PerturbationSpec(kind, n_frames=n, difficulty=difficulty)
    stream = RandomStream(seed, "seq", kind)
    return list(perturbation_sequence(img, spec, stream, schedule=schedule))


@pytest.fixture(scope="module")
def base(small_images):
    return as_buffer(small_images[3])


def test_kind_rosters():
    assert len(COMMON_KINDS) == 10
    assert len(EXTRA_KINDS) == 4
    assert NOISE_MODE_KINDS <= set(PERTURBATION_KINDS)
    assert set(COMMON_KINDS) & set(EXTRA_KINDS) == set()


def test_spec_validation():
    with pytest.raises(ParameterError):
        PerturbationSpec("fog")
    with pytest.raises(ParameterError):
        PerturbationSpec("rotate", n_frames=30)
    with pytest.raises(ParameterError):
        PerturbationSpec("rotate", difficulty="extreme")
    spec = PerturbationSpec("rotate")
    assert spec.mode == "temporal"
    assert PerturbationSpec("shot_noise").mode == "noise"


def test_frame_pairs_contract():
    assert frame_pairs(31, "noise") == [(0, j) for j in range(1, 31)]
    with pytest.raises(ParameterError):
        frame_pairs(31, "noise", stride=2)
    assert frame_pairs(31, "temporal") == [(j - 1, j) for j in range(1, 31)]
    assert frame_pairs(31, "temporal", stride=2) == [
        (j - 2, j) for j in range(2, 31)]
    assert len(frame_pairs(31, "temporal", stride=2)) == 29
    with pytest.raises(ParameterError):
        frame_pairs(31, "temporal", stride=3)
    with pytest.raises(ParameterError):
        frame_pairs(1, "temporal")
    with pytest.raises(ParameterError):
        frame_pairs(31, "spatial")


def test_first_frame_is_the_source_for_every_kind(base):
    for kind in PERTURBATION_KINDS:
        seq = frames(base, kind)
        assert len(seq) == MIN_FRAMES, kind
        assert np.array_equal(seq[0], base), kind


def test_translate_is_an_exact_column_shift(base):
    seq = frames(base, "translate")
    w = base.shape[1]
    for j in (1, 7, 30):
        interior = w - j  # columns whose source stays inside the image
        assert np.array_equal(seq[j][:, :interior], base[:, j:j + interior])
        # the right edge clamps to the last source column
        assert np.array_equal(seq[j][:, interior:],
                              np.repeat(base[:, -1:], j, axis=1))


def test_schedule_override_changes_step(base):
    text = ("[gaussian_noise]\n"
            + "".join(f"{s} = sigma=0.1\n" for s in range(1, 6))
            + "[perturb.translate]\nnormal = px=3\n")
    sched = SeveritySchedule.from_string(text)
    seq = frames(base, "translate", schedule=sched)
    assert np.array_equal(seq[1][:, :-3], base[:, 3:])


def test_hard_difficulty_doubles_translation(base):
    normal = frames(base, "translate")
    hard = frames(base, "translate", difficulty="hard")
    assert np.array_equal(hard[1], normal[2])
    assert np.array_equal(hard[5], normal[10])


def test_scale_drifts_a_dot_outward():
    img = np.zeros((101, 101, 3))
    img[50, 75] = 1.0  # dot 25 px right of center
    seq = frames(img, "scale")
    out = seq[30].sum(axis=2)
    ys, xs = np.nonzero(out)
    cx = float((xs * out[ys, xs]).sum() / out[ys, xs].sum())
    want = 50.0 + 25.0 * 1.008 ** 30
    assert cx == pytest.approx(want, rel=0.02)


def test_brightness_ramp_is_linear():
    mid = np.full((32, 32, 3), 0.4)
    seq = frames(mid, "brightness")
    for j in (1, 10, 30):
        assert seq[j].mean() == pytest.approx(0.4 + 0.01 * j, abs=1e-6)


def test_temporal_drift_grows_but_noise_stays_anchored(base):
    drift = frames(base, "rotate")
    d1 = mean_l2(drift[1], base)
    d30 = mean_l2(drift[30], base)
    assert d30 > 5 * d1
    anchored = frames(base, "gaussian_noise")
    dists = [mean_l2(f, base) for f in anchored[1:]]
    assert max(dists) < 2 * min(dists)


def test_noise_frames_are_deterministic_and_independent(base):
    a = frames(base, "shot_noise", seed=11)
    b = frames(base, "shot_noise", seed=11)
    for fa, fb in zip(a, b):
        assert np.array_equal(fa, fb)
    assert not np.array_equal(a[1], a[2])
    c = frames(base, "shot_noise", seed=12)
    assert not np.array_equal(a[1], c[1])
