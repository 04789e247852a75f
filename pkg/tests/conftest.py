import time

import numpy as np
import pytest

from evact import classifier as clf
from evact import events as ev
from evact import features as ft
from evact import representations as rep
from evact import synthgen as sg

# the reference pipeline used by the end-to-end tests: denoise, recency
# frames at the default rate/window, fill, half resolution, 5x5 max pool
DENOISE_TAU = 10_000
DENOISE_KMIN = 2
POOL = 5
HALVE = 2


def clip_to_features(clip, label=None):
    stream = ev.time_surface_denoise(clip.stream, DENOISE_TAU, DENOISE_KMIN)
    frames = rep.build_frames(stream, rep.DEFAULT_DT, rep.DEFAULT_T_M)
    stack = rep.frames_to_array(frames)
    stack = np.where(np.isnan(stack), np.float32(0.0), stack)
    if len(stack):
        stack = np.stack([rep.downsample(stack[i], HALVE)
                          for i in range(len(stack))])
    return ft.frames_to_features(stack, POOL,
                                 clip_id=f"{clip.subject_id}-{clip.label}",
                                 label=clip.label if label is None else label)


def build_split(per_class, seed_base, noise_rate, classes=range(6)):
    seqs = []
    for ci, cls in enumerate(classes):
        for i in range(per_class):
            cfg = sg.SynthConfig(class_id=cls, seed=seed_base + ci * per_class + i,
                                 noise_rate=noise_rate)
            seqs.append(clip_to_features(sg.generate_clip(cfg)))
    return seqs


class SyntheticBench:
    """Full-scale synthetic recognition benchmark shared by the acceptance
    tests: 6 classes, 50 train / 20 test clips per class, fixed seeds, plus
    the test split regenerated with a 5x noise corruption."""

    NOISE = 0.5

    def __init__(self):
        t0 = time.perf_counter()
        self.train = build_split(50, 1_000, self.NOISE)
        self.test = build_split(20, 900_000, self.NOISE)
        self.ood = build_split(20, 900_000, self.NOISE * 5)
        self.build_seconds = time.perf_counter() - t0

    @staticmethod
    def frame_matrix(seqs):
        x = np.vstack([s.vectors for s in seqs])
        y = np.concatenate([np.full(len(s), s.label) for s in seqs])
        return x, y

    @staticmethod
    def clip_accuracy(head, seqs, classes):
        labels = np.array([s.label for s in seqs])
        modes = np.array([clf.predict_clip_mode(head, s) for s in seqs])
        accums = np.array([clf.predict_clip_accumulated(head, s) for s in seqs])
        per_mode = {c: float((modes[labels == c] == c).mean()) for c in classes}
        per_accum = {c: float((accums[labels == c] == c).mean()) for c in classes}
        return per_mode, per_accum


@pytest.fixture(scope="session")
def synthetic_bench():
    return SyntheticBench()
