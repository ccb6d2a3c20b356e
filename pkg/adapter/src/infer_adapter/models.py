"""Model references: which classifier to run, how inputs are prepared,
and how many ranked classes end up in the log.

A classifier here is any callable taking a float batch (B, H, W, 3) in
[0, 1] and returning (B, n_classes) class probabilities.  Two builtins
ship so the whole pipeline is testable without an ML framework: ``toy``,
a deterministic pixel-statistics model, and ``constant``, which returns
the same distribution for every input.
"""

import importlib

import numpy as np

from .errors import ConfigError

BUILTIN_MODELS = ("toy", "constant")

TOY_CLASSES = 50

# fixed projection from image statistics to class logits; the seed is part
# of the toy model's identity, never vary it
_TOY_W = np.random.default_rng(20190328).standard_normal((12, TOY_CLASSES))


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _toy_features(batch):
    lum = (0.299 * batch[..., 0] + 0.587 * batch[..., 1]
           + 0.114 * batch[..., 2])
    h, w = lum.shape[1:]
    quads = [lum[:, :h // 2, :w // 2], lum[:, :h // 2, w // 2:],
             lum[:, h // 2:, :w // 2], lum[:, h // 2:, w // 2:]]
    cols = [batch.mean(axis=(1, 2)),                    # (B, 3)
            batch.std(axis=(1, 2)),                     # (B, 3)
            np.stack([q.mean(axis=(1, 2)) for q in quads], axis=1),  # (B, 4)
            np.abs(np.diff(lum, axis=2)).mean(axis=(1, 2))[:, None],
            np.abs(np.diff(lum, axis=1)).mean(axis=(1, 2))[:, None]]
    return np.concatenate(cols, axis=1)  # (B, 12)


def toy_predict(batch):
    """Deterministic stand-in classifier: image statistics through a fixed
    random projection.  Sensitive to small input changes, which is what a
    flip-statistics pipeline needs to exercise."""
    return softmax(20.0 * _toy_features(np.asarray(batch)) @ _TOY_W)


def constant_predict(batch):
    """The same gently decaying distribution for every input; flip
    statistics over its logs are exactly zero."""
    probs = softmax(-0.1 * np.arange(TOY_CLASSES))
    return np.tile(probs, (np.asarray(batch).shape[0], 1))


class ModelRef:
    """Classifier spec: builtin name or ``module:function`` import path,
    preprocessing constants, and the number of ranks to record."""

    def __init__(self, spec: str = "toy", topk: int = 10, resize: int = None,
                 crop: int = None, mean: float = 0.0, std: float = 1.0):
        # ranks below 6 can change top-5 distances, so logs must go at
        # least that deep
        if topk < 6:
            raise ConfigError(f"topk must be >= 6, got {topk}")
        if resize is not None and resize < 1:
            raise ConfigError(f"resize must be positive, got {resize}")
        if crop is not None and crop < 1:
            raise ConfigError(f"crop must be positive, got {crop}")
        if std == 0:
            raise ConfigError("std must be nonzero")
        self.spec = spec
        self.topk = int(topk)
        self.resize = resize
        self.crop = crop
        self.mean = float(mean)
        self.std = float(std)

    def preprocess_header(self) -> dict:
        return {"resize": self.resize, "crop": self.crop,
                "mean": self.mean, "std": self.std}

    def load(self):
        if self.spec == "toy":
            return toy_predict
        if self.spec == "constant":
            return constant_predict
        if ":" in self.spec:
            mod_name, _, fn_name = self.spec.partition(":")
            try:
                mod = importlib.import_module(mod_name)
            except ImportError as exc:
                raise ConfigError(f"cannot import {mod_name!r}: {exc}")
            fn = getattr(mod, fn_name, None)
            if not callable(fn):
                raise ConfigError(
                    f"{mod_name!r} has no callable {fn_name!r}")
            return fn
        raise ConfigError(
            f"unknown model {self.spec!r}: expected one of {BUILTIN_MODELS} "
            "or a 'module:function' path")
