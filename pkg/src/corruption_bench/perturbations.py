"""Perturbation sequences: gently drifting frame stacks for stability
measurement.

Each sequence starts at the unmodified source frame.  Noise-mode kinds
(gaussian_noise, shot_noise, speckle_noise) make every later frame an
independent low-amplitude perturbation of the source; all other kinds are
temporal, each frame differing from its predecessor by one small step
(a pixel of translation, a fraction of a degree of rotation, a touch more
blur).  Flip statistics over these stacks quantify prediction stability.
"""

import numpy as np
from scipy import ndimage

from . import imaging
from .errors import ParameterError
from .imaging import clamp01
from .randomness import RandomStream

COMMON_KINDS = (
    "gaussian_noise", "shot_noise", "motion_blur", "zoom_blur", "snow",
    "brightness", "translate", "rotate", "tilt", "scale",
)

EXTRA_KINDS = ("speckle_noise", "gaussian_blur", "spatter", "shear")

PERTURBATION_KINDS = COMMON_KINDS + EXTRA_KINDS

NOISE_MODE_KINDS = frozenset({"gaussian_noise", "shot_noise", "speckle_noise"})

DIFFICULTIES = ("normal", "hard")

MIN_FRAMES = 31

# per-step magnitudes; hard difficulty doubles the step (noise kinds get a
# larger amplitude instead, same idea)
_STEP = {
    "gaussian_noise": {"normal": {"sigma": 0.06}, "hard": {"sigma": 0.12}},
    "shot_noise": {"normal": {"lam": 250.0}, "hard": {"lam": 110.0}},
    "speckle_noise": {"normal": {"sigma": 0.10}, "hard": {"sigma": 0.20}},
    "translate": {"normal": {"px": 1}, "hard": {"px": 2}},
    "rotate": {"normal": {"deg": 0.5}, "hard": {"deg": 1.0}},
    "scale": {"normal": {"factor": 1.008}, "hard": {"factor": 1.016}},
    "shear": {"normal": {"k": 0.004}, "hard": {"k": 0.008}},
    "tilt": {"normal": {"rad": 0.004}, "hard": {"rad": 0.008}},
    "brightness": {"normal": {"delta": 0.01}, "hard": {"delta": 0.02}},
    "motion_blur": {"normal": {"length": 3}, "hard": {"length": 5}},
    "zoom_blur": {"normal": {"zoom": 1.01}, "hard": {"zoom": 1.02}},
    "gaussian_blur": {"normal": {"sigma": 0.4}, "hard": {"sigma": 0.7}},
    "snow": {"normal": {"density": 0.002}, "hard": {"density": 0.005}},
    "spatter": {"normal": {"density": 0.002}, "hard": {"density": 0.005}},
}


class PerturbationSpec:
    """Validated description of one sequence: kind, frame count, difficulty."""

    def __init__(self, kind: str, n_frames: int = MIN_FRAMES,
                 difficulty: str = "normal"):
        if kind not in PERTURBATION_KINDS:
            raise ParameterError(f"unknown perturbation kind {kind!r}")
        if n_frames < MIN_FRAMES:
            raise ParameterError(
                f"n_frames must be >= {MIN_FRAMES}, got {n_frames}")
        if difficulty not in DIFFICULTIES:
            raise ParameterError(
                f"difficulty must be one of {DIFFICULTIES}, got {difficulty!r}")
        self.kind = kind
        self.n_frames = int(n_frames)
        self.difficulty = difficulty

    @property
    def mode(self) -> str:
        return "noise" if self.kind in NOISE_MODE_KINDS else "temporal"

    def step_params(self) -> dict:
        return dict(_STEP[self.kind][self.difficulty])

    def __repr__(self):
        return (f"PerturbationSpec({self.kind!r}, n_frames={self.n_frames}, "
                f"difficulty={self.difficulty!r})")


def frame_pairs(n_frames: int, mode: str, stride: int = 1) -> list:
    """Index pairs whose prediction agreement defines the flip statistics.

    Temporal sequences compare frames ``stride`` apart; noise sequences
    compare every perturbed frame against the clean first frame, so a
    stride has no meaning there and asking for one is an error.
    """
    if stride not in (1, 2):
        raise ParameterError(f"stride must be 1 or 2, got {stride}")
    if n_frames < 2:
        raise ParameterError(f"need at least 2 frames, got {n_frames}")
    if mode == "noise":
        if stride != 1:
            raise ParameterError(
                "noise sequences are anchored to frame 0; stride 2 applies "
                "to temporal sequences only")
        return [(0, j) for j in range(1, n_frames)]
    if mode == "temporal":
        return [(j - stride, j) for j in range(stride, n_frames)]
    raise ParameterError(f"mode must be 'noise' or 'temporal', got {mode!r}")


# ---------------------------------------------------------------------------
# geometric warps, always resampled from the source frame so interpolation
# error does not compound

def _translate_frame(img, j, px):
    w = img.shape[1]
    cols = np.minimum(np.arange(w) + j * px, w - 1)
    return img[:, cols]


def _rotate_frame(img, deg):
    h, w = img.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    th = np.deg2rad(deg)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    dy, dx = yy - cy, xx - cx
    src_y = cy + dy * np.cos(th) - dx * np.sin(th)
    src_x = cx + dy * np.sin(th) + dx * np.cos(th)
    return imaging.warp_bilinear(img, src_y, src_x, fill="edge")


def _scale_frame(img, factor):
    h, w = img.shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    src_y = cy + (yy - cy) / factor
    src_x = cx + (xx - cx) / factor
    return imaging.warp_bilinear(img, src_y, src_x, fill="edge")


def _shear_frame(img, k):
    h, w = img.shape[:2]
    cy = (h - 1) / 2.0
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    return imaging.warp_bilinear(img, yy, xx + k * (yy - cy), fill="edge")


def _tilt_frame(img, rad, axis_phi):
    # out-of-plane rotation about an in-plane axis, focal length = width
    h, w = img.shape[:2]
    f = float(w)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ux, uy = np.cos(axis_phi), np.sin(axis_phi)
    c, s = np.cos(rad), np.sin(rad)
    # Rodrigues for axis (ux, uy, 0); columns of R^T give the inverse map
    R = np.array([
        [c + ux * ux * (1 - c), ux * uy * (1 - c), uy * s],
        [ux * uy * (1 - c), c + uy * uy * (1 - c), -ux * s],
        [-uy * s, ux * s, c],
    ])
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    X, Y = xx - cx, yy - cy
    Xs = R[0, 0] * X + R[1, 0] * Y + R[2, 0] * f
    Ys = R[0, 1] * X + R[1, 1] * Y + R[2, 1] * f
    Zs = R[0, 2] * X + R[1, 2] * Y + R[2, 2] * f
    return imaging.warp_bilinear(img, cy + f * Ys / Zs, cx + f * Xs / Zs,
                                 fill="edge")


# ---------------------------------------------------------------------------
# per-step operators for the remaining temporal kinds (applied to the
# previous frame; slow cumulative drift is the intent)

def _motion_step(prev, length, angle):
    return imaging.convolve2d(prev, imaging.line_kernel(length, angle))


def _zoom_step(prev, zoom):
    return clamp01(0.5 * (prev + _scale_frame(prev, zoom)))


def _blur_step(prev, sigma):
    return imaging.gaussian_blur(prev, sigma)


def _flake_step(prev, g, density, value=0.85, length=7, angle=-75.0):
    h, w = prev.shape[:2]
    mask = (g.uniform(0.0, 1.0, (h, w)) < density).astype(np.float64)
    kern = imaging.line_kernel(length, angle)
    streaks = ndimage.convolve(mask * value, kern.weights * kern.size,
                               mode="reflect")
    return clamp01(np.maximum(prev, np.clip(streaks, 0.0, 1.0)[:, :, None]))


def _droplet_step(prev, g, density):
    h, w = prev.shape[:2]
    field = (g.uniform(0.0, 1.0, (h, w)) < density).astype(np.float64)
    field = ndimage.gaussian_filter(field, 1.2, mode="reflect")
    a = np.clip(field * 6.0, 0.0, 0.5)[:, :, None]
    color = np.array([0.75, 0.80, 0.85]).reshape(1, 1, 3)
    return clamp01((1.0 - a) * prev + a * color)


def _brightness_frame(img, delta):
    hsv = imaging.rgb_to_hsv(img)
    hsv[:, :, 2] = np.clip(hsv[:, :, 2] + delta, 0.0, 1.0)
    return imaging.hsv_to_rgb(hsv)


# ---------------------------------------------------------------------------


def perturbation_sequence(img: np.ndarray, spec: PerturbationSpec,
                          stream: RandomStream, schedule=None):
    """Yield spec.n_frames frames; frame 0 is always the source image.

    A schedule with a step entry for this kind and difficulty overrides
    the built-in per-step magnitudes.
    """
    img = imaging.as_buffer(img)
    p = spec.step_params()
    if schedule is not None:
        override = schedule.step_params(spec.kind, spec.difficulty)
        if override:
            p.update(override)
    n = spec.n_frames
    kind = spec.kind

    yield img.copy()

    if spec.mode == "noise":
        for j in range(1, n):
            g = stream.derive("frame", j).generator()
            if kind == "gaussian_noise":
                yield clamp01(img + g.normal(0.0, p["sigma"], img.shape))
            elif kind == "shot_noise":
                yield clamp01(g.poisson(img * p["lam"]) / p["lam"])
            else:
                yield clamp01(img + img * g.normal(0.0, p["sigma"], img.shape))
        return

    if kind == "translate":
        for j in range(1, n):
            yield _translate_frame(img, j, int(p["px"]))
    elif kind == "rotate":
        for j in range(1, n):
            yield _rotate_frame(img, j * p["deg"])
    elif kind == "scale":
        for j in range(1, n):
            yield _scale_frame(img, p["factor"] ** j)
    elif kind == "shear":
        for j in range(1, n):
            yield _shear_frame(img, j * p["k"])
    elif kind == "tilt":
        g = stream.derive("axis").generator()
        phi = g.uniform(0.0, 2.0 * np.pi)
        for j in range(1, n):
            yield _tilt_frame(img, j * p["rad"], phi)
    elif kind == "brightness":
        for j in range(1, n):
            yield _brightness_frame(img, j * p["delta"])
    elif kind == "motion_blur":
        g = stream.derive("angle").generator()
        angle = g.uniform(-45.0, 45.0)
        prev = img
        for j in range(1, n):
            prev = _motion_step(prev, int(p["length"]), angle)
            yield prev
    elif kind == "zoom_blur":
        prev = img
        for j in range(1, n):
            prev = _zoom_step(prev, p["zoom"])
            yield prev
    elif kind == "gaussian_blur":
        prev = img
        for j in range(1, n):
            prev = _blur_step(prev, p["sigma"])
            yield prev
    elif kind == "snow":
        prev = img
        for j in range(1, n):
            g = stream.derive("frame", j).generator()
            prev = _flake_step(prev, g, p["density"])
            yield prev
    elif kind == "spatter":
        prev = img
        for j in range(1, n):
            g = stream.derive("frame", j).generator()
            prev = _droplet_step(prev, g, p["density"])
            yield prev
    else:  # pragma: no cover
        raise ParameterError(f"unhandled kind {kind!r}")
