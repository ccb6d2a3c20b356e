"""Corruption synthesis: 19 parameterized image corruptions.

Fifteen benchmark kinds (four noise, four blur, four weather, four digital,
minus one to make fifteen: see BENCHMARK_KINDS) drive the headline summary
numbers; four extra kinds are reserved for validation so models can be
checked against corruptions they were not tuned on.

Every routine takes (img, stream, **params) where img is an H x W x 3
float buffer in [0, 1] and stream is a RandomStream scoped to one
(item, kind, severity) triple.  Routines derive named sub-streams per
stochastic stage, so editing one parameter never shifts the draws of an
unrelated stage.
"""

import numpy as np
from scipy import ndimage

from . import imaging
from .errors import ParameterError
from .imaging import clamp01, luminance
from .randomness import RandomStream
from .schedules import SeveritySchedule

try:
    from numba import njit
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# fractal noise (plasma) for fog and frost

def diamond_square(stream: RandomStream, n: int,
                   roughness: float = 0.65) -> np.ndarray:
    """Square-diamond fractal noise on an n x n grid (n = 2^k + 1), in [0, 1].

    Corner values come from the stream; each subdivision level adds uniform
    noise whose amplitude decays by ``roughness``.  Midpoints on the grid
    boundary average their two along-edge neighbors, interior midpoints the
    four axial neighbors, so the zero-noise degenerate case reproduces exact
    bilinear interpolation of the corners.  Output is min-max normalized
    (a constant grid maps to 0.5).
    """
    side = n - 1
    if n < 3 or side & (side - 1) != 0:
        raise ParameterError(f"grid side must be 2^k + 1 with k >= 1, got {n}")
    if not (0.0 < roughness <= 1.0):
        raise ParameterError(f"roughness must be in (0, 1], got {roughness}")
    g = stream.generator()
    grid = np.zeros((n, n))
    grid[:: n - 1, :: n - 1] = g.uniform(0.0, 1.0, (2, 2))
    step = n - 1
    amp = 1.0
    while step > 1:
        half = step // 2
        # diamond step: square centers from their 4 corners
        c = np.arange(half, n, step)
        q = (grid[np.ix_(c - half, c - half)] + grid[np.ix_(c - half, c + half)]
             + grid[np.ix_(c + half, c - half)]
             + grid[np.ix_(c + half, c + half)]) / 4.0
        grid[np.ix_(c, c)] = q + amp * g.uniform(-1.0, 1.0, q.shape)
        # square step, lattice A: rows at odd multiples of half
        ay = np.arange(half, n, step)
        ax = np.arange(0, n, step)
        up = grid[np.ix_(ay - half, ax)]
        dn = grid[np.ix_(ay + half, ax)]
        X = np.broadcast_to(ax, (len(ay), len(ax)))
        lf = grid[np.ix_(ay, np.maximum(ax - half, 0))]
        rt = grid[np.ix_(ay, np.minimum(ax + half, n - 1))]
        interior = (X > 0) & (X < n - 1)
        avg = np.where(interior, (up + dn + lf + rt) / 4.0, (up + dn) / 2.0)
        grid[np.ix_(ay, ax)] = avg + amp * g.uniform(-1.0, 1.0, avg.shape)
        # square step, lattice B: cols at odd multiples of half
        by = np.arange(0, n, step)
        bx = np.arange(half, n, step)
        lf = grid[np.ix_(by, bx - half)]
        rt = grid[np.ix_(by, bx + half)]
        Y = np.broadcast_to(by[:, None], (len(by), len(bx)))
        up = grid[np.ix_(np.maximum(by - half, 0), bx)]
        dn = grid[np.ix_(np.minimum(by + half, n - 1), bx)]
        interior = (Y > 0) & (Y < n - 1)
        avg = np.where(interior, (up + dn + lf + rt) / 4.0, (lf + rt) / 2.0)
        grid[np.ix_(by, bx)] = avg + amp * g.uniform(-1.0, 1.0, avg.shape)
        step = half
        amp *= roughness
    lo, hi = grid.min(), grid.max()
    if hi - lo < 1e-12:
        return np.full((n, n), 0.5)
    return (grid - lo) / (hi - lo)


def _plasma_for(stream, h, w, roughness):
    levels = max(1, int(np.ceil(np.log2(max(h, w) - 1))))
    grid = diamond_square(stream, 2 ** levels + 1, roughness)
    n = grid.shape[0]
    y0 = (n - h) // 2
    x0 = (n - w) // 2
    return grid[y0:y0 + h, x0:x0 + w]


# ---------------------------------------------------------------------------
# noise

def gaussian_noise(img, stream, sigma):
    if sigma < 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    g = stream.derive("noise").generator()
    return clamp01(img + g.normal(0.0, sigma, img.shape))


def shot_noise(img, stream, lam):
    # Poisson counts at rate lam per unit intensity, rescaled to [0, 1]
    if lam <= 0:
        raise ParameterError(f"lam must be > 0, got {lam}")
    g = stream.derive("noise").generator()
    return clamp01(g.poisson(img * lam) / float(lam))


def impulse_noise(img, stream, p):
    # each pixel-channel independently snaps to 0 or 1 with probability p/2
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"p must be in [0, 1], got {p}")
    g = stream.derive("mask").generator()
    u = g.uniform(0.0, 1.0, img.shape)
    out = np.where(u < p / 2.0, 0.0, np.where(u < p, 1.0, img))
    return clamp01(out)


def speckle_noise(img, stream, sigma):
    if sigma < 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    g = stream.derive("noise").generator()
    return clamp01(img + img * g.normal(0.0, sigma, img.shape))


# ---------------------------------------------------------------------------
# blur

def defocus_blur(img, stream, radius):
    return imaging.convolve2d(img, imaging.disk_kernel(radius))


def gaussian_blur(img, stream, sigma):
    return imaging.gaussian_blur(img, sigma)


if _HAVE_NUMBA:
    @njit(cache=True)
    def _glass_swap(img, dy, dx):
        h, w = dy.shape
        for y in range(h):
            for x in range(w):
                yy = y + dy[y, x]
                xx = x + dx[y, x]
                if 0 <= yy < h and 0 <= xx < w:
                    for c in range(img.shape[2]):
                        tmp = img[y, x, c]
                        img[y, x, c] = img[yy, xx, c]
                        img[yy, xx, c] = tmp
else:  # pragma: no cover
    def _glass_swap(img, dy, dx):
        h, w = dy.shape
        for y in range(h):
            for x in range(w):
                yy = y + dy[y, x]
                xx = x + dx[y, x]
                if 0 <= yy < h and 0 <= xx < w:
                    tmp = img[y, x].copy()
                    img[y, x] = img[yy, xx]
                    img[yy, xx] = tmp


def glass_blur(img, stream, sigma, delta, iterations):
    # blur, locally shuffle pixels within +-delta, then a light final blur
    delta = int(delta)
    iterations = int(iterations)
    if delta < 1:
        raise ParameterError(f"delta must be >= 1, got {delta}")
    out = imaging.gaussian_blur(img, sigma)
    out = np.ascontiguousarray(out)
    for t in range(iterations):
        g = stream.derive("swaps", t).generator()
        d = g.integers(-delta, delta + 1, size=(2,) + img.shape[:2])
        _glass_swap(out, d[0], d[1])
    return imaging.gaussian_blur(out, sigma / 2.0)


def motion_blur(img, stream, length):
    g = stream.derive("angle").generator()
    angle = g.uniform(-45.0, 45.0)
    return imaging.convolve2d(img, imaging.line_kernel(int(length), angle))


def zoom_blur(img, stream, factors=None, zmax=None, step=0.02):
    """Mean over center crops of the image at every listed zoom factor.

    ``factors`` starts at 1 (the unzoomed image) and strictly increases;
    ``zmax`` instead expands to the ladder 1, 1+step, ... capped at zmax.
    """
    if factors is None:
        if zmax is None:
            raise ParameterError("zoom_blur needs factors or zmax")
        if zmax <= 1.0:
            raise ParameterError(f"zmax must be > 1, got {zmax}")
        factors = []
        z = 1.0
        while z < zmax + 1e-9:
            factors.append(z)
            z += step
    factors = [float(z) for z in factors]
    if not factors:
        raise ParameterError("zoom factor list is empty")
    if abs(factors[0] - 1.0) > 1e-9 or any(
            b <= a for a, b in zip(factors, factors[1:])):
        raise ParameterError("zoom factors must start at 1 and increase")
    h, w = img.shape[:2]
    acc = np.zeros(img.shape, dtype=np.float64)
    for z in factors:
        ch = max(1, int(round(h / z)))
        cw = max(1, int(round(w / z)))
        if ch == h and cw == w:
            acc += img
            continue
        top = (h - ch) // 2
        left = (w - cw) // 2
        crop = img[top:top + ch, left:left + cw]
        acc += imaging.resample(crop, w, h, filter="bilinear")
    return clamp01(acc / len(factors))


# ---------------------------------------------------------------------------
# weather

def snow(img, stream, loc, scale, threshold, length, whiten):
    h, w = img.shape[:2]
    g = stream.derive("flakes").generator()
    field = g.normal(loc, scale, (h, w))
    field[field < threshold] = 0.0
    ga = stream.derive("angle").generator()
    angle = ga.uniform(-135.0, -45.0)
    kern = imaging.line_kernel(int(length), angle)
    streaks = ndimage.convolve(field, kern.weights * kern.size,
                               mode="reflect")
    streaks = np.clip(streaks, 0.0, 1.0)
    # wash the scene toward gray before laying flakes on top
    gray = luminance(img)[:, :, None] * 1.5 + 0.5
    washed = whiten * img + (1.0 - whiten) * np.maximum(img, gray)
    layer = np.maximum(streaks, streaks[::-1, ::-1])[:, :, None]
    return clamp01(np.maximum(washed, layer))


def frost(img, stream, image_weight, frost_weight):
    h, w = img.shape[:2]
    levels = max(1, int(np.ceil(np.log2(1.3 * max(h, w)))))
    tex = diamond_square(stream.derive("texture"), 2 ** levels + 1,
                         roughness=0.8)
    n = tex.shape[0]
    # shear rows sideways so the crystals read as streaks
    shift = (0.6 * np.arange(n)).astype(np.intp) % n
    cols = (np.arange(n)[None, :] + shift[:, None]) % n
    tex = tex[np.arange(n)[:, None], cols]
    tex = np.clip((tex - 0.35) / 0.65, 0.0, 1.0) ** 0.8
    g = stream.derive("crop").generator()
    y0 = int(g.integers(0, n - h + 1))
    x0 = int(g.integers(0, n - w + 1))
    patch = tex[y0:y0 + h, x0:x0 + w]
    flips = g.integers(0, 2, 2)
    if flips[0]:
        patch = patch[::-1, :]
    if flips[1]:
        patch = patch[:, ::-1]
    return clamp01(image_weight * img + frost_weight * patch[:, :, None])


def fog(img, stream, weight, roughness):
    if not (0.0 <= weight <= 1.0):
        raise ParameterError(f"weight must be in [0, 1], got {weight}")
    if weight == 0.0:
        return img.copy()
    h, w = img.shape[:2]
    plasma = _plasma_for(stream.derive("plasma"), h, w, roughness)
    max_lum = float(luminance(img).max())
    veil = plasma[:, :, None] * max_lum
    return clamp01((1.0 - weight) * img + weight * veil)


def brightness(img, stream, delta):
    hsv = imaging.rgb_to_hsv(img)
    hsv[:, :, 2] = np.clip(hsv[:, :, 2] + delta, 0.0, 1.0)
    return imaging.hsv_to_rgb(hsv)


# ---------------------------------------------------------------------------
# digital

def contrast(img, stream, factor):
    means = img.mean(axis=(0, 1), keepdims=True)
    return clamp01(means + factor * (img - means))


def elastic(img, stream, alpha, sigma):
    h, w = img.shape[:2]
    g = stream.derive("field").generator()
    field = g.uniform(-1.0, 1.0, (2, h, w))
    field = ndimage.gaussian_filter(field, sigma=(0, sigma, sigma),
                                    mode="reflect")
    peak = np.abs(field).max()
    if peak > 0:
        field = field / peak * alpha
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    return imaging.warp_bilinear(img, yy + field[0], xx + field[1],
                                 fill="edge")


def pixelate(img, stream, d):
    # d is the downscale divisor: d=2 halves each side before upsampling back
    if d < 1:
        raise ParameterError(f"downscale factor must be >= 1, got {d}")
    h, w = img.shape[:2]
    dh = max(1, int(round(h / d)))
    dw = max(1, int(round(w / d)))
    if dh == h and dw == w:
        return img.copy()
    small = imaging.resample(img, dw, dh, filter="box")
    return imaging.resample(small, w, h, filter="nearest")


def jpeg(img, stream, quality):
    data = imaging.encode_image(img, format="jpeg", quality=int(quality))
    return clamp01(imaging.decode_image(data))


def spatter(img, stream, loc, scale, smooth, threshold, opacity, mud):
    h, w = img.shape[:2]
    g = stream.derive("mask").generator()
    field = g.normal(loc, scale, (h, w))
    field = ndimage.gaussian_filter(field, smooth, mode="reflect")
    m = np.clip((field - threshold) * 4.0, 0.0, 1.0)[:, :, None]
    if int(mud):
        color = np.array([0.25, 0.16, 0.10])  # opaque mud
    else:
        color = np.array([0.75, 0.80, 0.85])  # translucent droplets
    a = m * opacity
    return clamp01((1.0 - a) * img + a * color.reshape(1, 1, 3))


def saturate(img, stream, scale, shift):
    hsv = imaging.rgb_to_hsv(img)
    hsv[:, :, 1] = np.clip(hsv[:, :, 1] * scale + shift, 0.0, 1.0)
    return imaging.hsv_to_rgb(hsv)


# ---------------------------------------------------------------------------
# registry

BENCHMARK_KINDS = (
    "gaussian_noise", "shot_noise", "impulse_noise",
    "defocus_blur", "glass_blur", "motion_blur", "zoom_blur",
    "snow", "frost", "fog", "brightness",
    "contrast", "elastic", "pixelate", "jpeg",
)

VALIDATION_KINDS = ("speckle_noise", "gaussian_blur", "spatter", "saturate")

ALL_KINDS = BENCHMARK_KINDS + VALIDATION_KINDS

_REGISTRY = {
    "gaussian_noise": gaussian_noise,
    "shot_noise": shot_noise,
    "impulse_noise": impulse_noise,
    "speckle_noise": speckle_noise,
    "defocus_blur": defocus_blur,
    "glass_blur": glass_blur,
    "motion_blur": motion_blur,
    "zoom_blur": zoom_blur,
    "gaussian_blur": gaussian_blur,
    "snow": snow,
    "frost": frost,
    "fog": fog,
    "brightness": brightness,
    "contrast": contrast,
    "elastic": elastic,
    "pixelate": pixelate,
    "jpeg": jpeg,
    "spatter": spatter,
    "saturate": saturate,
}

assert set(_REGISTRY) == set(ALL_KINDS)


def corruption_names() -> tuple:
    return ALL_KINDS


def apply_corruption(img: np.ndarray, kind: str, severity: int,
                     stream: RandomStream,
                     schedule: SeveritySchedule | None = None) -> np.ndarray:
    """Apply one corruption at one severity; pure in (img, stream, params)."""
    if kind not in _REGISTRY:
        raise ParameterError(f"unknown corruption kind {kind!r}")
    if severity not in (1, 2, 3, 4, 5):
        raise ParameterError(f"severity must be in 1..5, got {severity}")
    img = imaging.as_buffer(img)
    if schedule is None:
        schedule = SeveritySchedule.default()
    params = schedule.params(kind, severity)
    return _REGISTRY[kind](img, stream, **params)
