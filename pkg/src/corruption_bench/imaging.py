"""Pixel-level substrate: buffers, I/O, convolution, resampling, color
conversion, distortion measures, and CLAHE.

All images are H x W x 3 float64 arrays with intensities in [0, 1].  Every
public operation is a pure function of its inputs and clamps its output back
into [0, 1].
"""

import io
import os

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import FormatError, ParameterError

MIN_SIDE = 16

BOUNDARY_MODES = {"reflect": "reflect", "clamp": "nearest"}


# ---------------------------------------------------------------------------
# buffers


def as_buffer(arr: np.ndarray) -> np.ndarray:
    """Validate and canonicalize an H x W x 3 float image in [0, 1]."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 2:
        a = np.repeat(a[:, :, None], 3, axis=2)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ParameterError(f"expected HxWx3 image, got shape {a.shape}")
    if a.shape[0] < MIN_SIDE or a.shape[1] < MIN_SIDE:
        raise ParameterError(
            f"image sides must be >= {MIN_SIDE}, got {a.shape[0]}x{a.shape[1]}"
        )
    if not np.isfinite(a).all():
        raise ParameterError("image contains non-finite values")
    return np.clip(a, 0.0, 1.0)


def clamp01(arr: np.ndarray) -> np.ndarray:
    return np.clip(arr, 0.0, 1.0)


def luminance(img: np.ndarray) -> np.ndarray:
    """Rec. 601 luma of an RGB buffer."""
    return img[:, :, 0] * 0.299 + img[:, :, 1] * 0.587 + img[:, :, 2] * 0.114


# ---------------------------------------------------------------------------
# I/O


def load_image(path) -> np.ndarray:
    """Decode a PNG or JPEG file into a [0, 1] float buffer.

    Grayscale sources are replicated to 3 channels.  Unreadable files raise
    OSError; undecodable or unsupported content raises FormatError.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "JPEG"):
                raise FormatError(f"{path}: unsupported format {im.format!r}")
            im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except FormatError:
        raise
    except OSError as exc:
        # Pillow raises UnidentifiedImageError (an OSError) on junk bytes.
        if isinstance(exc, (FileNotFoundError, PermissionError)):
            raise
        raise FormatError(f"{path}: cannot decode ({exc})") from exc
    return as_buffer(arr)


def encode_image(img: np.ndarray, format: str = "png", quality: int = 85,
                 compress_level: int = 6) -> bytes:
    """Encode a buffer to PNG or JPEG bytes (8-bit, deterministic)."""
    if format not in ("png", "jpeg"):
        raise ParameterError(f"format must be png or jpeg, got {format!r}")
    if not (1 <= int(quality) <= 100):
        raise ParameterError(f"quality must be in 1..100, got {quality}")
    a = np.clip(np.rint(np.asarray(img) * 255.0), 0, 255).astype(np.uint8)
    im = Image.fromarray(a, mode="RGB")
    buf = io.BytesIO()
    if format == "png":
        im.save(buf, format="PNG", compress_level=int(compress_level))
    else:
        im.save(buf, format="JPEG", quality=int(quality), subsampling=2)
    return buf.getvalue()


def save_image(img: np.ndarray, path, format: str = "png", quality: int = 85,
               compress_level: int = 6) -> None:
    """Write a buffer to disk; see encode_image for parameters."""
    data = encode_image(img, format=format, quality=quality,
                        compress_level=compress_level)
    with open(path, "wb") as fh:
        fh.write(data)


def decode_image(data: bytes) -> np.ndarray:
    """Inverse of encode_image for in-memory round trips (used by the jpeg
    corruption)."""
    with Image.open(io.BytesIO(data)) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return arr


# ---------------------------------------------------------------------------
# kernels and convolution


class Kernel2D:
    """Square convolution kernel with an odd side length."""

    def __init__(self, weights: np.ndarray):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ParameterError(f"kernel must be square, got shape {w.shape}")
        if w.shape[0] % 2 == 0:
            raise ParameterError(f"kernel size must be odd, got {w.shape[0]}")
        self.weights = w

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def normalized(self) -> "Kernel2D":
        total = self.weights.sum()
        if abs(total) < 1e-12:
            raise ParameterError("cannot normalize a zero-sum kernel")
        return Kernel2D(self.weights / total)

    def is_normalized(self, tol: float = 1e-6) -> bool:
        return abs(self.weights.sum() - 1.0) <= tol


def disk_kernel(radius: float) -> Kernel2D:
    """Normalized anti-aliased disk (defocus point-spread function)."""
    if radius < 0:
        raise ParameterError(f"radius must be >= 0, got {radius}")
    r = int(np.ceil(radius))
    if r == 0:
        return Kernel2D(np.ones((1, 1)))
    y, x = np.mgrid[-r:r + 1, -r:r + 1]
    d = np.hypot(x, y)
    # soft 1-pixel edge avoids square-looking small disks
    w = np.clip(radius + 0.5 - d, 0.0, 1.0)
    return Kernel2D(w).normalized()


def gaussian_kernel(sigma: float, truncate: float = 4.0) -> Kernel2D:
    """Normalized isotropic Gaussian, truncated at ``truncate`` sigmas."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    r = max(1, int(truncate * sigma + 0.5))
    y, x = np.mgrid[-r:r + 1, -r:r + 1]
    w = np.exp(-(x * x + y * y) / (2.0 * sigma * sigma))
    return Kernel2D(w).normalized()


def line_kernel(length: int, angle_deg: float) -> Kernel2D:
    """Normalized line segment (linear motion point-spread function).

    The segment is rasterized with bilinear splatting so oblique angles do
    not alias into staircases.
    """
    if length < 1:
        raise ParameterError(f"length must be >= 1, got {length}")
    if length == 1:
        return Kernel2D(np.ones((1, 1)))
    half = (length - 1) / 2.0
    r = int(np.ceil(half))
    size = 2 * r + 1
    w = np.zeros((size, size))
    theta = np.deg2rad(angle_deg)
    dx, dy = np.cos(theta), -np.sin(theta)
    steps = max(2, int(np.ceil(length * 2)))
    for t in np.linspace(-half, half, steps):
        x = r + t * dx
        y = r + t * dy
        x0, y0 = int(np.floor(x)), int(np.floor(y))
        fx, fy = x - x0, y - y0
        for oy, wy in ((0, 1 - fy), (1, fy)):
            for ox, wx in ((0, 1 - fx), (1, fx)):
                yy, xx = y0 + oy, x0 + ox
                if 0 <= yy < size and 0 <= xx < size:
                    w[yy, xx] += wy * wx
    return Kernel2D(w).normalized()


def convolve2d(img: np.ndarray, kernel: Kernel2D, boundary: str = "reflect",
               clamp: bool = True) -> np.ndarray:
    """Per-channel discrete convolution with the stated boundary rule."""
    if boundary not in BOUNDARY_MODES:
        raise ParameterError(f"boundary must be one of {sorted(BOUNDARY_MODES)}")
    if kernel.size >= min(img.shape[0], img.shape[1]):
        raise ParameterError(
            f"kernel size {kernel.size} must be < min image side")
    mode = BOUNDARY_MODES[boundary]
    out = np.empty_like(img)
    for c in range(img.shape[2]):
        out[:, :, c] = ndimage.convolve(img[:, :, c], kernel.weights, mode=mode)
    return clamp01(out) if clamp else out


def gaussian_blur(img: np.ndarray, sigma: float, boundary: str = "reflect",
                  truncate: float = 4.0) -> np.ndarray:
    """Separable Gaussian blur (fast path used by several corruptions)."""
    if sigma < 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return img.copy()
    mode = BOUNDARY_MODES.get(boundary)
    if mode is None:
        raise ParameterError(f"boundary must be one of {sorted(BOUNDARY_MODES)}")
    out = ndimage.gaussian_filter(
        img, sigma=(sigma, sigma, 0), mode=mode, truncate=truncate)
    return clamp01(out)


# ---------------------------------------------------------------------------
# resampling


def _nearest_indices(dst: int, src: int) -> np.ndarray:
    # pixel-center mapping: dst center -> src coordinate, floor to index
    pos = (np.arange(dst) + 0.5) * (src / dst)
    return np.clip(np.floor(pos).astype(np.intp), 0, src - 1)


def _linear_weights(dst: int, src: int):
    pos = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    lo = np.floor(pos).astype(np.intp)
    frac = pos - lo
    lo0 = np.clip(lo, 0, src - 1)
    lo1 = np.clip(lo + 1, 0, src - 1)
    return lo0, lo1, frac


def _box_axis(arr: np.ndarray, dst: int, axis: int) -> np.ndarray:
    """Exact area-averaging along one axis via a prefix-sum integral."""
    src = arr.shape[axis]
    a = np.moveaxis(arr, axis, 0)
    prefix = np.concatenate(
        [np.zeros((1,) + a.shape[1:]), np.cumsum(a, axis=0)], axis=0)
    edges = np.arange(dst + 1) * (src / dst)
    lo = np.clip(np.floor(edges).astype(np.intp), 0, src)
    frac = edges - lo
    # piecewise-linear interpolation of the prefix sum == exact integral
    vals = prefix[lo] + frac.reshape((-1,) + (1,) * (a.ndim - 1)) * (
        prefix[np.minimum(lo + 1, src)] - prefix[lo])
    width = src / dst
    out = (vals[1:] - vals[:-1]) / width
    return np.moveaxis(out, 0, axis)


def resample(img: np.ndarray, width: int, height: int,
             filter: str = "bilinear") -> np.ndarray:
    """Deterministic resampling with nearest, bilinear, or box filtering."""
    if width < 1 or height < 1:
        raise ParameterError(f"target size must be >= 1, got {width}x{height}")
    h, w = img.shape[:2]
    if filter == "nearest":
        iy = _nearest_indices(height, h)
        ix = _nearest_indices(width, w)
        return img[np.ix_(iy, ix)]
    if filter == "bilinear":
        y0, y1, fy = _linear_weights(height, h)
        x0, x1, fx = _linear_weights(width, w)
        fy = fy[:, None, None]
        fx = fx[None, :, None]
        top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
        bot = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
        return clamp01(top * (1 - fy) + bot * fy)
    if filter == "box":
        out = _box_axis(img, height, axis=0)
        out = _box_axis(out, width, axis=1)
        return clamp01(out)
    raise ParameterError(f"unknown filter {filter!r}")


def warp_bilinear(img: np.ndarray, src_y: np.ndarray, src_x: np.ndarray,
                  fill: str = "edge") -> np.ndarray:
    """Sample img at fractional (src_y, src_x) coordinates per output pixel.

    fill='edge' clamps coordinates to the image border; fill='black' maps
    out-of-range samples to 0.
    """
    if fill not in ("edge", "black"):
        raise ParameterError(f"fill must be 'edge' or 'black', got {fill!r}")
    mode = "nearest" if fill == "edge" else "constant"
    out = np.empty((src_y.shape[0], src_y.shape[1], img.shape[2]))
    coords = np.stack([src_y, src_x])
    for c in range(img.shape[2]):
        out[:, :, c] = ndimage.map_coordinates(
            img[:, :, c], coords, order=1, mode=mode, cval=0.0)
    return clamp01(out)


# ---------------------------------------------------------------------------
# color conversion (standard hexcone HSV)


def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    r, g, b = img[:, :, 0], img[:, :, 1], img[:, :, 2]
    maxc = np.max(img, axis=2)
    minc = np.min(img, axis=2)
    v = maxc
    delta = maxc - minc
    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1.0), 0.0)
    dz = np.where(delta > 0, delta, 1.0)
    rc = (maxc - r) / dz
    gc = (maxc - g) / dz
    bc = (maxc - b) / dz
    h = np.where(r == maxc, bc - gc,
                 np.where(g == maxc, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(delta > 0, (h / 6.0) % 1.0, 0.0)
    return np.stack([h, s, v], axis=2)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[:, :, 0], hsv[:, :, 1], hsv[:, :, 2]
    i = np.floor(h * 6.0).astype(np.intp) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    choices_r = [v, q, p, p, t, v]
    choices_g = [t, v, v, q, p, p]
    choices_b = [p, p, t, v, v, q]
    r = np.choose(i, choices_r)
    g = np.choose(i, choices_g)
    b = np.choose(i, choices_b)
    return clamp01(np.stack([r, g, b], axis=2))


# ---------------------------------------------------------------------------
# distortion measures


def mean_l2(a: np.ndarray, b: np.ndarray) -> float:
    """Root-mean-square intensity difference; 0 iff identical, 1 for
    black-vs-white."""
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity with an 11x11 Gaussian window (sigma 1.5)."""
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch {a.shape} vs {b.shape}")
    c1 = _SSIM_K1 ** 2
    c2 = _SSIM_K2 ** 2
    win = gaussian_kernel(1.5, truncate=3.5).weights  # 11x11
    vals = []
    for c in range(a.shape[2]):
        x = a[:, :, c]
        y = b[:, :, c]
        mx = ndimage.convolve(x, win, mode="reflect")
        my = ndimage.convolve(y, win, mode="reflect")
        mxx = ndimage.convolve(x * x, win, mode="reflect")
        myy = ndimage.convolve(y * y, win, mode="reflect")
        mxy = ndimage.convolve(x * y, win, mode="reflect")
        vx = mxx - mx * mx
        vy = myy - my * my
        vxy = mxy - mx * my
        num = (2 * mx * my + c1) * (2 * vxy + c2)
        den = (mx * mx + my * my + c1) * (vx + vy + c2)
        vals.append(np.mean(num / den))
    return float(np.mean(vals))


def distortion(a: np.ndarray, b: np.ndarray, measure: str = "mean_l2") -> float:
    """Non-negative dissimilarity between two equal-sized buffers."""
    if measure == "mean_l2":
        return mean_l2(a, b)
    if measure == "one_minus_ssim":
        return 1.0 - ssim(a, b)
    raise ParameterError(f"unknown measure {measure!r}")


# ---------------------------------------------------------------------------
# CLAHE

_CLAHE_BINS = 256


def _tile_mapping(tile: np.ndarray, clip_limit: float) -> np.ndarray:
    """Clipped-histogram equalization mapping for one tile (256-entry LUT)."""
    if tile.max() - tile.min() < 1e-12:
        # degenerate histogram: identity by convention
        return np.linspace(0.0, 1.0, _CLAHE_BINS)
    q = np.clip((tile * (_CLAHE_BINS - 1)).astype(np.intp), 0, _CLAHE_BINS - 1)
    hist = np.bincount(q.ravel(), minlength=_CLAHE_BINS).astype(np.float64)
    n = hist.sum()
    limit = clip_limit * n / _CLAHE_BINS
    excess = np.sum(np.maximum(hist - limit, 0.0))
    hist = np.minimum(hist, limit) + excess / _CLAHE_BINS
    cdf = np.cumsum(hist)
    cdf_min = cdf[np.nonzero(hist)[0][0]]
    denom = cdf[-1] - cdf_min
    if denom <= 0:
        return np.linspace(0.0, 1.0, _CLAHE_BINS)
    return np.clip((cdf - cdf_min) / denom, 0.0, 1.0)


def clahe(img: np.ndarray, clip_limit: float = 4.0,
          tiles: tuple[int, int] = (8, 8)) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization on the V channel.

    The image is padded by edge extension to a multiple of the tile grid,
    each tile's clipped-histogram mapping is computed, and per-pixel output
    bilinearly interpolates between the four surrounding tile mappings.
    Hue and saturation are preserved.
    """
    if clip_limit <= 0:
        raise ParameterError(f"clip_limit must be > 0, got {clip_limit}")
    ty, tx = int(tiles[0]), int(tiles[1])
    if ty < 1 or tx < 1:
        raise ParameterError(f"tile grid must be >= 1x1, got {tiles}")
    hsv = rgb_to_hsv(img)
    v = hsv[:, :, 2]
    h, w = v.shape
    tile_h = -(-h // ty)  # ceil division
    tile_w = -(-w // tx)
    pad_h = tile_h * ty - h
    pad_w = tile_w * tx - w
    vp = np.pad(v, ((0, pad_h), (0, pad_w)), mode="edge")

    luts = np.empty((ty, tx, _CLAHE_BINS))
    for j in range(ty):
        for i in range(tx):
            tile = vp[j * tile_h:(j + 1) * tile_h, i * tile_w:(i + 1) * tile_w]
            luts[j, i] = _tile_mapping(tile, clip_limit)

    q = np.clip((vp * (_CLAHE_BINS - 1)).astype(np.intp), 0, _CLAHE_BINS - 1)
    yy = np.arange(vp.shape[0])[:, None]
    xx = np.arange(vp.shape[1])[None, :]
    # fractional tile coordinates of each pixel relative to tile centers
    gy = (yy + 0.5) / tile_h - 0.5
    gx = (xx + 0.5) / tile_w - 0.5
    j0 = np.clip(np.floor(gy).astype(np.intp), 0, ty - 1)
    j1 = np.clip(j0 + 1, 0, ty - 1)
    i0 = np.clip(np.floor(gx).astype(np.intp), 0, tx - 1)
    i1 = np.clip(i0 + 1, 0, tx - 1)
    fy = np.clip(gy - np.floor(gy), 0.0, 1.0) * np.ones_like(gx)
    fx = np.clip(gx - np.floor(gx), 0.0, 1.0) * np.ones_like(gy)
    j0b = (j0 * np.ones_like(i0)).astype(np.intp)
    j1b = (j1 * np.ones_like(i0)).astype(np.intp)
    i0b = (i0 * np.ones_like(j0)).astype(np.intp)
    i1b = (i1 * np.ones_like(j0)).astype(np.intp)
    v00 = luts[j0b, i0b, q]
    v01 = luts[j0b, i1b, q]
    v10 = luts[j1b, i0b, q]
    v11 = luts[j1b, i1b, q]
    out_v = ((1 - fy) * ((1 - fx) * v00 + fx * v01)
             + fy * ((1 - fx) * v10 + fx * v11))
    out_v = out_v[:h, :w]

    out = hsv.copy()
    out[:, :, 2] = np.clip(out_v, 0.0, 1.0)
    return hsv_to_rgb(out)
