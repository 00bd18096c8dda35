"""Image decoding, resizing, color constancy and artifact removal.

Images are ``float64`` arrays of shape ``(H, W, 3)`` with values in ``[0, 1]``.
Artifact masks are boolean arrays of shape ``(H, W)``.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage
from skimage.transform import resize as _sk_resize

from .errors import DecodeError, DegenerateImage, ImageReadError

MINKOWSKI_P = 6
HAIR_LINE_LENGTH = 15
HAIR_THRESHOLD = 0.1
DARK_CORNER_LUMINANCE = 0.08

_LUMA = np.array([0.299, 0.587, 0.114])
_CROSS = ndimage.generate_binary_structure(2, 1)


def check_rgb(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] == 0 or img.shape[1] == 0:
        raise ValueError(f"expected an (H, W, 3) image, got shape {img.shape}")
    return img


def luminance(img: np.ndarray) -> np.ndarray:
    return check_rgb(img) @ _LUMA


def load_image(path) -> np.ndarray:
    """Decode a PNG/JPEG file into an RGB float image in ``[0, 1]``."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            rgb = im.convert("RGB")
    except FileNotFoundError as exc:
        raise ImageReadError(f"cannot read {path}: {exc}") from exc
    except IsADirectoryError as exc:
        raise ImageReadError(f"cannot read {path}: {exc}") from exc
    except PermissionError as exc:
        raise ImageReadError(f"cannot read {path}: {exc}") from exc
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    return np.asarray(rgb, dtype=np.float64) / 255.0


def load_mask(path) -> np.ndarray:
    """Read a binary mask; any non-zero pixel counts as foreground."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            gray = np.asarray(im.convert("L"))
    except FileNotFoundError as exc:
        raise ImageReadError(f"cannot read {path}: {exc}") from exc
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    return gray > 127


def save_image(img: np.ndarray, path) -> None:
    data = np.clip(np.rint(check_rgb(img) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path)


def resize(img: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Bilinear resize with half-pixel centers and no anti-aliasing."""
    if target_w <= 0 or target_h <= 0:
        raise ValueError("target size must be positive")
    img = check_rgb(img)
    if img.shape[:2] == (target_h, target_w):
        return img.copy()
    out = _sk_resize(img, (target_h, target_w, 3), order=1, mode="edge",
                     anti_aliasing=False, preserve_range=True)
    return np.clip(out, 0.0, 1.0)


def shades_of_gray(img: np.ndarray, p: int = MINKOWSKI_P) -> np.ndarray:
    """Minkowski-norm color constancy.

    Each channel is scaled by ``mean(e) / e_c`` where ``e_c`` is the order-``p``
    power mean of that channel.
    """
    img = check_rgb(img)
    illuminant = np.mean(img.reshape(-1, 3) ** p, axis=0) ** (1.0 / p)
    if np.any(illuminant <= 0):
        raise DegenerateImage("a color channel is identically zero")
    gain = illuminant.mean() / illuminant
    return np.clip(img * gain, 0.0, 1.0)


def _line_footprints(length: int) -> list[np.ndarray]:
    horizontal = np.ones((1, length), dtype=bool)
    diagonal = np.eye(length, dtype=bool)
    return [horizontal, diagonal[::-1], horizontal.T, diagonal]


def detect_hairs(img: np.ndarray, length: int = HAIR_LINE_LENGTH,
                 threshold: float = HAIR_THRESHOLD) -> np.ndarray:
    """Mask thin dark curvilinear structures (DullRazor-style).

    Closings with line elements at 0, 45, 90 and 135 degrees fill in dark
    lines narrower than the element; the largest closing minus the original
    luminance, thresholded, marks hair pixels.
    """
    gray = luminance(img)
    closed = np.max([ndimage.grey_closing(gray, footprint=fp, mode="nearest")
                     for fp in _line_footprints(length)], axis=0)
    hairs = (closed - gray) > threshold
    return ndimage.binary_dilation(hairs, structure=np.ones((3, 3), dtype=bool))


def mask_dark_corners(img: np.ndarray, level: float = DARK_CORNER_LUMINANCE) -> np.ndarray:
    """Mask dark 4-connected components that contain an image corner pixel."""
    dark = luminance(img) < level
    labels, _ = ndimage.label(dark, structure=_CROSS)
    h, w = dark.shape
    corner_ids = {labels[0, 0], labels[0, w - 1], labels[h - 1, 0], labels[h - 1, w - 1]}
    corner_ids.discard(0)
    if not corner_ids:
        return np.zeros_like(dark)
    return np.isin(labels, sorted(corner_ids))


def inpaint_artifacts(img: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Fill masked pixels by repeated 3x3 averaging of already-valid neighbours."""
    img = check_rgb(img)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != img.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match image {img.shape[:2]}")
    if mask.all():
        raise DegenerateImage("artifact mask covers the whole image")
    out = img.copy()
    todo = mask.copy()
    if not todo.any():
        return out
    kernel = np.ones((3, 3))
    # restrict work to the masked bounding box plus a 1-pixel margin
    rows, cols = np.nonzero(todo)
    r0, r1 = max(rows.min() - 1, 0), min(rows.max() + 2, todo.shape[0])
    c0, c1 = max(cols.min() - 1, 0), min(cols.max() + 2, todo.shape[1])
    sub = out[r0:r1, c0:c1]
    sub_todo = todo[r0:r1, c0:c1]
    while sub_todo.any():
        valid = (~sub_todo).astype(np.float64)
        counts = ndimage.convolve(valid, kernel, mode="constant", cval=0.0)
        frontier = sub_todo & (counts > 0)
        if not frontier.any():
            # masked pixels cut off from every valid pixel inside the box
            break
        for c in range(3):
            sums = ndimage.convolve(sub[..., c] * valid, kernel, mode="constant", cval=0.0)
            sub[..., c][frontier] = sums[frontier] / counts[frontier]
        sub_todo &= ~frontier
    return out


def preprocess(img: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Resize, remove dark corners and hairs, then apply color constancy."""
    img = resize(img, target_w, target_h)
    artifacts = mask_dark_corners(img) | detect_hairs(img)
    if artifacts.any() and not artifacts.all():
        img = inpaint_artifacts(img, artifacts)
    return shades_of_gray(img)


def save_gray(data: np.ndarray, path) -> None:
    """Write an 8-bit single-channel PNG."""
    data = np.asarray(data)
    if data.ndim != 2 or data.dtype != np.uint8:
        raise ValueError("expected a 2-D uint8 array")
    Image.fromarray(data, mode="L").save(path)
