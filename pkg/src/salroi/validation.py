"""Input validation helpers shared by the functional core and the estimators."""

from __future__ import annotations

import numpy as np


def check_saliency_map(values, name: str = "saliency map") -> np.ndarray:
    """Coerce to a 2-D float64 grid, rejecting empty or non-finite input."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D grid, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must have at least one cell")
    if not np.isfinite(arr).all():
        row, col = np.argwhere(~np.isfinite(arr))[0]
        raise ValueError(
            f"{name} has non-finite value {arr[row, col]} at row={row}, col={col}"
        )
    return arr


def check_map_pair(sa_ori, sa_back) -> tuple[np.ndarray, np.ndarray]:
    ori = check_saliency_map(sa_ori, "sa_ori")
    back = check_saliency_map(sa_back, "sa_back")
    if ori.shape != back.shape:
        raise ValueError(
            "dimension mismatch between the two saliency maps: "
            f"sa_ori is {ori.shape[1]}x{ori.shape[0]}, sa_back is {back.shape[1]}x{back.shape[0]}"
        )
    return ori, back


def check_unit_range(arr: np.ndarray, name: str) -> None:
    lo = float(arr.min())
    hi = float(arr.max())
    if lo < 0.0 or hi > 1.0:
        raise ValueError(
            f"{name} values must lie in [0, 1], got range [{lo}, {hi}]; "
            "normalize the map first"
        )


def check_embedding(values, name: str = "embedding") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        idx = int(np.argwhere(~np.isfinite(arr))[0][0])
        raise ValueError(f"{name} has non-finite value {arr[idx]} at index {idx}")
    return arr


def embedding_norm(arr: np.ndarray, name: str = "embedding") -> float:
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ValueError(f"{name} has zero norm; cosine similarity is undefined")
    return norm


def check_mask(mask, name: str = "mask") -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D grid, got shape {arr.shape}")
    return arr.astype(bool)


def check_rgb_image(image, name: str = "image") -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must have shape (height, width, 3), got {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"{name} must be 8-bit RGB (uint8), got dtype {arr.dtype}")
    return arr
