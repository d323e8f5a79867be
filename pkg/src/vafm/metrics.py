"""Image fidelity metrics: PSNR and SSIM over 8-bit RGB images.

PSNR compares raw channel values; SSIM runs on Rec.601 luma with the
standard 11x11 Gaussian window (sigma 1.5) and stability constants
C1 = (0.01*255)^2, C2 = (0.03*255)^2, averaging only fully valid window
positions (no padding).  Identical inputs score PSNR = +inf (serialized
as JSON null) and SSIM = 1.0 exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyDirectoryError,
    TooSmallError,
    UnpairedFileError,
)
from .render import decode_image

REPORT_FORMAT = "vafm-report/1"

_WINDOW_SIZE = 11
_WINDOW_SIGMA = 1.5
_C1 = (0.01 * 255.0) ** 2
_C2 = (0.03 * 255.0) ** 2
_LUMA = np.array([0.299, 0.587, 0.114])


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for 8-bit images (peak 255).

    Computed over every channel of every pixel in float64.  Identical
    inputs return float('inf').
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    diff = a.astype(np.float64) - b.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(255.0**2 / mse)


def _gaussian_window(size: int = _WINDOW_SIZE, sigma: float = _WINDOW_SIGMA) -> np.ndarray:
    offsets = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(offsets**2) / (2.0 * sigma**2))
    window = np.outer(g, g)
    return window / window.sum()


def _luma(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim == 2:
        return img.astype(np.float64)
    return img.astype(np.float64) @ _LUMA


def _windowed_mean(y: np.ndarray, window: np.ndarray) -> np.ndarray:
    views = np.lib.stride_tricks.sliding_window_view(y, window.shape)
    return np.tensordot(views, window, axes=([2, 3], [0, 1]))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity over all valid 11x11 window positions."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    ya = _luma(a)
    yb = _luma(b)
    if min(ya.shape) < _WINDOW_SIZE:
        raise TooSmallError(
            f"image {ya.shape} smaller than the {_WINDOW_SIZE}x{_WINDOW_SIZE} window"
        )
    window = _gaussian_window()
    mu1 = _windowed_mean(ya, window)
    mu2 = _windowed_mean(yb, window)
    s1 = _windowed_mean(ya * ya, window) - mu1 * mu1
    s2 = _windowed_mean(yb * yb, window) - mu2 * mu2
    s12 = _windowed_mean(ya * yb, window) - mu1 * mu2
    num = (2.0 * mu1 * mu2 + _C1) * (2.0 * s12 + _C2)
    den = (mu1 * mu1 + mu2 * mu2 + _C1) * (s1 + s2 + _C2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class PairResult:
    file: str
    psnr_db: float  # may be +inf
    ssim: float


@dataclass(frozen=True)
class MetricsReport:
    pred_dir: str
    gt_dir: str
    pairs: tuple[PairResult, ...]
    mean_psnr_db: float | None  # over finite pairs; None if none are finite
    mean_ssim: float
    n_pairs: int
    n_infinite_psnr: int


def compare_sets(pred_dir: str | Path, gt_dir: str | Path) -> MetricsReport:
    """Compare two directories of equally named PNG images.

    Files pair by name; a name present on one side only raises
    UnpairedFileError.  Aggregation order is by sorted filename, so the
    report is independent of directory listing order.
    """
    pred_dir = Path(pred_dir)
    gt_dir = Path(gt_dir)
    pred_names = {p.name for p in pred_dir.glob("*.png")}
    gt_names = {p.name for p in gt_dir.glob("*.png")}
    if not pred_names:
        raise EmptyDirectoryError(f"no PNG files in {pred_dir}")
    if not gt_names:
        raise EmptyDirectoryError(f"no PNG files in {gt_dir}")
    only_pred = sorted(pred_names - gt_names)
    only_gt = sorted(gt_names - pred_names)
    if only_pred or only_gt:
        raise UnpairedFileError(
            f"unpaired files: {only_pred} only in {pred_dir}, {only_gt} only in {gt_dir}"
        )

    pairs = []
    finite = []
    ssims = []
    n_inf = 0
    for name in sorted(pred_names):
        img_a = decode_image(pred_dir / name)
        img_b = decode_image(gt_dir / name)
        if img_a.shape != img_b.shape:
            raise DimensionMismatchError(
                f"{name}: shape {img_a.shape} vs {img_b.shape}"
            )
        p = psnr(img_a, img_b)
        s = ssim(img_a, img_b)
        pairs.append(PairResult(file=name, psnr_db=p, ssim=s))
        if math.isinf(p):
            n_inf += 1
        else:
            finite.append(p)
        ssims.append(s)

    return MetricsReport(
        pred_dir=str(pred_dir),
        gt_dir=str(gt_dir),
        pairs=tuple(pairs),
        mean_psnr_db=(sum(finite) / len(finite)) if finite else None,
        mean_ssim=sum(ssims) / len(ssims),
        n_pairs=len(pairs),
        n_infinite_psnr=n_inf,
    )


def report_to_json(report: MetricsReport) -> str:
    """Serialize a report; infinite PSNR becomes null (JSON has no inf)."""
    doc = {
        "format": REPORT_FORMAT,
        "pred_dir": report.pred_dir,
        "gt_dir": report.gt_dir,
        "pairs": [
            {
                "file": p.file,
                "psnr_db": None if math.isinf(p.psnr_db) else p.psnr_db,
                "ssim": p.ssim,
            }
            for p in report.pairs
        ],
        "aggregates": {
            "mean_psnr_db": report.mean_psnr_db,
            "mean_ssim": report.mean_ssim,
            "n_pairs": report.n_pairs,
            "n_infinite_psnr": report.n_infinite_psnr,
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def format_table(report: MetricsReport) -> str:
    """Human-readable aligned table; higher is better for both columns."""
    rows = [("file", "PSNR (dB)", "SSIM")]
    for p in report.pairs:
        rows.append((p.file, f"{p.psnr_db:.4f}", f"{p.ssim:.6f}"))
    mean_psnr = "n/a" if report.mean_psnr_db is None else f"{report.mean_psnr_db:.4f}"
    rows.append(("mean", mean_psnr, f"{report.mean_ssim:.6f}"))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = []
    for i, r in enumerate(rows):
        lines.append(
            f"{r[0]:<{widths[0]}}  {r[1]:>{widths[1]}}  {r[2]:>{widths[2]}}"
        )
        if i == 0:
            lines.append("-" * (sum(widths) + 4))
    lines.append(
        f"(higher is better; mean PSNR over {report.n_pairs - report.n_infinite_psnr} "
        f"finite pairs, {report.n_infinite_psnr} identical)"
    )
    return "\n".join(lines) + "\n"
