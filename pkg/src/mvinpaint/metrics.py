"""Deterministic evaluation: SSIM, preservation, coverage, azimuth sweep."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import convolve2d

from .errors import GridError
from .grid import RenderConfig, render_tuple
from .masks import MaskGeometry
from .mesh import TriangleMesh

SWEEP_STEPS = 16
SWEEP_STEP_RAD = math.pi / 8.0  # 22.5 degrees

# columns reserved for external neural-metric tooling to merge into reports
RESERVED_METRICS = ("clip_l", "clip_g", "fid", "lpips", "dreamsim")


def to_gray(img: np.ndarray) -> np.ndarray:
    """Luma in [0, 255] from RGB (uint8 or [0,1] float) or grayscale input."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 3:
        if np.asarray(img).dtype != np.uint8:
            arr = arr * 255.0
        return arr[..., 0] * 0.299 + arr[..., 1] * 0.587 + arr[..., 2] * 0.114
    if np.asarray(img).dtype == np.uint8:
        return arr
    return arr  # grayscale floats are taken as already in display range


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(a: np.ndarray, b: np.ndarray, *, k1: float = 0.01, k2: float = 0.03,
         dynamic_range: float = 255.0, window: int = 11, sigma: float = 1.5) -> float:
    """Mean structural similarity over an 11x11 Gaussian-weighted window.

    RGB inputs are reduced to luma. Equal inputs give exactly 1.0.
    """
    ga, gb = to_gray(a), to_gray(b)
    if ga.shape != gb.shape:
        raise GridError(f"ssim shape mismatch: {ga.shape} vs {gb.shape}")
    win = _gaussian_window(window, sigma)
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2

    mu_a = convolve2d(ga, win, mode="valid")
    mu_b = convolve2d(gb, win, mode="valid")
    mu_ab = mu_a * mu_b
    var_a = convolve2d(ga * ga, win, mode="valid") - mu_a * mu_a
    var_b = convolve2d(gb * gb, win, mode="valid") - mu_b * mu_b
    cov = convolve2d(ga * gb, win, mode="valid") - mu_ab

    num = (2.0 * mu_ab + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def unmasked_preservation(input_grid: np.ndarray, output_grid: np.ndarray,
                          mask: np.ndarray) -> float | None:
    """Mean absolute per-channel difference over mask == 0 pixels, in [0, 1].

    Returns None (undefined) for an all-ones mask. Inputs may be uint8 or
    [0,1] float; both are compared in [0,1].
    """
    if input_grid.shape != output_grid.shape:
        raise GridError("input/output grid shape mismatch")
    if mask.shape != input_grid.shape[:2]:
        raise GridError("mask shape does not match grids")
    if mask.dtype != bool:
        raise GridError("mask must be a bool array")
    keep = ~mask
    if not keep.any():
        return None

    def as_unit(x):
        x = np.asarray(x)
        return x.astype(np.float64) / 255.0 if x.dtype == np.uint8 else x.astype(np.float64)

    diff = np.abs(as_unit(input_grid) - as_unit(output_grid))
    return float(diff[keep].mean())


def mask_coverage(mask_grid: np.ndarray) -> tuple[float, float, float, float]:
    """Fraction of mask pixels per quadrant (row-major order)."""
    m = np.asarray(mask_grid)
    if m.dtype != bool:
        vals = np.unique(m)
        if not np.isin(vals, (0, 1, 255)).all():
            raise GridError("mask grid is not binary")
        m = m == m.max() if vals.max() > 0 else m.astype(bool)
    if m.ndim != 2 or m.shape[0] % 2 or m.shape[1] % 2:
        raise GridError("mask grid must be 2D with even dimensions")
    h, w = m.shape[0] // 2, m.shape[1] // 2
    return (float(m[:h, :w].mean()), float(m[:h, w:].mean()),
            float(m[h:, :w].mean()), float(m[h:, w:].mean()))


def sweep_offsets() -> list[float]:
    """The 16 azimuth offsets, 0 to 337.5 degrees in 22.5-degree steps (radians)."""
    return [k * SWEEP_STEP_RAD for k in range(SWEEP_STEPS)]


@dataclass(frozen=True)
class SweepItem:
    shape_id: str
    mesh: TriangleMesh  # normalized
    mask: MaskGeometry
    seed: int = 0


@dataclass
class EvalReport:
    per_record: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    sweep: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"per_record": self.per_record, "aggregates": self.aggregates,
                "sweep": self.sweep}

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    def write_sweep_csv(self, path) -> None:
        if not self.sweep:
            raise GridError("report has no sweep table")
        cols = list(self.sweep[0].keys())
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=cols)
            writer.writeheader()
            writer.writerows(self.sweep)


def _aggregate(values: list[float]) -> dict:
    if not values:
        return {"mean": None, "std": None}
    arr = np.asarray(values, dtype=np.float64)
    return {"mean": float(arr.mean()), "std": float(arr.std())}


def azimuth_sweep(items: list[SweepItem], cfg: RenderConfig = RenderConfig(),
                  backend=None, save_dir=None) -> EvalReport:
    """Render every item's conditioning grids at the 16 azimuth offsets.

    Per (offset, item) row: mask fraction, per-quadrant coverage, and the
    non-background fraction of the ground-truth grid. When a backend is given
    its output is scored with unmasked_preservation.
    """
    report = EvalReport()
    for k, offset in enumerate(sweep_offsets()):
        rig = cfg.rig(offset)
        offset_deg = k * 22.5
        rows = []
        for item in items:
            gt, masked, mask_grid = render_tuple(item.mesh, item.mask, rig, cfg)
            cov = mask_coverage(mask_grid.image)
            row = {
                "offset_deg": offset_deg,
                "shape_id": item.shape_id,
                "mask_fraction": float(mask_grid.image.mean()),
                "coverage_q0": cov[0], "coverage_q1": cov[1],
                "coverage_q2": cov[2], "coverage_q3": cov[3],
                "foreground_fraction": float((gt.image != 1.0).any(axis=-1).mean()),
            }
            if backend is not None:
                from .images import to_uint8
                from .service import BackendRequest  # local import to avoid a cycle
                request = BackendRequest.from_grids(masked, mask_grid, prompt="", seed=item.seed)
                result = backend.inpaint(request)
                row["preservation"] = unmasked_preservation(
                    to_uint8(masked.image), result, mask_grid.image)
            if save_dir is not None:
                out = Path(save_dir) / f"offset_{k:02d}" / item.shape_id
                out.mkdir(parents=True, exist_ok=True)
                (out / "masked.png").write_bytes(masked.png_bytes())
                (out / "mask.png").write_bytes(mask_grid.png_bytes())
            rows.append(row)
            report.per_record.append(row)
        agg = {
            "offset_deg": offset_deg,
            "mask_fraction_mean": _aggregate([r["mask_fraction"] for r in rows])["mean"],
            "foreground_fraction_mean": _aggregate(
                [r["foreground_fraction"] for r in rows])["mean"],
        }
        if backend is not None:
            agg["preservation_mean"] = _aggregate([r["preservation"] for r in rows])["mean"]
        for name in RESERVED_METRICS:
            agg.setdefault(name, None)
        report.sweep.append(agg)
    report.aggregates = {
        "mask_fraction": _aggregate([r["mask_fraction"] for r in report.per_record]),
        "foreground_fraction": _aggregate(
            [r["foreground_fraction"] for r in report.per_record]),
    }
    return report
