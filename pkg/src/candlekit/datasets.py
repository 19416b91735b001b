"""Turning rendered charts into training arrays.

Images become float32 C x H x W arrays in [0, 1] after nearest-neighbor
resizing to the model's input size. Dataset directories follow the layout
written by the experiment builder: ``manifest.jsonl`` plus ``history/`` and
``pattern/`` PPM files, with paths stored relative to the directory.

``planted_signal_set`` builds the synthetic sanity-check dataset: windows
whose last candle has a bimodal body-to-range fraction (alternating
samples draw from a small-body and a large-body regime), labeled by
whether that fraction exceeds the dataset median. The two regimes are
separated by a wide gap, so the label is visually obvious in the rendered
chart and a small CNN must be able to learn it.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .decompose import subcharts
from .errors import EmptyDataset, SourceNotFound
from .market_data import Candle, CandleWindow
from .models import SubchartDataset, TrainingSet
from .raster import RasterImage, RenderSpec, read_ppm, render_window, resize_nearest
from .rng import Rng, derive_seed


def image_to_array(img: RasterImage) -> np.ndarray:
    """(H, W, 3) uint8 -> (3, H, W) float32 in [0, 1]."""
    return (img.pixels.astype(np.float32) / 255.0).transpose(2, 0, 1)


def load_manifest_rows(dataset_dir: str | Path) -> list[dict]:
    path = Path(dataset_dir) / "manifest.jsonl"
    if not path.exists():
        raise SourceNotFound(f"no manifest.jsonl under {dataset_dir}")
    rows = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
    if not rows:
        raise EmptyDataset(f"{path} holds no samples")
    return rows


def _load_resized(dataset_dir: Path, rel_path: str, hw: tuple[int, int]) -> np.ndarray:
    img = read_ppm((dataset_dir / rel_path).read_bytes())
    return image_to_array(resize_nearest(img, hw[0], hw[1]))


def assemble_training_set(
    dataset_dirs: list[Path],
    hist_hw: tuple[int, int],
    pattern_hw: tuple[int, int],
    include_pattern: bool,
) -> TrainingSet:
    """Load one or more dataset directories into training arrays.

    Multiple directories form a merged dataset: samples keep a member id so
    the chronological split stays within each member.
    """
    inputs: list[np.ndarray] = []
    patterns: list[np.ndarray] = []
    labels: list[float] = []
    order: list[int] = []
    member: list[int] = []
    sample_ids: list[str] = []
    for m, d in enumerate(dataset_dirs):
        d = Path(d)
        for row in load_manifest_rows(d):
            inputs.append(_load_resized(d, row["history_image_path"], hist_hw))
            if include_pattern:
                patterns.append(_load_resized(d, row["pattern_image_path"], pattern_hw))
            labels.append(1.0 if row["strength"] == "strong" else 0.0)
            order.append(int(row["end_index"]))
            member.append(m)
            sample_ids.append(row["sample_id"])
    return TrainingSet(
        inputs=np.stack(inputs),
        labels=np.asarray(labels, dtype=np.float32),
        order=np.asarray(order, dtype=np.int64),
        pattern=np.stack(patterns) if include_pattern else None,
        member=np.asarray(member, dtype=np.int64) if len(dataset_dirs) > 1 else None,
        sample_ids=tuple(sample_ids),
    )


def assemble_subchart_dataset(
    dataset_dirs: list[Path],
    sub_hw: tuple[int, int],
    render_spec: RenderSpec,
    k: int = 3,
    stride: int = 1,
) -> SubchartDataset:
    """History charts cut into k-candle sub-charts, resized and stacked."""
    stacks: list[np.ndarray] = []
    labels: list[float] = []
    order: list[int] = []
    member: list[int] = []
    for m, d in enumerate(dataset_dirs):
        d = Path(d)
        for row in load_manifest_rows(d):
            img = read_ppm((d / row["history_image_path"]).read_bytes())
            crops = subcharts(img, render_spec, k=k, stride=stride)
            stacks.append(
                np.stack([image_to_array(resize_nearest(c, sub_hw[0], sub_hw[1])) for c in crops])
            )
            labels.append(1.0 if row["strength"] == "strong" else 0.0)
            order.append(int(row["end_index"]))
            member.append(m)
    return SubchartDataset(
        subcharts=np.stack(stacks),
        labels=np.asarray(labels, dtype=np.float32),
        order=np.asarray(order, dtype=np.int64),
        member=np.asarray(member, dtype=np.int64) if len(dataset_dirs) > 1 else None,
    )


def _candle(t: int, level: float, crange: float, body_frac: float, bullish: bool) -> Candle:
    low = level
    high = level + crange
    mid = level + crange / 2.0
    half = body_frac * crange / 2.0
    if bullish:
        opn, close = mid - half, mid + half
    else:
        opn, close = mid + half, mid - half
    return Candle(timestamp=t, open=opn, high=high, low=low, close=close)


def planted_signal_set(
    n_samples: int = 500,
    seed: int = 7,
    n_candles: int = 4,
    spec: RenderSpec = RenderSpec(candle_px=5, gap_px=2, margin_px=3, height_px=32),
) -> TrainingSet:
    """Separable fixture: label = last candle's body fraction above median.

    With the default spec and four candles the chart is natively 32x32, so
    no resize blurs the signal. Sample i draws the last candle's body
    fraction from U(0.02, 0.30) when i is even and U(0.60, 0.95) when i is
    odd, which pins the median inside the gap and balances the classes.
    """
    rng = Rng(derive_seed(seed, "planted-signal"))
    windows: list[CandleWindow] = []
    fracs: list[float] = []
    for i in range(n_samples):
        candles = []
        level = 100.0
        for t in range(n_candles - 1):
            crange = 0.8 + 1.2 * rng.uniform()
            frac = 0.2 + 0.5 * rng.uniform()
            bullish = rng.uniform() < 0.5
            candles.append(_candle(t, level, crange, frac, bullish))
            level += 1.2 * (rng.uniform() - 0.5)
        if i % 2 == 0:
            frac = 0.02 + 0.28 * rng.uniform()
        else:
            frac = 0.60 + 0.35 * rng.uniform()
        bullish = rng.uniform() < 0.5
        candles.append(_candle(n_candles - 1, level, 4.0, frac, bullish))
        fracs.append(frac)
        windows.append(CandleWindow(candles=tuple(candles), source_end_index=n_candles - 1))

    median = float(np.median(fracs))
    labels = np.asarray([1.0 if f > median else 0.0 for f in fracs], dtype=np.float32)
    images = np.stack([image_to_array(render_window(w, spec)) for w in windows])
    return TrainingSet(
        inputs=images,
        labels=labels,
        order=np.arange(n_samples, dtype=np.int64),
        sample_ids=tuple(f"planted:{i}" for i in range(n_samples)),
    )
