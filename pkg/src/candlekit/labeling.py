"""Strength labeling: pattern occurrences into training samples.

A pattern occurrence becomes a sample when the series has room for a full
history window ending at the pattern and for the future horizon used by the
label. The strength rule is volatility-relative so it transfers across
assets with very different price levels:

    Strong  iff  |close[t+H] - close[t]| >= k * ATR_n(t)

with the >= convention pinning the all-flat edge case (0 >= 0) to Strong.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from .errors import BadParams, OutOfRange
from .market_data import CandleWindow, Series, window
from .patterns import PatternMatch, PatternRuleParams, detect_all

logger = logging.getLogger(__name__)


class StrengthLabel(Enum):
    STRONG = "strong"
    WEAK = "weak"


@dataclass(frozen=True)
class LabelerParams:
    horizon: int = 5
    atr_period: int = 14
    strength_mult: float = 1.0

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise BadParams("horizon must be >= 1")
        if self.atr_period < 1:
            raise BadParams("atr_period must be >= 1")
        if self.strength_mult <= 0:
            raise BadParams("strength_mult must be > 0")


@dataclass(frozen=True)
class LabeledSample:
    """History window + pattern + strength label; one training example."""

    history: CandleWindow
    match: PatternMatch
    strength: StrengthLabel
    sample_id: str


def true_range(series: Series, t: int) -> float:
    """max(high-low, |high-prev close|, |low-prev close|) at index t >= 1."""
    if t < 1 or t >= len(series):
        raise OutOfRange(f"true_range needs 1 <= t < len, got t={t}, len={len(series)}")
    c = series.candles[t]
    prev_close = series.candles[t - 1].close
    return max(c.high - c.low, abs(c.high - prev_close), abs(c.low - prev_close))


def atr(series: Series, i: int, n: int) -> float:
    """Average true range over the n candles ending at index i."""
    if n < 1:
        raise BadParams("atr period must be >= 1")
    if i < n or i >= len(series):
        raise OutOfRange(f"atr needs n <= i < len, got i={i}, n={n}, len={len(series)}")
    return sum(true_range(series, t) for t in range(i - n + 1, i + 1)) / n


def trend_strength(
    series: Series, end_index: int, p: LabelerParams = LabelerParams()
) -> StrengthLabel:
    """Strong/weak label for the move over the next ``horizon`` candles."""
    if end_index + p.horizon >= len(series) or end_index < p.atr_period:
        raise OutOfRange(
            f"end_index {end_index} lacks ATR history or future horizon "
            f"(n={p.atr_period}, H={p.horizon}, len={len(series)})"
        )
    move = abs(series.candles[end_index + p.horizon].close - series.candles[end_index].close)
    scale = p.strength_mult * atr(series, end_index, p.atr_period)
    return StrengthLabel.STRONG if move >= scale else StrengthLabel.WEAK


def build_samples(
    series: Series,
    pattern_params: PatternRuleParams = PatternRuleParams(),
    labeler_params: LabelerParams = LabelerParams(),
    w: int = 30,
) -> list[LabeledSample]:
    """One sample per detected pattern that admits window, ATR, and horizon.

    Matches without room are silently excluded; the exact excluded count is
    logged. Output is ordered like :func:`detect_all` (end_index, catalog
    order), so it is deterministic.
    """
    matches = detect_all(series, pattern_params)
    samples: list[LabeledSample] = []
    excluded = 0
    for m in matches:
        admissible = (
            m.end_index >= w - 1
            and m.end_index >= labeler_params.atr_period
            and m.end_index + labeler_params.horizon < len(series)
        )
        if not admissible:
            excluded += 1
            continue
        hist = window(series, m.end_index, w)
        strength = trend_strength(series, m.end_index, labeler_params)
        sample_id = f"{series.symbol}:{m.end_index}:{m.kind.value}"
        samples.append(
            LabeledSample(history=hist, match=m, strength=strength, sample_id=sample_id)
        )
    logger.info(
        "build_samples: %d samples from %d matches (%d excluded) for %s",
        len(samples), len(matches), excluded, series.symbol,
    )
    return samples
