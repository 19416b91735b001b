import pytest

from candlekit import Candle, Series, SynthParams, synth_series


@pytest.fixture
def walk_series() -> Series:
    return synth_series(7, 200)


@pytest.fixture
def constant_series() -> Series:
    params = SynthParams(start_price=100.0, drift=0.0, volatility=0.0, wick_frac=0.0)
    return synth_series(1, 60, params)


def make_series(rows, symbol="T") -> Series:
    """Series from (o, h, l, c) tuples with timestamps 0..n-1."""
    candles = tuple(
        Candle(timestamp=t, open=o, high=h, low=l, close=c)
        for t, (o, h, l, c) in enumerate(rows)
    )
    return Series(symbol=symbol, candles=candles)
