"""Generate a seeded synthetic OHLC series, round-trip it through CSV,
and slice a trailing window.

The generator is a geometric random walk driven by the package's own
xorshift64* stream, so the same seed always yields the same candles, on
any machine.
"""

from candlekit import SynthParams, parse_csv, synth_series, window, write_csv

series = synth_series(seed=7, n=120, params=SynthParams(volatility=0.02))
print(f"{series.symbol}: {len(series)} candles")
print(f"first close {series[0].close:.4f}, last close {series[-1].close:.4f}")

text = write_csv(series)
print("\nCSV head:")
for line in text.splitlines()[:4]:
    print(" ", line)

back = parse_csv(text, symbol=series.symbol)
worst = max(
    abs(getattr(a, f) - getattr(b, f))
    for a, b in zip(back.candles, series.candles)
    for f in ("open", "high", "low", "close")
)
print(f"\nround trip: {len(back)} candles, worst field error {worst:.1e} (9-digit precision)")

w = window(series, end_index=119, w=30)
lows = min(c.low for c in w.candles)
highs = max(c.high for c in w.candles)
print(f"trailing 30-candle window spans prices [{lows:.2f}, {highs:.2f}]")
